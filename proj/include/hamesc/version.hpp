#pragma once

namespace hamesc {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kReportSchemaVersion = 1;
inline constexpr int kCertificateSchemaVersion = 1;

}  // namespace hamesc
