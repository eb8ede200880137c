#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hamesc/config.hpp"

namespace hamesc {

enum class Task { validate, flow, certify, escape_check, transport_check, quantize_check, all };

// Accepts the CLI spelling (escape-check) as well; throws ConfigError.
Task parse_task(const std::string& name);
std::string task_name(Task t);

struct RunOutcome {
    bool pass = false;
    std::vector<std::string> failed_tasks;
    std::string report_path;
};

// Runs the requested task (or all of them in dependency order), writing
// report.json, timing.json, and the plot CSVs under cfg.run.out_dir. Check
// failures land in the outcome; only environment errors (unreadable config
// handled earlier, unwritable output) throw. report.json is byte-identical
// across runs with the same config, seed, and version; timing lives in the
// sidecar for that reason.
RunOutcome run_tasks(const RunConfig& cfg, Task task);

std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace hamesc
