#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hamesc/symbol.hpp"

namespace hamesc {

// Parse or validation failure; the CLI maps it to exit code 2.
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct SymbolConfig {
    std::string kind = "free";      // free | klein_gordon
    int dim = 2;
    std::string metric = "minkowski";  // minkowski | minkowski_bump
    double bump_amplitude = 0.1;
    double bump_width = 1.0;
    double mu = 1.0;
};

struct RunSection {
    std::string out_dir = "out";
    std::uint64_t rng_seed = 0;
    int jobs = 0;
};

struct FlowSection {
    double rtol = 1e-10;
    double atol = 1e-12;
    double t_end = 10.0;
    std::vector<double> seed_x;   // empty = sample a null seed instead
    std::vector<double> seed_xi;
};

struct CertifySection {
    int seed_count = 64;
    double box_halfwidth = 1.0;
    double tol_char = 1e-10;
    double r1_safety = 2.0;
    double t_max = 0.0;  // 0 = auto
    double mourre_safety = 1.0;
    int band_samples = 2048;
};

struct EscapeCheckSection {
    double delta = 0.6;
    double gamma = 0.2;
    double k = 0.0;
    double M = 4.0;
    double nu = 1.0;
    long points = 10'000;
    double tol = 1e-8;
    int max_doublings = 12;
};

struct TransportCheckSection {
    double delta1 = 1.0;
    double delta2 = 0.1;
    double C1 = 0.0;
    double T00 = 1.0;
    bool auto_tune = false;
    long grid_points = 10'000;
    double t_hi = 20.0;
    double tol = 1e-9;
    int backward_probes = 8;
};

struct QuantizeCheckSection {
    double L = 8.0;
    int N = 256;
    double estimate_L = 16.0;
    int estimate_N = 256;
    int estimate_trials = 48;
    double estimate_k = 0.0;
    bool dump_operators = false;
};

struct RunConfig {
    SymbolConfig symbol;
    RunSection run;
    FlowSection flow;
    CertifySection certify;
    EscapeCheckSection escape_check;
    TransportCheckSection transport_check;
    QuantizeCheckSection quantize_check;

    // Canonical text of every key actually set, for hashing and echo.
    std::vector<std::pair<std::string, std::string>> entries;
};

// Strict INI-style parser: unknown sections or keys, malformed values,
// duplicate keys, and out-of-range settings (non-positive tolerances and
// friends) all throw ConfigError.
RunConfig parse_config_text(const std::string& text, const std::string& origin);
RunConfig load_config(const std::string& path);

// Builds the configured symbol; throws ConfigError on an unknown kind.
Symbol make_symbol(const SymbolConfig& sc);

}  // namespace hamesc
