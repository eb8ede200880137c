#include "hamesc/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace hamesc {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

[[noreturn]] void fail(const std::string& origin, int line, const std::string& what) {
    throw ConfigError(origin + ":" + std::to_string(line) + ": " + what);
}

double parse_double(const std::string& v, const std::string& origin, int line) {
    std::size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &used);
    } catch (const std::exception&) {
        fail(origin, line, "expected a number, got '" + v + "'");
    }
    if (used != v.size()) fail(origin, line, "trailing characters in number '" + v + "'");
    return out;
}

long parse_long(const std::string& v, const std::string& origin, int line) {
    std::size_t used = 0;
    long out = 0;
    try {
        out = std::stol(v, &used);
    } catch (const std::exception&) {
        fail(origin, line, "expected an integer, got '" + v + "'");
    }
    if (used != v.size()) fail(origin, line, "trailing characters in integer '" + v + "'");
    return out;
}

std::uint64_t parse_u64(const std::string& v, const std::string& origin, int line) {
    std::size_t used = 0;
    unsigned long long out = 0;
    try {
        out = std::stoull(v, &used);
    } catch (const std::exception&) {
        fail(origin, line, "expected an unsigned integer, got '" + v + "'");
    }
    if (used != v.size()) fail(origin, line, "trailing characters in integer '" + v + "'");
    return static_cast<std::uint64_t>(out);
}

bool parse_bool(const std::string& v, const std::string& origin, int line) {
    if (v == "true") return true;
    if (v == "false") return false;
    fail(origin, line, "expected true or false, got '" + v + "'");
}

std::vector<double> parse_vec(const std::string& v, const std::string& origin, int line) {
    std::vector<double> out;
    std::istringstream is(v);
    std::string tok;
    while (is >> tok) out.push_back(parse_double(tok, origin, line));
    if (out.empty()) fail(origin, line, "expected a list of numbers");
    return out;
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
    RunConfig cfg;

    using Setter = std::function<void(RunConfig&, const std::string&, int)>;
    std::map<std::string, Setter> setters;

    // One entry per recognized key; anything else is rejected.
    auto set_d = [&](const std::string& key, std::function<double&(RunConfig&)> ref) {
        setters[key] = [ref](RunConfig& c, const std::string& v, int line) {
            ref(c) = parse_double(v, "config", line);
        };
    };
    auto set_l = [&](const std::string& key, std::function<long&(RunConfig&)> ref) {
        setters[key] = [ref](RunConfig& c, const std::string& v, int line) {
            ref(c) = parse_long(v, "config", line);
        };
    };
    auto set_i = [&](const std::string& key, std::function<int&(RunConfig&)> ref) {
        setters[key] = [ref](RunConfig& c, const std::string& v, int line) {
            const long x = parse_long(v, "config", line);
            ref(c) = static_cast<int>(x);
        };
    };
    auto set_b = [&](const std::string& key, std::function<bool&(RunConfig&)> ref) {
        setters[key] = [ref](RunConfig& c, const std::string& v, int line) {
            ref(c) = parse_bool(v, "config", line);
        };
    };
    auto set_s = [&](const std::string& key, std::function<std::string&(RunConfig&)> ref) {
        setters[key] = [ref](RunConfig& c, const std::string& v, int line) {
            (void)line;
            ref(c) = v;
        };
    };
    auto set_v = [&](const std::string& key, std::function<std::vector<double>&(RunConfig&)> ref) {
        setters[key] = [ref](RunConfig& c, const std::string& v, int line) {
            ref(c) = parse_vec(v, "config", line);
        };
    };

    set_s("symbol.kind", [](RunConfig& c) -> std::string& { return c.symbol.kind; });
    set_i("symbol.dim", [](RunConfig& c) -> int& { return c.symbol.dim; });
    set_s("symbol.metric", [](RunConfig& c) -> std::string& { return c.symbol.metric; });
    set_d("symbol.bump_amplitude",
          [](RunConfig& c) -> double& { return c.symbol.bump_amplitude; });
    set_d("symbol.bump_width", [](RunConfig& c) -> double& { return c.symbol.bump_width; });
    set_d("symbol.mu", [](RunConfig& c) -> double& { return c.symbol.mu; });

    set_s("run.out_dir", [](RunConfig& c) -> std::string& { return c.run.out_dir; });
    setters["run.rng_seed"] = [](RunConfig& c, const std::string& v, int line) {
        c.run.rng_seed = parse_u64(v, "config", line);
    };
    set_i("run.jobs", [](RunConfig& c) -> int& { return c.run.jobs; });

    set_d("flow.rtol", [](RunConfig& c) -> double& { return c.flow.rtol; });
    set_d("flow.atol", [](RunConfig& c) -> double& { return c.flow.atol; });
    set_d("flow.t_end", [](RunConfig& c) -> double& { return c.flow.t_end; });
    set_v("flow.seed_x", [](RunConfig& c) -> std::vector<double>& { return c.flow.seed_x; });
    set_v("flow.seed_xi", [](RunConfig& c) -> std::vector<double>& { return c.flow.seed_xi; });

    set_i("certify.seed_count", [](RunConfig& c) -> int& { return c.certify.seed_count; });
    set_d("certify.box_halfwidth",
          [](RunConfig& c) -> double& { return c.certify.box_halfwidth; });
    set_d("certify.tol_char", [](RunConfig& c) -> double& { return c.certify.tol_char; });
    set_d("certify.r1_safety", [](RunConfig& c) -> double& { return c.certify.r1_safety; });
    set_d("certify.t_max", [](RunConfig& c) -> double& { return c.certify.t_max; });
    set_d("certify.mourre_safety",
          [](RunConfig& c) -> double& { return c.certify.mourre_safety; });
    set_i("certify.band_samples", [](RunConfig& c) -> int& { return c.certify.band_samples; });

    set_d("escape_check.delta", [](RunConfig& c) -> double& { return c.escape_check.delta; });
    set_d("escape_check.gamma", [](RunConfig& c) -> double& { return c.escape_check.gamma; });
    set_d("escape_check.k", [](RunConfig& c) -> double& { return c.escape_check.k; });
    set_d("escape_check.M", [](RunConfig& c) -> double& { return c.escape_check.M; });
    set_d("escape_check.nu", [](RunConfig& c) -> double& { return c.escape_check.nu; });
    set_l("escape_check.points", [](RunConfig& c) -> long& { return c.escape_check.points; });
    set_d("escape_check.tol", [](RunConfig& c) -> double& { return c.escape_check.tol; });
    set_i("escape_check.max_doublings",
          [](RunConfig& c) -> int& { return c.escape_check.max_doublings; });

    set_d("transport_check.delta1",
          [](RunConfig& c) -> double& { return c.transport_check.delta1; });
    set_d("transport_check.delta2",
          [](RunConfig& c) -> double& { return c.transport_check.delta2; });
    set_d("transport_check.C1", [](RunConfig& c) -> double& { return c.transport_check.C1; });
    set_d("transport_check.T00", [](RunConfig& c) -> double& { return c.transport_check.T00; });
    set_b("transport_check.auto_tune",
          [](RunConfig& c) -> bool& { return c.transport_check.auto_tune; });
    set_l("transport_check.grid_points",
          [](RunConfig& c) -> long& { return c.transport_check.grid_points; });
    set_d("transport_check.t_hi", [](RunConfig& c) -> double& { return c.transport_check.t_hi; });
    set_d("transport_check.tol", [](RunConfig& c) -> double& { return c.transport_check.tol; });
    set_i("transport_check.backward_probes",
          [](RunConfig& c) -> int& { return c.transport_check.backward_probes; });

    set_d("quantize_check.L", [](RunConfig& c) -> double& { return c.quantize_check.L; });
    set_i("quantize_check.N", [](RunConfig& c) -> int& { return c.quantize_check.N; });
    set_d("quantize_check.estimate_L",
          [](RunConfig& c) -> double& { return c.quantize_check.estimate_L; });
    set_i("quantize_check.estimate_N",
          [](RunConfig& c) -> int& { return c.quantize_check.estimate_N; });
    set_i("quantize_check.estimate_trials",
          [](RunConfig& c) -> int& { return c.quantize_check.estimate_trials; });
    set_d("quantize_check.estimate_k",
          [](RunConfig& c) -> double& { return c.quantize_check.estimate_k; });
    set_b("quantize_check.dump_operators",
          [](RunConfig& c) -> bool& { return c.quantize_check.dump_operators; });

    static const std::set<std::string> known_sections = {
        "symbol", "run",       "flow",           "certify",
        "escape_check", "transport_check", "quantize_check"};

    std::set<std::string> seen;
    std::string section;
    std::istringstream is(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(is, raw)) {
        ++line_no;
        std::string line = raw;
        const std::size_t hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail(origin, line_no, "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!known_sections.count(section))
                fail(origin, line_no, "unknown section [" + section + "]");
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) fail(origin, line_no, "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty()) fail(origin, line_no, "key '" + key + "' outside any section");
        if (key.empty()) fail(origin, line_no, "empty key");
        if (value.empty()) fail(origin, line_no, "empty value for '" + key + "'");
        const std::string full = section + "." + key;
        auto it = setters.find(full);
        if (it == setters.end()) fail(origin, line_no, "unknown key '" + full + "'");
        if (!seen.insert(full).second) fail(origin, line_no, "duplicate key '" + full + "'");
        try {
            it->second(cfg, value, line_no);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            fail(origin, line_no, e.what());
        }
        cfg.entries.emplace_back(full, value);
    }

    // Range validation: every tolerance strictly positive, counts positive.
    auto require = [&](bool ok, const std::string& what) {
        if (!ok) throw ConfigError(origin + ": " + what);
    };
    require(cfg.symbol.dim >= 1 && cfg.symbol.dim <= 8, "symbol.dim must be in [1, 8]");
    require(cfg.symbol.mu > 0.0, "symbol.mu must be positive");
    require(cfg.symbol.bump_width > 0.0, "symbol.bump_width must be positive");
    require(cfg.flow.rtol > 0.0, "flow.rtol must be positive");
    require(cfg.flow.atol > 0.0, "flow.atol must be positive");
    require(cfg.flow.t_end != 0.0, "flow.t_end must be nonzero");
    require(cfg.flow.seed_x.empty() == cfg.flow.seed_xi.empty(),
            "flow.seed_x and flow.seed_xi must be set together");
    if (!cfg.flow.seed_x.empty()) {
        require(static_cast<int>(cfg.flow.seed_x.size()) == cfg.symbol.dim &&
                    static_cast<int>(cfg.flow.seed_xi.size()) == cfg.symbol.dim,
                "flow seed length must match symbol.dim");
    }
    require(cfg.certify.seed_count > 0, "certify.seed_count must be positive");
    require(cfg.certify.box_halfwidth > 0.0, "certify.box_halfwidth must be positive");
    require(cfg.certify.tol_char > 0.0, "certify.tol_char must be positive");
    require(cfg.certify.r1_safety >= 1.0, "certify.r1_safety must be at least 1");
    require(cfg.certify.t_max >= 0.0, "certify.t_max must be nonnegative");
    require(cfg.certify.mourre_safety > 0.0 && cfg.certify.mourre_safety <= 1.0,
            "certify.mourre_safety must lie in (0, 1]");
    require(cfg.certify.band_samples > 0, "certify.band_samples must be positive");
    require(cfg.escape_check.points > 0, "escape_check.points must be positive");
    require(cfg.escape_check.tol > 0.0, "escape_check.tol must be positive");
    require(cfg.escape_check.max_doublings >= 0,
            "escape_check.max_doublings must be nonnegative");
    require(cfg.transport_check.grid_points > 0,
            "transport_check.grid_points must be positive");
    require(cfg.transport_check.tol > 0.0, "transport_check.tol must be positive");
    require(cfg.transport_check.backward_probes >= 0,
            "transport_check.backward_probes must be nonnegative");
    require(cfg.quantize_check.estimate_trials > 0,
            "quantize_check.estimate_trials must be positive");
    require(cfg.run.jobs >= 0, "run.jobs must be nonnegative");
    // Deeper parameter coupling (weight ranges, tube widths, grid sizes) is
    // validated by the modules themselves so the diagnostics stay in one place.
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path);
}

Symbol make_symbol(const SymbolConfig& sc) {
    if (sc.kind == "free") return make_free_laplacian(sc.dim);
    if (sc.kind == "klein_gordon") {
        MetricSpec spec;
        if (sc.metric == "minkowski") {
            spec = MetricSpec::minkowski(sc.dim);
        } else if (sc.metric == "minkowski_bump") {
            spec = MetricSpec::minkowski_bump(sc.dim, sc.bump_amplitude, sc.bump_width);
        } else {
            throw ConfigError("unknown symbol.metric '" + sc.metric + "'");
        }
        return make_klein_gordon(spec, {}, std::nullopt, sc.mu);
    }
    throw ConfigError("unknown symbol.kind '" + sc.kind + "'");
}

}  // namespace hamesc
