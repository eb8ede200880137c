#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"

#include "hamesc/config.hpp"
#include "hamesc/runner.hpp"

namespace {

struct CliArgs {
    std::string config_path;
    std::string out_dir;
    bool out_set = false;
    unsigned long long seed = 0;
    bool seed_set = false;
    int jobs = 0;
    bool jobs_set = false;
};

void add_common(CLI::App* sub, CliArgs& args) {
    sub->add_option("--config", args.config_path, "configuration file")->required();
    sub->add_option("--out", args.out_dir, "output directory (overrides run.out_dir)");
    sub->add_option("--seed", args.seed, "rng seed (overrides run.rng_seed)");
    sub->add_option("--jobs", args.jobs, "worker threads, 0 = hardware (overrides run.jobs)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hamesc: Hamiltonian escape certification toolkit"};
    app.require_subcommand(1);

    CliArgs args;
    const char* task_names[] = {"validate",        "flow",           "certify", "escape-check",
                                "transport-check", "quantize-check", "all"};
    const char* task_help[] = {
        "check the symbol against the admissible class",
        "integrate one characteristic and dump it",
        "run the full non-trapping certification",
        "verify the escape-weight lower bound",
        "verify the transport inequality",
        "discretized quantization cross-checks",
        "everything above, in order",
    };
    std::string chosen;
    for (int i = 0; i < 7; ++i) {
        CLI::App* sub = app.add_subcommand(task_names[i], task_help[i]);
        add_common(sub, args);
        sub->callback([&chosen, name = std::string(task_names[i])] { chosen = name; });
    }

    try {
        app.parse(argc, argv);
        // Flag presence has to be read after parsing.
        for (CLI::App* sub : app.get_subcommands()) {
            args.out_set = sub->count("--out") > 0;
            args.seed_set = sub->count("--seed") > 0;
            args.jobs_set = sub->count("--jobs") > 0;
        }
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        hamesc::RunConfig cfg = hamesc::load_config(args.config_path);
        if (args.out_set) cfg.run.out_dir = args.out_dir;
        if (args.seed_set) cfg.run.rng_seed = args.seed;
        if (args.jobs_set) cfg.run.jobs = args.jobs;

        const hamesc::Task task = hamesc::parse_task(chosen);
        const hamesc::RunOutcome outcome = hamesc::run_tasks(cfg, task);
        if (!outcome.pass) {
            std::fprintf(stderr, "FAIL:");
            for (const std::string& t : outcome.failed_tasks)
                std::fprintf(stderr, " %s", t.c_str());
            std::fprintf(stderr, " (see %s)\n", outcome.report_path.c_str());
            return 1;
        }
        std::fprintf(stdout, "OK (%s)\n", outcome.report_path.c_str());
        return 0;
    } catch (const hamesc::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
