// germgrain CLI: validate configs, run experiments, re-render reports.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "germgrain/harness.hpp"

using namespace germgrain;

int main(int argc, char** argv) {
    CLI::App app{"birth-and-growth process simulator and identity checker"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    int threads = 1;
    std::vector<std::string> only_checks;
    bool negative_controls = false;

    CLI::App* validate = app.add_subcommand("validate-config", "parse and validate a config");
    validate->add_option("--config", config_path, "experiment config (JSON)")->required();

    CLI::App* run = app.add_subcommand("run", "run the experiment and all applicable checks");
    run->add_option("--config", config_path, "experiment config (JSON)")->required();
    CLI::Option* seed_opt = run->add_option("--seed", seed, "override the config seed");
    run->add_option("--threads", threads, "worker threads (results are thread-count invariant)");
    CLI::Option* out_opt = run->add_option("--out", out_dir, "override the output directory");
    run->add_option("--check", only_checks, "run only the named checks (repeatable)");
    run->add_flag("--negative-controls", negative_controls,
                  "also run negative controls (excluded from the exit status)");

    CLI::App* report = app.add_subcommand("report", "re-render SVG plots from a run directory");
    report->add_option("--config", config_path, "experiment config (JSON)")->required();
    report->add_option("--out", out_dir, "run output directory")->required();

    CLI::App* list = app.add_subcommand("list-checks", "describe the available checks");

    CLI11_PARSE(app, argc, argv);

    try {
        if (list->parsed()) {
            for (const CheckInfo& info : list_checks())
                std::printf("%-22s %s\n  models: %s\n", info.name.c_str(),
                            info.description.c_str(), info.requires_kind.c_str());
            return 0;
        }

        ExperimentConfig cfg = load_config(config_path);

        if (validate->parsed()) {
            std::printf("ok: %s\n  dimension=%d window nodes=%ld padding=%s horizon=%s n=%ld\n"
                        "  fingerprint=%s\n",
                        cfg.name.c_str(), cfg.dimension, cfg.grid().size(),
                        format_double(cfg.padding).c_str(), format_double(cfg.horizon).c_str(),
                        cfg.n, hex64(cfg.fingerprint).c_str());
            return 0;
        }

        if (report->parsed()) {
            render_reports(cfg, out_dir);
            std::printf("re-rendered plots in %s\n", out_dir.c_str());
            return 0;
        }

        RunOptions opts;
        if (*seed_opt) opts.seed = seed;
        if (*out_opt) opts.out_dir = out_dir;
        opts.threads = threads;
        opts.only_checks = only_checks;
        opts.negative_controls = negative_controls;

        RunResult result = run_experiment(cfg, opts);
        for (const IdentityReport& rep : result.reports) {
            const char* status = !rep.applicable ? "SKIP"
                                 : rep.pass      ? "PASS"
                                                 : rep.negative_control ? "FAIL*" : "FAIL";
            std::printf("[%-5s] %-38s %s\n", status, rep.name.c_str(), rep.note.c_str());
        }
        std::printf("outputs: %s\n", result.out_dir.c_str());
        if (!result.all_passed) {
            std::fprintf(stderr, "one or more applicable checks failed\n");
            return 2;
        }
        return 0;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
