// Command-line front end: run one aggregation experiment, compare the two
// learners on a shared stream, or validate a trace file.
//
// Exit codes: 0 success, 1 invalid configuration (the message names the
// field), 2 trace I/O error (the message names the line), 3 numerical
// failure during a run (the message names the step).
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "moeagg/experiment.hpp"
#include "moeagg/trace.hpp"
#include "presets.hpp"

namespace {

using namespace moeagg;
using cli::ConfigError;
using cli::RunConfig;

enum class LogLevel { error = 0, info = 1, debug = 2 };

LogLevel log_level() {
    const char* raw = std::getenv("MOE_OCO_LOG");
    if (raw == nullptr) return LogLevel::error;
    const std::string value(raw);
    if (value == "info") return LogLevel::info;
    if (value == "debug") return LogLevel::debug;
    if (value != "error" && !value.empty())
        std::cerr << "moeagg: unknown MOE_OCO_LOG level '" << value << "', using 'error'\n";
    return LogLevel::error;
}

void log_info(const std::string& message) {
    if (log_level() >= LogLevel::info) std::cerr << "[info] " << message << '\n';
}

void log_debug(const std::string& message) {
    if (log_level() >= LogLevel::debug) std::cerr << "[debug] " << message << '\n';
}

std::unique_ptr<StepSource> open_stream(const RunConfig& config) {
    if (config.trace_path) return std::make_unique<TraceReader>(*config.trace_path);
    return std::make_unique<ScenarioStream>(generate_scenario(*config.scenario));
}

// Shared flag set for `run` and `compare`.
struct Flags {
    std::string preset;
    std::string config_path;
    std::string learner;
    std::string loss;
    std::string out;
    std::string trace;
    double discount = 0.0;
    double beta = 0.0;
    double tau = 0.0;
    std::uint64_t seed = 0;
    std::size_t topk = 0;
    std::size_t window = 0;
};

void register_flags(CLI::App* app, Flags& flags) {
    app->add_option("--preset", flags.preset, "Named configuration to start from");
    app->add_option("--config", flags.config_path, "JSON config file (overrides the preset)");
    app->add_option("--seed", flags.seed, "Scenario RNG seed override");
    app->add_option("--out", flags.out, "Output directory");
    app->add_option("--learner", flags.learner, "squint or eg");
    app->add_option("--loss", flags.loss,
                    "probability, soft_min_frde, sample_mse or sample_topk");
    app->add_option("--discount", flags.discount, "Discount factor in (0, 1]");
    app->add_option("--beta", flags.beta, "softmin temperature");
    app->add_option("--tau", flags.tau, "softsort temperature");
    app->add_option("--topk", flags.topk, "top-k mode count");
    app->add_option("--window", flags.window, "metric smoothing window");
    app->add_option("--trace", flags.trace, "Replay this trace instead of a scenario");
}

RunConfig resolve(const CLI::App* app, const Flags& flags) {
    RunConfig config;
    if (app->count("--preset") > 0) config = cli::preset(flags.preset);
    if (app->count("--config") > 0) cli::apply_config_file(config, flags.config_path);
    if (app->count("--learner") > 0) config.learner = flags.learner;
    if (app->count("--loss") > 0) config.loss = flags.loss;
    if (app->count("--discount") > 0) config.discount = flags.discount;
    if (app->count("--beta") > 0) config.beta = flags.beta;
    if (app->count("--tau") > 0) config.tau = flags.tau;
    if (app->count("--topk") > 0) config.topk = flags.topk;
    if (app->count("--window") > 0) config.window = flags.window;
    if (app->count("--out") > 0) config.out = flags.out;
    if (app->count("--seed") > 0) config.seed = flags.seed;
    if (app->count("--trace") > 0) {
        config.trace_path = flags.trace;
        config.scenario.reset();
    }
    cli::finalize(config);
    return config;
}

int cmd_run(const RunConfig& config) {
    try {
        log_debug("resolved config:\n" + cli::echo_json(config));
        auto stream = open_stream(config);
        const ExperimentResult result = run_experiment(*stream, cli::to_experiment_config(config));
        write_result(result, config.out, cli::echo_json(config));
        log_info("run complete: " + std::to_string(result.steps) + " steps, results in " +
                 config.out);
        if (result.steps > 0) {
            std::cout << "steps=" << result.steps << " experts=" << result.n_experts
                      << " hindsight_best=" << result.hindsight_best()
                      << " final_alpha_best="
                      << result.alpha_history.back()[result.hindsight_best()] << '\n';
        } else {
            std::cout << "steps=0\n";
        }
        return 0;
    } catch (const TraceError& error) {
        std::cerr << "moeagg run: " << error.what() << '\n';
        return 2;
    } catch (const NumericalError& error) {
        std::cerr << "moeagg run: numerical failure at " << error.what() << '\n';
        return 3;
    } catch (const std::exception& error) {
        std::cerr << "moeagg run: " << error.what() << '\n';
        return 3;
    }
}

int cmd_compare(const RunConfig& base) {
    try {
        if (base.trace_path) {
            const TraceSummary summary = validate_trace(*base.trace_path);
            if (summary.n_experts < 2)
                throw ConfigError("learner", "compare requires at least two experts");
        }

        RunConfig squint_config = base;
        squint_config.learner = "squint";
        RunConfig eg_config = base;
        eg_config.learner = "eg";

        log_info("running squint arm");
        auto squint_stream = open_stream(squint_config);
        const ExperimentResult squint_result =
            run_experiment(*squint_stream, cli::to_experiment_config(squint_config));
        log_info("running eg arm");
        auto eg_stream = open_stream(eg_config);
        const ExperimentResult eg_result =
            run_experiment(*eg_stream, cli::to_experiment_config(eg_config));

        const std::filesystem::path out_dir(base.out);
        write_result(squint_result, out_dir / "squint", cli::echo_json(squint_config));
        write_result(eg_result, out_dir / "eg", cli::echo_json(eg_config));

        const std::size_t best = squint_result.hindsight_best();
        const double threshold = 0.9;
        const auto squint_steps = squint_result.steps_to_threshold(best, threshold);
        const auto eg_steps = eg_result.steps_to_threshold(best, threshold);

        nlohmann::json report;
        report["best_expert"] = best;
        report["threshold"] = threshold;
        report["squint_steps"] = squint_steps ? nlohmann::json(*squint_steps) : nullptr;
        report["eg_steps"] = eg_steps ? nlohmann::json(*eg_steps) : nullptr;
        if (squint_steps && eg_steps && *squint_steps > 0) {
            report["ratio_eg_over_squint"] =
                static_cast<double>(*eg_steps) / static_cast<double>(*squint_steps);
        } else {
            report["ratio_eg_over_squint"] = nullptr;
        }
        std::filesystem::create_directories(out_dir);
        std::ofstream out(out_dir / "compare.json");
        out << report.dump(2) << '\n';

        std::cout << "best_expert=" << best << '\n';
        std::cout << "squint_steps_to_threshold="
                  << (squint_steps ? std::to_string(*squint_steps) : "none") << '\n';
        std::cout << "eg_steps_to_threshold="
                  << (eg_steps ? std::to_string(*eg_steps) : "none") << '\n';
        if (report["ratio_eg_over_squint"].is_number())
            std::cout << "ratio=" << report["ratio_eg_over_squint"].get<double>() << '\n';
        return 0;
    } catch (const ConfigError& error) {
        std::cerr << "moeagg compare: " << error.what() << '\n';
        return 1;
    } catch (const TraceError& error) {
        std::cerr << "moeagg compare: " << error.what() << '\n';
        return 2;
    } catch (const NumericalError& error) {
        std::cerr << "moeagg compare: numerical failure at " << error.what() << '\n';
        return 3;
    } catch (const std::exception& error) {
        std::cerr << "moeagg compare: " << error.what() << '\n';
        return 3;
    }
}

int cmd_validate_trace(const std::string& path) {
    try {
        const TraceSummary summary = validate_trace(path);
        std::cout << "steps=" << summary.steps << " experts=" << summary.n_experts
                  << " modes=" << summary.n_modes << " horizon=" << summary.horizon
                  << " samples=" << summary.samples_per_expert << '\n';
        return 0;
    } catch (const TraceError& error) {
        std::cerr << "moeagg validate-trace: " << error.what() << '\n';
        return 2;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Online aggregation of trajectory predictors"};
    app.require_subcommand(1);

    Flags run_flags, compare_flags;
    CLI::App* run = app.add_subcommand("run", "Run one experiment and write result files");
    register_flags(run, run_flags);
    CLI::App* compare =
        app.add_subcommand("compare", "Run squint and eg on the identical stream");
    register_flags(compare, compare_flags);

    std::string trace_path;
    CLI::App* validate = app.add_subcommand("validate-trace", "Check a trace file");
    validate->add_option("trace", trace_path, "Path to a .jsonl trace")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& help) {
        return app.exit(help);
    } catch (const CLI::ParseError& error) {
        app.exit(error);
        return 1;
    }

    try {
        if (run->parsed()) return cmd_run(resolve(run, run_flags));
        if (compare->parsed()) return cmd_compare(resolve(compare, compare_flags));
        if (validate->parsed()) return cmd_validate_trace(trace_path);
    } catch (const ConfigError& error) {
        std::cerr << "moeagg: " << error.what() << '\n';
        return 1;
    }
    return 0;
}
