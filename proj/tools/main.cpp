// Command-line front end: synthesize networked datasets, run the
// relaxation over the simulated message network, solve the linear
// oracle, and summarize finished runs.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fedrelax/experiment.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<long long> seed;
    std::optional<double> lambda;
    std::optional<std::string> schedule;
};

void add_common_flags(CLI::App& cmd, CommonFlags& flags) {
    cmd.add_option("--config", flags.config_path, "experiment config file (JSON)")->required();
    cmd.add_option("--out", flags.out_dir, "output directory (overrides config)");
    cmd.add_option("--seed", flags.seed, "seed override");
    cmd.add_option("--lambda", flags.lambda, "coupling strength override");
    cmd.add_option("--schedule", flags.schedule, "parallel|sequential");
}

fedrelax::ExperimentConfig load_with_overrides(const CommonFlags& flags) {
    auto config = fedrelax::load_experiment_config(flags.config_path);
    fedrelax::Overrides overrides;
    if (flags.out_dir) overrides.out_dir = *flags.out_dir;
    if (flags.seed) overrides.seed = static_cast<std::uint64_t>(*flags.seed);
    if (flags.lambda) overrides.lambda = *flags.lambda;
    if (flags.schedule) {
        if (*flags.schedule == "parallel") {
            overrides.schedule = fedrelax::Schedule::parallel;
        } else if (*flags.schedule == "sequential") {
            overrides.schedule = fedrelax::Schedule::sequential;
        } else {
            throw fedrelax::error(fedrelax::errc::usage, "--schedule must be parallel or sequential");
        }
    }
    fedrelax::apply_overrides(config, overrides);
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"federated training of per-node models coupled through neighbour predictions"};
    app.require_subcommand(1);

    CommonFlags synth_flags;
    CommonFlags run_flags;
    CommonFlags oracle_flags;
    std::string report_dir;

    auto* synth = app.add_subcommand("synth", "write a synthetic graph, datasets and test set");
    add_common_flags(*synth, synth_flags);
    auto* run = app.add_subcommand("run", "train and write round metrics plus final models");
    add_common_flags(*run, run_flags);
    auto* oracle = app.add_subcommand("oracle", "solve the all-linear instance exactly");
    add_common_flags(*oracle, oracle_flags);
    auto* report = app.add_subcommand("report", "summarize a finished run directory");
    report->add_option("run_dir", report_dir, "run output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (synth->parsed()) {
            fedrelax::run_synth(load_with_overrides(synth_flags), std::cout);
        } else if (run->parsed()) {
            fedrelax::run_run(load_with_overrides(run_flags), std::cout);
        } else if (oracle->parsed()) {
            fedrelax::run_oracle(load_with_overrides(oracle_flags), std::cout);
        } else if (report->parsed()) {
            fedrelax::run_report(report_dir, std::cout);
        }
    } catch (const fedrelax::error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return fedrelax::exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
