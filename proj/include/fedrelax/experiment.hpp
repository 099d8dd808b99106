#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fedrelax/simnet.hpp"

namespace fedrelax {

// Synthetic data source: a planted-partition graph plus per-cluster
// linear labeling laws. The one seed drives both the graph and the
// data draws (data uses a derived stream).
struct SynthSource {
    int n = 8;
    int clusters = 2;
    double p_in = 0.8;
    double p_out = 0.1;
    double edge_weight = 1.0;
    std::vector<std::vector<double>> cluster_weights;
    int m_per_node = 5;
    int m_test = 20;
    double noise_std = 0.0;
    std::uint64_t seed = 0;
    // Subsample the pooled training features for the test set instead
    // of drawing fresh rows.
    bool test_from_training = false;
};

struct FileSource {
    std::filesystem::path graph;
    std::filesystem::path data;
    std::filesystem::path test;
};

struct ExperimentConfig {
    std::variant<SynthSource, FileSource> data;
    std::optional<ModelSpec> uniform_model;       // exactly one of these two
    std::vector<ModelSpec> per_node_models;       // is populated
    EngineConfig engine;
    std::variant<Reliable, LossyIID> network;
    std::filesystem::path out_dir;
    bool trace_messages = false;
    bool trace_payloads = false;
};

// Parses the declarative JSON config document. Unknown keys and
// malformed sections raise errc::config with the offending key path.
ExperimentConfig parse_experiment_config(const std::string& text, const std::string& name);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct Overrides {
    std::optional<std::filesystem::path> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<double> lambda;
    std::optional<Schedule> schedule;
};

void apply_overrides(ExperimentConfig& config, const Overrides& overrides);

// Materializes the configured data source.
NetworkedData build_networked_data(const ExperimentConfig& config);
std::vector<ModelSpec> resolve_model_specs(const ExperimentConfig& config, int node_count);

// Subcommand bodies; each throws fedrelax::error on failure and prints
// a short summary line on success.
void run_synth(const ExperimentConfig& config, std::ostream& out);
void run_run(const ExperimentConfig& config, std::ostream& out);
void run_oracle(const ExperimentConfig& config, std::ostream& out);
void run_report(const std::filesystem::path& run_dir, std::ostream& out);

// 0 success, 1 usage/config, 2 data/validation, 3 numerical failure.
int exit_code_for(errc kind);

nlohmann::json networked_hypothesis_to_json(const NetworkedHypothesis& h);
NetworkedHypothesis networked_hypothesis_from_json(const nlohmann::json& doc);

}  // namespace fedrelax
