#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fedrelax/graph.hpp"
#include "fedrelax/matrix.hpp"

namespace fedrelax {

// Labeled samples held by one node: feature rows and one label per row.
struct LocalDataset {
    Matrix features;             // m_i x d
    std::vector<double> labels;  // length m_i
};

// Unlabeled features every node shares; the coupling between neighbor
// models is measured on these rows.
struct TestSet {
    Matrix features;  // m' x d
};

struct NetworkedData {
    EmpiricalGraph graph;
    std::vector<LocalDataset> datasets;  // one per node
    TestSet test_set;
};

struct ValidationReport {
    std::vector<std::string> problems;

    bool ok() const noexcept { return problems.empty(); }
    std::string to_string() const;
};

// Checks every structural invariant (one dataset per node, at least one
// sample each, matching dimensions, finite entries, non-empty test set)
// and reports all violations with the node index.
ValidationReport validate(const NetworkedData& nd);

// Draws per-node samples with standard normal features and labels
// w_cluster' x + noise, plus a test set from the same feature law.
// One weight vector per cluster id appearing in `clusters`.
NetworkedData synth_networked_data(const EmpiricalGraph& g, const ClusterAssignment& clusters,
                                   const std::vector<std::vector<double>>& cluster_weights,
                                   int m_per_node, int m_test, double noise_std, std::uint64_t seed);

// CSV formats. Dataset file: header `node_id,x_1..x_d,y`, one row per
// sample, any node order. Test-set file: header `x_1..x_d`.
NetworkedData load_networked_data(const std::filesystem::path& graph_path,
                                  const std::filesystem::path& data_path,
                                  const std::filesystem::path& test_path);

std::string datasets_to_csv_text(const std::vector<LocalDataset>& datasets);
std::string test_set_to_csv_text(const TestSet& test_set);
void save_networked_data(const NetworkedData& nd, const std::filesystem::path& graph_path,
                         const std::filesystem::path& data_path, const std::filesystem::path& test_path);

}  // namespace fedrelax
