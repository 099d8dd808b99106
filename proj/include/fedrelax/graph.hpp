#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "fedrelax/matrix.hpp"

namespace fedrelax {

struct Edge {
    int i = 0;  // smaller endpoint after canonicalization
    int j = 0;
    double weight = 0.0;  // strictly positive

    bool operator==(const Edge&) const = default;
};

// Undirected weighted graph whose nodes carry local datasets. Edge
// weights encode how statistically similar two nodes' data is assumed
// to be. Immutable after construction; safe to share across threads.
class EmpiricalGraph {
public:
    // Edges may arrive in either endpoint order; they are stored with
    // i < j and sorted. Self-loops, duplicate pairs, out-of-range ids
    // and non-positive weights are rejected.
    EmpiricalGraph(int node_count, std::vector<Edge> edges);

    int node_count() const noexcept { return node_count_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }

    // Adjacent (node, weight) pairs in ascending node order.
    const std::vector<std::pair<int, double>>& neighbours(int i) const;

    bool has_edge(int i, int j) const;

    // Weighted degree-minus-adjacency matrix; rows sum to zero.
    Matrix laplacian() const;

private:
    int node_count_ = 0;
    std::vector<Edge> edges_;
    std::vector<std::vector<std::pair<int, double>>> adjacency_;
};

struct ClusterAssignment {
    std::vector<int> cluster_of;  // node id -> cluster id, ids contiguous from 0

    int cluster_count() const;
};

// Labels connected components; component ids follow the smallest node
// id they contain, so node 0 is always in cluster 0.
ClusterAssignment connected_components(const EmpiricalGraph& g);

// Planted-partition generator: k near-equal contiguous blocks of nodes,
// each intra-block pair wired with probability p_in and each cross-block
// pair with p_out. All edges share one weight. Deterministic per seed.
std::pair<EmpiricalGraph, ClusterAssignment> generate_sbm(int n, int k, double p_in, double p_out,
                                                          double weight, std::uint64_t seed);

// JSON graph file: {"n": <int>, "edges": [[i, j, weight], ...]} with i < j.
EmpiricalGraph load_graph(const std::filesystem::path& path);
std::string graph_to_json_text(const EmpiricalGraph& g);
void save_graph(const EmpiricalGraph& g, const std::filesystem::path& path);

}  // namespace fedrelax
