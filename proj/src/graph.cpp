#include "fedrelax/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

#include "fedrelax/detail/rng.hpp"

namespace fedrelax {

EmpiricalGraph::EmpiricalGraph(int node_count, std::vector<Edge> edges)
    : node_count_(node_count), edges_(std::move(edges)) {
    if (node_count_ <= 0) {
        throw error(errc::parameter, "graph: node count must be positive");
    }
    for (auto& e : edges_) {
        if (e.i == e.j) {
            throw error(errc::parameter, "graph: self-loop at node " + std::to_string(e.i));
        }
        if (e.i > e.j) std::swap(e.i, e.j);
        if (e.i < 0 || e.j >= node_count_) {
            throw error(errc::invalid_node, "graph: edge (" + std::to_string(e.i) + ", " +
                                                std::to_string(e.j) + ") out of range for n=" +
                                                std::to_string(node_count_));
        }
        if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
            throw error(errc::parameter, "graph: edge (" + std::to_string(e.i) + ", " +
                                             std::to_string(e.j) + ") weight must be a positive finite number");
        }
    }
    std::sort(edges_.begin(), edges_.end(),
              [](const Edge& a, const Edge& b) { return std::pair(a.i, a.j) < std::pair(b.i, b.j); });
    for (std::size_t k = 1; k < edges_.size(); ++k) {
        if (edges_[k - 1].i == edges_[k].i && edges_[k - 1].j == edges_[k].j) {
            throw error(errc::parameter, "graph: duplicate edge (" + std::to_string(edges_[k].i) + ", " +
                                             std::to_string(edges_[k].j) + ")");
        }
    }
    adjacency_.assign(static_cast<std::size_t>(node_count_), {});
    for (const auto& e : edges_) {
        adjacency_[static_cast<std::size_t>(e.i)].emplace_back(e.j, e.weight);
        adjacency_[static_cast<std::size_t>(e.j)].emplace_back(e.i, e.weight);
    }
    for (auto& nbrs : adjacency_) {
        std::sort(nbrs.begin(), nbrs.end());
    }
}

const std::vector<std::pair<int, double>>& EmpiricalGraph::neighbours(int i) const {
    if (i < 0 || i >= node_count_) {
        throw error(errc::invalid_node, "neighbours: node " + std::to_string(i) + " out of range for n=" +
                                            std::to_string(node_count_));
    }
    return adjacency_[static_cast<std::size_t>(i)];
}

bool EmpiricalGraph::has_edge(int i, int j) const {
    if (i < 0 || i >= node_count_ || j < 0 || j >= node_count_) return false;
    const auto& nbrs = adjacency_[static_cast<std::size_t>(i)];
    return std::any_of(nbrs.begin(), nbrs.end(), [j](const auto& p) { return p.first == j; });
}

Matrix EmpiricalGraph::laplacian() const {
    const auto n = static_cast<std::size_t>(node_count_);
    Matrix l(n, n);
    for (const auto& e : edges_) {
        const auto i = static_cast<std::size_t>(e.i);
        const auto j = static_cast<std::size_t>(e.j);
        l(i, i) += e.weight;
        l(j, j) += e.weight;
        l(i, j) -= e.weight;
        l(j, i) -= e.weight;
    }
    return l;
}

int ClusterAssignment::cluster_count() const {
    int max_id = -1;
    for (int c : cluster_of) max_id = std::max(max_id, c);
    return max_id + 1;
}

ClusterAssignment connected_components(const EmpiricalGraph& g) {
    const int n = g.node_count();
    ClusterAssignment out;
    out.cluster_of.assign(static_cast<std::size_t>(n), -1);
    int next_id = 0;
    std::vector<int> stack;
    for (int start = 0; start < n; ++start) {
        if (out.cluster_of[static_cast<std::size_t>(start)] != -1) continue;
        const int id = next_id++;
        stack.push_back(start);
        out.cluster_of[static_cast<std::size_t>(start)] = id;
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            for (const auto& [u, w] : g.neighbours(v)) {
                (void)w;
                if (out.cluster_of[static_cast<std::size_t>(u)] == -1) {
                    out.cluster_of[static_cast<std::size_t>(u)] = id;
                    stack.push_back(u);
                }
            }
        }
    }
    return out;
}

std::pair<EmpiricalGraph, ClusterAssignment> generate_sbm(int n, int k, double p_in, double p_out,
                                                          double weight, std::uint64_t seed) {
    if (n < 1 || k < 1 || k > n) {
        throw error(errc::parameter, "generate_sbm: need n >= k >= 1, got n=" + std::to_string(n) +
                                         " k=" + std::to_string(k));
    }
    if (!(p_in >= 0.0 && p_in <= 1.0) || !(p_out >= 0.0 && p_out <= 1.0)) {
        throw error(errc::parameter, "generate_sbm: probabilities must lie in [0, 1]");
    }
    if (!(weight > 0.0) || !std::isfinite(weight)) {
        throw error(errc::parameter, "generate_sbm: edge weight must be positive");
    }

    // Contiguous near-equal blocks, larger blocks first.
    ClusterAssignment clusters;
    clusters.cluster_of.resize(static_cast<std::size_t>(n));
    const int base = n / k;
    const int extra = n % k;
    int node = 0;
    for (int c = 0; c < k; ++c) {
        const int size = base + (c < extra ? 1 : 0);
        for (int s = 0; s < size; ++s) clusters.cluster_of[static_cast<std::size_t>(node++)] = c;
    }

    std::mt19937_64 rng(seed);
    std::vector<Edge> edges;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const bool same = clusters.cluster_of[static_cast<std::size_t>(i)] ==
                              clusters.cluster_of[static_cast<std::size_t>(j)];
            const double p = same ? p_in : p_out;
            if (detail::uniform01(rng) < p) edges.push_back({i, j, weight});
        }
    }
    return {EmpiricalGraph(n, std::move(edges)), std::move(clusters)};
}

EmpiricalGraph load_graph(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw error(errc::io, "cannot open graph file: " + path.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw error(errc::parse, path.string() + ": " + e.what());
    }
    if (!doc.is_object() || !doc.contains("n") || !doc.contains("edges")) {
        throw error(errc::parse, path.string() + ": expected object with \"n\" and \"edges\"");
    }
    if (!doc["n"].is_number_integer()) {
        throw error(errc::parse, path.string() + ": \"n\" must be an integer");
    }
    const int n = doc["n"].get<int>();
    if (!doc["edges"].is_array()) {
        throw error(errc::parse, path.string() + ": \"edges\" must be an array");
    }
    std::vector<Edge> edges;
    std::size_t index = 0;
    for (const auto& entry : doc["edges"]) {
        const std::string where = path.string() + ": edges[" + std::to_string(index) + "]";
        if (!entry.is_array() || entry.size() != 3 || !entry[0].is_number_integer() ||
            !entry[1].is_number_integer() || !entry[2].is_number()) {
            throw error(errc::parse, where + ": expected [i, j, weight]");
        }
        Edge e{entry[0].get<int>(), entry[1].get<int>(), entry[2].get<double>()};
        if (e.i >= e.j) {
            throw error(errc::parse, where + ": endpoints must satisfy i < j");
        }
        edges.push_back(e);
        ++index;
    }
    try {
        return EmpiricalGraph(n, std::move(edges));
    } catch (const error& e) {
        throw error(e.kind(), path.string() + ": " + e.what());
    }
}

std::string graph_to_json_text(const EmpiricalGraph& g) {
    nlohmann::json doc;
    doc["n"] = g.node_count();
    auto& arr = doc["edges"] = nlohmann::json::array();
    for (const auto& e : g.edges()) arr.push_back({e.i, e.j, e.weight});
    return doc.dump(2) + "\n";
}

void save_graph(const EmpiricalGraph& g, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw error(errc::io, "cannot write graph file: " + path.string());
    out << graph_to_json_text(g);
    if (!out) throw error(errc::io, "failed writing graph file: " + path.string());
}

}  // namespace fedrelax
