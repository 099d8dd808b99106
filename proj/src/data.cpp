#include "fedrelax/data.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "fedrelax/detail/rng.hpp"
#include "fedrelax/detail/text.hpp"

namespace fedrelax {

std::string ValidationReport::to_string() const {
    std::string out;
    for (const auto& p : problems) {
        out += p;
        out += '\n';
    }
    return out;
}

namespace {

bool all_finite(const Matrix& m, std::size_t* bad_row) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (double v : m.row(r)) {
            if (!std::isfinite(v)) {
                if (bad_row) *bad_row = r;
                return false;
            }
        }
    }
    return true;
}

}  // namespace

ValidationReport validate(const NetworkedData& nd) {
    ValidationReport report;
    const auto n = static_cast<std::size_t>(nd.graph.node_count());
    if (nd.datasets.size() != n) {
        report.problems.push_back("dataset count " + std::to_string(nd.datasets.size()) +
                                  " does not match node count " + std::to_string(n));
    }
    const std::size_t d = nd.test_set.features.cols();
    if (nd.test_set.features.rows() == 0) {
        report.problems.push_back("test set: must contain at least one feature row");
    }
    if (std::size_t bad = 0; !all_finite(nd.test_set.features, &bad)) {
        report.problems.push_back("test set: non-finite feature in row " + std::to_string(bad));
    }
    for (std::size_t i = 0; i < nd.datasets.size(); ++i) {
        const auto& ds = nd.datasets[i];
        const std::string who = "node " + std::to_string(i);
        if (ds.features.rows() == 0) {
            report.problems.push_back(who + ": dataset must contain at least one sample");
        }
        if (ds.features.rows() != ds.labels.size()) {
            report.problems.push_back(who + ": feature row count " + std::to_string(ds.features.rows()) +
                                      " does not match label count " + std::to_string(ds.labels.size()));
        }
        if (ds.features.cols() != d) {
            report.problems.push_back(who + ": feature dimension " + std::to_string(ds.features.cols()) +
                                      " does not match test-set dimension " + std::to_string(d));
        }
        if (std::size_t bad = 0; !all_finite(ds.features, &bad)) {
            report.problems.push_back(who + ": non-finite feature in row " + std::to_string(bad));
        }
        for (std::size_t r = 0; r < ds.labels.size(); ++r) {
            if (!std::isfinite(ds.labels[r])) {
                report.problems.push_back(who + ": non-finite label in row " + std::to_string(r));
            }
        }
    }
    return report;
}

NetworkedData synth_networked_data(const EmpiricalGraph& g, const ClusterAssignment& clusters,
                                   const std::vector<std::vector<double>>& cluster_weights,
                                   int m_per_node, int m_test, double noise_std, std::uint64_t seed) {
    const int n = g.node_count();
    if (static_cast<std::size_t>(n) != clusters.cluster_of.size()) {
        throw error(errc::parameter, "synth_networked_data: cluster assignment length does not match node count");
    }
    if (m_per_node < 1 || m_test < 1) {
        throw error(errc::parameter, "synth_networked_data: need m_per_node >= 1 and m_test >= 1");
    }
    if (noise_std < 0.0 || !std::isfinite(noise_std)) {
        throw error(errc::parameter, "synth_networked_data: noise_std must be a nonnegative finite number");
    }
    if (cluster_weights.empty()) {
        throw error(errc::parameter, "synth_networked_data: need at least one cluster weight vector");
    }
    const std::size_t d = cluster_weights.front().size();
    for (const auto& w : cluster_weights) {
        if (w.size() != d) {
            throw error(errc::parameter, "synth_networked_data: cluster weight vectors differ in length");
        }
    }
    for (int c : clusters.cluster_of) {
        if (c < 0 || static_cast<std::size_t>(c) >= cluster_weights.size()) {
            throw error(errc::parameter, "synth_networked_data: cluster id " + std::to_string(c) +
                                             " has no weight vector");
        }
    }

    std::mt19937_64 rng(seed);
    NetworkedData nd{g, {}, {}};
    nd.datasets.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const auto& w = cluster_weights[static_cast<std::size_t>(clusters.cluster_of[static_cast<std::size_t>(i)])];
        LocalDataset ds;
        ds.features = Matrix(static_cast<std::size_t>(m_per_node), d);
        ds.labels.resize(static_cast<std::size_t>(m_per_node));
        for (int r = 0; r < m_per_node; ++r) {
            double y = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                const double x = detail::normal01(rng);
                ds.features(static_cast<std::size_t>(r), c) = x;
                y += w[c] * x;
            }
            ds.labels[static_cast<std::size_t>(r)] = y + noise_std * detail::normal01(rng);
        }
        nd.datasets.push_back(std::move(ds));
    }
    nd.test_set.features = Matrix(static_cast<std::size_t>(m_test), d);
    for (int r = 0; r < m_test; ++r) {
        for (std::size_t c = 0; c < d; ++c) {
            nd.test_set.features(static_cast<std::size_t>(r), c) = detail::normal01(rng);
        }
    }
    return nd;
}

namespace {

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw error(errc::io, "cannot open file: " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

}  // namespace

NetworkedData load_networked_data(const std::filesystem::path& graph_path,
                                  const std::filesystem::path& data_path,
                                  const std::filesystem::path& test_path) {
    EmpiricalGraph graph = load_graph(graph_path);
    const auto n = static_cast<std::size_t>(graph.node_count());

    // Test set first; it fixes the feature dimension d.
    const auto test_lines = read_lines(test_path);
    if (test_lines.empty()) throw error(errc::parse, test_path.string() + ": missing header row");
    const std::size_t d = detail::split_csv_row(test_lines.front()).size();
    std::vector<std::vector<double>> test_rows;
    for (std::size_t li = 1; li < test_lines.size(); ++li) {
        if (test_lines[li].empty()) continue;
        const std::string where = test_path.string() + " row " + std::to_string(li + 1);
        const auto fields = detail::split_csv_row(test_lines[li]);
        if (fields.size() != d) {
            throw error(errc::parse, where + ": expected " + std::to_string(d) + " columns, got " +
                                         std::to_string(fields.size()));
        }
        std::vector<double> row(d);
        for (std::size_t c = 0; c < d; ++c) row[c] = detail::parse_double(fields[c], where);
        test_rows.push_back(std::move(row));
    }

    const auto data_lines = read_lines(data_path);
    if (data_lines.empty()) throw error(errc::parse, data_path.string() + ": missing header row");
    const std::size_t data_cols = detail::split_csv_row(data_lines.front()).size();
    if (data_cols != d + 2) {
        throw error(errc::parse, data_path.string() + ": header has " + std::to_string(data_cols) +
                                     " columns, expected node_id, " + std::to_string(d) + " features, y");
    }
    std::map<int, std::vector<std::pair<std::vector<double>, double>>> per_node;
    for (std::size_t li = 1; li < data_lines.size(); ++li) {
        if (data_lines[li].empty()) continue;
        const std::string where = data_path.string() + " row " + std::to_string(li + 1);
        const auto fields = detail::split_csv_row(data_lines[li]);
        if (fields.size() != data_cols) {
            throw error(errc::parse, where + ": expected " + std::to_string(data_cols) + " columns, got " +
                                         std::to_string(fields.size()));
        }
        const auto node = detail::parse_int(fields[0], where);
        if (node < 0 || static_cast<std::size_t>(node) >= n) {
            throw error(errc::parse, where + ": node id " + std::to_string(node) + " out of range for n=" +
                                         std::to_string(n));
        }
        std::vector<double> x(d);
        for (std::size_t c = 0; c < d; ++c) x[c] = detail::parse_double(fields[c + 1], where);
        const double y = detail::parse_double(fields.back(), where);
        per_node[static_cast<int>(node)].emplace_back(std::move(x), y);
    }

    NetworkedData nd{std::move(graph), {}, {}};
    nd.datasets.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto it = per_node.find(static_cast<int>(i));
        const std::size_t m = it == per_node.end() ? 0 : it->second.size();
        LocalDataset ds;
        ds.features = Matrix(m, d);
        ds.labels.resize(m);
        for (std::size_t r = 0; r < m; ++r) {
            const auto& [x, y] = it->second[r];
            for (std::size_t c = 0; c < d; ++c) ds.features(r, c) = x[c];
            ds.labels[r] = y;
        }
        nd.datasets[i] = std::move(ds);
    }
    nd.test_set.features = Matrix(test_rows.size(), d);
    for (std::size_t r = 0; r < test_rows.size(); ++r) {
        for (std::size_t c = 0; c < d; ++c) nd.test_set.features(r, c) = test_rows[r][c];
    }

    const auto report = validate(nd);
    if (!report.ok()) {
        throw error(errc::validation, "invalid networked data (" + data_path.string() + ", " +
                                          test_path.string() + "):\n" + report.to_string());
    }
    return nd;
}

std::string datasets_to_csv_text(const std::vector<LocalDataset>& datasets) {
    const std::size_t d = datasets.empty() ? 0 : datasets.front().features.cols();
    std::ostringstream out;
    out << "node_id";
    for (std::size_t c = 0; c < d; ++c) out << ",x_" << (c + 1);
    out << ",y\n";
    for (std::size_t i = 0; i < datasets.size(); ++i) {
        const auto& ds = datasets[i];
        for (std::size_t r = 0; r < ds.features.rows(); ++r) {
            out << i;
            for (double v : ds.features.row(r)) out << ',' << detail::format_double(v);
            out << ',' << detail::format_double(ds.labels[r]) << '\n';
        }
    }
    return out.str();
}

std::string test_set_to_csv_text(const TestSet& test_set) {
    std::ostringstream out;
    for (std::size_t c = 0; c < test_set.features.cols(); ++c) {
        if (c > 0) out << ',';
        out << "x_" << (c + 1);
    }
    out << '\n';
    for (std::size_t r = 0; r < test_set.features.rows(); ++r) {
        const auto row = test_set.features.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c > 0) out << ',';
            out << detail::format_double(row[c]);
        }
        out << '\n';
    }
    return out.str();
}

void save_networked_data(const NetworkedData& nd, const std::filesystem::path& graph_path,
                         const std::filesystem::path& data_path, const std::filesystem::path& test_path) {
    save_graph(nd.graph, graph_path);
    std::ofstream data_out(data_path);
    if (!data_out) throw error(errc::io, "cannot write dataset file: " + data_path.string());
    data_out << datasets_to_csv_text(nd.datasets);
    std::ofstream test_out(test_path);
    if (!test_out) throw error(errc::io, "cannot write test-set file: " + test_path.string());
    test_out << test_set_to_csv_text(nd.test_set);
}

}  // namespace fedrelax
