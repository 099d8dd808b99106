#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "fedrelax/data.hpp"
#include "fedrelax/detail/rng.hpp"

using namespace fedrelax;

namespace {

NetworkedData small_consistent_instance() {
    NetworkedData nd{EmpiricalGraph(2, {{0, 1, 1.0}}), {}, {}};
    for (int i = 0; i < 2; ++i) {
        LocalDataset ds;
        ds.features = Matrix(2, 2);
        ds.features(0, 0) = 1.0;
        ds.features(1, 1) = static_cast<double>(i + 1);
        ds.labels = {0.5, -0.5};
        nd.datasets.push_back(std::move(ds));
    }
    nd.test_set.features = Matrix(3, 2);
    nd.test_set.features(0, 0) = 1.0;
    return nd;
}

// Closed-form one-dimensional least squares, the test-side oracle.
double ols_1d(const LocalDataset& ds) {
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t r = 0; r < ds.features.rows(); ++r) {
        sxy += ds.features(r, 0) * ds.labels[r];
        sxx += ds.features(r, 0) * ds.features(r, 0);
    }
    return sxy / sxx;
}

std::filesystem::path temp_dir() {
    const auto dir = std::filesystem::temp_directory_path() / "fedrelax_data_test";
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("validate accepts a consistent instance") {
    CHECK(validate(small_consistent_instance()).ok());
}

TEST_CASE("validate names the node with a dimension mismatch") {
    auto nd = small_consistent_instance();
    nd.datasets[1].features = Matrix(2, 3);
    const auto report = validate(nd);
    REQUIRE_FALSE(report.ok());
    CHECK(report.to_string().find("node 1") != std::string::npos);
    CHECK(report.to_string().find("dimension") != std::string::npos);
}

TEST_CASE("validate names node and row for a non-finite label") {
    auto nd = small_consistent_instance();
    nd.datasets[0].labels[1] = std::numeric_limits<double>::quiet_NaN();
    const auto report = validate(nd);
    REQUIRE_FALSE(report.ok());
    CHECK(report.to_string().find("node 0") != std::string::npos);
    CHECK(report.to_string().find("row 1") != std::string::npos);
}

TEST_CASE("validate reports every violation") {
    auto nd = small_consistent_instance();
    nd.datasets[0].labels[0] = std::numeric_limits<double>::infinity();
    nd.datasets[1].features = Matrix(2, 3);
    nd.test_set.features = Matrix(0, 2);
    const auto report = validate(nd);
    CHECK(report.problems.size() >= 3);
}

TEST_CASE("synthetic data follows the noiseless linear law exactly") {
    EmpiricalGraph g(3, {{0, 1, 1.0}});
    ClusterAssignment clusters{{0, 0, 0}};
    const auto nd = synth_networked_data(g, clusters, {{2.0}}, 4, 5, 0.0, 13);
    REQUIRE(validate(nd).ok());
    for (const auto& ds : nd.datasets) {
        for (std::size_t r = 0; r < ds.features.rows(); ++r) {
            CHECK(std::abs(ds.labels[r] - 2.0 * ds.features(r, 0)) <= 1e-12);
        }
    }
}

TEST_CASE("synthetic data is bit-identical for a fixed seed") {
    EmpiricalGraph g(4, {{0, 1, 1.0}, {2, 3, 1.0}});
    ClusterAssignment clusters{{0, 0, 1, 1}};
    const std::vector<std::vector<double>> weights = {{1.0, -0.5}, {0.25, 2.0}};
    const auto a = synth_networked_data(g, clusters, weights, 3, 6, 0.7, 21);
    const auto b = synth_networked_data(g, clusters, weights, 3, 6, 0.7, 21);
    CHECK(datasets_to_csv_text(a.datasets) == datasets_to_csv_text(b.datasets));
    CHECK(test_set_to_csv_text(a.test_set) == test_set_to_csv_text(b.test_set));
    const auto c = synth_networked_data(g, clusters, weights, 3, 6, 0.7, 22);
    CHECK(datasets_to_csv_text(a.datasets) != datasets_to_csv_text(c.datasets));
}

TEST_CASE("per-node least squares recovers the cluster weights without noise") {
    const auto [g, clusters] = generate_sbm(6, 2, 0.9, 0.1, 1.0, 2);
    const auto nd = synth_networked_data(g, clusters, {{1.0}, {-1.0}}, 3, 4, 0.0, 17);
    for (std::size_t i = 0; i < nd.datasets.size(); ++i) {
        const double expected = clusters.cluster_of[i] == 0 ? 1.0 : -1.0;
        CHECK(ols_1d(nd.datasets[i]) == doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("synth validates its parameters") {
    EmpiricalGraph g(2, {});
    ClusterAssignment clusters{{0, 1}};
    CHECK_THROWS_AS(synth_networked_data(g, clusters, {{1.0}}, 2, 2, 0.0, 0), error);  // missing weight vector
    CHECK_THROWS_AS(synth_networked_data(g, clusters, {{1.0}, {2.0}}, 0, 2, 0.0, 0), error);
    CHECK_THROWS_AS(synth_networked_data(g, clusters, {{1.0}, {2.0}}, 2, 0, 0.0, 0), error);
    CHECK_THROWS_AS(synth_networked_data(g, clusters, {{1.0}, {2.0}}, 2, 2, -1.0, 0), error);
}

TEST_CASE("networked data survives a save/load round trip bit-exactly") {
    const auto dir = temp_dir();
    const auto [g, clusters] = generate_sbm(5, 2, 0.8, 0.2, 1.0, 9);
    const auto nd = synth_networked_data(g, clusters, {{0.1, -0.7}, {1.0 / 3.0, 2.0}}, 3, 4, 0.3, 31);
    save_networked_data(nd, dir / "graph.json", dir / "data.csv", dir / "test.csv");
    const auto loaded = load_networked_data(dir / "graph.json", dir / "data.csv", dir / "test.csv");
    REQUIRE(loaded.datasets.size() == nd.datasets.size());
    for (std::size_t i = 0; i < nd.datasets.size(); ++i) {
        CHECK(loaded.datasets[i].features == nd.datasets[i].features);
        CHECK(loaded.datasets[i].labels == nd.datasets[i].labels);
    }
    CHECK(loaded.test_set.features == nd.test_set.features);
    CHECK(graph_to_json_text(loaded.graph) == graph_to_json_text(nd.graph));
}

TEST_CASE("loader reports malformed rows with their row number") {
    const auto dir = temp_dir();
    {
        std::ofstream g(dir / "g.json");
        g << "{\"n\": 2, \"edges\": [[0, 1, 1.0]]}";
        std::ofstream t(dir / "t.csv");
        t << "x_1\n0.5\n";
        std::ofstream d(dir / "d.csv");
        d << "node_id,x_1,y\n0,1.0,2.0\n1,3.0\n";  // row 3 short
    }
    try {
        load_networked_data(dir / "g.json", dir / "d.csv", dir / "t.csv");
        FAIL("expected a parse error");
    } catch (const error& e) {
        CHECK(e.kind() == errc::parse);
        CHECK(std::string(e.what()).find("row 3") != std::string::npos);
    }
}

TEST_CASE("loader rejects an empty test set") {
    const auto dir = temp_dir();
    {
        std::ofstream g(dir / "g2.json");
        g << "{\"n\": 1, \"edges\": []}";
        std::ofstream t(dir / "t2.csv");
        t << "x_1\n";  // header only
        std::ofstream d(dir / "d2.csv");
        d << "node_id,x_1,y\n0,1.0,2.0\n";
    }
    try {
        load_networked_data(dir / "g2.json", dir / "d2.csv", dir / "t2.csv");
        FAIL("expected a validation error");
    } catch (const error& e) {
        CHECK(e.kind() == errc::validation);
    }
}

TEST_CASE("loader rejects non-finite and non-numeric literals") {
    const auto dir = temp_dir();
    {
        std::ofstream g(dir / "g3.json");
        g << "{\"n\": 1, \"edges\": []}";
        std::ofstream t(dir / "t3.csv");
        t << "x_1\ninf\n";
        std::ofstream d(dir / "d3.csv");
        d << "node_id,x_1,y\n0,1.0,2.0\n";
    }
    CHECK_THROWS_AS(load_networked_data(dir / "g3.json", dir / "d3.csv", dir / "t3.csv"), error);
    {
        std::ofstream d(dir / "d4.csv");
        d << "node_id,x_1,y\n0,abc,2.0\n";
        std::ofstream t(dir / "t4.csv");
        t << "x_1\n0.5\n";
    }
    CHECK_THROWS_AS(load_networked_data(dir / "g3.json", dir / "d4.csv", dir / "t4.csv"), error);
}

TEST_CASE("loader errors on a missing file name the path") {
    try {
        load_networked_data("/nonexistent/graph.json", "/nonexistent/d.csv", "/nonexistent/t.csv");
        FAIL("expected an io error");
    } catch (const error& e) {
        CHECK(e.kind() == errc::io);
        CHECK(std::string(e.what()).find("/nonexistent/graph.json") != std::string::npos);
    }
}

TEST_CASE("validate(synth(...)) holds across random parameters") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 6);
        const int k = 1 + static_cast<int>(rng() % static_cast<unsigned>(n));
        const auto [g, clusters] = generate_sbm(n, k, 0.6, 0.2, 0.5 + detail::uniform01(rng), rng());
        const std::size_t d = 1 + rng() % 3;
        std::vector<std::vector<double>> weights(static_cast<std::size_t>(k));
        for (auto& w : weights) {
            w.resize(d);
            for (auto& v : w) v = detail::normal01(rng);
        }
        const auto nd = synth_networked_data(g, clusters, weights, 1 + static_cast<int>(rng() % 5),
                                             1 + static_cast<int>(rng() % 5), detail::uniform01(rng), rng());
        CHECK(validate(nd).ok());
    }
}
