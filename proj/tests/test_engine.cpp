#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "fedrelax/detail/rng.hpp"
#include "fedrelax/engine.hpp"
#include "fedrelax/experiment.hpp"

using namespace fedrelax;

namespace {

constexpr LossKind kSq = LossKind::squared_error;

Matrix column_vector(std::vector<double> values) {
    Matrix m(values.size(), 1);
    for (std::size_t r = 0; r < values.size(); ++r) m(r, 0) = values[r];
    return m;
}

NetworkedData random_linear_instance(std::mt19937_64& rng, int n, std::size_t d, double edge_prob) {
    std::vector<Edge> edges;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (detail::uniform01(rng) < edge_prob) edges.push_back({i, j, 0.25 + detail::uniform01(rng)});
        }
    }
    NetworkedData nd{EmpiricalGraph(n, std::move(edges)), {}, {}};
    for (int i = 0; i < n; ++i) {
        LocalDataset ds;
        const std::size_t m = d + rng() % 8;  // at least d samples per node
        ds.features = Matrix(m, d);
        ds.labels.resize(m);
        for (std::size_t r = 0; r < m; ++r) {
            for (std::size_t c = 0; c < d; ++c) ds.features(r, c) = detail::normal01(rng);
            ds.labels[r] = detail::normal01(rng);
        }
        nd.datasets.push_back(std::move(ds));
    }
    const std::size_t m_test = std::max<std::size_t>(d, 3) + rng() % 4;
    nd.test_set.features = Matrix(m_test, d);
    for (std::size_t r = 0; r < m_test; ++r) {
        for (std::size_t c = 0; c < d; ++c) nd.test_set.features(r, c) = detail::normal01(rng);
    }
    return nd;
}

std::string result_fingerprint(const FedRelaxResult& result) {
    std::ostringstream out;
    write_round_logs(result.logs, out);
    out << networked_hypothesis_to_json(result.hypotheses).dump();
    return out.str();
}

double sup_norm_diff(const Matrix& a, const Matrix& b) {
    double out = 0.0;
    for (std::size_t k = 0; k < a.data().size(); ++k) {
        out = std::max(out, std::abs(a.data()[k] - b.data()[k]));
    }
    return out;
}

}  // namespace

TEST_CASE("augmented samples with lambda zero are exactly the local data") {
    LocalDataset ds;
    ds.features = column_vector({1.0, 2.0, 3.0});
    ds.labels = {0.5, 1.5, -1.0};
    TestSet t{column_vector({9.0})};
    const auto samples =
        build_augmented_samples(0, ds, {{1, {0.0}}}, t, {{1, 2.0}}, 0.0, 1);
    REQUIRE(samples.size() == 3);
    for (std::size_t r = 0; r < 3; ++r) {
        CHECK(samples[r].feature[0] == ds.features(r, 0));
        CHECK(samples[r].label == ds.labels[r]);
        CHECK(samples[r].weight == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    }
    // no neighbours behaves the same way
    const auto lonely = build_augmented_samples(0, ds, {}, t, {}, 2.0, 1);
    CHECK(lonely.size() == 3);
}

TEST_CASE("augmented samples weight pseudo labels by lambda * A / m'") {
    LocalDataset ds;
    ds.features = column_vector({1.0});
    ds.labels = {0.0};
    TestSet t{column_vector({1.0})};
    const auto samples = build_augmented_samples(0, ds, {{1, {1.0}}}, t, {{1, 1.0}}, 2.0, 1);
    REQUIRE(samples.size() == 2);
    CHECK(samples[0].feature[0] == 1.0);
    CHECK(samples[0].label == 0.0);
    CHECK(samples[0].weight == 1.0);
    CHECK(samples[1].feature[0] == 1.0);
    CHECK(samples[1].label == 1.0);
    CHECK(samples[1].weight == 2.0);
    // m' scales the pseudo weight down
    TestSet wide{column_vector({1.0, 1.0, 1.0, 1.0})};
    const auto spread =
        build_augmented_samples(0, ds, {{1, {1.0, 1.0, 1.0, 1.0}}}, wide, {{1, 1.0}}, 2.0, 4);
    REQUIRE(spread.size() == 5);
    for (std::size_t r = 1; r < 5; ++r) CHECK(spread[r].weight == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("augmented samples reject a short prediction vector") {
    LocalDataset ds;
    ds.features = column_vector({1.0});
    ds.labels = {0.0};
    TestSet t{column_vector({1.0, 2.0})};
    CHECK_THROWS_AS(build_augmented_samples(0, ds, {{1, {1.0}}}, t, {{1, 1.0}}, 1.0, 2), error);
    CHECK_THROWS_AS(build_augmented_samples(0, ds, {}, t, {{1, 1.0}}, 1.0, 2), error);
}

TEST_CASE("node update solves the scalar quadratic by hand") {
    // one sample (x=1, y=0), one neighbour predicting 1 at the single
    // test point x=1, edge weight 1, lambda 2:
    // minimize w^2 + 2 (w - 1)^2 -> w = 2/3
    NetworkedData nd{EmpiricalGraph(2, {{0, 1, 1.0}}), {}, {}};
    LocalDataset d0;
    d0.features = column_vector({1.0});
    d0.labels = {0.0};
    nd.datasets = {d0, d0};
    nd.test_set.features = column_vector({1.0});
    EngineConfig config;
    config.lambda = 2.0;
    const auto prev = zero_hypothesis(LinearSpec{1});
    const auto h = node_update(0, {{1, {1.0}}}, nd, LinearSpec{1}, prev, config);
    CHECK(std::get<LinearParams>(h.params()).weights[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("node update with lambda zero or no neighbours is the plain local fit") {
    std::mt19937_64 rng(17);
    auto nd = random_linear_instance(rng, 2, 1, 1.0);
    EngineConfig config;
    config.lambda = 0.0;
    const auto prev = zero_hypothesis(LinearSpec{1});
    const auto plain = weighted_erm_fit(
        LinearSpec{1}, build_augmented_samples(0, nd.datasets[0], {}, nd.test_set, {}, 0.0,
                                               nd.test_set.features.rows()));
    const auto updated = node_update(0, {{1, std::vector<double>(nd.test_set.features.rows(), 0.0)}}, nd,
                                     LinearSpec{1}, prev, config);
    CHECK(hypothesis_to_json(updated) == hypothesis_to_json(plain));

    NetworkedData isolated{EmpiricalGraph(2, {}), nd.datasets, nd.test_set};
    EngineConfig coupled;
    coupled.lambda = 7.0;
    const auto lonely = node_update(0, {}, isolated, LinearSpec{1}, prev, coupled);
    CHECK(hypothesis_to_json(lonely) == hypothesis_to_json(plain));
}

TEST_CASE("lambda zero runs reduce to independent fits, bit for bit") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 3 + static_cast<int>(rng() % 3);
        auto nd = random_linear_instance(rng, n, 2, 0.7);
        std::vector<ModelSpec> specs;
        for (int i = 0; i < n; ++i) {
            switch (i % 3) {
                case 0: specs.emplace_back(LinearSpec{2}); break;
                case 1: specs.emplace_back(TreeSpec{2, 1}); break;
                default: specs.emplace_back(ConstantSpec{}); break;
            }
        }
        EngineConfig config;
        config.lambda = 0.0;
        config.schedule = trial % 2 == 0 ? Schedule::sequential : Schedule::parallel;
        const auto result = run_fedrelax(nd, specs, config);
        for (int i = 0; i < n; ++i) {
            std::vector<WeightedSample> local;
            const auto& ds = nd.datasets[static_cast<std::size_t>(i)];
            for (std::size_t r = 0; r < ds.features.rows(); ++r) {
                const auto row = ds.features.row(r);
                local.push_back({{row.begin(), row.end()}, ds.labels[r],
                                 1.0 / static_cast<double>(ds.features.rows())});
            }
            const auto independent = weighted_erm_fit(specs[static_cast<std::size_t>(i)], local);
            CHECK(hypothesis_to_json(result.hypotheses.nodes[static_cast<std::size_t>(i)]) ==
                  hypothesis_to_json(independent));
        }
        // constant objective once fitted, so the tolerance stop fires after round 1
        REQUIRE(result.logs.size() == 2);
        CHECK(result.logs[0].objective == result.logs[1].objective);
        CHECK(result.logs[1].max_prediction_delta == 0.0);
        CHECK(result.logs[0].objective == result.logs[0].total_local_loss);  // lambda * gtv contributes 0
    }
}

TEST_CASE("edgeless graphs behave like lambda zero for any lambda") {
    std::mt19937_64 rng(29);
    auto nd = random_linear_instance(rng, 3, 1, 0.0);
    REQUIRE(nd.graph.edges().empty());
    const std::vector<ModelSpec> specs(3, LinearSpec{1});
    EngineConfig with_lambda;
    with_lambda.lambda = 5.0;
    EngineConfig without;
    without.lambda = 0.0;
    CHECK(result_fingerprint(run_fedrelax(nd, specs, with_lambda)) ==
          result_fingerprint(run_fedrelax(nd, specs, without)));
}

TEST_CASE("oracle matches the hand-solved two-node system") {
    // nodes: (x0=1, y0=2) and (x1=2, y1=-1); edge weight 1.5;
    // test rows {1, -1} so the gram scalar is 2; lambda 0.8.
    NetworkedData nd{EmpiricalGraph(2, {{0, 1, 1.5}}), {}, {}};
    LocalDataset d0;
    d0.features = column_vector({1.0});
    d0.labels = {2.0};
    LocalDataset d1;
    d1.features = column_vector({2.0});
    d1.labels = {-1.0};
    nd.datasets = {d0, d1};
    nd.test_set.features = column_vector({1.0, -1.0});
    const double lambda = 0.8;

    // stationarity: (x0^2 + c) w0 - c w1 = x0 y0, with c = lambda*A*Q/m'
    const double q = 2.0;
    const double c = lambda * 1.5 * q / 2.0;
    const double a00 = 1.0 + c;
    const double a11 = 4.0 + c;
    const double det = a00 * a11 - c * c;
    const double b0 = 2.0;
    const double b1 = -2.0;
    const double w0 = (b0 * a11 + c * b1) / det;
    const double w1 = (a00 * b1 + c * b0) / det;

    const auto params = oracle_gtvmin_linear(nd, lambda);
    CHECK(params(0, 0) == doctest::Approx(w0).epsilon(1e-12));
    CHECK(params(0, 1) == doctest::Approx(w1).epsilon(1e-12));

    // sequential relaxation converges to the same point
    EngineConfig config;
    config.lambda = lambda;
    config.stopping.max_rounds = 500;
    config.stopping.rel_objective_tol = 0.0;
    const auto result = run_fedrelax(nd, {LinearSpec{1}, LinearSpec{1}}, config);
    const auto& rw0 = std::get<LinearParams>(result.hypotheses.nodes[0].params()).weights[0];
    const auto& rw1 = std::get<LinearParams>(result.hypotheses.nodes[1].params()).weights[0];
    CHECK(std::abs(rw0 - w0) <= 1e-6);
    CHECK(std::abs(rw1 - w1) <= 1e-6);
}

TEST_CASE("oracle with lambda zero is per-node least squares") {
    std::mt19937_64 rng(37);
    const auto nd = random_linear_instance(rng, 4, 1, 0.8);
    const auto params = oracle_gtvmin_linear(nd, 0.0);
    for (std::size_t i = 0; i < 4; ++i) {
        const auto& ds = nd.datasets[i];
        double sxy = 0.0;
        double sxx = 0.0;
        for (std::size_t r = 0; r < ds.features.rows(); ++r) {
            sxy += ds.features(r, 0) * ds.labels[r];
            sxx += ds.features(r, 0) * ds.features(r, 0);
        }
        CHECK(params(0, i) == doctest::Approx(sxy / sxx).epsilon(1e-10));
    }
}

TEST_CASE("oracle on a single node is ordinary least squares") {
    std::mt19937_64 rng(41);
    const auto nd = random_linear_instance(rng, 1, 2, 0.0);
    const auto params = oracle_gtvmin_linear(nd, 3.0);
    const auto hypotheses = hypotheses_from_parameters(params);
    // any perturbation fits worse
    const double base = local_loss(hypotheses.nodes[0], nd.datasets[0], kSq);
    for (int trial = 0; trial < 200; ++trial) {
        LinearParams perturbed{{params(0, 0) + 0.01 * detail::normal01(rng),
                                params(1, 0) + 0.01 * detail::normal01(rng)}};
        LocalHypothesis h(LinearSpec{2}, perturbed);
        CHECK(local_loss(h, nd.datasets[0], kSq) >= base - 1e-12);
    }
}

TEST_CASE("oracle enforces the size cap") {
    std::mt19937_64 rng(43);
    const auto nd = random_linear_instance(rng, 101, 2, 0.0);
    try {
        oracle_gtvmin_linear(nd, 1.0);
        FAIL("expected a size-cap error");
    } catch (const error& e) {
        CHECK(e.kind() == errc::size_cap);
    }
}

TEST_CASE("sequential descent is monotone with exact-minimizer specs") {
    std::mt19937_64 rng(47);
    for (int trial = 0; trial < 15; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 4);
        const auto nd = random_linear_instance(rng, n, 1 + rng() % 2, 0.7);
        std::vector<ModelSpec> specs;
        for (int i = 0; i < n; ++i) {
            if (i % 2 == 0) {
                specs.emplace_back(LinearSpec{static_cast<int>(nd.test_set.features.cols())});
            } else {
                specs.emplace_back(ConstantSpec{});
            }
        }
        EngineConfig config;
        config.lambda = 0.1 + 3.0 * detail::uniform01(rng);
        config.stopping.max_rounds = 30;
        config.stopping.rel_objective_tol = 0.0;
        const auto result = run_fedrelax(nd, specs, config);
        for (std::size_t k = 1; k < result.logs.size(); ++k) {
            CHECK(result.logs[k].objective <= result.logs[k - 1].objective + 1e-9);
        }
    }
}

TEST_CASE("runs are deterministic and independent of the worker count") {
    std::mt19937_64 rng(53);
    const auto nd = random_linear_instance(rng, 5, 2, 0.6);
    std::vector<ModelSpec> specs(5, LinearSpec{2});
    specs[2] = TreeSpec{2, 1};
    EngineConfig config;
    config.lambda = 0.7;
    config.schedule = Schedule::parallel;
    config.stopping.max_rounds = 12;
    config.stopping.rel_objective_tol = 0.0;
    const auto once = result_fingerprint(run_fedrelax(nd, specs, config, 1));
    const auto again = result_fingerprint(run_fedrelax(nd, specs, config, 1));
    const auto threaded = result_fingerprint(run_fedrelax(nd, specs, config, 4));
    CHECK(once == again);
    CHECK(once == threaded);
}

TEST_CASE("least-squares entry point is bit-identical to the general run") {
    std::mt19937_64 rng(59);
    const auto nd = random_linear_instance(rng, 4, 1, 0.8);
    const std::vector<ModelSpec> specs(4, LinearSpec{1});
    EngineConfig config;
    config.lambda = 1.3;
    config.stopping.max_rounds = 8;
    CHECK(result_fingerprint(run_fedrelax(nd, specs, config)) ==
          result_fingerprint(run_fedrelax_least_squares(nd, specs, config)));
}

TEST_CASE("coupled training strictly improves on the first round of a clustered fixture") {
    const auto [g, clusters] = generate_sbm(8, 2, 0.9, 0.1, 1.0, 6);
    const auto nd = synth_networked_data(g, clusters, {{1.0}, {-1.0}}, 3, 8, 0.4, 7);
    EngineConfig config;
    config.lambda = 0.5;
    config.stopping.max_rounds = 25;
    config.stopping.rel_objective_tol = 0.0;
    const auto result =
        run_fedrelax_least_squares(nd, std::vector<ModelSpec>(8, LinearSpec{1}), config);
    REQUIRE(result.logs.size() == 25);
    CHECK(result.logs.back().objective < result.logs.front().objective);
    for (std::size_t k = 0; k < result.logs.size(); ++k) {
        CHECK(result.logs[k].round == static_cast<int>(k));
    }
}

TEST_CASE("round logs decompose the objective and track prediction change") {
    std::mt19937_64 rng(61);
    const auto nd = random_linear_instance(rng, 4, 2, 0.7);
    const std::vector<ModelSpec> specs(4, LinearSpec{2});
    EngineConfig config;
    config.lambda = 0.9;
    config.stopping.max_rounds = 6;
    config.stopping.rel_objective_tol = 0.0;
    const auto result = run_fedrelax(nd, specs, config);
    REQUIRE(result.logs.size() == 6);
    for (const auto& log : result.logs) {
        CHECK(log.objective == log.total_local_loss + config.lambda * log.gtv);
        CHECK(log.max_prediction_delta >= 0.0);
    }
    // the first round's prediction delta measures distance from the zero start
    CHECK(result.logs[0].max_prediction_delta > 0.0);
}

TEST_CASE("node relabeling permutes the outputs") {
    std::mt19937_64 rng(67);
    const auto nd = random_linear_instance(rng, 4, 1, 0.8);
    const std::vector<int> perm = {2, 0, 3, 1};
    std::vector<Edge> edges;
    for (const auto& e : nd.graph.edges()) {
        edges.push_back({perm[static_cast<std::size_t>(e.i)], perm[static_cast<std::size_t>(e.j)], e.weight});
    }
    NetworkedData permuted{EmpiricalGraph(4, std::move(edges)), {}, nd.test_set};
    permuted.datasets.resize(4);
    for (std::size_t i = 0; i < 4; ++i) {
        permuted.datasets[static_cast<std::size_t>(perm[i])] = nd.datasets[i];
    }
    EngineConfig config;
    config.lambda = 1.1;
    config.schedule = Schedule::parallel;  // sweep order must not matter for this check
    config.stopping.max_rounds = 10;
    config.stopping.rel_objective_tol = 0.0;
    const std::vector<ModelSpec> specs(4, LinearSpec{1});
    const auto base = run_fedrelax(nd, specs, config);
    const auto shuffled = run_fedrelax(permuted, specs, config);
    for (std::size_t i = 0; i < 4; ++i) {
        const double original = std::get<LinearParams>(base.hypotheses.nodes[i].params()).weights[0];
        const double moved =
            std::get<LinearParams>(shuffled.hypotheses.nodes[static_cast<std::size_t>(perm[i])].params())
                .weights[0];
        CHECK(moved == doctest::Approx(original).epsilon(1e-9));
    }
}

TEST_CASE("parametric run equals the all-linear run and exposes parameters") {
    std::mt19937_64 rng(71);
    const auto nd = random_linear_instance(rng, 4, 2, 0.7);
    EngineConfig config;
    config.lambda = 0.6;
    config.stopping.max_rounds = 15;
    config.stopping.rel_objective_tol = 0.0;
    const auto parametric = run_fedrelax_parametric(nd, 2, config);
    const auto general = run_fedrelax(nd, std::vector<ModelSpec>(4, LinearSpec{2}), config);
    for (std::size_t i = 0; i < 4; ++i) {
        const auto& w = std::get<LinearParams>(general.hypotheses.nodes[i].params()).weights;
        for (std::size_t c = 0; c < 2; ++c) CHECK(parametric.parameters(c, i) == w[c]);
    }
    // induced hypotheses reproduce X w exactly and the objective matches
    const auto induced = hypotheses_from_parameters(parametric.parameters);
    for (std::size_t i = 0; i < 4; ++i) {
        const auto preds = induced.nodes[i].predict(nd.test_set.features);
        for (std::size_t r = 0; r < preds.size(); ++r) {
            double dot = 0.0;
            for (std::size_t c = 0; c < 2; ++c) {
                dot += nd.test_set.features(r, c) * parametric.parameters(c, i);
            }
            CHECK(preds[r] == dot);
        }
    }
    double total_local = 0.0;
    for (std::size_t i = 0; i < 4; ++i) total_local += local_loss(induced.nodes[i], nd.datasets[i], kSq);
    const double via_laplacian = total_local + config.lambda * laplacian_gtv_quadratic(parametric.parameters,
                                                                                       nd.graph, nd.test_set);
    CHECK(via_laplacian ==
          doctest::Approx(gtvmin_objective(induced, nd, config.lambda, kSq)).epsilon(1e-12));
}

TEST_CASE("parametric run with lambda zero recovers per-node least squares") {
    std::mt19937_64 rng(73);
    const auto nd = random_linear_instance(rng, 3, 1, 0.9);
    EngineConfig config;
    config.lambda = 0.0;
    const auto parametric = run_fedrelax_parametric(nd, 1, config);
    const auto ols = oracle_gtvmin_linear(nd, 0.0);
    CHECK(sup_norm_diff(parametric.parameters, ols) <= 1e-9);
}

TEST_CASE("parametric run rejects a dimension mismatch") {
    std::mt19937_64 rng(79);
    const auto nd = random_linear_instance(rng, 3, 2, 0.5);
    EngineConfig config;
    CHECK_THROWS_AS(run_fedrelax_parametric(nd, 3, config), error);
}

TEST_CASE("consensus fixture: identical data and a large lambda align all columns") {
    std::mt19937_64 rng(83);
    LocalDataset shared;
    shared.features = Matrix(4, 1);
    shared.labels.resize(4);
    for (std::size_t r = 0; r < 4; ++r) {
        shared.features(r, 0) = detail::normal01(rng);
        shared.labels[r] = 2.0 * shared.features(r, 0) + 0.1 * detail::normal01(rng);
    }
    std::vector<Edge> edges;
    for (int i = 0; i < 4; ++i) {
        for (int j = i + 1; j < 4; ++j) edges.push_back({i, j, 1.0});
    }
    NetworkedData nd{EmpiricalGraph(4, std::move(edges)), std::vector<LocalDataset>(4, shared), {}};
    nd.test_set.features = column_vector({0.5, -1.0, 2.0});
    EngineConfig config;
    config.lambda = 1e4;
    config.stopping.max_rounds = 50;
    config.stopping.rel_objective_tol = 0.0;
    const auto result = run_fedrelax_parametric(nd, 1, config);
    for (std::size_t i = 1; i < 4; ++i) {
        CHECK(std::abs(result.parameters(0, i) - result.parameters(0, 0)) <= 1e-3);
    }
}

TEST_CASE("oracle dominance and fixed-point behaviour") {
    std::mt19937_64 rng(89);
    for (int trial = 0; trial < 8; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 3);
        const std::size_t d = 1 + rng() % 2;
        const auto nd = random_linear_instance(rng, n, d, 0.8);
        const double lambda = 0.2 + 2.0 * detail::uniform01(rng);
        const auto oracle = oracle_gtvmin_linear(nd, lambda);
        const auto oracle_h = hypotheses_from_parameters(oracle);
        const double oracle_objective = gtvmin_objective(oracle_h, nd, lambda, kSq);

        EngineConfig config;
        config.lambda = lambda;
        config.stopping.max_rounds = 400;
        config.stopping.rel_objective_tol = 0.0;
        const std::vector<ModelSpec> specs(static_cast<std::size_t>(n), LinearSpec{static_cast<int>(d)});
        const auto run = run_fedrelax(nd, specs, config);
        CHECK(oracle_objective <= run.logs.back().objective + 1e-8);

        // one manual sequential sweep from the oracle point moves nothing
        std::vector<LocalHypothesis> h = oracle_h.nodes;
        std::vector<std::vector<double>> preds;
        for (const auto& node : h) preds.push_back(node.predict(nd.test_set.features));
        double moved = 0.0;
        for (int i = 0; i < n; ++i) {
            std::map<int, std::vector<double>> snapshot;
            for (const auto& [j, w] : nd.graph.neighbours(i)) {
                (void)w;
                snapshot.emplace(j, preds[static_cast<std::size_t>(j)]);
            }
            const auto updated = node_update(i, snapshot, nd, specs[static_cast<std::size_t>(i)],
                                             h[static_cast<std::size_t>(i)], config);
            const auto& before = std::get<LinearParams>(h[static_cast<std::size_t>(i)].params()).weights;
            const auto& after = std::get<LinearParams>(updated.params()).weights;
            for (std::size_t c = 0; c < d; ++c) moved = std::max(moved, std::abs(after[c] - before[c]));
            h[static_cast<std::size_t>(i)] = updated;
            preds[static_cast<std::size_t>(i)] = updated.predict(nd.test_set.features);
        }
        CHECK(moved <= 1e-8);
    }
}

TEST_CASE("a run that overflows reports the round and location") {
    NetworkedData nd{EmpiricalGraph(2, {{0, 1, 1.0}}), {}, {}};
    LocalDataset d0;
    d0.features = column_vector({1.0});
    d0.labels = {1e160};
    LocalDataset d1;
    d1.features = column_vector({1.0});
    d1.labels = {-1e160};
    nd.datasets = {d0, d1};
    nd.test_set.features = column_vector({1.0});
    EngineConfig config;
    config.lambda = 1e-6;
    try {
        run_fedrelax(nd, {LinearSpec{1}, LinearSpec{1}}, config);
        FAIL("expected a numerical error");
    } catch (const error& e) {
        CHECK(e.kind() == errc::numerical);
        CHECK(std::string(e.what()).find("round 0") != std::string::npos);
        CHECK(std::string(e.what()).find("node") != std::string::npos);
    }
}

TEST_CASE("round log csv round-trips") {
    std::vector<RoundLog> logs = {{0, 1.5, 1.0, 0.5, 0.25}, {1, 1.25, 1.0, 0.25, 1.0 / 3.0}};
    std::ostringstream out;
    write_round_logs(logs, out);
    std::istringstream in(out.str());
    const auto back = read_round_logs(in, "mem");
    REQUIRE(back.size() == 2);
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(back[k].round == logs[k].round);
        CHECK(back[k].objective == logs[k].objective);
        CHECK(back[k].max_prediction_delta == logs[k].max_prediction_delta);
    }
    std::istringstream truncated("round,objective,total_local_loss,gtv,max_prediction_delta\n0,1.0,1.0\n");
    CHECK_THROWS_AS(read_round_logs(truncated, "mem"), error);
}

TEST_CASE("engine validates its inputs") {
    std::mt19937_64 rng(97);
    auto nd = random_linear_instance(rng, 3, 1, 0.5);
    EngineConfig config;
    CHECK_THROWS_AS(run_fedrelax(nd, std::vector<ModelSpec>(2, LinearSpec{1}), config), error);
    config.lambda = -1.0;
    CHECK_THROWS_AS(run_fedrelax(nd, std::vector<ModelSpec>(3, LinearSpec{1}), config), error);
    config.lambda = 1.0;
    config.stopping.max_rounds = 0;
    CHECK_THROWS_AS(run_fedrelax(nd, std::vector<ModelSpec>(3, LinearSpec{1}), config), error);
    config.stopping.max_rounds = 5;
    nd.datasets[1].labels.clear();
    CHECK_THROWS_AS(run_fedrelax(nd, std::vector<ModelSpec>(3, LinearSpec{1}), config), error);
}
