#include "fedrelax/engine.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include "fedrelax/detail/parallel.hpp"
#include "fedrelax/detail/text.hpp"

namespace fedrelax {

std::vector<WeightedSample> build_augmented_samples(
    int i, const LocalDataset& dataset, const std::map<int, std::vector<double>>& neighbor_predictions,
    const TestSet& t, const std::map<int, double>& neighbor_weights, double lambda, std::size_t m_test) {
    const std::size_t m_i = dataset.features.rows();
    if (m_i == 0) throw error(errc::parameter, "node " + std::to_string(i) + ": empty local dataset");
    std::vector<WeightedSample> samples;
    samples.reserve(m_i + neighbor_weights.size() * m_test);
    const double local_weight = 1.0 / static_cast<double>(m_i);
    for (std::size_t r = 0; r < m_i; ++r) {
        const auto row = dataset.features.row(r);
        samples.push_back({{row.begin(), row.end()}, dataset.labels[r], local_weight});
    }
    for (const auto& [j, edge_weight] : neighbor_weights) {
        const double pseudo_weight = lambda * edge_weight / static_cast<double>(m_test);
        if (pseudo_weight == 0.0) continue;
        const auto it = neighbor_predictions.find(j);
        if (it == neighbor_predictions.end()) {
            throw error(errc::parameter, "node " + std::to_string(i) + ": no prediction snapshot for neighbour " +
                                             std::to_string(j));
        }
        if (it->second.size() != m_test) {
            throw error(errc::dimension_mismatch,
                        "node " + std::to_string(i) + ": neighbour " + std::to_string(j) +
                            " prediction vector has length " + std::to_string(it->second.size()) +
                            ", expected " + std::to_string(m_test));
        }
        for (std::size_t r = 0; r < m_test; ++r) {
            const auto row = t.features.row(r);
            samples.push_back({{row.begin(), row.end()}, it->second[r], pseudo_weight});
        }
    }
    return samples;
}

namespace {

bool is_exact_minimizer_spec(const ModelSpec& spec) {
    return !std::holds_alternative<TreeSpec>(spec);
}

std::map<int, double> neighbor_weight_map(const EmpiricalGraph& g, int i) {
    std::map<int, double> weights;
    for (const auto& [j, w] : g.neighbours(i)) weights.emplace(j, w);
    return weights;
}

}  // namespace

namespace {

// The quantity a block update actually minimizes: the node's share of
// the full objective with every incident edge at its full weight.
double block_objective(int i, const LocalHypothesis& h, const std::map<int, std::vector<double>>& snapshot,
                       const NetworkedData& nd, double lambda, LossKind loss) {
    double out = local_loss(h, nd.datasets[static_cast<std::size_t>(i)], loss);
    for (const auto& [j, weight] : nd.graph.neighbours(i)) {
        const auto it = snapshot.find(j);
        if (it == snapshot.end()) {
            throw error(errc::parameter, "node " + std::to_string(i) + ": no prediction snapshot for neighbour " +
                                             std::to_string(j));
        }
        out += lambda * weight * discrepancy_to_predictions(h, it->second, nd.test_set, loss);
    }
    return out;
}

}  // namespace

LocalHypothesis node_update(int i, const std::map<int, std::vector<double>>& snapshot,
                            const NetworkedData& nd, const ModelSpec& spec_i,
                            const LocalHypothesis& previous, const EngineConfig& config) {
    const auto& dataset = nd.datasets[static_cast<std::size_t>(i)];
    const auto samples = build_augmented_samples(i, dataset, snapshot, nd.test_set,
                                                 neighbor_weight_map(nd.graph, i), config.lambda,
                                                 nd.test_set.features.rows());
    LocalHypothesis updated = weighted_erm_fit(spec_i, samples);
    if (is_exact_minimizer_spec(spec_i)) {
        const double before = block_objective(i, previous, snapshot, nd, config.lambda, config.loss);
        const double after = block_objective(i, updated, snapshot, nd, config.lambda, config.loss);
        if (!(after <= before + 1e-9)) {
            throw error(errc::numerical, "node " + std::to_string(i) +
                                             ": update increased the block objective from " +
                                             detail::format_double(before) + " to " + detail::format_double(after));
        }
    }
    return updated;
}

namespace {

struct RunState {
    std::vector<LocalHypothesis> hypotheses;
    std::vector<std::vector<double>> predictions;  // per node, on the test set
};

std::map<int, std::vector<double>> snapshot_of(const EmpiricalGraph& g, int i,
                                               const std::vector<std::vector<double>>& predictions) {
    std::map<int, std::vector<double>> snapshot;
    for (const auto& [j, w] : g.neighbours(i)) {
        (void)w;
        snapshot.emplace(j, predictions[static_cast<std::size_t>(j)]);
    }
    return snapshot;
}

void check_finite_predictions(int round, int node, const std::vector<double>& preds) {
    for (double v : preds) {
        if (!std::isfinite(v)) {
            throw error(errc::numerical, "round " + std::to_string(round) + ", node " + std::to_string(node) +
                                             ": non-finite prediction");
        }
    }
}

// Names the first offending node when a round's objective is non-finite.
void check_finite_objective(const ObjectiveBreakdown& breakdown, int round, const RunState& state,
                            const NetworkedData& nd, LossKind loss) {
    if (std::isfinite(breakdown.objective())) return;
    for (std::size_t i = 0; i < state.hypotheses.size(); ++i) {
        const double l = local_loss(state.hypotheses[i], nd.datasets[i], loss);
        if (!std::isfinite(l)) {
            throw error(errc::numerical, "round " + std::to_string(round) + ", node " + std::to_string(i) +
                                             ": non-finite local loss");
        }
    }
    for (const auto& e : nd.graph.edges()) {
        const double d = discrepancy(state.hypotheses[static_cast<std::size_t>(e.i)],
                                     state.hypotheses[static_cast<std::size_t>(e.j)], nd.test_set, loss);
        if (!std::isfinite(d)) {
            throw error(errc::numerical, "round " + std::to_string(round) + ", node " + std::to_string(e.i) +
                                             ": non-finite discrepancy on edge (" + std::to_string(e.i) + ", " +
                                             std::to_string(e.j) + ")");
        }
    }
    throw error(errc::numerical, "round " + std::to_string(round) + ": non-finite objective");
}

void validate_run_inputs(const NetworkedData& nd, const std::vector<ModelSpec>& specs,
                         const EngineConfig& config) {
    const auto report = validate(nd);
    if (!report.ok()) throw error(errc::validation, "run_fedrelax: invalid data:\n" + report.to_string());
    if (specs.size() != static_cast<std::size_t>(nd.graph.node_count())) {
        throw error(errc::parameter, "run_fedrelax: need one model spec per node");
    }
    for (const auto& spec : specs) validate_spec(spec);
    if (config.lambda < 0.0 || !std::isfinite(config.lambda)) {
        throw error(errc::parameter, "run_fedrelax: lambda must be a nonnegative finite number");
    }
    if (config.stopping.max_rounds < 1) {
        throw error(errc::parameter, "run_fedrelax: max_rounds must be >= 1");
    }
}

}  // namespace

FedRelaxResult run_fedrelax(const NetworkedData& nd, const std::vector<ModelSpec>& specs,
                            const EngineConfig& config, unsigned worker_count) {
    validate_run_inputs(nd, specs, config);
    const auto n = static_cast<std::size_t>(nd.graph.node_count());

    RunState state;
    state.hypotheses.reserve(n);
    state.predictions.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        state.hypotheses.push_back(zero_hypothesis(specs[i]));
        state.predictions[i] = state.hypotheses[i].predict(nd.test_set.features);
    }

    FedRelaxResult result;
    double previous_objective = 0.0;
    bool have_previous = false;
    for (int round = 0; round < config.stopping.max_rounds; ++round) {
        const std::vector<std::vector<double>> published = state.predictions;
        if (config.schedule == Schedule::parallel) {
            std::vector<LocalHypothesis> updated(n);
            detail::parallel_for(n, worker_count, [&](std::size_t i) {
                const auto snapshot = snapshot_of(nd.graph, static_cast<int>(i), published);
                updated[i] = node_update(static_cast<int>(i), snapshot, nd, specs[i], state.hypotheses[i], config);
            });
            state.hypotheses = std::move(updated);
            detail::parallel_for(n, worker_count, [&](std::size_t i) {
                state.predictions[i] = state.hypotheses[i].predict(nd.test_set.features);
                check_finite_predictions(round, static_cast<int>(i), state.predictions[i]);
            });
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                const auto snapshot = snapshot_of(nd.graph, static_cast<int>(i), state.predictions);
                state.hypotheses[i] =
                    node_update(static_cast<int>(i), snapshot, nd, specs[i], state.hypotheses[i], config);
                state.predictions[i] = state.hypotheses[i].predict(nd.test_set.features);
                check_finite_predictions(round, static_cast<int>(i), state.predictions[i]);
            }
        }

        NetworkedHypothesis current{state.hypotheses};
        const auto breakdown = evaluate_objective(current, nd, config.lambda, config.loss);
        check_finite_objective(breakdown, round, state, nd, config.loss);

        double max_delta = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t r = 0; r < state.predictions[i].size(); ++r) {
                max_delta = std::max(max_delta, std::abs(state.predictions[i][r] - published[i][r]));
            }
        }
        result.logs.push_back(
            {round, breakdown.objective(), breakdown.total_local_loss, breakdown.gtv, max_delta});

        if (have_previous && config.stopping.rel_objective_tol > 0.0) {
            const double denom = std::max(std::abs(previous_objective), 1e-300);
            if ((previous_objective - breakdown.objective()) / denom < config.stopping.rel_objective_tol) {
                break;
            }
        }
        previous_objective = breakdown.objective();
        have_previous = true;
    }
    result.hypotheses.nodes = std::move(state.hypotheses);
    return result;
}

FedRelaxResult run_fedrelax_least_squares(const NetworkedData& nd, const std::vector<ModelSpec>& specs,
                                          const EngineConfig& config, unsigned worker_count) {
    EngineConfig squared = config;
    squared.loss = LossKind::squared_error;
    return run_fedrelax(nd, specs, squared, worker_count);
}

NetworkedHypothesis hypotheses_from_parameters(const Matrix& parameters) {
    NetworkedHypothesis h;
    const std::size_t d = parameters.rows();
    for (std::size_t i = 0; i < parameters.cols(); ++i) {
        LinearParams params;
        params.weights.resize(d);
        for (std::size_t c = 0; c < d; ++c) params.weights[c] = parameters(c, i);
        h.nodes.emplace_back(LinearSpec{static_cast<int>(d)}, std::move(params));
    }
    return h;
}

ParametricResult run_fedrelax_parametric(const NetworkedData& nd, int dim, const EngineConfig& config,
                                         unsigned worker_count) {
    if (dim < 1) throw error(errc::parameter, "run_fedrelax_parametric: dimension must be >= 1");
    if (static_cast<std::size_t>(dim) != nd.test_set.features.cols()) {
        throw error(errc::dimension_mismatch,
                    "run_fedrelax_parametric: dimension " + std::to_string(dim) +
                        " does not match test-set feature length " + std::to_string(nd.test_set.features.cols()));
    }
    const std::vector<ModelSpec> specs(static_cast<std::size_t>(nd.graph.node_count()), LinearSpec{dim});
    auto run = run_fedrelax(nd, specs, config, worker_count);
    ParametricResult out;
    out.logs = std::move(run.logs);
    out.parameters = Matrix(static_cast<std::size_t>(dim), run.hypotheses.nodes.size());
    for (std::size_t i = 0; i < run.hypotheses.nodes.size(); ++i) {
        const auto& weights = std::get<LinearParams>(run.hypotheses.nodes[i].params()).weights;
        for (std::size_t c = 0; c < weights.size(); ++c) out.parameters(c, i) = weights[c];
    }
    return out;
}

Matrix oracle_gtvmin_linear(const NetworkedData& nd, double lambda) {
    const auto report = validate(nd);
    if (!report.ok()) throw error(errc::validation, "oracle: invalid data:\n" + report.to_string());
    if (lambda < 0.0 || !std::isfinite(lambda)) {
        throw error(errc::parameter, "oracle: lambda must be a nonnegative finite number");
    }
    const auto n = static_cast<std::size_t>(nd.graph.node_count());
    const std::size_t d = nd.test_set.features.cols();
    if (n * d > 200) {
        throw error(errc::size_cap, "oracle: n*d = " + std::to_string(n * d) + " exceeds the cap of 200");
    }
    const std::size_t m_test = nd.test_set.features.rows();

    // Test-set Gram matrix, shared by every coupling block.
    Matrix gram(d, d);
    for (std::size_t r = 0; r < m_test; ++r) {
        const auto x = nd.test_set.features.row(r);
        for (std::size_t a = 0; a < d; ++a) {
            for (std::size_t b = 0; b < d; ++b) gram(a, b) += x[a] * x[b];
        }
    }

    // Stacked normal equations of the per-node updates, one block row
    // per node:
    //   [(1/m_i) X_i'X_i + (lambda/m') deg_i Q] w_i
    //     - (lambda/m') sum_j A_ij Q w_j = (1/m_i) X_i' y_i
    // This is the stationarity system of the full training objective.
    const std::size_t dim = n * d;
    Matrix system(dim, dim);
    std::vector<double> rhs(dim, 0.0);
    const double couple = lambda / static_cast<double>(m_test);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& ds = nd.datasets[i];
        const std::size_t m_i = ds.features.rows();
        const double inv_m = 1.0 / static_cast<double>(m_i);
        for (std::size_t r = 0; r < m_i; ++r) {
            const auto x = ds.features.row(r);
            for (std::size_t a = 0; a < d; ++a) {
                rhs[i * d + a] += inv_m * x[a] * ds.labels[r];
                for (std::size_t b = 0; b < d; ++b) {
                    system(i * d + a, i * d + b) += inv_m * x[a] * x[b];
                }
            }
        }
        for (const auto& [j, weight] : nd.graph.neighbours(static_cast<int>(i))) {
            const double c = couple * weight;
            for (std::size_t a = 0; a < d; ++a) {
                for (std::size_t b = 0; b < d; ++b) {
                    system(i * d + a, i * d + b) += c * gram(a, b);
                    system(i * d + a, static_cast<std::size_t>(j) * d + b) -= c * gram(a, b);
                }
            }
        }
    }

    const auto solution = linalg::solve_spd(std::move(system), std::move(rhs));
    Matrix parameters(d, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < d; ++c) parameters(c, i) = solution[i * d + c];
    }
    return parameters;
}

void write_round_logs(const std::vector<RoundLog>& logs, std::ostream& out) {
    out << "round,objective,total_local_loss,gtv,max_prediction_delta\n";
    for (const auto& log : logs) {
        out << log.round << ',' << detail::format_double(log.objective) << ','
            << detail::format_double(log.total_local_loss) << ',' << detail::format_double(log.gtv) << ','
            << detail::format_double(log.max_prediction_delta) << '\n';
    }
}

std::vector<RoundLog> read_round_logs(std::istream& in, const std::string& name) {
    std::vector<RoundLog> logs;
    std::string line;
    if (!std::getline(in, line)) throw error(errc::parse, name + ": missing header row");
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = name + " row " + std::to_string(row);
        const auto fields = detail::split_csv_row(line);
        if (fields.size() != 5) {
            throw error(errc::parse, where + ": expected 5 columns, got " + std::to_string(fields.size()));
        }
        RoundLog log;
        log.round = static_cast<int>(detail::parse_int(fields[0], where));
        log.objective = detail::parse_double(fields[1], where);
        log.total_local_loss = detail::parse_double(fields[2], where);
        log.gtv = detail::parse_double(fields[3], where);
        log.max_prediction_delta = detail::parse_double(fields[4], where);
        logs.push_back(log);
    }
    return logs;
}

}  // namespace fedrelax
