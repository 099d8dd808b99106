#include "fedrelax/objective.hpp"

#include <cmath>

namespace fedrelax {

double loss_value(LossKind loss, double label, double prediction) {
    switch (loss) {
        case LossKind::squared_error: {
            const double r = label - prediction;
            return r * r;
        }
    }
    throw error(errc::parameter, "unknown loss kind");
}

double discrepancy_loss_value(LossKind loss, std::span<const double> x, double prediction_i,
                              double prediction_j) {
    (void)x;  // squared error does not look at the feature
    switch (loss) {
        case LossKind::squared_error: {
            const double r = prediction_i - prediction_j;
            return r * r;
        }
    }
    throw error(errc::parameter, "unknown loss kind");
}

double local_loss(const LocalHypothesis& h, const LocalDataset& dataset, LossKind loss) {
    const std::size_t m = dataset.features.rows();
    if (m == 0) throw error(errc::parameter, "local_loss: empty dataset");
    double acc = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
        acc += loss_value(loss, dataset.labels[r], h.predict_one(dataset.features.row(r)));
    }
    return acc / static_cast<double>(m);
}

double discrepancy(const LocalHypothesis& h_i, const LocalHypothesis& h_j, const TestSet& t, LossKind loss) {
    const std::size_t m = t.features.rows();
    if (m == 0) throw error(errc::parameter, "discrepancy: empty test set");
    double acc = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
        const auto x = t.features.row(r);
        acc += discrepancy_loss_value(loss, x, h_i.predict_one(x), h_j.predict_one(x));
    }
    return acc / static_cast<double>(m);
}

double discrepancy_to_predictions(const LocalHypothesis& h_i, std::span<const double> predictions_j,
                                  const TestSet& t, LossKind loss) {
    const std::size_t m = t.features.rows();
    if (m == 0) throw error(errc::parameter, "discrepancy: empty test set");
    if (predictions_j.size() != m) {
        throw error(errc::dimension_mismatch, "discrepancy: prediction vector length " +
                                                  std::to_string(predictions_j.size()) +
                                                  " does not match test-set size " + std::to_string(m));
    }
    double acc = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
        const auto x = t.features.row(r);
        acc += discrepancy_loss_value(loss, x, h_i.predict_one(x), predictions_j[r]);
    }
    return acc / static_cast<double>(m);
}

double gtv(const NetworkedHypothesis& h, const EmpiricalGraph& g, const TestSet& t, LossKind loss) {
    if (h.nodes.size() != static_cast<std::size_t>(g.node_count())) {
        throw error(errc::parameter, "gtv: hypothesis count " + std::to_string(h.nodes.size()) +
                                         " does not match node count " + std::to_string(g.node_count()));
    }
    const std::size_t m = t.features.rows();
    // Predictions once per node, then one discrepancy term per edge.
    std::vector<std::vector<double>> preds(h.nodes.size());
    for (std::size_t i = 0; i < h.nodes.size(); ++i) preds[i] = h.nodes[i].predict(t.features);
    double acc = 0.0;
    for (const auto& e : g.edges()) {
        const auto& pi = preds[static_cast<std::size_t>(e.i)];
        const auto& pj = preds[static_cast<std::size_t>(e.j)];
        double edge_acc = 0.0;
        for (std::size_t r = 0; r < m; ++r) {
            edge_acc += discrepancy_loss_value(loss, t.features.row(r), pi[r], pj[r]);
        }
        acc += e.weight * (edge_acc / static_cast<double>(m));
    }
    return acc;
}

ObjectiveBreakdown evaluate_objective(const NetworkedHypothesis& h, const NetworkedData& nd, double lambda,
                                      LossKind loss) {
    if (lambda < 0.0) throw error(errc::parameter, "objective: lambda must be nonnegative");
    ObjectiveBreakdown out;
    out.lambda = lambda;
    for (std::size_t i = 0; i < nd.datasets.size(); ++i) {
        out.total_local_loss += local_loss(h.nodes[i], nd.datasets[i], loss);
    }
    out.gtv = gtv(h, nd.graph, nd.test_set, loss);
    return out;
}

double gtvmin_objective(const NetworkedHypothesis& h, const NetworkedData& nd, double lambda, LossKind loss) {
    return evaluate_objective(h, nd, lambda, loss).objective();
}

double node_partial_objective(int i, const LocalHypothesis& h_i,
                              const std::map<int, std::vector<double>>& neighbor_predictions,
                              const NetworkedData& nd, double lambda, LossKind loss) {
    if (lambda < 0.0) throw error(errc::parameter, "objective: lambda must be nonnegative");
    double out = local_loss(h_i, nd.datasets[static_cast<std::size_t>(i)], loss);
    for (const auto& [j, weight] : nd.graph.neighbours(i)) {
        const auto it = neighbor_predictions.find(j);
        if (it == neighbor_predictions.end()) {
            throw error(errc::parameter, "node_partial_objective: missing prediction vector for neighbour " +
                                             std::to_string(j));
        }
        out += (lambda / 2.0) * weight * discrepancy_to_predictions(h_i, it->second, nd.test_set, loss);
    }
    return out;
}

double parametric_variation(std::span<const double> w_i, std::span<const double> w_j, const TestSet& t) {
    const std::size_t d = t.features.cols();
    const std::size_t m = t.features.rows();
    if (m == 0) throw error(errc::parameter, "parametric_variation: empty test set");
    if (w_i.size() != d || w_j.size() != d) {
        throw error(errc::dimension_mismatch, "parametric_variation: parameter length does not match test-set dimension");
    }
    std::vector<double> delta(d);
    for (std::size_t c = 0; c < d; ++c) delta[c] = w_i[c] - w_j[c];
    // Gram route: delta' (X'X) delta with X the m' x d test matrix.
    Matrix gram(d, d);
    for (std::size_t r = 0; r < m; ++r) {
        const auto x = t.features.row(r);
        for (std::size_t a = 0; a < d; ++a) {
            for (std::size_t b = a; b < d; ++b) gram(a, b) += x[a] * x[b];
        }
    }
    for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = 0; b < a; ++b) gram(a, b) = gram(b, a);
    }
    return linalg::quadratic_form(gram, delta) / static_cast<double>(m);
}

double laplacian_gtv_quadratic(const Matrix& parameters, const EmpiricalGraph& g, const TestSet& t) {
    const std::size_t d = parameters.rows();
    if (parameters.cols() != static_cast<std::size_t>(g.node_count())) {
        throw error(errc::dimension_mismatch, "laplacian_gtv_quadratic: need one parameter column per node");
    }
    if (t.features.cols() != d) {
        throw error(errc::dimension_mismatch, "laplacian_gtv_quadratic: parameter rows must match test-set dimension");
    }
    std::vector<double> w_i(d);
    std::vector<double> w_j(d);
    double acc = 0.0;
    for (const auto& e : g.edges()) {
        for (std::size_t c = 0; c < d; ++c) {
            w_i[c] = parameters(c, static_cast<std::size_t>(e.i));
            w_j[c] = parameters(c, static_cast<std::size_t>(e.j));
        }
        acc += e.weight * parametric_variation(w_i, w_j, t);
    }
    return acc;
}

double laplacian_gtv_quadratic_stacked(const Matrix& parameters, const EmpiricalGraph& g, const TestSet& t) {
    const std::size_t d = parameters.rows();
    const auto n = static_cast<std::size_t>(g.node_count());
    if (parameters.cols() != n) {
        throw error(errc::dimension_mismatch, "laplacian_gtv_quadratic: need one parameter column per node");
    }
    if (t.features.cols() != d) {
        throw error(errc::dimension_mismatch, "laplacian_gtv_quadratic: parameter rows must match test-set dimension");
    }
    const std::size_t m = t.features.rows();
    if (m == 0) throw error(errc::parameter, "laplacian_gtv_quadratic: empty test set");
    Matrix gram(d, d);
    for (std::size_t r = 0; r < m; ++r) {
        const auto x = t.features.row(r);
        for (std::size_t a = 0; a < d; ++a) {
            for (std::size_t b = 0; b < d; ++b) gram(a, b) += x[a] * x[b];
        }
    }
    const Matrix lap = g.laplacian();
    // Stacked vector v with block i = column i; the full matrix has
    // blocks L_ij * gram / m', so v' M v expands over node pairs.
    std::vector<double> stacked(n * d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < d; ++c) stacked[i * d + c] = parameters(c, i);
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double lij = lap(i, j);
            if (lij == 0.0) continue;
            double block = 0.0;
            for (std::size_t a = 0; a < d; ++a) {
                for (std::size_t b = 0; b < d; ++b) {
                    block += stacked[i * d + a] * gram(a, b) * stacked[j * d + b];
                }
            }
            acc += lij * block;
        }
    }
    return acc / static_cast<double>(m);
}

}  // namespace fedrelax
