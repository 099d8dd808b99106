#pragma once

#include <map>
#include <span>
#include <vector>

#include "fedrelax/data.hpp"
#include "fedrelax/models.hpp"

namespace fedrelax {

enum class LossKind {
    squared_error,
};

// Pointwise loss for labeled data.
double loss_value(LossKind loss, double label, double prediction);

// Pointwise discrepancy between two predictions at a test feature. The
// feature row is part of the interface even though squared error
// ignores it.
double discrepancy_loss_value(LossKind loss, std::span<const double> x, double prediction_i,
                              double prediction_j);

// One hypothesis per graph node.
struct NetworkedHypothesis {
    std::vector<LocalHypothesis> nodes;
};

// Mean per-sample training loss of one node's hypothesis on its data.
double local_loss(const LocalHypothesis& h, const LocalDataset& dataset, LossKind loss);

// Mean pointwise discrepancy between two hypotheses over the test set.
double discrepancy(const LocalHypothesis& h_i, const LocalHypothesis& h_j, const TestSet& t, LossKind loss);

// Same, but the second predictor is given as its prediction vector.
double discrepancy_to_predictions(const LocalHypothesis& h_i, std::span<const double> predictions_j,
                                  const TestSet& t, LossKind loss);

// Weighted sum of discrepancies over all edges, each edge counted once.
double gtv(const NetworkedHypothesis& h, const EmpiricalGraph& g, const TestSet& t, LossKind loss);

struct ObjectiveBreakdown {
    double total_local_loss = 0.0;
    double gtv = 0.0;
    double lambda = 0.0;

    double objective() const { return total_local_loss + lambda * gtv; }
};

// Single evaluation path for the training objective: the engine's round
// logs and every test reuse this decomposition.
ObjectiveBreakdown evaluate_objective(const NetworkedHypothesis& h, const NetworkedData& nd, double lambda,
                                      LossKind loss);

double gtvmin_objective(const NetworkedHypothesis& h, const NetworkedData& nd, double lambda, LossKind loss);

// The per-node term: local loss plus (lambda/2) times the weighted
// discrepancy against the supplied neighbor prediction vectors. Summing
// over all nodes recovers the full objective for symmetric losses.
double node_partial_objective(int i, const LocalHypothesis& h_i,
                              const std::map<int, std::vector<double>>& neighbor_predictions,
                              const NetworkedData& nd, double lambda, LossKind loss);

// Squared-error discrepancy between two linear parameter vectors,
// computed through the test-set Gram matrix G = X'X as
// (1/m') (w_i - w_j)' G (w_i - w_j). Two routes to one number: this
// must agree with discrepancy() on the induced linear hypotheses.
double parametric_variation(std::span<const double> w_i, std::span<const double> w_j, const TestSet& t);

// Edge-sum form of the parametric regularizer for a d x n parameter
// matrix (one column per node).
double laplacian_gtv_quadratic(const Matrix& parameters, const EmpiricalGraph& g, const TestSet& t);

// Verification route for the same number: the stacked-vector quadratic
// form through the graph Laplacian conjugated with the per-block test
// Gram matrix.
double laplacian_gtv_quadratic_stacked(const Matrix& parameters, const EmpiricalGraph& g, const TestSet& t);

}  // namespace fedrelax
