#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <vector>

#include "fedrelax/objective.hpp"

namespace fedrelax {

// Round structure of a run. `parallel` updates every node against the
// predictions published at the start of the round (Jacobi); `sequential`
// sweeps nodes in ascending id order, each seeing the predictions of
// already-updated peers (Gauss-Seidel). Only the sequential sweep with
// exact-minimizer model classes carries a descent guarantee.
enum class Schedule {
    parallel,
    sequential,
};

struct StoppingCriterion {
    int max_rounds = 100;
    // Stop once the relative objective decrease over one round falls
    // below this; zero or negative disables the check.
    double rel_objective_tol = 1e-8;
};

struct EngineConfig {
    double lambda = 1.0;
    LossKind loss = LossKind::squared_error;
    Schedule schedule = Schedule::sequential;
    StoppingCriterion stopping;
    std::uint64_t seed = 0;
};

struct RoundLog {
    int round = 0;  // 0-based index of the executed round
    double objective = 0.0;
    double total_local_loss = 0.0;
    double gtv = 0.0;
    // Sup-norm change of any node's test-set predictions over the round.
    double max_prediction_delta = 0.0;
};

struct FedRelaxResult {
    NetworkedHypothesis hypotheses;
    std::vector<RoundLog> logs;
};

// The per-round training set for one node: its own samples carrying
// weight 1/m_i plus, per neighbour and test row, one pseudo-labeled
// sample (test feature, neighbour prediction) with weight
// lambda * A_ij / m'. Zero-weight pseudo samples are omitted, so
// lambda = 0 reproduces the plain local dataset. Minimizing weighted
// squared error over this set minimizes the node's block of the full
// training objective, every incident edge at its full weight.
std::vector<WeightedSample> build_augmented_samples(
    int i, const LocalDataset& dataset, const std::map<int, std::vector<double>>& neighbor_predictions,
    const TestSet& t, const std::map<int, double>& neighbor_weights, double lambda, std::size_t m_test);

// One block update: refit node i against its data plus the neighbour
// prediction snapshot. For Constant/Linear specs the result is checked
// to not increase the node's partial objective.
LocalHypothesis node_update(int i, const std::map<int, std::vector<double>>& snapshot,
                            const NetworkedData& nd, const ModelSpec& spec_i,
                            const LocalHypothesis& previous, const EngineConfig& config);

// Runs the relaxation until the stopping criterion fires. Deterministic
// for a given config; results do not depend on worker_count (0 = auto).
FedRelaxResult run_fedrelax(const NetworkedData& nd, const std::vector<ModelSpec>& specs,
                            const EngineConfig& config, unsigned worker_count = 0);

// The squared-error instantiation (both the training loss and the
// coupling loss); byte-identical to run_fedrelax with squared error.
FedRelaxResult run_fedrelax_least_squares(const NetworkedData& nd, const std::vector<ModelSpec>& specs,
                                          const EngineConfig& config, unsigned worker_count = 0);

struct ParametricResult {
    Matrix parameters;  // d x n, one column per node
    std::vector<RoundLog> logs;
};

// All-linear run exposing the parameter matrix directly.
ParametricResult run_fedrelax_parametric(const NetworkedData& nd, int dim, const EngineConfig& config,
                                         unsigned worker_count = 0);

// Exact minimizer of the linear/squared-error instance: solves the
// stacked per-node normal equations (the fixed point the relaxation
// converges to) in one shot. Enforces n*d <= 200.
Matrix oracle_gtvmin_linear(const NetworkedData& nd, double lambda);

NetworkedHypothesis hypotheses_from_parameters(const Matrix& parameters);

// Round-log CSV: header then one row per round, 17 significant digits.
void write_round_logs(const std::vector<RoundLog>& logs, std::ostream& out);
std::vector<RoundLog> read_round_logs(std::istream& in, const std::string& name);

}  // namespace fedrelax
