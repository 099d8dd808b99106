#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <variant>
#include <vector>

#include "fedrelax/engine.hpp"

namespace fedrelax {

// One node telling one neighbour what it currently predicts on the
// shared test set.
struct PredictionMessage {
    int sender = 0;
    int receiver = 0;
    int round = 0;
    std::vector<double> predictions;
};

struct Reliable {};

// Drops each message independently with drop_prob; deterministic given
// the seed and the (sender, receiver)-sorted message order.
struct LossyIID {
    double drop_prob = 0.0;
    std::uint64_t seed = 0;
};

class NetworkModel {
public:
    NetworkModel() : NetworkModel(Reliable{}) {}
    explicit NetworkModel(Reliable);
    explicit NetworkModel(LossyIID lossy);

    bool drops_next();  // consumes randomness for lossy models

    bool lossy() const noexcept { return lossy_.has_value(); }

private:
    std::optional<LossyIID> lossy_;
    std::mt19937_64 rng_;
};

// Per-receiver store of the latest prediction vector heard from each
// neighbour. Dropped messages leave the previous entry in place; a
// neighbour never heard from reads as the zero vector, matching the
// all-zero initialization of a run.
class MailboxSet {
public:
    MailboxSet(const EmpiricalGraph& g, std::size_t m_test);

    struct Entry {
        int round = -1;  // -1 = never heard
        std::vector<double> predictions;
    };

    void store(const PredictionMessage& message);
    const Entry* latest(int receiver, int sender) const;

    // Latest known prediction vector per neighbour of node i.
    std::map<int, std::vector<double>> snapshot_for(int i) const;

    const EmpiricalGraph& graph() const noexcept { return *graph_; }
    std::size_t m_test() const noexcept { return m_test_; }

private:
    const EmpiricalGraph* graph_;
    std::size_t m_test_;
    std::vector<std::map<int, Entry>> boxes_;
};

struct DeliveryReport {
    int delivered = 0;
    int dropped = 0;
    // Max over directed edges of (round - last stored round); a
    // neighbour never heard from counts from round -1.
    int max_staleness = 0;
};

// Optional JSON-lines trace of every message.
struct MessageTrace {
    std::ostream* out = nullptr;
    bool include_payload = false;
};

// Predictions of every node, one message per directed edge (2|E| in
// total), ordered by (sender, receiver).
std::vector<PredictionMessage> broadcast_round(const NetworkedHypothesis& h, const EmpiricalGraph& g,
                                               const TestSet& t, int round);

// Applies the network model to each message in (sender, receiver) order
// and stores the survivors. Messages between non-adjacent nodes are a
// protocol error.
DeliveryReport deliver(const std::vector<PredictionMessage>& messages, NetworkModel& model,
                       MailboxSet& mailboxes, MessageTrace trace = {});

struct SimnetRunResult {
    NetworkedHypothesis hypotheses;
    std::vector<RoundLog> logs;
    std::vector<DeliveryReport> delivery;  // one per round
};

// FedRelax with all neighbour predictions flowing through broadcast /
// deliver / snapshot_for instead of direct memory reads. Under a
// Reliable model this is byte-identical to run_fedrelax. The parallel
// schedule broadcasts all predictions up front each round; the
// sequential schedule lets each node broadcast right after its update,
// which reproduces the in-memory sweep exactly.
SimnetRunResult run_fedrelax_over_network(const NetworkedData& nd, const std::vector<ModelSpec>& specs,
                                          const EngineConfig& config, NetworkModel model,
                                          MessageTrace trace = {});

}  // namespace fedrelax
