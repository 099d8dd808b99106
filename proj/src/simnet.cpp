#include "fedrelax/simnet.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <json.hpp>

#include "fedrelax/detail/rng.hpp"

namespace fedrelax {

NetworkModel::NetworkModel(Reliable) {}

NetworkModel::NetworkModel(LossyIID lossy) : lossy_(lossy), rng_(lossy.seed) {
    if (!(lossy.drop_prob >= 0.0 && lossy.drop_prob < 1.0)) {
        throw error(errc::parameter, "network model: drop_prob must lie in [0, 1)");
    }
}

bool NetworkModel::drops_next() {
    if (!lossy_) return false;
    return detail::uniform01(rng_) < lossy_->drop_prob;
}

MailboxSet::MailboxSet(const EmpiricalGraph& g, std::size_t m_test)
    : graph_(&g), m_test_(m_test), boxes_(static_cast<std::size_t>(g.node_count())) {}

void MailboxSet::store(const PredictionMessage& message) {
    auto& entry = boxes_[static_cast<std::size_t>(message.receiver)][message.sender];
    entry.round = message.round;
    entry.predictions = message.predictions;
}

const MailboxSet::Entry* MailboxSet::latest(int receiver, int sender) const {
    const auto& box = boxes_[static_cast<std::size_t>(receiver)];
    const auto it = box.find(sender);
    return it == box.end() ? nullptr : &it->second;
}

std::map<int, std::vector<double>> MailboxSet::snapshot_for(int i) const {
    std::map<int, std::vector<double>> snapshot;
    for (const auto& [j, w] : graph_->neighbours(i)) {
        (void)w;
        const Entry* entry = latest(i, j);
        if (entry == nullptr) {
            snapshot.emplace(j, std::vector<double>(m_test_, 0.0));
        } else {
            snapshot.emplace(j, entry->predictions);
        }
    }
    return snapshot;
}

std::vector<PredictionMessage> broadcast_round(const NetworkedHypothesis& h, const EmpiricalGraph& g,
                                               const TestSet& t, int round) {
    if (h.nodes.size() != static_cast<std::size_t>(g.node_count())) {
        throw error(errc::parameter, "broadcast_round: hypothesis count does not match node count");
    }
    std::vector<PredictionMessage> messages;
    for (int i = 0; i < g.node_count(); ++i) {
        const auto& nbrs = g.neighbours(i);
        if (nbrs.empty()) continue;
        const auto payload = h.nodes[static_cast<std::size_t>(i)].predict(t.features);
        for (const auto& [j, w] : nbrs) {
            (void)w;
            messages.push_back({i, j, round, payload});
        }
    }
    return messages;
}

DeliveryReport deliver(const std::vector<PredictionMessage>& messages, NetworkModel& model,
                       MailboxSet& mailboxes, MessageTrace trace) {
    // Randomness is consumed in (sender, receiver) order regardless of
    // the order messages were handed in.
    std::vector<std::size_t> order(messages.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::pair(messages[a].sender, messages[a].receiver) <
               std::pair(messages[b].sender, messages[b].receiver);
    });

    DeliveryReport report;
    for (std::size_t k : order) {
        const auto& msg = messages[k];
        if (!mailboxes.graph().has_edge(msg.sender, msg.receiver)) {
            throw error(errc::protocol, "deliver: message from " + std::to_string(msg.sender) + " to " +
                                            std::to_string(msg.receiver) + " does not follow an edge");
        }
        if (msg.predictions.size() != mailboxes.m_test()) {
            throw error(errc::dimension_mismatch, "deliver: payload length " +
                                                      std::to_string(msg.predictions.size()) +
                                                      " does not match test-set size " +
                                                      std::to_string(mailboxes.m_test()));
        }
        const bool dropped = model.drops_next();
        if (dropped) {
            ++report.dropped;
        } else {
            mailboxes.store(msg);
            ++report.delivered;
        }
        if (trace.out != nullptr) {
            nlohmann::json record{{"sender", msg.sender},
                                  {"receiver", msg.receiver},
                                  {"round", msg.round},
                                  {"dropped", dropped}};
            if (trace.include_payload) record["payload"] = msg.predictions;
            *trace.out << record.dump() << '\n';
        }
    }
    // Staleness over every directed edge after this batch.
    int current_round = messages.empty() ? 0 : messages.front().round;
    for (const auto& msg : messages) current_round = std::max(current_round, msg.round);
    for (const auto& e : mailboxes.graph().edges()) {
        for (const auto& [from, to] : {std::pair(e.i, e.j), std::pair(e.j, e.i)}) {
            const auto* entry = mailboxes.latest(to, from);
            const int stored = entry == nullptr ? -1 : entry->round;
            report.max_staleness = std::max(report.max_staleness, current_round - stored);
        }
    }
    return report;
}

namespace {

void merge_report(DeliveryReport& into, const DeliveryReport& part) {
    into.delivered += part.delivered;
    into.dropped += part.dropped;
    into.max_staleness = std::max(into.max_staleness, part.max_staleness);
}

}  // namespace

SimnetRunResult run_fedrelax_over_network(const NetworkedData& nd, const std::vector<ModelSpec>& specs,
                                          const EngineConfig& config, NetworkModel model,
                                          MessageTrace trace) {
    const auto report = validate(nd);
    if (!report.ok()) throw error(errc::validation, "run over network: invalid data:\n" + report.to_string());
    if (specs.size() != static_cast<std::size_t>(nd.graph.node_count())) {
        throw error(errc::parameter, "run over network: need one model spec per node");
    }
    if (config.stopping.max_rounds < 1) {
        throw error(errc::parameter, "run over network: max_rounds must be >= 1");
    }
    const auto n = static_cast<std::size_t>(nd.graph.node_count());
    const std::size_t m_test = nd.test_set.features.rows();

    NetworkedHypothesis h;
    h.nodes.reserve(n);
    std::vector<std::vector<double>> predictions(n);
    for (std::size_t i = 0; i < n; ++i) {
        h.nodes.push_back(zero_hypothesis(specs[i]));
        predictions[i] = h.nodes[i].predict(nd.test_set.features);
    }
    MailboxSet mailboxes(nd.graph, m_test);

    SimnetRunResult result;
    double previous_objective = 0.0;
    bool have_previous = false;
    for (int round = 0; round < config.stopping.max_rounds; ++round) {
        const std::vector<std::vector<double>> published = predictions;
        DeliveryReport round_report;
        if (config.schedule == Schedule::parallel) {
            // Everyone announces the pre-update predictions, then every
            // node refits against whatever its mailbox now holds.
            const auto messages = broadcast_round(h, nd.graph, nd.test_set, round);
            merge_report(round_report, deliver(messages, model, mailboxes, trace));
            std::vector<LocalHypothesis> updated(n);
            for (std::size_t i = 0; i < n; ++i) {
                const auto snapshot = mailboxes.snapshot_for(static_cast<int>(i));
                updated[i] = node_update(static_cast<int>(i), snapshot, nd, specs[i], h.nodes[i], config);
            }
            h.nodes = std::move(updated);
            for (std::size_t i = 0; i < n; ++i) predictions[i] = h.nodes[i].predict(nd.test_set.features);
        } else {
            // Sweep order: each node refits, then immediately tells its
            // neighbours, so later nodes in the sweep see fresh values.
            for (std::size_t i = 0; i < n; ++i) {
                const auto snapshot = mailboxes.snapshot_for(static_cast<int>(i));
                h.nodes[i] = node_update(static_cast<int>(i), snapshot, nd, specs[i], h.nodes[i], config);
                predictions[i] = h.nodes[i].predict(nd.test_set.features);
                const auto& nbrs = nd.graph.neighbours(static_cast<int>(i));
                if (!nbrs.empty()) {
                    std::vector<PredictionMessage> messages;
                    messages.reserve(nbrs.size());
                    for (const auto& [j, w] : nbrs) {
                        (void)w;
                        messages.push_back({static_cast<int>(i), j, round, predictions[i]});
                    }
                    merge_report(round_report, deliver(messages, model, mailboxes, trace));
                }
            }
        }

        const auto breakdown = evaluate_objective(h, nd, config.lambda, config.loss);
        if (!std::isfinite(breakdown.objective())) {
            throw error(errc::numerical, "round " + std::to_string(round) + ": non-finite objective");
        }
        double max_delta = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t r = 0; r < m_test; ++r) {
                max_delta = std::max(max_delta, std::abs(predictions[i][r] - published[i][r]));
            }
        }
        result.logs.push_back(
            {round, breakdown.objective(), breakdown.total_local_loss, breakdown.gtv, max_delta});
        result.delivery.push_back(round_report);

        if (have_previous && config.stopping.rel_objective_tol > 0.0) {
            const double denom = std::max(std::abs(previous_objective), 1e-300);
            if ((previous_objective - breakdown.objective()) / denom < config.stopping.rel_objective_tol) {
                break;
            }
        }
        previous_objective = breakdown.objective();
        have_previous = true;
    }
    result.hypotheses = std::move(h);
    return result;
}

}  // namespace fedrelax
