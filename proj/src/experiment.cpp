#include "fedrelax/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>

#include "fedrelax/detail/rng.hpp"
#include "fedrelax/detail/text.hpp"

namespace fedrelax {

namespace {

[[noreturn]] void bad_config(const std::string& name, const std::string& what) {
    throw error(errc::config, name + ": " + what);
}

double require_number(const nlohmann::json& doc, const std::string& key, const std::string& name) {
    if (!doc.contains(key) || !doc[key].is_number()) bad_config(name, "missing numeric \"" + key + "\"");
    return doc[key].get<double>();
}

int require_int(const nlohmann::json& doc, const std::string& key, const std::string& name) {
    if (!doc.contains(key) || !doc[key].is_number_integer()) {
        bad_config(name, "missing integer \"" + key + "\"");
    }
    return doc[key].get<int>();
}

ModelSpec parse_model_spec(const nlohmann::json& doc, const std::string& name) {
    if (!doc.is_object() || !doc.contains("kind") || !doc["kind"].is_string()) {
        bad_config(name, "model spec needs a string \"kind\"");
    }
    const std::string kind = doc["kind"].get<std::string>();
    ModelSpec spec;
    if (kind == "constant") {
        spec = ConstantSpec{};
    } else if (kind == "linear") {
        spec = LinearSpec{require_int(doc, "dim", name)};
    } else if (kind == "tree") {
        spec = TreeSpec{require_int(doc, "max_depth", name), require_int(doc, "min_leaf", name)};
    } else {
        bad_config(name, "unknown model kind '" + kind + "'");
    }
    try {
        validate_spec(spec);
    } catch (const error& e) {
        bad_config(name, e.what());
    }
    return spec;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& text, const std::string& name) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw error(errc::config, name + ": " + e.what());
    }
    if (!doc.is_object()) bad_config(name, "config must be a JSON object");

    ExperimentConfig config;

    if (!doc.contains("data") || !doc["data"].is_object()) bad_config(name, "missing \"data\" section");
    const auto& data = doc["data"];
    const bool has_synth = data.contains("synth");
    const bool has_files = data.contains("files");
    if (has_synth == has_files) {
        bad_config(name, "\"data\" must contain exactly one of \"synth\" or \"files\"");
    }
    if (has_synth) {
        const auto& synth = data["synth"];
        const std::string where = name + ": data.synth";
        SynthSource src;
        src.n = require_int(synth, "n", where);
        src.clusters = require_int(synth, "clusters", where);
        src.p_in = require_number(synth, "p_in", where);
        src.p_out = require_number(synth, "p_out", where);
        src.edge_weight = synth.contains("edge_weight") ? require_number(synth, "edge_weight", where) : 1.0;
        if (!synth.contains("cluster_weights") || !synth["cluster_weights"].is_array() ||
            synth["cluster_weights"].empty()) {
            bad_config(where, "needs a non-empty \"cluster_weights\" array of arrays");
        }
        for (const auto& row : synth["cluster_weights"]) {
            if (!row.is_array() || row.empty()) bad_config(where, "cluster_weights rows must be non-empty arrays");
            std::vector<double> w;
            for (const auto& v : row) {
                if (!v.is_number()) bad_config(where, "cluster_weights entries must be numbers");
                w.push_back(v.get<double>());
            }
            src.cluster_weights.push_back(std::move(w));
        }
        src.m_per_node = require_int(synth, "m_per_node", where);
        src.m_test = require_int(synth, "m_test", where);
        src.noise_std = synth.contains("noise_std") ? require_number(synth, "noise_std", where) : 0.0;
        src.seed = synth.contains("seed") ? static_cast<std::uint64_t>(require_int(synth, "seed", where)) : 0;
        if (synth.contains("test_from_training")) {
            if (!synth["test_from_training"].is_boolean()) bad_config(where, "test_from_training must be a boolean");
            src.test_from_training = synth["test_from_training"].get<bool>();
        }
        config.data = std::move(src);
    } else {
        const auto& files = data["files"];
        const std::string where = name + ": data.files";
        for (const char* key : {"graph", "data", "test"}) {
            if (!files.contains(key) || !files[key].is_string()) {
                bad_config(where, "missing string \"" + std::string(key) + "\"");
            }
        }
        config.data = FileSource{files["graph"].get<std::string>(), files["data"].get<std::string>(),
                                 files["test"].get<std::string>()};
    }

    if (!doc.contains("model")) bad_config(name, "missing \"model\" section");
    const auto& model = doc["model"];
    if (model.is_object() && model.contains("per_node")) {
        if (!model["per_node"].is_array() || model["per_node"].empty()) {
            bad_config(name, "model.per_node must be a non-empty array");
        }
        std::size_t index = 0;
        for (const auto& entry : model["per_node"]) {
            config.per_node_models.push_back(
                parse_model_spec(entry, name + ": model.per_node[" + std::to_string(index) + "]"));
            ++index;
        }
    } else {
        config.uniform_model = parse_model_spec(model, name + ": model");
    }

    if (!doc.contains("engine") || !doc["engine"].is_object()) bad_config(name, "missing \"engine\" section");
    const auto& engine = doc["engine"];
    const std::string ewhere = name + ": engine";
    config.engine.lambda = require_number(engine, "lambda", ewhere);
    if (engine.contains("schedule")) {
        const std::string schedule = engine["schedule"].get<std::string>();
        if (schedule == "parallel") {
            config.engine.schedule = Schedule::parallel;
        } else if (schedule == "sequential") {
            config.engine.schedule = Schedule::sequential;
        } else {
            bad_config(ewhere, "schedule must be \"parallel\" or \"sequential\"");
        }
    }
    if (engine.contains("max_rounds")) {
        config.engine.stopping.max_rounds = require_int(engine, "max_rounds", ewhere);
    }
    if (engine.contains("rel_objective_tol")) {
        config.engine.stopping.rel_objective_tol = require_number(engine, "rel_objective_tol", ewhere);
    }
    if (engine.contains("seed")) {
        config.engine.seed = static_cast<std::uint64_t>(require_int(engine, "seed", ewhere));
    }

    config.network = Reliable{};
    if (doc.contains("network")) {
        const auto& network = doc["network"];
        const std::string nwhere = name + ": network";
        if (!network.is_object() || !network.contains("kind") || !network["kind"].is_string()) {
            bad_config(nwhere, "needs a string \"kind\"");
        }
        const std::string kind = network["kind"].get<std::string>();
        if (kind == "reliable") {
            config.network = Reliable{};
        } else if (kind == "lossy") {
            LossyIID lossy;
            lossy.drop_prob = require_number(network, "drop_prob", nwhere);
            lossy.seed = network.contains("seed")
                             ? static_cast<std::uint64_t>(require_int(network, "seed", nwhere))
                             : 0;
            if (!(lossy.drop_prob >= 0.0 && lossy.drop_prob < 1.0)) {
                bad_config(nwhere, "drop_prob must lie in [0, 1)");
            }
            config.network = lossy;
        } else {
            bad_config(nwhere, "unknown network kind '" + kind + "'");
        }
    }

    if (!doc.contains("out") || !doc["out"].is_string()) bad_config(name, "missing string \"out\"");
    config.out_dir = doc["out"].get<std::string>();

    if (doc.contains("trace")) {
        const auto& trace = doc["trace"];
        if (!trace.is_object()) bad_config(name, "\"trace\" must be an object");
        if (trace.contains("enabled")) config.trace_messages = trace["enabled"].get<bool>();
        if (trace.contains("include_payload")) config.trace_payloads = trace["include_payload"].get<bool>();
    }
    return config;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw error(errc::config, "cannot open config file: " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_experiment_config(text.str(), path.string());
}

void apply_overrides(ExperimentConfig& config, const Overrides& overrides) {
    if (overrides.out_dir) config.out_dir = *overrides.out_dir;
    if (overrides.lambda) {
        if (*overrides.lambda < 0.0) throw error(errc::usage, "--lambda must be nonnegative");
        config.engine.lambda = *overrides.lambda;
    }
    if (overrides.schedule) config.engine.schedule = *overrides.schedule;
    if (overrides.seed) {
        config.engine.seed = *overrides.seed;
        if (auto* synth = std::get_if<SynthSource>(&config.data)) synth->seed = *overrides.seed;
    }
}

NetworkedData build_networked_data(const ExperimentConfig& config) {
    if (const auto* files = std::get_if<FileSource>(&config.data)) {
        return load_networked_data(files->graph, files->data, files->test);
    }
    const auto& synth = std::get<SynthSource>(config.data);
    auto [graph, clusters] = generate_sbm(synth.n, synth.clusters, synth.p_in, synth.p_out,
                                          synth.edge_weight, synth.seed);
    auto nd = synth_networked_data(graph, clusters, synth.cluster_weights, synth.m_per_node, synth.m_test,
                                   synth.noise_std, detail::splitmix64(synth.seed));
    if (synth.test_from_training) {
        // Rebuild the test set by resampling pooled training rows.
        std::vector<std::span<const double>> pool;
        for (const auto& ds : nd.datasets) {
            for (std::size_t r = 0; r < ds.features.rows(); ++r) pool.push_back(ds.features.row(r));
        }
        std::mt19937_64 rng(detail::splitmix64(synth.seed ^ 0x7e575e7ULL));
        Matrix test(static_cast<std::size_t>(synth.m_test), nd.test_set.features.cols());
        for (std::size_t r = 0; r < test.rows(); ++r) {
            const auto pick = static_cast<std::size_t>(detail::uniform01(rng) * static_cast<double>(pool.size()));
            const auto row = pool[std::min(pick, pool.size() - 1)];
            for (std::size_t c = 0; c < test.cols(); ++c) test(r, c) = row[c];
        }
        nd.test_set.features = std::move(test);
    }
    return nd;
}

std::vector<ModelSpec> resolve_model_specs(const ExperimentConfig& config, int node_count) {
    if (config.uniform_model) {
        return std::vector<ModelSpec>(static_cast<std::size_t>(node_count), *config.uniform_model);
    }
    if (config.per_node_models.size() != static_cast<std::size_t>(node_count)) {
        throw error(errc::config, "model.per_node lists " + std::to_string(config.per_node_models.size()) +
                                      " specs for " + std::to_string(node_count) + " nodes");
    }
    return config.per_node_models;
}

namespace {

void ensure_out_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw error(errc::io, "cannot create output directory: " + dir.string());
    }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw error(errc::io, "cannot write file: " + path.string());
    out << text;
    if (!out) throw error(errc::io, "failed writing file: " + path.string());
}

}  // namespace

nlohmann::json networked_hypothesis_to_json(const NetworkedHypothesis& h) {
    nlohmann::json doc;
    auto& arr = doc["hypotheses"] = nlohmann::json::array();
    for (const auto& node : h.nodes) arr.push_back(hypothesis_to_json(node));
    return doc;
}

NetworkedHypothesis networked_hypothesis_from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("hypotheses") || !doc["hypotheses"].is_array()) {
        throw error(errc::parse, "hypotheses json: expected object with \"hypotheses\" array");
    }
    NetworkedHypothesis h;
    for (const auto& entry : doc["hypotheses"]) h.nodes.push_back(hypothesis_from_json(entry));
    return h;
}

void run_synth(const ExperimentConfig& config, std::ostream& out) {
    if (!std::holds_alternative<SynthSource>(config.data)) {
        throw error(errc::parameter, "synth: config must use a data.synth source");
    }
    const auto nd = build_networked_data(config);
    ensure_out_dir(config.out_dir);
    save_networked_data(nd, config.out_dir / "graph.json", config.out_dir / "data.csv",
                        config.out_dir / "test.csv");
    const auto& synth = std::get<SynthSource>(config.data);
    out << "synth: n=" << nd.graph.node_count() << " edges=" << nd.graph.edges().size()
        << " m_test=" << nd.test_set.features.rows() << " clusters=" << synth.clusters << '\n';
}

void run_run(const ExperimentConfig& config, std::ostream& out) {
    const auto nd = build_networked_data(config);
    const auto specs = resolve_model_specs(config, nd.graph.node_count());
    ensure_out_dir(config.out_dir);

    NetworkModel model = std::holds_alternative<Reliable>(config.network)
                             ? NetworkModel(Reliable{})
                             : NetworkModel(std::get<LossyIID>(config.network));
    std::ofstream trace_file;
    MessageTrace trace;
    if (config.trace_messages) {
        trace_file.open(config.out_dir / "trace.jsonl");
        if (!trace_file) throw error(errc::io, "cannot write trace file");
        trace.out = &trace_file;
        trace.include_payload = config.trace_payloads;
    }

    const auto result = run_fedrelax_over_network(nd, specs, config.engine, std::move(model), trace);

    std::ostringstream rounds;
    write_round_logs(result.logs, rounds);
    write_text(config.out_dir / "rounds.csv", rounds.str());
    write_text(config.out_dir / "models.json", networked_hypothesis_to_json(result.hypotheses).dump(2) + "\n");

    nlohmann::json summary;
    const auto& last = result.logs.back();
    summary["rounds"] = result.logs.size();
    summary["final_objective"] = last.objective;
    summary["final_total_local_loss"] = last.total_local_loss;
    summary["final_gtv"] = last.gtv;
    summary["lambda"] = config.engine.lambda;
    summary["schedule"] = config.engine.schedule == Schedule::parallel ? "parallel" : "sequential";
    auto& losses = summary["per_node_local_loss"] = nlohmann::json::array();
    for (std::size_t i = 0; i < result.hypotheses.nodes.size(); ++i) {
        losses.push_back(local_loss(result.hypotheses.nodes[i], nd.datasets[i], config.engine.loss));
    }
    int delivered = 0;
    int dropped = 0;
    for (const auto& report : result.delivery) {
        delivered += report.delivered;
        dropped += report.dropped;
    }
    summary["messages_delivered"] = delivered;
    summary["messages_dropped"] = dropped;
    write_text(config.out_dir / "summary.json", summary.dump(2) + "\n");

    out << "run: rounds=" << result.logs.size() << " final_objective=" << detail::format_double(last.objective)
        << '\n';
}

void run_oracle(const ExperimentConfig& config, std::ostream& out) {
    const auto nd = build_networked_data(config);
    const auto specs = resolve_model_specs(config, nd.graph.node_count());
    const auto d = static_cast<int>(nd.test_set.features.cols());
    for (const auto& spec : specs) {
        const auto* linear = std::get_if<LinearSpec>(&spec);
        if (linear == nullptr || linear->dim != d) {
            throw error(errc::unsupported_spec,
                        "oracle: every node must use a linear model of dimension " + std::to_string(d));
        }
    }
    const auto parameters = oracle_gtvmin_linear(nd, config.engine.lambda);
    const auto hypotheses = hypotheses_from_parameters(parameters);
    const double objective = gtvmin_objective(hypotheses, nd, config.engine.lambda, LossKind::squared_error);

    ensure_out_dir(config.out_dir);
    nlohmann::json doc;
    doc["objective"] = objective;
    doc["dim"] = parameters.rows();
    doc["node_count"] = parameters.cols();
    auto& weights = doc["weights"] = nlohmann::json::array();
    for (std::size_t i = 0; i < parameters.cols(); ++i) {
        nlohmann::json column = nlohmann::json::array();
        for (std::size_t c = 0; c < parameters.rows(); ++c) column.push_back(parameters(c, i));
        weights.push_back(std::move(column));
    }
    write_text(config.out_dir / "oracle.json", doc.dump(2) + "\n");
    out << "oracle: objective=" << detail::format_double(objective) << '\n';
}

void run_report(const std::filesystem::path& run_dir, std::ostream& out) {
    const auto rounds_path = run_dir / "rounds.csv";
    std::ifstream rounds_file(rounds_path);
    if (!rounds_file) throw error(errc::io, "missing run artifact: " + rounds_path.string());
    const auto logs = read_round_logs(rounds_file, rounds_path.string());
    if (logs.empty()) throw error(errc::parse, rounds_path.string() + ": no logged rounds");

    const auto summary_path = run_dir / "summary.json";
    std::ifstream summary_file(summary_path);
    if (!summary_file) throw error(errc::io, "missing run artifact: " + summary_path.string());
    nlohmann::json summary;
    try {
        summary = nlohmann::json::parse(summary_file);
    } catch (const nlohmann::json::parse_error& e) {
        throw error(errc::parse, summary_path.string() + ": " + e.what());
    }

    double min_objective = logs.front().objective;
    for (const auto& log : logs) min_objective = std::min(min_objective, log.objective);
    out << "rounds: " << logs.size() << '\n';
    out << "objective: first=" << detail::format_double(logs.front().objective)
        << " last=" << detail::format_double(logs.back().objective)
        << " min=" << detail::format_double(min_objective) << '\n';
    out << "gtv: first=" << detail::format_double(logs.front().gtv)
        << " last=" << detail::format_double(logs.back().gtv) << '\n';
    if (summary.contains("per_node_local_loss") && summary["per_node_local_loss"].is_array()) {
        out << "final local loss per node:\n";
        std::size_t i = 0;
        for (const auto& v : summary["per_node_local_loss"]) {
            out << "  node " << i << ": " << detail::format_double(v.get<double>()) << '\n';
            ++i;
        }
    }
}

int exit_code_for(errc kind) {
    switch (kind) {
        case errc::usage:
        case errc::config:
        case errc::parameter:
        case errc::unsupported_spec:
        case errc::size_cap:
            return 1;
        case errc::parse:
        case errc::io:
        case errc::validation:
        case errc::dimension_mismatch:
        case errc::invalid_node:
        case errc::protocol:
            return 2;
        case errc::degenerate_fit:
        case errc::numerical:
            return 3;
    }
    return 3;
}

}  // namespace fedrelax
