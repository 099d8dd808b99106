#include "fedrelax/models.hpp"

#include <algorithm>
#include <cmath>

namespace fedrelax {

void validate_spec(const ModelSpec& spec) {
    if (const auto* linear = std::get_if<LinearSpec>(&spec)) {
        if (linear->dim < 1) throw error(errc::parameter, "linear spec: dimension must be >= 1");
    } else if (const auto* tree = std::get_if<TreeSpec>(&spec)) {
        if (tree->max_depth < 1 || tree->max_depth > 8) {
            throw error(errc::parameter, "tree spec: max_depth must lie in [1, 8]");
        }
        if (tree->min_leaf < 1) throw error(errc::parameter, "tree spec: min_leaf must be >= 1");
    }
}

std::string spec_name(const ModelSpec& spec) {
    if (std::holds_alternative<ConstantSpec>(spec)) return "constant";
    if (std::holds_alternative<LinearSpec>(spec)) return "linear";
    return "tree";
}

LocalHypothesis::LocalHypothesis(ModelSpec spec, std::variant<ConstantParams, LinearParams, TreeParams> params)
    : spec_(std::move(spec)), params_(std::move(params)) {}

double LocalHypothesis::predict_one(std::span<const double> x) const {
    if (const auto* constant = std::get_if<ConstantParams>(&params_)) {
        return constant->value;
    }
    if (const auto* linear = std::get_if<LinearParams>(&params_)) {
        if (x.size() != linear->weights.size()) {
            throw error(errc::dimension_mismatch, "predict: feature length " + std::to_string(x.size()) +
                                                      " does not match weight length " +
                                                      std::to_string(linear->weights.size()));
        }
        double acc = 0.0;
        for (std::size_t c = 0; c < x.size(); ++c) acc += linear->weights[c] * x[c];
        return acc;
    }
    const auto& tree = std::get<TreeParams>(params_);
    int at = 0;
    while (true) {
        const TreeNode& node = tree.nodes[static_cast<std::size_t>(at)];
        if (node.leaf) return node.value;
        if (node.feature < 0 || static_cast<std::size_t>(node.feature) >= x.size()) {
            throw error(errc::dimension_mismatch, "predict: tree splits on feature " +
                                                      std::to_string(node.feature) + " but row has " +
                                                      std::to_string(x.size()) + " features");
        }
        at = x[static_cast<std::size_t>(node.feature)] < node.threshold ? node.left : node.right;
    }
}

std::vector<double> LocalHypothesis::predict(const Matrix& x) const {
    std::vector<double> out(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) out[r] = predict_one(x.row(r));
    return out;
}

LocalHypothesis zero_hypothesis(const ModelSpec& spec) {
    validate_spec(spec);
    if (std::holds_alternative<ConstantSpec>(spec)) {
        return {spec, ConstantParams{0.0}};
    }
    if (const auto* linear = std::get_if<LinearSpec>(&spec)) {
        return {spec, LinearParams{std::vector<double>(static_cast<std::size_t>(linear->dim), 0.0)}};
    }
    return {spec, TreeParams{{TreeNode{}}}};
}

namespace {

struct FitInput {
    std::vector<std::size_t> active;  // indices of samples with weight > 0
    std::size_t dim = 0;
};

FitInput check_samples(std::span<const WeightedSample> samples) {
    if (samples.empty()) throw error(errc::degenerate_fit, "fit: no samples");
    FitInput in;
    in.dim = samples.front().feature.size();
    for (std::size_t r = 0; r < samples.size(); ++r) {
        const auto& s = samples[r];
        if (s.feature.size() != in.dim) {
            throw error(errc::dimension_mismatch, "fit: sample " + std::to_string(r) + " has " +
                                                      std::to_string(s.feature.size()) + " features, expected " +
                                                      std::to_string(in.dim));
        }
        if (!(s.weight >= 0.0) || !std::isfinite(s.weight)) {
            throw error(errc::parameter, "fit: sample " + std::to_string(r) + " has invalid weight");
        }
        if (s.weight > 0.0) in.active.push_back(r);
    }
    if (in.active.empty()) throw error(errc::degenerate_fit, "fit: all sample weights are zero");
    return in;
}

LocalHypothesis fit_constant(const ModelSpec& spec, std::span<const WeightedSample> samples,
                             const FitInput& in) {
    double sum_w = 0.0;
    double sum_wy = 0.0;
    for (std::size_t r : in.active) {
        sum_w += samples[r].weight;
        sum_wy += samples[r].weight * samples[r].label;
    }
    return {spec, ConstantParams{sum_wy / sum_w}};
}

LocalHypothesis fit_linear(const ModelSpec& spec, std::span<const WeightedSample> samples,
                           const FitInput& in, std::size_t dim) {
    if (in.dim != dim) {
        throw error(errc::dimension_mismatch, "fit: samples have " + std::to_string(in.dim) +
                                                  " features, spec expects " + std::to_string(dim));
    }
    Matrix gram(dim, dim);
    std::vector<double> rhs(dim, 0.0);
    for (std::size_t r : in.active) {
        const auto& s = samples[r];
        for (std::size_t a = 0; a < dim; ++a) {
            const double wa = s.weight * s.feature[a];
            rhs[a] += wa * s.label;
            for (std::size_t b = a; b < dim; ++b) gram(a, b) += wa * s.feature[b];
        }
    }
    for (std::size_t a = 0; a < dim; ++a) {
        for (std::size_t b = 0; b < a; ++b) gram(a, b) = gram(b, a);
    }
    return {spec, LinearParams{linalg::solve_spd(std::move(gram), std::move(rhs))}};
}

struct SplitChoice {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double children_sse = 0.0;
};

// Weighted sum of squared deviations from the weighted mean.
double subset_sse(std::span<const WeightedSample> samples, const std::vector<std::size_t>& subset) {
    double sum_w = 0.0;
    double sum_wy = 0.0;
    double sum_wyy = 0.0;
    for (std::size_t r : subset) {
        const auto& s = samples[r];
        sum_w += s.weight;
        sum_wy += s.weight * s.label;
        sum_wyy += s.weight * s.label * s.label;
    }
    return std::max(0.0, sum_wyy - sum_wy * sum_wy / sum_w);
}

double subset_mean(std::span<const WeightedSample> samples, const std::vector<std::size_t>& subset) {
    double sum_w = 0.0;
    double sum_wy = 0.0;
    for (std::size_t r : subset) {
        sum_w += samples[r].weight;
        sum_wy += samples[r].weight * samples[r].label;
    }
    return sum_wy / sum_w;
}

SplitChoice best_split(std::span<const WeightedSample> samples, const std::vector<std::size_t>& subset,
                       std::size_t dim, int min_leaf) {
    SplitChoice best;
    if (subset.size() < 2 * static_cast<std::size_t>(min_leaf)) return best;
    std::vector<std::size_t> order(subset);
    std::vector<double> prefix_w(subset.size() + 1, 0.0);
    std::vector<double> prefix_wy(subset.size() + 1, 0.0);
    std::vector<double> prefix_wyy(subset.size() + 1, 0.0);
    for (std::size_t f = 0; f < dim; ++f) {
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return samples[a].feature[f] < samples[b].feature[f];
        });
        for (std::size_t k = 0; k < order.size(); ++k) {
            const auto& s = samples[order[k]];
            prefix_w[k + 1] = prefix_w[k] + s.weight;
            prefix_wy[k + 1] = prefix_wy[k] + s.weight * s.label;
            prefix_wyy[k + 1] = prefix_wyy[k] + s.weight * s.label * s.label;
        }
        const double total_w = prefix_w.back();
        const double total_wy = prefix_wy.back();
        const double total_wyy = prefix_wyy.back();
        for (std::size_t k = static_cast<std::size_t>(min_leaf);
             k + static_cast<std::size_t>(min_leaf) <= order.size(); ++k) {
            const double lo = samples[order[k - 1]].feature[f];
            const double hi = samples[order[k]].feature[f];
            if (!(lo < hi)) continue;  // only between distinct values
            const double left_sse = std::max(0.0, prefix_wyy[k] - prefix_wy[k] * prefix_wy[k] / prefix_w[k]);
            const double rw = total_w - prefix_w[k];
            const double rwy = total_wy - prefix_wy[k];
            const double right_sse = std::max(0.0, (total_wyy - prefix_wyy[k]) - rwy * rwy / rw);
            const double sse = left_sse + right_sse;
            if (!best.found || sse < best.children_sse) {
                best.found = true;
                best.feature = static_cast<int>(f);
                best.threshold = lo + (hi - lo) / 2.0;
                best.children_sse = sse;
            }
        }
    }
    return best;
}

int build_tree(std::span<const WeightedSample> samples, std::vector<std::size_t> subset,
               const TreeSpec& spec, std::size_t dim, int depth, std::vector<TreeNode>& nodes) {
    const int index = static_cast<int>(nodes.size());
    nodes.push_back(TreeNode{});
    const double node_sse = subset_sse(samples, subset);
    SplitChoice split;
    if (depth < spec.max_depth) split = best_split(samples, subset, dim, spec.min_leaf);
    if (!split.found || !(split.children_sse < node_sse)) {
        nodes[static_cast<std::size_t>(index)].value = subset_mean(samples, subset);
        return index;
    }
    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    for (std::size_t r : subset) {
        const auto& s = samples[r];
        (s.feature[static_cast<std::size_t>(split.feature)] < split.threshold ? left : right).push_back(r);
    }
    subset.clear();
    subset.shrink_to_fit();
    const int left_index = build_tree(samples, std::move(left), spec, dim, depth + 1, nodes);
    const int right_index = build_tree(samples, std::move(right), spec, dim, depth + 1, nodes);
    TreeNode& node = nodes[static_cast<std::size_t>(index)];
    node.leaf = false;
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = left_index;
    node.right = right_index;
    return index;
}

LocalHypothesis fit_tree(const ModelSpec& spec, std::span<const WeightedSample> samples,
                         const FitInput& in, const TreeSpec& tree_spec) {
    if (in.dim == 0) {
        throw error(errc::dimension_mismatch, "fit: tree requires at least one feature column");
    }
    TreeParams params;
    build_tree(samples, in.active, tree_spec, in.dim, 0, params.nodes);
    return {spec, std::move(params)};
}

}  // namespace

LocalHypothesis weighted_erm_fit(const ModelSpec& spec, std::span<const WeightedSample> samples) {
    validate_spec(spec);
    const FitInput in = check_samples(samples);
    if (std::holds_alternative<ConstantSpec>(spec)) return fit_constant(spec, samples, in);
    if (const auto* linear = std::get_if<LinearSpec>(&spec)) {
        return fit_linear(spec, samples, in, static_cast<std::size_t>(linear->dim));
    }
    return fit_tree(spec, samples, in, std::get<TreeSpec>(spec));
}

namespace {

nlohmann::json tree_node_to_json(const TreeParams& tree, int index) {
    const TreeNode& node = tree.nodes[static_cast<std::size_t>(index)];
    if (node.leaf) return nlohmann::json{{"leaf", node.value}};
    return nlohmann::json{{"feature", node.feature},
                          {"threshold", node.threshold},
                          {"left", tree_node_to_json(tree, node.left)},
                          {"right", tree_node_to_json(tree, node.right)}};
}

int tree_node_from_json(const nlohmann::json& doc, std::vector<TreeNode>& nodes) {
    const int index = static_cast<int>(nodes.size());
    nodes.push_back(TreeNode{});
    if (doc.contains("leaf")) {
        if (!doc["leaf"].is_number()) throw error(errc::parse, "hypothesis json: leaf value must be a number");
        nodes[static_cast<std::size_t>(index)].value = doc["leaf"].get<double>();
        return index;
    }
    if (!doc.contains("feature") || !doc.contains("threshold") || !doc.contains("left") ||
        !doc.contains("right")) {
        throw error(errc::parse, "hypothesis json: tree node needs leaf or feature/threshold/left/right");
    }
    const int feature = doc["feature"].get<int>();
    const double threshold = doc["threshold"].get<double>();
    const int left = tree_node_from_json(doc["left"], nodes);
    const int right = tree_node_from_json(doc["right"], nodes);
    TreeNode& node = nodes[static_cast<std::size_t>(index)];
    node.leaf = false;
    node.feature = feature;
    node.threshold = threshold;
    node.left = left;
    node.right = right;
    return index;
}

}  // namespace

nlohmann::json hypothesis_to_json(const LocalHypothesis& h) {
    if (const auto* constant = std::get_if<ConstantParams>(&h.params())) {
        return {{"kind", "constant"}, {"value", constant->value}};
    }
    if (const auto* linear = std::get_if<LinearParams>(&h.params())) {
        return {{"kind", "linear"}, {"weights", linear->weights}};
    }
    const auto& tree_spec = std::get<TreeSpec>(h.spec());
    return {{"kind", "tree"},
            {"max_depth", tree_spec.max_depth},
            {"min_leaf", tree_spec.min_leaf},
            {"root", tree_node_to_json(std::get<TreeParams>(h.params()), 0)}};
}

LocalHypothesis hypothesis_from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("kind") || !doc["kind"].is_string()) {
        throw error(errc::parse, "hypothesis json: expected object with string \"kind\"");
    }
    const std::string kind = doc["kind"].get<std::string>();
    if (kind == "constant") {
        if (!doc.contains("value") || !doc["value"].is_number()) {
            throw error(errc::parse, "hypothesis json: constant needs numeric \"value\"");
        }
        return {ConstantSpec{}, ConstantParams{doc["value"].get<double>()}};
    }
    if (kind == "linear") {
        if (!doc.contains("weights") || !doc["weights"].is_array() || doc["weights"].empty()) {
            throw error(errc::parse, "hypothesis json: linear needs non-empty \"weights\" array");
        }
        LinearParams params;
        for (const auto& w : doc["weights"]) {
            if (!w.is_number()) throw error(errc::parse, "hypothesis json: weights must be numbers");
            params.weights.push_back(w.get<double>());
        }
        const int dim = static_cast<int>(params.weights.size());
        return {LinearSpec{dim}, std::move(params)};
    }
    if (kind == "tree") {
        if (!doc.contains("max_depth") || !doc.contains("min_leaf") || !doc.contains("root")) {
            throw error(errc::parse, "hypothesis json: tree needs max_depth, min_leaf and root");
        }
        TreeSpec spec{doc["max_depth"].get<int>(), doc["min_leaf"].get<int>()};
        validate_spec(spec);
        TreeParams params;
        tree_node_from_json(doc["root"], params.nodes);
        return {spec, std::move(params)};
    }
    throw error(errc::parse, "hypothesis json: unknown kind '" + kind + "'");
}

}  // namespace fedrelax
