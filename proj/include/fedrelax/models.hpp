#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "fedrelax/matrix.hpp"

namespace fedrelax {

// Model classes a node may use. The only capability the engine relies
// on is weighted_erm_fit, so anything with a weighted squared-error
// training routine slots in here.
struct ConstantSpec {
    bool operator==(const ConstantSpec&) const = default;
};

struct LinearSpec {
    int dim = 1;  // no intercept; append a constant-1 feature if needed

    bool operator==(const LinearSpec&) const = default;
};

struct TreeSpec {
    int max_depth = 2;  // in [1, 8]
    int min_leaf = 1;

    bool operator==(const TreeSpec&) const = default;
};

using ModelSpec = std::variant<ConstantSpec, LinearSpec, TreeSpec>;

void validate_spec(const ModelSpec& spec);

struct ConstantParams {
    double value = 0.0;
};

struct LinearParams {
    std::vector<double> weights;
};

// Flat binary tree; node 0 is the root, leaves carry the value.
struct TreeNode {
    bool leaf = true;
    int feature = -1;
    double threshold = 0.0;
    double value = 0.0;
    int left = -1;
    int right = -1;
};

struct TreeParams {
    std::vector<TreeNode> nodes;
};

// One node's predictor. Immutable once fitted.
class LocalHypothesis {
public:
    LocalHypothesis() = default;
    LocalHypothesis(ModelSpec spec, std::variant<ConstantParams, LinearParams, TreeParams> params);

    const ModelSpec& spec() const noexcept { return spec_; }
    const std::variant<ConstantParams, LinearParams, TreeParams>& params() const noexcept { return params_; }

    double predict_one(std::span<const double> x) const;
    std::vector<double> predict(const Matrix& x) const;

private:
    ModelSpec spec_;
    std::variant<ConstantParams, LinearParams, TreeParams> params_;
};

// The all-zero predictor every run starts from.
LocalHypothesis zero_hypothesis(const ModelSpec& spec);

struct WeightedSample {
    std::vector<double> feature;
    double label = 0.0;
    double weight = 0.0;  // nonnegative; zero-weight samples are ignored by fits
};

// Minimizes sum_r weight_r * (label_r - h(feature_r))^2 over the spec's
// class. Constant and Linear solves are exact (Linear via the normal
// equations, with a diagonal jitter retry when the Gram matrix is
// singular); the tree is a greedy weighted CART fit with deterministic
// tie-breaking (lowest feature index, then lowest threshold; candidate
// thresholds are midpoints of consecutive distinct feature values).
LocalHypothesis weighted_erm_fit(const ModelSpec& spec, std::span<const WeightedSample> samples);

// JSON forms: {"kind":"constant","value":v}, {"kind":"linear","weights":[...]},
// {"kind":"tree","max_depth":k,"min_leaf":l,"root":{...}} with tree nodes
// as nested {"leaf":v} / {"feature":f,"threshold":t,"left":...,"right":...}.
nlohmann::json hypothesis_to_json(const LocalHypothesis& h);
LocalHypothesis hypothesis_from_json(const nlohmann::json& doc);

std::string spec_name(const ModelSpec& spec);

}  // namespace fedrelax
