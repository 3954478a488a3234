#pragma once

#include "mortboost/domain.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mortboost {

/// Split features, listed in tie-break order.
enum class FeatureId : std::uint8_t { gender = 0, age = 1, year = 2, cohort = 3, cause = 4 };

std::string_view to_string(FeatureId id) noexcept;
FeatureId parse_feature_id(std::string_view text);
constexpr bool is_categorical(FeatureId id) noexcept {
    return id == FeatureId::gender || id == FeatureId::cause;
}

/// One observation (D_x, x, d_x) of the working data.
struct WorkingPoint {
    ExtendedFeature x;
    /// 1-based cause label; 0 when the data carries no cause.
    std::size_t cause = 0;
    /// Expected deaths under the initial model; enters the mean as mu * d.
    double volume = 0.0;
    /// nullopt marks a missing response.
    std::optional<std::int64_t> response;

    /// Integer coding used by splits: gender 0/1, cause 1..K.
    int value(FeatureId id) const;
};

/// `value <= threshold` goes left for ordered features. Categorical rules list
/// the levels seen on each side at training time; left_levels always holds the
/// smallest one.
struct SplitRule {
    FeatureId feature = FeatureId::age;
    double threshold = 0.0;
    std::vector<int> left_levels;
    std::vector<int> right_levels;

    enum class Side { left, right, unseen };
    Side side(int value) const noexcept;

    friend bool operator==(const SplitRule &, const SplitRule &) = default;
};

struct SplitCandidate {
    SplitRule rule;
    /// Parent deviance minus the deviances of both children at their own mu.
    double reduction = 0.0;
};

struct TreeConfig {
    /// Minimum reduction as a fraction of the root deviance.
    double cp = 2e-3;
    /// Minimum number of points with a response per child.
    std::size_t min_bucket = 10;
    std::size_t max_depth = 30;
    std::vector<FeatureId> features{FeatureId::gender, FeatureId::age, FeatureId::year,
                                    FeatureId::cohort};

    void validate() const;
};

struct TreeNode {
    std::size_t depth = 0;
    std::optional<SplitRule> split;
    /// Child node indices; meaningful only when split is set.
    std::size_t left = 0;
    std::size_t right = 0;
    /// Points with a response, and points routed here without one.
    std::size_t n = 0;
    std::size_t n_missing = 0;
    double sum_deaths = 0.0;
    double sum_volume = 0.0;
    /// sum_deaths / sum_volume.
    double mu = 0.0;
    double deviance = 0.0;
    /// Deviance reduction of the accepted split; 0 for leaves.
    double gain = 0.0;

    bool is_leaf() const noexcept { return !split.has_value(); }

    friend bool operator==(const TreeNode &, const TreeNode &) = default;
};

struct TreeRoute {
    std::size_t leaf = 0;
    /// A categorical level not seen in training was met on the way down.
    bool unseen_level = false;
};

/// Nodes are stored in pre-order; node 0 is the root.
class PoissonTree {
  public:
    explicit PoissonTree(std::vector<TreeNode> nodes);

    const std::vector<TreeNode> &nodes() const noexcept { return nodes_; }
    const TreeNode &root() const noexcept { return nodes_.front(); }
    std::size_t leaf_count() const noexcept;
    std::size_t split_count() const noexcept { return nodes_.size() - leaf_count(); }
    double total_leaf_deviance() const noexcept;

    TreeRoute route(const ExtendedFeature &x, std::size_t cause = 0) const;

    /// Deviance reductions of all accepted splits, largest first.
    std::vector<double> split_gains() const;

    friend bool operator==(const PoissonTree &, const PoissonTree &) = default;

  private:
    std::vector<TreeNode> nodes_;
};

/// 2 sum [D log(D / (mu d)) - (D - mu d)], skipping missing responses.
/// Returns +infinity when mu = 0 and some D > 0.
double poisson_deviance(std::span<const WorkingPoint> points, double rate_factor);

/// Best admissible split on one feature, or nullopt when none reduces the
/// deviance. Ties within a relative 1e-10 go to the smaller threshold or the
/// lexicographically smaller left set.
std::optional<SplitCandidate> best_split(std::span<const WorkingPoint> points, FeatureId feature,
                                         std::size_t min_bucket = 1);

/// Depth-first binary tree growth. Throws std::invalid_argument for an empty
/// input or zero total volume.
PoissonTree grow_tree(std::span<const WorkingPoint> points, const TreeConfig &cfg = {});

double predict_mu(const PoissonTree &tree, const ExtendedFeature &x, std::size_t cause = 0);

/// One node per line in pre-order, indented by depth:
/// depth rule n=.. missing=.. D=.. d=.. mu=.. dev=.. gain=..
std::string serialize_tree(const PoissonTree &tree);
PoissonTree parse_tree(std::string_view text);

} // namespace mortboost
