#pragma once

// Reference implementations used only by tests. They share no code with the
// library's tree, fitting or aggregation paths.

#include "mortboost/poisson_tree.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace oracle {

/// Point with all five feature codes spelled out.
struct Point {
    std::array<int, 5> value{}; // gender, age, year, cohort, cause
    double volume = 0.0;
    std::optional<std::int64_t> deaths;
};

std::vector<Point> from_working(const std::vector<mortboost::WorkingPoint> &points);

/// Pointwise Poisson deviance at a given mean factor.
double deviance(const std::vector<Point> &points, double mu);

/// Deviance at the node MLE, sum D / sum d.
double node_deviance(const std::vector<Point> &points);

struct Split {
    int feature = 0;
    double threshold = 0.0;
    std::vector<int> left_levels; // categorical only, sorted
    double reduction = 0.0;
};

/// Exhaustive search: every threshold of ordered features and every proper
/// level subset of categorical ones.
std::optional<Split> brute_best_split(const std::vector<Point> &points, int feature,
                                      std::size_t min_bucket);

struct Node {
    std::size_t depth = 0;
    std::optional<Split> split;
    std::size_t n = 0;
    double sum_deaths = 0.0;
    double sum_volume = 0.0;
    double deviance = 0.0;
};

/// Pre-order node list of the recursively grown reference tree.
std::vector<Node> brute_tree(const std::vector<Point> &points, const std::vector<int> &features,
                             double cp, std::size_t min_bucket, std::size_t max_depth);

/// Empty when the trees agree, otherwise a description of the first mismatch.
std::string compare_trees(const mortboost::PoissonTree &tree, const std::vector<Node> &reference,
                          double tolerance);

} // namespace oracle
