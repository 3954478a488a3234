#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace oracle {

namespace {

bool categorical(int feature) { return feature == 0 || feature == 4; }

struct Totals {
    std::size_t n = 0;
    double deaths = 0.0;
    double volume = 0.0;
};

Totals totals(const std::vector<Point> &points) {
    Totals t;
    for (const auto &p : points) {
        if (p.deaths) {
            ++t.n;
            t.deaths += static_cast<double>(*p.deaths);
            t.volume += p.volume;
        }
    }
    return t;
}

double tolerance(const std::vector<Point> &points) {
    const auto t = totals(points);
    const double hp = t.deaths > 0.0 ? t.deaths * std::log(t.deaths / t.volume) : 0.0;
    return 1e-10 * (1.0 + t.deaths + std::abs(hp));
}

// Side assignment for a candidate; unseen categorical levels (only carried by
// points without deaths) follow the heavier side.
std::pair<std::vector<Point>, std::vector<Point>> partition(const std::vector<Point> &points,
                                                            const Split &s) {
    std::vector<Point> left;
    std::vector<Point> right;
    std::vector<Point> unseen;
    std::set<int> seen;
    for (const auto &p : points) {
        if (p.deaths) {
            seen.insert(p.value[static_cast<std::size_t>(s.feature)]);
        }
    }
    for (const auto &p : points) {
        const int v = p.value[static_cast<std::size_t>(s.feature)];
        if (!categorical(s.feature)) {
            (v <= s.threshold ? left : right).push_back(p);
        } else if (!seen.count(v)) {
            unseen.push_back(p);
        } else if (std::binary_search(s.left_levels.begin(), s.left_levels.end(), v)) {
            left.push_back(p);
        } else {
            right.push_back(p);
        }
    }
    if (!unseen.empty()) {
        auto &target = totals(left).volume >= totals(right).volume ? left : right;
        target.insert(target.end(), unseen.begin(), unseen.end());
    }
    return {left, right};
}

void grow(const std::vector<Point> &points, const std::vector<int> &features, double cp_cut,
          std::size_t min_bucket, std::size_t max_depth, std::size_t depth,
          std::vector<Node> &out) {
    const auto t = totals(points);
    Node node;
    node.depth = depth;
    node.n = t.n;
    node.sum_deaths = t.deaths;
    node.sum_volume = t.volume;
    node.deviance = node_deviance(points);
    const auto index = out.size();
    out.push_back(node);
    if (depth >= max_depth || t.n < 2 * min_bucket) {
        return;
    }
    std::vector<Split> per_feature;
    for (const auto f : features) {
        if (auto s = brute_best_split(points, f, min_bucket)) {
            per_feature.push_back(*s);
        }
    }
    if (per_feature.empty()) {
        return;
    }
    double best = -std::numeric_limits<double>::infinity();
    for (const auto &s : per_feature) {
        best = std::max(best, s.reduction);
    }
    const auto tol = tolerance(points);
    const Split *chosen = nullptr;
    for (const auto &s : per_feature) {
        if (s.reduction >= best - tol && (!chosen || s.feature < chosen->feature)) {
            chosen = &s;
        }
    }
    if (chosen->reduction < cp_cut) {
        return;
    }
    out[index].split = *chosen;
    const auto [left, right] = partition(points, *chosen);
    grow(left, features, cp_cut, min_bucket, max_depth, depth + 1, out);
    grow(right, features, cp_cut, min_bucket, max_depth, depth + 1, out);
}

} // namespace

std::vector<Point> from_working(const std::vector<mortboost::WorkingPoint> &points) {
    std::vector<Point> out;
    for (const auto &p : points) {
        Point q;
        q.value = {static_cast<int>(p.x.gender()), p.x.age(), p.x.year(), p.x.year() - p.x.age(),
                   static_cast<int>(p.cause)};
        q.volume = p.volume;
        q.deaths = p.response;
        out.push_back(q);
    }
    return out;
}

double deviance(const std::vector<Point> &points, double mu) {
    double total = 0.0;
    for (const auto &p : points) {
        if (!p.deaths) {
            continue;
        }
        const double y = static_cast<double>(*p.deaths);
        const double m = mu * p.volume;
        if (y > 0.0) {
            if (m == 0.0) {
                return std::numeric_limits<double>::infinity();
            }
            total += 2.0 * (y * std::log(y / m) - (y - m));
        } else {
            total += 2.0 * m;
        }
    }
    return total;
}

double node_deviance(const std::vector<Point> &points) {
    const auto t = totals(points);
    return t.volume > 0.0 ? deviance(points, t.deaths / t.volume) : 0.0;
}

std::optional<Split> brute_best_split(const std::vector<Point> &points, int feature,
                                      std::size_t min_bucket) {
    const auto f = static_cast<std::size_t>(feature);
    std::set<int> levels;
    for (const auto &p : points) {
        if (p.deaths) {
            levels.insert(p.value[f]);
        }
    }
    if (levels.size() < 2) {
        return std::nullopt;
    }
    const double parent = node_deviance(points);
    std::vector<Split> candidates;
    const auto consider = [&](Split s) {
        const auto [left, right] = partition(points, s);
        if (totals(left).n < min_bucket || totals(right).n < min_bucket) {
            return;
        }
        s.reduction = parent - node_deviance(left) - node_deviance(right);
        candidates.push_back(s);
    };
    const std::vector<int> sorted(levels.begin(), levels.end());
    if (!categorical(feature)) {
        for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
            Split s;
            s.feature = feature;
            s.threshold = (sorted[i] + sorted[i + 1]) / 2.0;
            consider(s);
        }
    } else {
        // Subsets containing the smallest level, excluding the full set.
        const auto k = sorted.size();
        for (std::uint32_t mask = 1; mask < (1u << k) - 1; ++mask) {
            if (!(mask & 1u)) {
                continue;
            }
            Split s;
            s.feature = feature;
            for (std::size_t j = 0; j < k; ++j) {
                if (mask & (1u << j)) {
                    s.left_levels.push_back(sorted[j]);
                }
            }
            consider(s);
        }
    }
    if (candidates.empty()) {
        return std::nullopt;
    }
    double best = -std::numeric_limits<double>::infinity();
    for (const auto &c : candidates) {
        best = std::max(best, c.reduction);
    }
    const auto tol = tolerance(points);
    if (!(best > tol)) {
        return std::nullopt;
    }
    const Split *chosen = nullptr;
    for (const auto &c : candidates) {
        if (c.reduction < best - tol) {
            continue;
        }
        if (!chosen) {
            chosen = &c;
        } else if (categorical(feature) ? c.left_levels < chosen->left_levels
                                        : c.threshold < chosen->threshold) {
            chosen = &c;
        }
    }
    return *chosen;
}

std::vector<Node> brute_tree(const std::vector<Point> &points, const std::vector<int> &features,
                             double cp, std::size_t min_bucket, std::size_t max_depth) {
    std::vector<Node> out;
    grow(points, features, cp * node_deviance(points), min_bucket, max_depth, 0, out);
    return out;
}

std::string compare_trees(const mortboost::PoissonTree &tree, const std::vector<Node> &reference,
                          double tolerance) {
    std::ostringstream msg;
    const auto &nodes = tree.nodes();
    if (nodes.size() != reference.size()) {
        msg << "node count " << nodes.size() << " vs reference " << reference.size();
        return msg.str();
    }
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto &a = nodes[i];
        const auto &b = reference[i];
        if (a.depth != b.depth || a.n != b.n || a.split.has_value() != b.split.has_value()) {
            msg << "node " << i << ": shape differs";
            return msg.str();
        }
        if (std::abs(a.deviance - b.deviance) > tolerance) {
            msg << "node " << i << ": deviance " << a.deviance << " vs " << b.deviance;
            return msg.str();
        }
        if (!a.split) {
            continue;
        }
        const auto &ra = *a.split;
        const auto &rb = *b.split;
        if (static_cast<int>(ra.feature) != rb.feature) {
            msg << "node " << i << ": feature " << static_cast<int>(ra.feature) << " vs "
                << rb.feature;
            return msg.str();
        }
        if (categorical(rb.feature) ? ra.left_levels != rb.left_levels
                                    : ra.threshold != rb.threshold) {
            msg << "node " << i << ": rule differs";
            return msg.str();
        }
        if (std::abs(a.gain - rb.reduction) > tolerance) {
            msg << "node " << i << ": reduction " << a.gain << " vs " << rb.reduction;
            return msg.str();
        }
    }
    return {};
}

} // namespace oracle
