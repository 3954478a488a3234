#include "mortboost/poisson_tree.hpp"

#include "detail/deviance.hpp"

#include "mortboost/errors.hpp"
#include "mortboost/parallel.hpp"
#include "mortboost/text.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace mortboost {

namespace {

// Nodes at least this large search their features on separate threads.
constexpr std::size_t kParallelNodeSize = 4096;

double h(double deaths, double volume) noexcept {
    return deaths > 0.0 ? deaths * std::log(deaths / volume) : 0.0;
}

struct Sums {
    std::size_t n = 0;
    double deaths = 0.0;
    double volume = 0.0;

    void add(double d_deaths, double d_volume) noexcept {
        ++n;
        deaths += d_deaths;
        volume += d_volume;
    }
};

// Reductions closer than this to the best are ties; anything below it is noise.
double tie_tolerance(const Sums &parent) noexcept {
    return 1e-10 * (1.0 + parent.deaths + std::abs(h(parent.deaths, parent.volume)));
}

double reduction(const Sums &left, const Sums &right, const Sums &parent) noexcept {
    return 2.0 * (h(left.deaths, left.volume) + h(right.deaths, right.volume) -
                  h(parent.deaths, parent.volume));
}

struct Level {
    int value = 0;
    Sums sums;
};

// Per distinct value, in ascending value order; only points with a response.
std::vector<Level> levels_of(std::span<const WorkingPoint> points,
                             std::span<const std::size_t> members, FeatureId feature) {
    std::map<int, Sums> by_value;
    for (const auto i : members) {
        const auto &p = points[i];
        if (p.response) {
            by_value[p.value(feature)].add(static_cast<double>(*p.response), p.volume);
        }
    }
    std::vector<Level> out;
    out.reserve(by_value.size());
    for (const auto &[v, s] : by_value) {
        out.push_back({v, s});
    }
    return out;
}

Sums total_of(const std::vector<Level> &levels) noexcept {
    Sums total;
    for (const auto &l : levels) {
        total.n += l.sums.n;
        total.deaths += l.sums.deaths;
        total.volume += l.sums.volume;
    }
    return total;
}

Sums merge(const Sums &a, const Sums &b) noexcept {
    return {a.n + b.n, a.deaths + b.deaths, a.volume + b.volume};
}

std::optional<SplitCandidate> ordered_split(const std::vector<Level> &levels, FeatureId feature,
                                            std::size_t min_bucket) {
    const auto parent = total_of(levels);
    const auto k = levels.size();
    std::vector<Sums> suffix(k + 1);
    for (std::size_t i = k; i-- > 0;) {
        suffix[i] = merge(levels[i].sums, suffix[i + 1]);
    }
    std::vector<SplitCandidate> candidates;
    Sums left;
    for (std::size_t i = 0; i + 1 < k; ++i) {
        left = merge(left, levels[i].sums);
        const auto &right = suffix[i + 1];
        if (left.n < min_bucket || right.n < min_bucket) {
            continue;
        }
        SplitRule rule;
        rule.feature = feature;
        rule.threshold = 0.5 * (static_cast<double>(levels[i].value) +
                                static_cast<double>(levels[i + 1].value));
        candidates.push_back({std::move(rule), reduction(left, right, parent)});
    }
    if (candidates.empty()) {
        return std::nullopt;
    }
    double best = -std::numeric_limits<double>::infinity();
    for (const auto &c : candidates) {
        best = std::max(best, c.reduction);
    }
    const auto tol = tie_tolerance(parent);
    if (!(best > tol)) {
        return std::nullopt;
    }
    for (auto &c : candidates) {
        if (c.reduction >= best - tol) {
            return std::move(c);
        }
    }
    return std::nullopt;
}

// Levels sorted by empirical rate; levels with equal rates stay on one side
// (a cut inside such a group is never strictly better than at its edges).
std::optional<SplitCandidate> categorical_split(const std::vector<Level> &levels,
                                                FeatureId feature, std::size_t min_bucket) {
    const auto parent = total_of(levels);
    auto order = levels;
    std::stable_sort(order.begin(), order.end(), [](const Level &a, const Level &b) {
        return a.sums.deaths / a.sums.volume < b.sums.deaths / b.sums.volume;
    });
    const int smallest = levels.front().value;
    std::vector<SplitCandidate> candidates;
    Sums left;
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        left = merge(left, order[i].sums);
        const double rate_here = order[i].sums.deaths / order[i].sums.volume;
        const double rate_next = order[i + 1].sums.deaths / order[i + 1].sums.volume;
        if (rate_here == rate_next) {
            continue;
        }
        Sums right;
        for (std::size_t j = i + 1; j < order.size(); ++j) {
            right = merge(right, order[j].sums);
        }
        if (left.n < min_bucket || right.n < min_bucket) {
            continue;
        }
        SplitRule rule;
        rule.feature = feature;
        for (std::size_t j = 0; j < order.size(); ++j) {
            (j <= i ? rule.left_levels : rule.right_levels).push_back(order[j].value);
        }
        std::sort(rule.left_levels.begin(), rule.left_levels.end());
        std::sort(rule.right_levels.begin(), rule.right_levels.end());
        if (rule.left_levels.front() != smallest) {
            std::swap(rule.left_levels, rule.right_levels);
        }
        candidates.push_back({std::move(rule), reduction(left, right, parent)});
    }
    if (candidates.empty()) {
        return std::nullopt;
    }
    double best = -std::numeric_limits<double>::infinity();
    for (const auto &c : candidates) {
        best = std::max(best, c.reduction);
    }
    const auto tol = tie_tolerance(parent);
    if (!(best > tol)) {
        return std::nullopt;
    }
    SplitCandidate *chosen = nullptr;
    for (auto &c : candidates) {
        if (c.reduction >= best - tol &&
            (chosen == nullptr || c.rule.left_levels < chosen->rule.left_levels)) {
            chosen = &c;
        }
    }
    return std::move(*chosen);
}

std::optional<SplitCandidate> split_members(std::span<const WorkingPoint> points,
                                            std::span<const std::size_t> members,
                                            FeatureId feature, std::size_t min_bucket) {
    const auto levels = levels_of(points, members, feature);
    if (levels.size() < 2) {
        return std::nullopt;
    }
    return is_categorical(feature) ? categorical_split(levels, feature, min_bucket)
                                   : ordered_split(levels, feature, min_bucket);
}

void check_points(std::span<const WorkingPoint> points) {
    for (const auto &p : points) {
        if (!(p.volume > 0.0) || !std::isfinite(p.volume)) {
            throw std::invalid_argument("working point volume must be positive and finite");
        }
        if (p.response && *p.response < 0) {
            throw std::invalid_argument("working point response must be >= 0");
        }
    }
}

class Grower {
  public:
    Grower(std::span<const WorkingPoint> points, const TreeConfig &cfg)
        : points_{points}, cfg_{cfg} {}

    std::vector<TreeNode> grow() {
        std::vector<std::size_t> all(points_.size());
        for (std::size_t i = 0; i < all.size(); ++i) {
            all[i] = i;
        }
        const auto root_sums = sums_of(all);
        if (!(root_sums.volume > 0.0)) {
            throw std::invalid_argument("working data needs positive total volume");
        }
        root_deviance_ = deviance_of(all, root_sums.deaths / root_sums.volume);
        build(all, 0);
        return std::move(nodes_);
    }

  private:
    Sums sums_of(const std::vector<std::size_t> &members) const {
        Sums s;
        for (const auto i : members) {
            if (points_[i].response) {
                s.add(static_cast<double>(*points_[i].response), points_[i].volume);
            }
        }
        return s;
    }

    double deviance_of(const std::vector<std::size_t> &members, double mu) const {
        double total = 0.0;
        for (const auto i : members) {
            const auto &p = points_[i];
            if (!p.response) {
                continue;
            }
            const double d = static_cast<double>(*p.response);
            const double m = mu * p.volume;
            total += detail::unit_deviance(d, m);
        }
        return 2.0 * total;
    }

    std::optional<SplitCandidate> choose(const std::vector<std::size_t> &members,
                                         const Sums &parent) const {
        const auto &features = cfg_.features;
        std::vector<std::optional<SplitCandidate>> per_feature(features.size());
        const auto search = [&](std::size_t f) {
            per_feature[f] = split_members(points_, members, features[f], cfg_.min_bucket);
        };
        if (members.size() >= kParallelNodeSize) {
            parallel_for(features.size(), search, 1);
        } else {
            for (std::size_t f = 0; f < features.size(); ++f) {
                search(f);
            }
        }
        double best = -std::numeric_limits<double>::infinity();
        for (const auto &c : per_feature) {
            if (c) {
                best = std::max(best, c->reduction);
            }
        }
        const auto tol = tie_tolerance(parent);
        // Features are tried in FeatureId order regardless of listing order.
        std::optional<SplitCandidate> chosen;
        for (std::size_t f = 0; f < features.size(); ++f) {
            const auto &c = per_feature[f];
            if (c && c->reduction >= best - tol &&
                (!chosen || c->rule.feature < chosen->rule.feature)) {
                chosen = c;
            }
        }
        return chosen;
    }

    std::size_t build(const std::vector<std::size_t> &members, std::size_t depth) {
        const auto sums = sums_of(members);
        const auto index = nodes_.size();
        nodes_.emplace_back();
        {
            auto &node = nodes_.back();
            node.depth = depth;
            node.n = sums.n;
            node.n_missing = members.size() - sums.n;
            node.sum_deaths = sums.deaths;
            node.sum_volume = sums.volume;
            node.mu = sums.deaths / sums.volume;
            node.deviance = deviance_of(members, node.mu);
        }
        if (depth >= cfg_.max_depth || sums.n < 2 * cfg_.min_bucket) {
            return index;
        }
        auto candidate = choose(members, sums);
        if (!candidate || candidate->reduction < cfg_.cp * root_deviance_) {
            return index;
        }

        const auto &rule = candidate->rule;
        std::vector<std::size_t> left;
        std::vector<std::size_t> right;
        std::vector<std::size_t> unseen;
        Sums left_sums;
        Sums right_sums;
        for (const auto i : members) {
            const auto &p = points_[i];
            const auto side = rule.side(p.value(rule.feature));
            if (side == SplitRule::Side::unseen) {
                unseen.push_back(i);
                continue;
            }
            (side == SplitRule::Side::left ? left : right).push_back(i);
            if (p.response) {
                (side == SplitRule::Side::left ? left_sums : right_sums)
                    .add(static_cast<double>(*p.response), p.volume);
            }
        }
        if (!unseen.empty()) {
            auto &target = left_sums.volume >= right_sums.volume ? left : right;
            target.insert(target.end(), unseen.begin(), unseen.end());
            std::sort(target.begin(), target.end());
        }

        nodes_[index].split = std::move(candidate->rule);
        nodes_[index].gain = candidate->reduction;
        const auto l = build(left, depth + 1);
        const auto r = build(right, depth + 1);
        nodes_[index].left = l;
        nodes_[index].right = r;
        return index;
    }

    std::span<const WorkingPoint> points_;
    const TreeConfig &cfg_;
    double root_deviance_ = 0.0;
    std::vector<TreeNode> nodes_;
};

std::string format_levels(FeatureId feature, const std::vector<int> &levels) {
    std::string out = "{";
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (i > 0) {
            out += ',';
        }
        out += feature == FeatureId::gender ? std::string(to_string(static_cast<Gender>(levels[i])))
                                            : std::to_string(levels[i]);
    }
    return out + "}";
}

std::vector<int> parse_levels(FeatureId feature, std::string_view text, std::size_t line) {
    if (text.size() < 2 || text.front() != '{' || text.back() != '}') {
        throw ParseError(line, "malformed level set '" + std::string(text) + "'");
    }
    std::vector<int> out;
    for (const auto token : text::split(text.substr(1, text.size() - 2), ',')) {
        if (feature == FeatureId::gender) {
            out.push_back(static_cast<int>(parse_gender(token)));
            continue;
        }
        const auto v = text::parse_int(token);
        if (!v) {
            throw ParseError(line, "bad level '" + std::string(token) + "'");
        }
        out.push_back(static_cast<int>(*v));
    }
    return out;
}

SplitRule parse_rule(std::string_view token, std::size_t line) {
    SplitRule rule;
    if (const auto le = token.find("<="); le != std::string_view::npos) {
        rule.feature = parse_feature_id(token.substr(0, le));
        const auto t = text::parse_double(token.substr(le + 2));
        if (!t || is_categorical(rule.feature)) {
            throw ParseError(line, "bad threshold rule '" + std::string(token) + "'");
        }
        rule.threshold = *t;
        return rule;
    }
    const auto colon = token.find(':');
    const auto bar = token.find('|');
    if (colon == std::string_view::npos || bar == std::string_view::npos || bar < colon) {
        throw ParseError(line, "bad rule '" + std::string(token) + "'");
    }
    rule.feature = parse_feature_id(token.substr(0, colon));
    if (!is_categorical(rule.feature)) {
        throw ParseError(line, "level sets need a categorical feature");
    }
    rule.left_levels = parse_levels(rule.feature, token.substr(colon + 1, bar - colon - 1), line);
    rule.right_levels = parse_levels(rule.feature, token.substr(bar + 1), line);
    return rule;
}

} // namespace

std::string_view to_string(FeatureId id) noexcept {
    switch (id) {
    case FeatureId::gender:
        return "gender";
    case FeatureId::age:
        return "age";
    case FeatureId::year:
        return "year";
    case FeatureId::cohort:
        return "cohort";
    case FeatureId::cause:
        return "cause";
    }
    return "?";
}

FeatureId parse_feature_id(std::string_view text) {
    for (const auto id : {FeatureId::gender, FeatureId::age, FeatureId::year, FeatureId::cohort,
                          FeatureId::cause}) {
        if (text::iequals(text::trim(text), to_string(id))) {
            return id;
        }
    }
    throw std::invalid_argument("unknown feature '" + std::string(text) + "'");
}

int WorkingPoint::value(FeatureId id) const {
    switch (id) {
    case FeatureId::gender:
        return static_cast<int>(x.gender());
    case FeatureId::age:
        return x.age();
    case FeatureId::year:
        return x.year();
    case FeatureId::cohort:
        return x.cohort();
    case FeatureId::cause:
        if (cause == 0) {
            throw std::invalid_argument("working point carries no cause");
        }
        return static_cast<int>(cause);
    }
    throw std::invalid_argument("bad feature id");
}

SplitRule::Side SplitRule::side(int value) const noexcept {
    if (!is_categorical(feature)) {
        return static_cast<double>(value) <= threshold ? Side::left : Side::right;
    }
    if (std::binary_search(left_levels.begin(), left_levels.end(), value)) {
        return Side::left;
    }
    if (std::binary_search(right_levels.begin(), right_levels.end(), value)) {
        return Side::right;
    }
    return Side::unseen;
}

void TreeConfig::validate() const {
    if (!(cp >= 0.0) || !std::isfinite(cp)) {
        throw std::invalid_argument("cp must be >= 0");
    }
    if (min_bucket < 1) {
        throw std::invalid_argument("min_bucket must be >= 1");
    }
    if (max_depth < 1) {
        throw std::invalid_argument("max_depth must be >= 1");
    }
    if (features.empty()) {
        throw std::invalid_argument("at least one split feature is required");
    }
}

PoissonTree::PoissonTree(std::vector<TreeNode> nodes) : nodes_{std::move(nodes)} {
    if (nodes_.empty()) {
        throw std::invalid_argument("a tree needs a root node");
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const auto &node = nodes_[i];
        if (node.split && (node.left <= i || node.right <= i || node.left >= nodes_.size() ||
                           node.right >= nodes_.size())) {
            throw std::invalid_argument("tree child indices must follow their parent");
        }
    }
}

std::size_t PoissonTree::leaf_count() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode &n) { return n.is_leaf(); }));
}

double PoissonTree::total_leaf_deviance() const noexcept {
    double total = 0.0;
    for (const auto &n : nodes_) {
        if (n.is_leaf()) {
            total += n.deviance;
        }
    }
    return total;
}

TreeRoute PoissonTree::route(const ExtendedFeature &x, std::size_t cause) const {
    WorkingPoint probe{x, cause, 1.0, std::nullopt};
    TreeRoute out;
    std::size_t i = 0;
    while (nodes_[i].split) {
        const auto &node = nodes_[i];
        const auto &rule = *node.split;
        switch (rule.side(probe.value(rule.feature))) {
        case SplitRule::Side::left:
            i = node.left;
            break;
        case SplitRule::Side::right:
            i = node.right;
            break;
        case SplitRule::Side::unseen:
            out.unseen_level = true;
            i = nodes_[node.left].sum_volume >= nodes_[node.right].sum_volume ? node.left
                                                                               : node.right;
            break;
        }
    }
    out.leaf = i;
    return out;
}

std::vector<double> PoissonTree::split_gains() const {
    std::vector<double> gains;
    for (const auto &n : nodes_) {
        if (n.split) {
            gains.push_back(n.gain);
        }
    }
    std::sort(gains.begin(), gains.end(), std::greater<>());
    return gains;
}

double poisson_deviance(std::span<const WorkingPoint> points, double rate_factor) {
    if (!(rate_factor >= 0.0)) {
        throw std::invalid_argument("rate factor must be >= 0");
    }
    double total = 0.0;
    for (const auto &p : points) {
        if (!p.response) {
            continue;
        }
        const double d = static_cast<double>(*p.response);
        const double m = rate_factor * p.volume;
        if (d > 0.0 && m == 0.0) {
            return std::numeric_limits<double>::infinity();
        }
        total += detail::unit_deviance(d, m);
    }
    return 2.0 * total;
}

std::optional<SplitCandidate> best_split(std::span<const WorkingPoint> points, FeatureId feature,
                                         std::size_t min_bucket) {
    check_points(points);
    std::vector<std::size_t> all(points.size());
    for (std::size_t i = 0; i < all.size(); ++i) {
        all[i] = i;
    }
    return split_members(points, all, feature, std::max<std::size_t>(1, min_bucket));
}

PoissonTree grow_tree(std::span<const WorkingPoint> points, const TreeConfig &cfg) {
    cfg.validate();
    if (points.empty()) {
        throw std::invalid_argument("cannot grow a tree on empty working data");
    }
    check_points(points);
    return PoissonTree(Grower(points, cfg).grow());
}

double predict_mu(const PoissonTree &tree, const ExtendedFeature &x, std::size_t cause) {
    return tree.nodes()[tree.route(x, cause).leaf].mu;
}

std::string serialize_tree(const PoissonTree &tree) {
    std::string out = "# depth rule n missing D d mu dev gain\n";
    for (const auto &node : tree.nodes()) {
        out.append(2 * node.depth, ' ');
        out += std::to_string(node.depth);
        out += ' ';
        if (!node.split) {
            out += "leaf";
        } else if (is_categorical(node.split->feature)) {
            out += to_string(node.split->feature);
            out += ':';
            out += format_levels(node.split->feature, node.split->left_levels);
            out += '|';
            out += format_levels(node.split->feature, node.split->right_levels);
        } else {
            out += to_string(node.split->feature);
            out += "<=";
            out += text::format_double(node.split->threshold);
        }
        out += " n=" + std::to_string(node.n);
        out += " missing=" + std::to_string(node.n_missing);
        out += " D=" + text::format_double(node.sum_deaths);
        out += " d=" + text::format_double(node.sum_volume);
        out += " mu=" + text::format_double(node.mu);
        out += " dev=" + text::format_double(node.deviance);
        out += " gain=" + text::format_double(node.gain);
        out += '\n';
    }
    return out;
}

PoissonTree parse_tree(std::string_view input) {
    std::vector<TreeNode> nodes;
    std::vector<std::size_t> open; // split nodes still waiting for a child
    const auto all_lines = text::lines(input);
    for (std::size_t ln = 0; ln < all_lines.size(); ++ln) {
        const auto line_no = ln + 1;
        const auto line = text::trim(all_lines[ln]);
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const auto fields = text::split_ws(line);
        if (fields.size() != 9) {
            throw ParseError(line_no, "expected 9 fields, found " + std::to_string(fields.size()));
        }
        TreeNode node;
        const auto depth = text::parse_int(fields[0]);
        if (!depth || *depth < 0) {
            throw ParseError(line_no, "bad depth");
        }
        node.depth = static_cast<std::size_t>(*depth);
        if (fields[1] != "leaf") {
            node.split = parse_rule(fields[1], line_no);
        }
        const auto field = [&](std::size_t i, std::string_view key) {
            const auto f = fields[i];
            if (f.substr(0, key.size()) != key || f.size() <= key.size() ||
                f[key.size()] != '=') {
                throw ParseError(line_no, "expected field '" + std::string(key) + "='");
            }
            const auto v = text::parse_double(f.substr(key.size() + 1));
            if (!v) {
                throw ParseError(line_no, "bad number in '" + std::string(f) + "'");
            }
            return *v;
        };
        node.n = static_cast<std::size_t>(field(2, "n"));
        node.n_missing = static_cast<std::size_t>(field(3, "missing"));
        node.sum_deaths = field(4, "D");
        node.sum_volume = field(5, "d");
        node.mu = field(6, "mu");
        node.deviance = field(7, "dev");
        node.gain = field(8, "gain");

        const auto index = nodes.size();
        if (index == 0) {
            if (node.depth != 0) {
                throw ParseError(line_no, "root must have depth 0");
            }
        } else {
            if (open.empty() || nodes[open.back()].depth + 1 != node.depth) {
                throw ParseError(line_no, "node depth does not fit the pre-order layout");
            }
            auto &parent = nodes[open.back()];
            if (parent.left == 0) {
                parent.left = index;
            } else {
                parent.right = index;
                open.pop_back();
            }
        }
        const bool is_split = node.split.has_value();
        nodes.push_back(std::move(node));
        if (is_split) {
            open.push_back(index);
        }
    }
    if (nodes.empty()) {
        throw ParseError(all_lines.size(), "no tree nodes found");
    }
    if (!open.empty()) {
        throw ParseError(all_lines.size(), "tree ends before every split has two children");
    }
    return PoissonTree(std::move(nodes));
}

} // namespace mortboost
