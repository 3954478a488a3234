#include "generators.hpp"
#include "oracles.hpp"
#include "mortboost/errors.hpp"
#include "mortboost/parallel.hpp"
#include "mortboost/poisson_tree.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <map>
#include <random>

using namespace mortboost;

namespace {

WorkingPoint point(int age, int year, double volume, std::optional<std::int64_t> deaths,
                   std::size_t cause = 0, Gender g = Gender::female) {
    WorkingPoint p;
    p.x = ExtendedFeature(g, age, year);
    p.cause = cause;
    p.volume = volume;
    p.response = deaths;
    return p;
}

// Leaf of a point found by walking the rules directly.
std::size_t leaf_of(const PoissonTree &tree, const WorkingPoint &p) {
    std::size_t i = 0;
    while (tree.nodes()[i].split) {
        const auto &n = tree.nodes()[i];
        const auto side = n.split->side(p.value(n.split->feature));
        if (side == SplitRule::Side::unseen) {
            return std::numeric_limits<std::size_t>::max();
        }
        i = side == SplitRule::Side::left ? n.left : n.right;
    }
    return i;
}

std::vector<WorkingPoint> structured_points(std::uint64_t seed, std::size_t n) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> age(0, 40);
    std::uniform_int_distribution<int> year(2000, 2019);
    std::uniform_real_distribution<double> vol(5.0, 50.0);
    std::vector<WorkingPoint> out;
    for (std::size_t i = 0; i < n; ++i) {
        const int a = age(rng);
        const int t = year(rng);
        const double v = vol(rng);
        const double factor = (a > 20 ? 1.4 : 0.8) * (t >= 2010 ? 0.9 : 1.1);
        std::poisson_distribution<std::int64_t> pois(v * factor);
        out.push_back(point(a, t, v, pois(rng), 0, i % 2 ? Gender::male : Gender::female));
    }
    return out;
}

} // namespace

TEST(PoissonDeviance, Examples) {
    const std::vector<WorkingPoint> one{point(0, 0, 1.0, 2)};
    EXPECT_NEAR(poisson_deviance(one, 1.0), 2.0 * (2.0 * std::log(2.0) - 1.0), 1e-15);
    EXPECT_NEAR(poisson_deviance(one, 1.0), 0.77259, 1e-5);
    const std::vector<WorkingPoint> exact{point(0, 0, 2.0, 3), point(1, 0, 4.0, 6)};
    EXPECT_NEAR(poisson_deviance(exact, 1.5), 0.0, 1e-14);
    EXPECT_EQ(poisson_deviance(one, 0.0), std::numeric_limits<double>::infinity());
    const std::vector<WorkingPoint> zero{point(0, 0, 1.0, 0), point(1, 0, 2.0, std::nullopt)};
    EXPECT_EQ(poisson_deviance(zero, 0.0), 0.0);
    EXPECT_NEAR(poisson_deviance(zero, 1.0), 2.0, 1e-15);
    // Large counts close to their mean: 2 (D - m)^2 / (2 m) to leading order.
    const std::vector<WorkingPoint> big{point(0, 0, 1e8, 100000001)};
    EXPECT_NEAR(poisson_deviance(big, 1.0), 1e-8, 1e-16);
    EXPECT_GE(poisson_deviance(big, 1.0), 0.0);
}

TEST(PoissonDeviance, NodeMeanMinimizesOverGrid) {
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 50; ++rep) {
        const auto pts = gen::random_points(rng, 6, 3, 1, 0.0);
        double deaths = 0.0;
        double volume = 0.0;
        for (const auto &p : pts) {
            deaths += static_cast<double>(*p.response);
            volume += p.volume;
        }
        const double at_mle = poisson_deviance(pts, deaths / volume);
        for (int i = 1; i <= 1000; ++i) {
            EXPECT_LE(at_mle, poisson_deviance(pts, 0.01 * i) + 1e-12);
        }
    }
}

TEST(BestSplit, TwoPointExample) {
    const std::vector<WorkingPoint> pts{point(1, 0, 1.0, 0), point(2, 0, 1.0, 2)};
    const auto s = best_split(pts, FeatureId::age);
    ASSERT_TRUE(s);
    EXPECT_EQ(s->rule.threshold, 1.5);
    EXPECT_NEAR(s->reduction, 2.0 * (2.0 * std::log(2.0) - 1.0) + 2.0, 1e-12);
    // Both children saturate, so the reduction is the parent deviance 4 ln 2.
    EXPECT_NEAR(s->reduction, 4.0 * std::log(2.0), 1e-12);
}

TEST(BestSplit, HomogeneousRateHasNoSplit) {
    const std::vector<WorkingPoint> pts{point(1, 0, 1.0, 2), point(2, 0, 2.0, 4),
                                        point(3, 0, 0.5, 1), point(4, 0, 3.0, 6)};
    EXPECT_FALSE(best_split(pts, FeatureId::age));
    EXPECT_FALSE(best_split(pts, FeatureId::year));
}

TEST(BestSplit, RespectsMinBucket) {
    const std::vector<WorkingPoint> pts{point(1, 0, 1.0, 0), point(2, 0, 1.0, 2),
                                        point(3, 0, 1.0, 2)};
    const auto s = best_split(pts, FeatureId::age, 2);
    EXPECT_FALSE(s);
    const auto s1 = best_split(pts, FeatureId::age, 1);
    ASSERT_TRUE(s1);
    EXPECT_EQ(s1->rule.threshold, 1.5);
}

TEST(BestSplit, TieGoesToSmallerThreshold) {
    // Symmetric data: cutting after the first or before the last point is equally good.
    const std::vector<WorkingPoint> pts{point(1, 0, 1.0, 4), point(2, 0, 1.0, 1),
                                        point(3, 0, 1.0, 4)};
    const auto s = best_split(pts, FeatureId::age);
    ASSERT_TRUE(s);
    EXPECT_EQ(s->rule.threshold, 1.5);
}

TEST(BestSplit, MatchesExhaustiveSearch) {
    std::mt19937_64 rng(2024);
    const FeatureId features[] = {FeatureId::age, FeatureId::year, FeatureId::cohort,
                                  FeatureId::cause};
    for (int rep = 0; rep < 300; ++rep) {
        const auto pts = gen::random_points(rng, 8, 4, 4, rep % 3 == 0 ? 0.2 : 0.0);
        const auto ref_pts = oracle::from_working(pts);
        for (const auto f : features) {
            const auto got = best_split(pts, f);
            const auto want = oracle::brute_best_split(ref_pts, static_cast<int>(f), 1);
            ASSERT_EQ(got.has_value(), want.has_value()) << "rep " << rep;
            if (!got) {
                continue;
            }
            EXPECT_NEAR(got->reduction, want->reduction, 1e-9) << "rep " << rep;
            if (is_categorical(f)) {
                EXPECT_EQ(got->rule.left_levels, want->left_levels) << "rep " << rep;
            } else {
                EXPECT_EQ(got->rule.threshold, want->threshold) << "rep " << rep;
            }
        }
    }
}

TEST(BestSplit, GenderIsCategorical) {
    const std::vector<WorkingPoint> pts{point(1, 0, 1.0, 1, 0, Gender::male),
                                        point(1, 0, 1.0, 3, 0, Gender::female),
                                        point(2, 0, 1.0, 3, 0, Gender::female)};
    const auto s = best_split(pts, FeatureId::gender);
    ASSERT_TRUE(s);
    EXPECT_EQ(s->rule.left_levels, (std::vector<int>{0}));
    EXPECT_EQ(s->rule.right_levels, (std::vector<int>{1}));
}

TEST(GrowTree, HomogeneousDataGivesRoot) {
    std::vector<WorkingPoint> pts;
    for (int a = 0; a < 30; ++a) {
        pts.push_back(point(a, 2000 + a % 5, 10.0, 10));
    }
    const auto tree = grow_tree(pts);
    EXPECT_EQ(tree.nodes().size(), 1u);
    EXPECT_DOUBLE_EQ(predict_mu(tree, {Gender::male, 99, 1800}), 1.0);
}

TEST(GrowTree, SaturatesWithoutPenalty) {
    std::vector<WorkingPoint> pts;
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> d(0, 9);
    for (int a = 0; a < 12; ++a) {
        pts.push_back(point(a, 2000, 1.0 + 0.1 * a, d(rng)));
    }
    TreeConfig cfg;
    cfg.cp = 0.0;
    cfg.min_bucket = 1;
    const auto tree = grow_tree(pts, cfg);
    EXPECT_NEAR(tree.total_leaf_deviance(), 0.0, 1e-9);
}

TEST(GrowTree, MatchesRecursiveOracle) {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<std::size_t> size(2, 8);
    for (int rep = 0; rep < 100; ++rep) {
        const auto pts = gen::random_points(rng, size(rng), 4, 1, 0.0);
        TreeConfig cfg;
        cfg.cp = rep % 2 ? 0.1 : 0.0;
        cfg.min_bucket = 1;
        cfg.features = {FeatureId::age, FeatureId::year};
        double total_volume = 0.0;
        for (const auto &p : pts) {
            total_volume += p.volume;
        }
        ASSERT_GT(total_volume, 0.0);
        const auto tree = grow_tree(pts, cfg);
        const auto ref = oracle::brute_tree(oracle::from_working(pts), {1, 2}, cfg.cp, 1, 30);
        EXPECT_EQ(oracle::compare_trees(tree, ref, 1e-9), "") << "rep " << rep;
    }
}

TEST(GrowTree, MatchesRecursiveOracleWithCausesAndMissing) {
    std::mt19937_64 rng(78);
    for (int rep = 0; rep < 100; ++rep) {
        auto pts = gen::random_points(rng, 10, 3, 3, 0.15);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (i % 3 == 0) {
                pts[i].x = ExtendedFeature(Gender::male, pts[i].x.age(), pts[i].x.year());
            }
        }
        bool any = false;
        for (const auto &p : pts) {
            any = any || p.response.has_value();
        }
        if (!any) {
            continue;
        }
        // The rate-ordered cause scan is exhaustive only when every cut is admissible.
        TreeConfig cfg;
        cfg.cp = rep % 2 ? 0.05 : 0.0;
        cfg.min_bucket = 1;
        cfg.max_depth = 4;
        cfg.features = {FeatureId::gender, FeatureId::age, FeatureId::cohort, FeatureId::cause};
        const auto tree = grow_tree(pts, cfg);
        const auto ref = oracle::brute_tree(oracle::from_working(pts), {0, 1, 3, 4}, cfg.cp, 1, 4);
        EXPECT_EQ(oracle::compare_trees(tree, ref, 1e-9), "") << "rep " << rep;
    }
}

TEST(GrowTree, MatchesRecursiveOracleWithMinBucket) {
    std::mt19937_64 rng(79);
    for (int rep = 0; rep < 100; ++rep) {
        auto pts = gen::random_points(rng, 12, 5, 1, 0.1);
        for (std::size_t i = 0; i < pts.size(); i += 2) {
            pts[i].x = ExtendedFeature(Gender::male, pts[i].x.age(), pts[i].x.year());
        }
        bool any = false;
        for (const auto &p : pts) {
            any = any || p.response.has_value();
        }
        if (!any) {
            continue;
        }
        TreeConfig cfg;
        cfg.cp = rep % 2 ? 0.05 : 0.0;
        cfg.min_bucket = 2 + static_cast<std::size_t>(rep % 2);
        cfg.features = {FeatureId::gender, FeatureId::age, FeatureId::year, FeatureId::cohort};
        const auto tree = grow_tree(pts, cfg);
        const auto ref = oracle::brute_tree(oracle::from_working(pts), {0, 1, 2, 3}, cfg.cp,
                                            cfg.min_bucket, 30);
        EXPECT_EQ(oracle::compare_trees(tree, ref, 1e-9), "") << "rep " << rep;
    }
}

TEST(GrowTree, Errors) {
    EXPECT_THROW(grow_tree(std::vector<WorkingPoint>{}), std::invalid_argument);
    const std::vector<WorkingPoint> none{point(0, 0, 0.0, 0)};
    EXPECT_THROW(grow_tree(none), std::invalid_argument);
    TreeConfig bad;
    bad.cp = -1.0;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad = TreeConfig{};
    bad.min_bucket = 0;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad = TreeConfig{};
    bad.max_depth = 0;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad = TreeConfig{};
    bad.features.clear();
    EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(GrowTree, LeafAndGlobalCalibration) {
    const auto pts = structured_points(3, 3000);
    const auto tree = grow_tree(pts);
    ASSERT_GT(tree.leaf_count(), 1u);
    std::map<std::size_t, std::pair<double, double>> sums;
    double fitted = 0.0;
    double observed = 0.0;
    for (const auto &p : pts) {
        const auto leaf = leaf_of(tree, p);
        sums[leaf].first += static_cast<double>(*p.response);
        sums[leaf].second += p.volume;
        fitted += predict_mu(tree, p.x, p.cause) * p.volume;
        observed += static_cast<double>(*p.response);
        EXPECT_EQ(tree.route(p.x, p.cause).leaf, leaf);
    }
    for (const auto &[leaf, s] : sums) {
        EXPECT_TRUE(tree.nodes()[leaf].is_leaf());
        EXPECT_NEAR(tree.nodes()[leaf].mu, s.first / s.second, 1e-12 * (1 + s.first / s.second));
    }
    EXPECT_NEAR(fitted / observed, 1.0, 1e-12);
}

TEST(GrowTree, DevianceMonotoneInCp) {
    const auto pts = structured_points(4, 2000);
    double previous = std::numeric_limits<double>::infinity();
    for (const double cp : {0.1, 0.01, 0.001}) {
        TreeConfig cfg;
        cfg.cp = cp;
        const auto dev = grow_tree(pts, cfg).total_leaf_deviance();
        EXPECT_LE(dev, previous + 1e-9);
        previous = dev;
    }
}

TEST(GrowTree, DeterministicAcrossThreadCounts) {
    // Large enough for the parallel feature search to engage.
    const auto pts = structured_points(5, 12000);
    TreeConfig cfg;
    cfg.cp = 1e-4;
    std::optional<PoissonTree> one;
    {
        ScopedThreadCount threads(1);
        one = grow_tree(pts, cfg);
    }
    ScopedThreadCount threads(4);
    EXPECT_TRUE(grow_tree(pts, cfg) == *one);
    EXPECT_TRUE(grow_tree(pts, cfg) == *one);
}

TEST(GrowTree, OffsetScaling) {
    auto pts = structured_points(6, 1500);
    const auto base = grow_tree(pts);
    for (auto &p : pts) {
        p.volume *= 4.0;
    }
    const auto scaled = grow_tree(pts);
    ASSERT_EQ(base.nodes().size(), scaled.nodes().size());
    for (std::size_t i = 0; i < base.nodes().size(); ++i) {
        const auto &a = base.nodes()[i];
        const auto &b = scaled.nodes()[i];
        EXPECT_EQ(a.split, b.split);
        EXPECT_NEAR(b.mu, a.mu / 4.0, 1e-12 * a.mu);
    }
}

TEST(Predict, RoutingExamples) {
    std::vector<TreeNode> nodes(3);
    nodes[0].split = SplitRule{FeatureId::year, 1917.5, {}, {}};
    nodes[0].left = 1;
    nodes[0].right = 2;
    nodes[1].depth = 1;
    nodes[1].mu = 0.9;
    nodes[2].depth = 1;
    nodes[2].mu = 1.4;
    const PoissonTree tree(nodes);
    EXPECT_EQ(predict_mu(tree, {Gender::female, 30, 1918}), 1.4);
    EXPECT_EQ(predict_mu(tree, {Gender::female, 30, 1917}), 0.9);

    TreeNode root;
    root.sum_deaths = 50;
    root.sum_volume = 50;
    root.mu = 1.0;
    EXPECT_EQ(predict_mu(PoissonTree({root}), {Gender::male, 1, 1}), 1.0);
}

TEST(Predict, UnseenLevelFollowsHeavierChild) {
    std::vector<WorkingPoint> pts;
    for (int i = 0; i < 20; ++i) {
        pts.push_back(point(i, 0, 10.0, 5, 1));
        pts.push_back(point(i, 0, 30.0, 60, 2));
        pts.push_back(point(i, 0, 10.0, std::nullopt, 3));
    }
    TreeConfig cfg;
    cfg.features = {FeatureId::cause};
    const auto tree = grow_tree(pts, cfg);
    ASSERT_EQ(tree.nodes().size(), 3u);
    const auto r = tree.route({Gender::female, 0, 0}, 3);
    EXPECT_TRUE(r.unseen_level);
    // Cause 2 carries the larger expected volume.
    EXPECT_EQ(r.leaf, tree.route({Gender::female, 0, 0}, 2).leaf);
    EXPECT_FALSE(tree.route({Gender::female, 0, 0}, 1).unseen_level);
    EXPECT_EQ(tree.root().n_missing, 20u);
}

TEST(TreeText, RoundTrip) {
    auto pts = structured_points(7, 800);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        pts[i].cause = 1 + i % 4;
        if (pts[i].cause == 4) {
            pts[i].response = static_cast<std::int64_t>(3 * *pts[i].response);
        }
    }
    TreeConfig cfg;
    cfg.features = {FeatureId::gender, FeatureId::age, FeatureId::year, FeatureId::cause};
    const auto tree = grow_tree(pts, cfg);
    const auto text = serialize_tree(tree);
    const auto back = parse_tree(text);
    EXPECT_TRUE(back == tree);
    EXPECT_EQ(serialize_tree(back), text);
    for (const auto &p : pts) {
        EXPECT_EQ(predict_mu(back, p.x, p.cause), predict_mu(tree, p.x, p.cause));
    }
    EXPECT_THROW(parse_tree("0 age<=x n=1\n"), ParseError);
    EXPECT_THROW(parse_tree(""), ParseError);
}

TEST(TreeGains, SortedDescending) {
    const auto tree = grow_tree(structured_points(8, 2000));
    const auto gains = tree.split_gains();
    EXPECT_EQ(gains.size(), tree.split_count());
    for (std::size_t i = 1; i < gains.size(); ++i) {
        EXPECT_GE(gains[i - 1], gains[i]);
    }
}

TEST(FeatureIds, Parse) {
    EXPECT_EQ(parse_feature_id("cohort"), FeatureId::cohort);
    EXPECT_EQ(to_string(FeatureId::cause), "cause");
    EXPECT_THROW(parse_feature_id("sex"), std::invalid_argument);
}
