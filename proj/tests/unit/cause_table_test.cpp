#include "mortboost/cause_table.hpp"
#include "mortboost/errors.hpp"

#include <gtest/gtest.h>

using namespace mortboost;

TEST(CauseRegistry, SwissDefault) {
    const auto r = CauseRegistry::swiss_default();
    ASSERT_EQ(r.size(), 12u);
    EXPECT_EQ(r.resolve("dementia"), 4u);
    EXPECT_EQ(r.resolve("DEMENTIA"), 4u);
    EXPECT_EQ(r.resolve("12"), 12u);
    EXPECT_FALSE(r.resolve("13"));
    EXPECT_FALSE(r.resolve("0"));
    EXPECT_FALSE(r.resolve("cancer"));
    EXPECT_THROW(CauseRegistry({"a", "A"}), std::invalid_argument);
}

TEST(CauseDeathTable, LayoutAndTotals) {
    const FeatureSpace s({Gender::female}, {1, 2}, {2000, 2000});
    const auto buckets = AgeBucketing::parse("0-4;5-9", {0, 9});
    const CauseDeathTable t(s, buckets, CauseRegistry::numbered(3),
                            {1, std::nullopt, 2, 4, 5, 6});
    EXPECT_EQ(t.count({Gender::female, 2, 2000}, 1), 4);
    EXPECT_EQ(t.cell_index(1, 3), 5u);
    EXPECT_EQ(t.present_totals(), (std::vector<std::int64_t>{3, 15}));
    EXPECT_TRUE(t.has_missing(0));
    EXPECT_FALSE(t.has_missing(1));
    EXPECT_THROW(t.count({Gender::female, 1, 2000}, 4), DomainError);
    EXPECT_THROW(CauseDeathTable(s, buckets, CauseRegistry::numbered(3), {1, 2}),
                 std::invalid_argument);
}

TEST(CauseDeathTable, CondensePropagatesMissing) {
    const FeatureSpace s({Gender::male}, {1, 3}, {2000, 2000});
    const auto fine = AgeBucketing::identity({0, 2});
    const CauseDeathTable t(s, fine, CauseRegistry::numbered(2),
                            {1, 2, 3, std::nullopt, 5, 6});
    const auto coarse = condense_causes(t, AgeBucketing::parse("0-1;2", {0, 2}));
    EXPECT_EQ(coarse.count({Gender::male, 1, 2000}, 1), 4);
    EXPECT_FALSE(coarse.count({Gender::male, 1, 2000}, 2).has_value());
    EXPECT_EQ(coarse.count({Gender::male, 2, 2000}, 2), 6);
}

TEST(ThetaSurface, RangeChecked) {
    const FeatureSpace s({Gender::male}, {1, 1}, {2000, 2000});
    EXPECT_THROW(ThetaSurface(s, 2, {0.5, 1.5}), std::exception);
    const ThetaSurface ok(s, 2, {0.25, 0.75});
    EXPECT_DOUBLE_EQ(ok.theta({Gender::male, 1, 2000}, 2), 0.75);
}
