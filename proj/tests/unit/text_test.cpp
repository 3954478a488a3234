#include "mortboost/text.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

namespace text = mortboost::text;

TEST(Text, SplitKeepsEmptyFields) {
    const auto f = text::split("female,3,1992,4,", ',');
    ASSERT_EQ(f.size(), 5u);
    EXPECT_EQ(f[0], "female");
    EXPECT_EQ(f[4], "");
}

TEST(Text, SplitWhitespaceCollapsesRuns) {
    const auto f = text::split_ws("  1876 \t 0   8954.23  9311.77  18266.00 ");
    ASSERT_EQ(f.size(), 5u);
    EXPECT_EQ(f[2], "8954.23");
}

TEST(Text, LinesAcceptCrlf) {
    const auto l = text::lines("a\r\nb\nc");
    ASSERT_EQ(l.size(), 3u);
    EXPECT_EQ(l[0], "a");
    EXPECT_EQ(l[2], "c");
}

TEST(Text, ParseNumbers) {
    EXPECT_EQ(text::parse_int("+42"), 42);
    EXPECT_EQ(text::parse_int("-7"), -7);
    EXPECT_FALSE(text::parse_int("4x"));
    EXPECT_FALSE(text::parse_int(""));
    EXPECT_DOUBLE_EQ(*text::parse_double("1e-3"), 1e-3);
    EXPECT_FALSE(text::parse_double("abc"));
}

TEST(Text, FormatDoubleRoundTrips) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> exponent(-300.0, 300.0);
    for (int i = 0; i < 2000; ++i) {
        const double v = std::pow(10.0, exponent(rng)) * ((i % 2) ? -1.0 : 1.0);
        EXPECT_EQ(*text::parse_double(text::format_double(v)), v);
    }
    EXPECT_EQ(text::format_double(0.1), "0.1");
    EXPECT_EQ(text::format_double(2.0), "2");
}

TEST(Text, CaseInsensitiveCompare) {
    EXPECT_TRUE(text::iequals("Malignant Tumors", "malignant tumors"));
    EXPECT_FALSE(text::iequals("male", "female"));
}
