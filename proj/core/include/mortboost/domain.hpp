#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mortboost {

enum class Gender : std::uint8_t { female = 0, male = 1 };

std::string_view to_string(Gender gender) noexcept;

/// Accepts "female"/"male" and the one-letter forms, case-insensitively.
Gender parse_gender(std::string_view text);

/// Closed integer interval [first, last].
struct IntRange {
    int first = 0;
    int last = -1;

    constexpr std::size_t size() const noexcept {
        return last < first ? 0 : static_cast<std::size_t>(last - first) + 1;
    }
    constexpr bool contains(int value) const noexcept { return value >= first && value <= last; }
    constexpr bool empty() const noexcept { return last < first; }

    friend constexpr bool operator==(const IntRange &, const IntRange &) = default;
};

/// Parses "A:B" (or a single "A").
IntRange parse_int_range(std::string_view text);

struct Feature {
    Gender gender = Gender::female;
    int age = 0;
    int year = 0;

    friend constexpr bool operator==(const Feature &, const Feature &) = default;
};

/// Gender x age x year grid. Dense storage order is gender-major, then age,
/// with year varying fastest.
class FeatureSpace {
  public:
    FeatureSpace(std::vector<Gender> genders, IntRange ages, IntRange years);

    const std::vector<Gender> &genders() const noexcept { return genders_; }
    IntRange ages() const noexcept { return ages_; }
    IntRange years() const noexcept { return years_; }

    /// Cohorts c = t - a reachable on the grid.
    IntRange cohorts() const noexcept {
        return {years_.first - ages_.last, years_.last - ages_.first};
    }

    std::size_t size() const noexcept {
        return genders_.size() * ages_.size() * years_.size();
    }

    bool has_gender(Gender gender) const noexcept;
    bool contains(const Feature &x) const noexcept;

    std::size_t gender_index(Gender gender) const;
    std::size_t index(const Feature &x) const;
    Feature feature_at(std::size_t index) const;

    friend bool operator==(const FeatureSpace &, const FeatureSpace &) = default;

  private:
    std::vector<Gender> genders_;
    IntRange ages_;
    IntRange years_;
};

class ExtendedFeature {
  public:
    constexpr ExtendedFeature() = default;
    constexpr ExtendedFeature(Gender gender, int age, int year) noexcept
        : gender_{gender}, age_{age}, year_{year} {}

    constexpr Gender gender() const noexcept { return gender_; }
    constexpr int age() const noexcept { return age_; }
    constexpr int year() const noexcept { return year_; }
    constexpr int cohort() const noexcept { return year_ - age_; }

    constexpr Feature base() const noexcept { return {gender_, age_, year_}; }

    friend constexpr bool operator==(const ExtendedFeature &, const ExtendedFeature &) = default;

  private:
    Gender gender_ = Gender::female;
    int age_ = 0;
    int year_ = 0;
};

/// Throws DomainError when x is not in space.
ExtendedFeature extend_feature(const Feature &x, const FeatureSpace &space);

/// Exposures E_x (person-years) and integer death counts D_x over a space.
class MortalityTable {
  public:
    MortalityTable(FeatureSpace space, std::vector<double> exposure,
                   std::vector<std::int64_t> deaths);

    const FeatureSpace &space() const noexcept { return space_; }
    std::span<const double> exposures() const noexcept { return exposure_; }
    std::span<const std::int64_t> deaths() const noexcept { return deaths_; }

    double exposure(const Feature &x) const { return exposure_[space_.index(x)]; }
    std::int64_t deaths(const Feature &x) const { return deaths_[space_.index(x)]; }

    double total_exposure() const noexcept;
    std::int64_t total_deaths() const noexcept;

  private:
    FeatureSpace space_;
    std::vector<double> exposure_;
    std::vector<std::int64_t> deaths_;
};

/// Mortality rates q(x) in [0, 1] realized on a dense grid.
class RateSurface {
  public:
    RateSurface(FeatureSpace space, std::vector<double> rates);

    const FeatureSpace &space() const noexcept { return space_; }
    std::span<const double> rates() const noexcept { return rates_; }
    double rate(std::size_t index) const noexcept { return rates_[index]; }
    double rate(const Feature &x) const { return rates_[space_.index(x)]; }

  private:
    FeatureSpace space_;
    std::vector<double> rates_;
};

/// CSV with header gender,age,year,q, one row per cell in space order.
std::string write_rates_csv(const RateSurface &rates);
/// Inverse of write_rates_csv; rows may come in any order but must cover a
/// full grid exactly once. Throws ParseError or DataError.
RateSurface read_rates_csv(std::string_view text);

struct CellWarning {
    Feature feature;
    std::string message;
};

struct CrudeRates {
    RateSurface rates;
    std::vector<CellWarning> warnings;
};

/// D_x / E_x per cell. Zero-exposure cells get rate 0 and rates above 1 are
/// clamped; both cases are reported in the warning list.
CrudeRates crude_rates(const MortalityTable &table);

/// Partition of an age range into contiguous, disjoint, non-empty buckets.
/// Buckets are addressed by 1-based index in condensed feature spaces.
class AgeBucketing {
  public:
    AgeBucketing(std::vector<IntRange> buckets, IntRange ages,
                 std::vector<std::string> labels = {});

    /// "0;1-14;15-44;45-64;65-84;85+" where "a+" extends to ages.last.
    static AgeBucketing parse(std::string_view spec, IntRange ages);
    static AgeBucketing identity(IntRange ages);

    static constexpr std::string_view default_spec = "0;1-14;15-44;45-64;65-84;85+";

    std::size_t size() const noexcept { return buckets_.size(); }
    IntRange ages() const noexcept { return ages_; }
    /// 1-based bucket index.
    IntRange bucket(std::size_t index) const;
    const std::string &label(std::size_t index) const;
    /// 1-based index of the bucket containing age.
    std::size_t bucket_of(int age) const;
    std::string to_spec() const;

    friend bool operator==(const AgeBucketing &, const AgeBucketing &) = default;

  private:
    std::vector<IntRange> buckets_;
    IntRange ages_;
    std::vector<std::string> labels_;
};

/// Space over (gender, bucket index 1..I, year).
FeatureSpace condensed_space(const FeatureSpace &space, const AgeBucketing &buckets);

/// Sums exposures and deaths over each age bucket.
MortalityTable condense_table(const MortalityTable &table, const AgeBucketing &buckets);

struct CondensedRates {
    RateSurface rates;
    std::vector<double> exposure;
};

/// Exposure-weighted bucket rates q~ = (1/E~) sum E_x q(x), E~ = sum E_x, so
/// that q~ E~ reproduces the expected deaths of the bucket.
CondensedRates aggregate_rates(const RateSurface &q, const MortalityTable &table,
                               const AgeBucketing &buckets);

} // namespace mortboost
