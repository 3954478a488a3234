#pragma once

#include "mortboost/cause_table.hpp"
#include "mortboost/domain.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace mortboost {

/// Philox4x32-10 block function (Salmon et al. counter-based generator).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

/// Independent uniform stream per (seed, cell, cause); the draws of one cell
/// never depend on how many other cells were sampled or in which order.
class CounterStream {
  public:
    CounterStream(std::uint64_t seed, std::uint64_t cell, std::uint32_t cause) noexcept;

    std::uint32_t next_u32() noexcept;
    /// Uniform on the open interval (0, 1) with 53 random bits.
    double uniform() noexcept;

  private:
    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> counter_;
    std::array<std::uint32_t, 4> block_{};
    unsigned used_ = 4;
};

/// Inversion below mean 10, Hoermann's transformed rejection (PTRS) above.
std::int64_t sample_poisson(double mean, CounterStream &stream);

struct SimSpec {
    RateSurface q;
    std::vector<double> exposure;
    std::uint64_t seed = 0;
    /// Cause probabilities on condensed_space(q.space(), *buckets).
    std::optional<ThetaSurface> theta;
    std::optional<AgeBucketing> buckets;
    std::optional<CauseRegistry> causes;
    /// (1-based cause, years) whose counts are reported as missing.
    std::vector<std::pair<std::size_t, IntRange>> missing_causes;

    /// Throws std::invalid_argument on shape or range violations.
    void validate() const;
};

/// D_x ~ Pois(q E) independently per cell.
MortalityTable sample_deaths(const SimSpec &spec);

struct CauseSample {
    /// Cause counts summed to the age buckets.
    CauseDeathTable causes;
    /// Single-age cause sum.
    MortalityTable all_cause;
};

/// D_{x,k} ~ Pois(theta(k|bucket(x)) q E) per single-age cell and cause.
CauseSample sample_cause_deaths(const SimSpec &spec);

/// Parametric scenario read from "key = value" lines ('#' starts a comment):
///   seed, genders, ages A:B, years T0:T1, exposure,
///   log_q_level, log_q_age_slope, log_q_trend, male_offset,
///   shock_years A:B, shock_factor,
///   causes (count) or cause_weights w1,w2,..., cause_shift_year,
///   cause_weights_after, buckets, missing_cause "k@A:B".
/// log q = level + slope (age - first age) + trend (year - first year)
///         [+ male_offset], times shock_factor in shock years, capped at 1.
struct SimConfig {
    std::uint64_t seed = 1;
    std::vector<Gender> genders{Gender::female, Gender::male};
    IntRange ages{0, 19};
    IntRange years{1990, 2009};
    double exposure = 1e6;
    double log_q_level = -7.0;
    double log_q_age_slope = 0.08;
    double log_q_trend = -0.01;
    double male_offset = 0.2;
    std::optional<IntRange> shock_years;
    double shock_factor = 1.0;
    std::vector<double> cause_weights;
    std::optional<int> cause_shift_year;
    std::vector<double> cause_weights_after;
    std::string buckets;
    std::vector<std::pair<std::size_t, IntRange>> missing_causes;
};

SimConfig parse_sim_config(std::string_view text);
SimSpec build_sim_spec(const SimConfig &cfg);

} // namespace mortboost
