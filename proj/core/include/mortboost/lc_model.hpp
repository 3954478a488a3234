#pragma once

#include "mortboost/domain.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mortboost {

struct FitConfig {
    std::size_t max_iterations = 10000;
    /// Stop when |dev_k - dev_{k-1}| <= deviance_tol * max(1, dev_k).
    double deviance_tol = 1e-10;
    /// Lower bound on fitted rates; keeps log-rates finite for zero-death rows.
    double rate_floor = 1e-12;

    static FitConfig lc_defaults() { return {}; }
    static FitConfig rh_defaults() { return {50000, 1e-10, 1e-12}; }

    /// Throws std::invalid_argument when a field is out of range.
    void validate() const;
};

struct FitReport {
    bool converged = false;
    std::size_t iterations = 0;
    /// Poisson deviance after each accepted sweep, starting with the initial value.
    std::vector<double> deviance_trace;
    /// Ages without any deaths; their level is held at the rate floor.
    std::vector<int> floored_ages;
    /// Period index collapsed to ~0, leaving the age sensitivity unidentified.
    bool near_zero_kappa = false;
    /// Cohorts covered by a single cell with positive exposure (RH only).
    std::vector<int> weak_cohorts;

    double deviance() const { return deviance_trace.empty() ? 0.0 : deviance_trace.back(); }
};

/// Lee-Carter coefficients for one gender:
/// log q(a, t) = beta0[a] + beta1[a] * kappa[t], sum beta1 = 1, sum kappa = 0.
struct LCParams {
    Gender gender = Gender::female;
    IntRange ages;
    IntRange years;
    std::vector<double> beta0;
    std::vector<double> beta1;
    std::vector<double> kappa;
    double rate_floor = 1e-12;

    double log_rate(int age, int year) const;
};

struct LCFit {
    LCParams params;
    FitReport report;
};

/// Poisson maximum likelihood fit (log link, exposure offset) by alternating
/// Newton updates of beta0, kappa and beta1 with step halving.
LCFit fit_lc(const MortalityTable &table, Gender gender,
             const FitConfig &cfg = FitConfig::lc_defaults());

/// exp(log_rate) clamped to [rate_floor, 1]. Throws DomainError outside the
/// fitted ranges.
double predict_lc(const LCParams &params, const Feature &x);

/// Poisson deviance of the unclamped model mean E * exp(log_rate) against the
/// table's deaths for params.gender.
double lc_deviance(const LCParams &params, const MortalityTable &table);

/// Fitted surface over `space`; every gender of the space needs params.
RateSurface fitted_rates(std::span<const LCParams> params, const FeatureSpace &space);

/// gender,kind,index,value with kinds beta0/beta1 (index = age) and kappa
/// (index = year).
std::string write_params_csv(std::span<const LCParams> params);
std::vector<LCParams> read_lc_params_csv(std::string_view text);

/// Largest absolute violation of sum beta1 = 1 and sum kappa = 0.
double constraint_violation(const LCParams &params);

} // namespace mortboost
