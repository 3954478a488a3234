#pragma once

#include "mortboost/lc_model.hpp"

#include <optional>

namespace mortboost {

/// Renshaw-Haberman coefficients for one gender:
/// log q(a, t) = beta0[a] + beta1[a] kappa[t] + beta2[a] gamma[t - a].
/// Constraints: sum beta1 = sum beta2 = 1, sum kappa = 0 and
/// sum over grid cells (a, t) of gamma[t - a] = 0.
struct RHParams {
    Gender gender = Gender::female;
    IntRange ages;
    IntRange years;
    std::vector<double> beta0;
    std::vector<double> beta1;
    std::vector<double> kappa;
    std::vector<double> beta2;
    /// Indexed by cohort - cohorts().first.
    std::vector<double> gamma;
    double rate_floor = 1e-12;

    IntRange cohorts() const noexcept { return {years.first - ages.last, years.last - ages.first}; }
    double log_rate(int age, int year) const;
};

struct RHFit {
    RHParams params;
    FitReport report;
};

/// Embeds LC params as an RH model with gamma = 0 and uniform beta2.
RHParams nest_lc(const LCParams &lc);

/// Alternating Newton fit over beta0, kappa, beta1, gamma, beta2. Starts from
/// `warm_start` when given, otherwise from an internal LC fit.
RHFit fit_rh(const MortalityTable &table, Gender gender,
             const FitConfig &cfg = FitConfig::rh_defaults(),
             const std::optional<LCParams> &warm_start = std::nullopt);

double predict_rh(const RHParams &params, const Feature &x);
double rh_deviance(const RHParams &params, const MortalityTable &table);
RateSurface fitted_rates(std::span<const RHParams> params, const FeatureSpace &space);

/// As the LC export, plus beta2 (index = age) and gamma (index = cohort).
std::string write_params_csv(std::span<const RHParams> params);
std::vector<RHParams> read_rh_params_csv(std::string_view text);

/// Largest absolute violation of the identifiability constraints.
double constraint_violation(const RHParams &params);

} // namespace mortboost
