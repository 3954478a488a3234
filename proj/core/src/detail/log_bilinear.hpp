#pragma once

// Shared Poisson fitting engine for the Lee-Carter and Renshaw-Haberman
// surfaces. LC is the special case without the cohort blocks.

#include "mortboost/domain.hpp"
#include "mortboost/lc_model.hpp"

#include <functional>
#include <vector>

namespace mortboost::detail {

/// One gender of a mortality table, age-major and year-minor.
struct Slice {
    IntRange ages;
    IntRange years;
    std::vector<double> exposure;
    std::vector<double> deaths;

    std::size_t n_ages() const noexcept { return ages.size(); }
    std::size_t n_years() const noexcept { return years.size(); }
    IntRange cohorts() const noexcept { return {years.first - ages.last, years.last - ages.first}; }
    std::size_t cohort_index(std::size_t a, std::size_t t) const noexcept {
        return (t + ages.size() - 1) - a;
    }
};

Slice slice_of(const MortalityTable &table, Gender gender);

struct BilinearState {
    std::vector<double> beta0;
    std::vector<double> beta1;
    std::vector<double> kappa;
    std::vector<double> beta2; // empty without cohort term
    std::vector<double> gamma; // empty without cohort term

    bool has_cohort() const noexcept { return !gamma.empty(); }
};

double eta(const Slice &slice, const BilinearState &s, std::size_t a, std::size_t t) noexcept;

/// 2 * sum [D log(D/m) - (D - m)] over cells with positive exposure,
/// m = E exp(eta).
double deviance(const Slice &slice, const BilinearState &s);

/// Imposes sum beta1 = 1, sum kappa = 0 (and the cohort analogues) without
/// changing the fitted surface.
void normalize(const Slice &slice, BilinearState &s);

FitReport fit_bilinear(const Slice &slice, BilinearState &state, const FitConfig &cfg);

/// Throws unless the gender slice has >= 2 ages and >= 2 years with exposure.
void check_fit_preconditions(const MortalityTable &table, Gender gender);

/// Deviance of E exp(log_rate(age, year)) against one gender of the table.
double table_deviance(const MortalityTable &table, Gender gender,
                      const std::function<double(int, int)> &log_rate);

} // namespace mortboost::detail
