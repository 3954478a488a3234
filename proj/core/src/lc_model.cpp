#include "mortboost/lc_model.hpp"

#include "detail/deviance.hpp"
#include "detail/log_bilinear.hpp"
#include "detail/param_csv.hpp"
#include "mortboost/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mortboost {

namespace detail {

// Shared with rh_model.cpp.
void check_fit_preconditions(const MortalityTable &table, Gender gender) {
    const auto &space = table.space();
    if (!space.has_gender(gender)) {
        throw DomainError("gender " + std::string(to_string(gender)) + " not in table");
    }
    const auto slice = slice_of(table, gender);
    std::size_t ages_with_exposure = 0;
    for (std::size_t a = 0; a < slice.n_ages(); ++a) {
        bool any = false;
        for (std::size_t t = 0; t < slice.n_years(); ++t) {
            any = any || slice.exposure[a * slice.n_years() + t] > 0.0;
        }
        ages_with_exposure += any ? 1 : 0;
    }
    std::size_t years_with_exposure = 0;
    for (std::size_t t = 0; t < slice.n_years(); ++t) {
        bool any = false;
        for (std::size_t a = 0; a < slice.n_ages(); ++a) {
            any = any || slice.exposure[a * slice.n_years() + t] > 0.0;
        }
        years_with_exposure += any ? 1 : 0;
    }
    if (ages_with_exposure < 2 || years_with_exposure < 2) {
        throw DataError("fitting needs at least 2 ages and 2 years with positive exposure");
    }
}

double table_deviance(const MortalityTable &table, Gender gender,
                      const std::function<double(int, int)> &log_rate) {
    const auto &space = table.space();
    double total = 0.0;
    for (int a = space.ages().first; a <= space.ages().last; ++a) {
        for (int t = space.years().first; t <= space.years().last; ++t) {
            const auto i = space.index({gender, a, t});
            const double e = table.exposures()[i];
            if (!(e > 0.0)) {
                continue;
            }
            const double d = static_cast<double>(table.deaths()[i]);
            const double m = e * std::exp(log_rate(a, t));
            total += detail::unit_deviance(d, m);
        }
    }
    return 2.0 * total;
}

} // namespace detail

void FitConfig::validate() const {
    if (max_iterations < 1) {
        throw std::invalid_argument("max_iterations must be >= 1");
    }
    if (!(deviance_tol > 0.0)) {
        throw std::invalid_argument("deviance_tol must be > 0");
    }
    if (!(rate_floor > 0.0 && rate_floor < 1.0)) {
        throw std::invalid_argument("rate_floor must lie in (0, 1)");
    }
}

double LCParams::log_rate(int age, int year) const {
    if (!ages.contains(age) || !years.contains(year)) {
        throw DomainError("(" + std::to_string(age) + ", " + std::to_string(year) +
                          ") outside the fitted ranges");
    }
    const auto a = static_cast<std::size_t>(age - ages.first);
    const auto t = static_cast<std::size_t>(year - years.first);
    return beta0[a] + beta1[a] * kappa[t];
}

LCFit fit_lc(const MortalityTable &table, Gender gender, const FitConfig &cfg) {
    cfg.validate();
    detail::check_fit_preconditions(table, gender);
    const auto slice = detail::slice_of(table, gender);
    const auto n_a = slice.n_ages();
    const auto n_t = slice.n_years();

    detail::BilinearState state;
    state.beta0.resize(n_a);
    for (std::size_t a = 0; a < n_a; ++a) {
        double d = 0.0;
        double e = 0.0;
        for (std::size_t t = 0; t < n_t; ++t) {
            d += slice.deaths[a * n_t + t];
            e += slice.exposure[a * n_t + t];
        }
        state.beta0[a] = e > 0.0 ? std::log((d + 0.5) / e) : std::log(cfg.rate_floor);
    }
    state.beta1.assign(n_a, 1.0 / static_cast<double>(n_a));
    state.kappa.assign(n_t, 0.0);

    auto report = detail::fit_bilinear(slice, state, cfg);
    LCParams params{gender,
                    slice.ages,
                    slice.years,
                    std::move(state.beta0),
                    std::move(state.beta1),
                    std::move(state.kappa),
                    cfg.rate_floor};
    return {std::move(params), std::move(report)};
}

double predict_lc(const LCParams &params, const Feature &x) {
    if (x.gender != params.gender) {
        throw DomainError("parameters fitted for " + std::string(to_string(params.gender)));
    }
    return std::clamp(std::exp(params.log_rate(x.age, x.year)), params.rate_floor, 1.0);
}

double lc_deviance(const LCParams &params, const MortalityTable &table) {
    return detail::table_deviance(table, params.gender,
                                  [&](int a, int t) { return params.log_rate(a, t); });
}

RateSurface fitted_rates(std::span<const LCParams> params, const FeatureSpace &space) {
    std::vector<double> rates(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto x = space.feature_at(i);
        const auto it = std::find_if(params.begin(), params.end(),
                                     [&](const LCParams &p) { return p.gender == x.gender; });
        if (it == params.end()) {
            throw DomainError("no parameters for " + std::string(to_string(x.gender)));
        }
        rates[i] = predict_lc(*it, x);
    }
    return RateSurface(space, std::move(rates));
}

std::string write_params_csv(std::span<const LCParams> params) {
    std::string out = "gender,kind,index,value\n";
    for (const auto &p : params) {
        detail::append_rows(out, p.gender, "beta0", p.ages.first, p.beta0);
        detail::append_rows(out, p.gender, "beta1", p.ages.first, p.beta1);
        detail::append_rows(out, p.gender, "kappa", p.years.first, p.kappa);
    }
    return out;
}

std::vector<LCParams> read_lc_params_csv(std::string_view text) {
    std::vector<LCParams> out;
    for (const auto &[gender, kinds] : detail::read_param_rows(text)) {
        for (const auto &[kind, values] : kinds) {
            if (kind != "beta0" && kind != "beta1" && kind != "kappa") {
                throw DataError("unexpected parameter kind '" + kind + "' for a Lee-Carter model");
            }
        }
        const auto get = [&](const std::string &kind) -> const std::map<int, double> & {
            const auto it = kinds.find(kind);
            if (it == kinds.end()) {
                throw DataError("missing parameter kind '" + kind + "'");
            }
            return it->second;
        };
        LCParams p;
        p.gender = gender;
        p.ages = detail::span_of(get("beta0"), "beta0");
        p.years = detail::span_of(get("kappa"), "kappa");
        p.beta0 = detail::dense(get("beta0"), p.ages, "beta0");
        p.beta1 = detail::dense(get("beta1"), p.ages, "beta1");
        p.kappa = detail::dense(get("kappa"), p.years, "kappa");
        out.push_back(std::move(p));
    }
    return out;
}

double constraint_violation(const LCParams &params) {
    double b1 = 0.0;
    for (const auto v : params.beta1) {
        b1 += v;
    }
    double k = 0.0;
    for (const auto v : params.kappa) {
        k += v;
    }
    return std::max(std::abs(b1 - 1.0), std::abs(k));
}

} // namespace mortboost
