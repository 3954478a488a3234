#include "mortboost/rh_model.hpp"

#include "detail/log_bilinear.hpp"
#include "detail/param_csv.hpp"
#include "mortboost/errors.hpp"

#include <algorithm>
#include <cmath>

namespace mortboost {

double RHParams::log_rate(int age, int year) const {
    if (!ages.contains(age) || !years.contains(year)) {
        throw DomainError("(" + std::to_string(age) + ", " + std::to_string(year) +
                          ") outside the fitted ranges");
    }
    const auto a = static_cast<std::size_t>(age - ages.first);
    const auto t = static_cast<std::size_t>(year - years.first);
    const auto c = static_cast<std::size_t>(year - age - cohorts().first);
    return beta0[a] + beta1[a] * kappa[t] + beta2[a] * gamma[c];
}

RHParams nest_lc(const LCParams &lc) {
    RHParams p;
    p.gender = lc.gender;
    p.ages = lc.ages;
    p.years = lc.years;
    p.beta0 = lc.beta0;
    p.beta1 = lc.beta1;
    p.kappa = lc.kappa;
    p.beta2.assign(lc.ages.size(), 1.0 / static_cast<double>(lc.ages.size()));
    p.gamma.assign(p.cohorts().size(), 0.0);
    p.rate_floor = lc.rate_floor;
    return p;
}

RHFit fit_rh(const MortalityTable &table, Gender gender, const FitConfig &cfg,
             const std::optional<LCParams> &warm_start) {
    cfg.validate();
    detail::check_fit_preconditions(table, gender);
    const auto slice = detail::slice_of(table, gender);
    const auto n_a = slice.n_ages();
    const auto n_t = slice.n_years();

    // Every cohort on the grid needs exposure somewhere; single-cell cohorts
    // are kept but reported.
    const auto cohorts = slice.cohorts();
    std::vector<std::size_t> cells_with_exposure(cohorts.size(), 0);
    for (std::size_t a = 0; a < n_a; ++a) {
        for (std::size_t t = 0; t < n_t; ++t) {
            if (slice.exposure[a * n_t + t] > 0.0) {
                ++cells_with_exposure[slice.cohort_index(a, t)];
            }
        }
    }
    std::vector<int> weak;
    for (std::size_t c = 0; c < cohorts.size(); ++c) {
        if (cells_with_exposure[c] == 0) {
            throw DataError("cohort " + std::to_string(cohorts.first + static_cast<int>(c)) +
                            " has no cell with positive exposure");
        }
        if (cells_with_exposure[c] == 1) {
            weak.push_back(cohorts.first + static_cast<int>(c));
        }
    }

    LCParams start;
    if (warm_start) {
        if (warm_start->gender != gender || warm_start->ages != slice.ages ||
            warm_start->years != slice.years) {
            throw std::invalid_argument("warm start parameters do not match the table slice");
        }
        start = *warm_start;
    } else {
        FitConfig lc_cfg = cfg;
        lc_cfg.max_iterations = std::min<std::size_t>(cfg.max_iterations,
                                                      FitConfig::lc_defaults().max_iterations);
        start = fit_lc(table, gender, lc_cfg).params;
    }
    const auto nested = nest_lc(start);

    detail::BilinearState state{nested.beta0, nested.beta1, nested.kappa, nested.beta2,
                                nested.gamma};
    auto report = detail::fit_bilinear(slice, state, cfg);
    report.weak_cohorts = std::move(weak);

    RHParams params;
    params.gender = gender;
    params.ages = slice.ages;
    params.years = slice.years;
    params.beta0 = std::move(state.beta0);
    params.beta1 = std::move(state.beta1);
    params.kappa = std::move(state.kappa);
    params.beta2 = std::move(state.beta2);
    params.gamma = std::move(state.gamma);
    params.rate_floor = cfg.rate_floor;
    return {std::move(params), std::move(report)};
}

double predict_rh(const RHParams &params, const Feature &x) {
    if (x.gender != params.gender) {
        throw DomainError("parameters fitted for " + std::string(to_string(params.gender)));
    }
    return std::clamp(std::exp(params.log_rate(x.age, x.year)), params.rate_floor, 1.0);
}

double rh_deviance(const RHParams &params, const MortalityTable &table) {
    return detail::table_deviance(table, params.gender,
                                  [&](int a, int t) { return params.log_rate(a, t); });
}

RateSurface fitted_rates(std::span<const RHParams> params, const FeatureSpace &space) {
    std::vector<double> rates(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto x = space.feature_at(i);
        const auto it = std::find_if(params.begin(), params.end(),
                                     [&](const RHParams &p) { return p.gender == x.gender; });
        if (it == params.end()) {
            throw DomainError("no parameters for " + std::string(to_string(x.gender)));
        }
        rates[i] = predict_rh(*it, x);
    }
    return RateSurface(space, std::move(rates));
}

std::string write_params_csv(std::span<const RHParams> params) {
    std::string out = "gender,kind,index,value\n";
    for (const auto &p : params) {
        detail::append_rows(out, p.gender, "beta0", p.ages.first, p.beta0);
        detail::append_rows(out, p.gender, "beta1", p.ages.first, p.beta1);
        detail::append_rows(out, p.gender, "kappa", p.years.first, p.kappa);
        detail::append_rows(out, p.gender, "beta2", p.ages.first, p.beta2);
        detail::append_rows(out, p.gender, "gamma", p.cohorts().first, p.gamma);
    }
    return out;
}

std::vector<RHParams> read_rh_params_csv(std::string_view text) {
    std::vector<RHParams> out;
    for (const auto &[gender, kinds] : detail::read_param_rows(text)) {
        const auto get = [&](const std::string &kind) -> const std::map<int, double> & {
            const auto it = kinds.find(kind);
            if (it == kinds.end()) {
                throw DataError("missing parameter kind '" + kind + "'");
            }
            return it->second;
        };
        for (const auto &[kind, values] : kinds) {
            if (kind != "beta0" && kind != "beta1" && kind != "kappa" && kind != "beta2" &&
                kind != "gamma") {
                throw DataError("unexpected parameter kind '" + kind + "'");
            }
        }
        RHParams p;
        p.gender = gender;
        p.ages = detail::span_of(get("beta0"), "beta0");
        p.years = detail::span_of(get("kappa"), "kappa");
        p.beta0 = detail::dense(get("beta0"), p.ages, "beta0");
        p.beta1 = detail::dense(get("beta1"), p.ages, "beta1");
        p.kappa = detail::dense(get("kappa"), p.years, "kappa");
        p.beta2 = detail::dense(get("beta2"), p.ages, "beta2");
        p.gamma = detail::dense(get("gamma"), p.cohorts(), "gamma");
        out.push_back(std::move(p));
    }
    return out;
}

double constraint_violation(const RHParams &params) {
    LCParams lc{params.gender, params.ages, params.years, params.beta0,
                params.beta1,  params.kappa, params.rate_floor};
    double b2 = 0.0;
    for (const auto v : params.beta2) {
        b2 += v;
    }
    double g = 0.0;
    const auto c0 = params.cohorts().first;
    for (int a = params.ages.first; a <= params.ages.last; ++a) {
        for (int t = params.years.first; t <= params.years.last; ++t) {
            g += params.gamma[static_cast<std::size_t>(t - a - c0)];
        }
    }
    return std::max({constraint_violation(lc), std::abs(b2 - 1.0), std::abs(g)});
}

} // namespace mortboost
