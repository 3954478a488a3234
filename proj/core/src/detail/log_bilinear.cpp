#include "detail/deviance.hpp"
#include "detail/log_bilinear.hpp"

#include "mortboost/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mortboost::detail {

namespace {

constexpr int kMaxHalvings = 30;

struct Residuals {
    std::vector<double> mean;     // E exp(eta)
    std::vector<double> residual; // D - mean
};

Residuals residuals(const Slice &slice, const BilinearState &s) {
    const auto n_a = slice.n_ages();
    const auto n_t = slice.n_years();
    Residuals r{std::vector<double>(n_a * n_t, 0.0), std::vector<double>(n_a * n_t, 0.0)};
    for (std::size_t a = 0; a < n_a; ++a) {
        for (std::size_t t = 0; t < n_t; ++t) {
            const auto i = a * n_t + t;
            if (slice.exposure[i] > 0.0) {
                r.mean[i] = slice.exposure[i] * std::exp(eta(slice, s, a, t));
                r.residual[i] = slice.deaths[i] - r.mean[i];
            }
        }
    }
    return r;
}

/// Applies `state.*block += lambda * step`, halving lambda until the deviance
/// does not increase. Leaves the block untouched if no step is accepted.
void apply_block_step(const Slice &slice, BilinearState &state, std::vector<double> &block,
                      const std::vector<double> &step, double &current_deviance) {
    if (std::all_of(step.begin(), step.end(), [](double v) { return v == 0.0; })) {
        return;
    }
    const auto saved = block;
    double lambda = 1.0;
    for (int halving = 0; halving <= kMaxHalvings; ++halving) {
        for (std::size_t i = 0; i < block.size(); ++i) {
            block[i] = saved[i] + lambda * step[i];
        }
        const auto dev = deviance(slice, state);
        if (std::isfinite(dev) && dev <= current_deviance) {
            current_deviance = dev;
            return;
        }
        lambda *= 0.5;
    }
    block = saved;
}

double newton_ratio(double gradient, double curvature) noexcept {
    return curvature > std::numeric_limits<double>::min() ? gradient / curvature : 0.0;
}

void update_beta0(const Slice &slice, BilinearState &s, double rate_floor,
                  double &current_deviance) {
    const auto n_a = slice.n_ages();
    const auto n_t = slice.n_years();
    for (std::size_t a = 0; a < n_a; ++a) {
        double deaths = 0.0;
        double base = 0.0;
        for (std::size_t t = 0; t < n_t; ++t) {
            const auto i = a * n_t + t;
            if (slice.exposure[i] > 0.0) {
                deaths += slice.deaths[i];
                base += slice.exposure[i] * std::exp(eta(slice, s, a, t) - s.beta0[a]);
            }
        }
        if (!(base > 0.0) || !std::isfinite(base)) {
            continue;
        }
        s.beta0[a] = deaths > 0.0 ? std::log(deaths / base) : std::log(rate_floor);
    }
    current_deviance = deviance(slice, s);
}

void update_kappa(const Slice &slice, BilinearState &s, double &dev) {
    const auto n_a = slice.n_ages();
    const auto n_t = slice.n_years();
    const auto r = residuals(slice, s);
    std::vector<double> step(n_t, 0.0);
    for (std::size_t t = 0; t < n_t; ++t) {
        double g = 0.0;
        double h = 0.0;
        for (std::size_t a = 0; a < n_a; ++a) {
            const auto i = a * n_t + t;
            g += r.residual[i] * s.beta1[a];
            h += r.mean[i] * s.beta1[a] * s.beta1[a];
        }
        step[t] = newton_ratio(g, h);
    }
    apply_block_step(slice, s, s.kappa, step, dev);
}

void update_beta1(const Slice &slice, BilinearState &s, double &dev) {
    const auto n_a = slice.n_ages();
    const auto n_t = slice.n_years();
    const auto r = residuals(slice, s);
    std::vector<double> step(n_a, 0.0);
    for (std::size_t a = 0; a < n_a; ++a) {
        double g = 0.0;
        double h = 0.0;
        for (std::size_t t = 0; t < n_t; ++t) {
            const auto i = a * n_t + t;
            g += r.residual[i] * s.kappa[t];
            h += r.mean[i] * s.kappa[t] * s.kappa[t];
        }
        step[a] = newton_ratio(g, h);
    }
    apply_block_step(slice, s, s.beta1, step, dev);
}

void update_gamma(const Slice &slice, BilinearState &s, double &dev) {
    const auto n_a = slice.n_ages();
    const auto n_t = slice.n_years();
    const auto r = residuals(slice, s);
    std::vector<double> g(s.gamma.size(), 0.0);
    std::vector<double> h(s.gamma.size(), 0.0);
    for (std::size_t a = 0; a < n_a; ++a) {
        for (std::size_t t = 0; t < n_t; ++t) {
            const auto i = a * n_t + t;
            const auto c = slice.cohort_index(a, t);
            g[c] += r.residual[i] * s.beta2[a];
            h[c] += r.mean[i] * s.beta2[a] * s.beta2[a];
        }
    }
    std::vector<double> step(s.gamma.size(), 0.0);
    for (std::size_t c = 0; c < step.size(); ++c) {
        step[c] = newton_ratio(g[c], h[c]);
    }
    apply_block_step(slice, s, s.gamma, step, dev);
}

void update_beta2(const Slice &slice, BilinearState &s, double &dev) {
    const auto n_a = slice.n_ages();
    const auto n_t = slice.n_years();
    const auto r = residuals(slice, s);
    std::vector<double> step(n_a, 0.0);
    for (std::size_t a = 0; a < n_a; ++a) {
        double g = 0.0;
        double h = 0.0;
        for (std::size_t t = 0; t < n_t; ++t) {
            const auto i = a * n_t + t;
            const auto gamma = s.gamma[slice.cohort_index(a, t)];
            g += r.residual[i] * gamma;
            h += r.mean[i] * gamma * gamma;
        }
        step[a] = newton_ratio(g, h);
    }
    apply_block_step(slice, s, s.beta2, step, dev);
}

} // namespace

Slice slice_of(const MortalityTable &table, Gender gender) {
    const auto &space = table.space();
    Slice slice{space.ages(), space.years(), {}, {}};
    const auto n = slice.n_ages() * slice.n_years();
    slice.exposure.resize(n);
    slice.deaths.resize(n);
    const auto offset = space.index({gender, space.ages().first, space.years().first});
    for (std::size_t i = 0; i < n; ++i) {
        slice.exposure[i] = table.exposures()[offset + i];
        slice.deaths[i] = static_cast<double>(table.deaths()[offset + i]);
    }
    return slice;
}

double eta(const Slice &slice, const BilinearState &s, std::size_t a, std::size_t t) noexcept {
    double value = s.beta0[a] + s.beta1[a] * s.kappa[t];
    if (s.has_cohort()) {
        value += s.beta2[a] * s.gamma[slice.cohort_index(a, t)];
    }
    return value;
}

double deviance(const Slice &slice, const BilinearState &s) {
    const auto n_a = slice.n_ages();
    const auto n_t = slice.n_years();
    double total = 0.0;
    for (std::size_t a = 0; a < n_a; ++a) {
        for (std::size_t t = 0; t < n_t; ++t) {
            const auto i = a * n_t + t;
            const double e = slice.exposure[i];
            if (!(e > 0.0)) {
                continue;
            }
            const double d = slice.deaths[i];
            const double m = e * std::exp(eta(slice, s, a, t));
            total += detail::unit_deviance(d, m);
        }
    }
    return 2.0 * total;
}

void normalize(const Slice &slice, BilinearState &s) {
    const auto n_a = slice.n_ages();
    const auto n_t = slice.n_years();

    double s1 = 0.0;
    for (const auto b : s.beta1) {
        s1 += b;
    }
    if (std::isfinite(s1) && std::abs(s1) > std::numeric_limits<double>::min()) {
        for (auto &b : s.beta1) {
            b /= s1;
        }
        for (auto &k : s.kappa) {
            k *= s1;
        }
    }
    double k_mean = 0.0;
    for (const auto k : s.kappa) {
        k_mean += k;
    }
    k_mean /= static_cast<double>(n_t);
    for (auto &k : s.kappa) {
        k -= k_mean;
    }
    for (std::size_t a = 0; a < n_a; ++a) {
        s.beta0[a] += s.beta1[a] * k_mean;
    }

    if (!s.has_cohort()) {
        return;
    }
    double s2 = 0.0;
    for (const auto b : s.beta2) {
        s2 += b;
    }
    if (std::isfinite(s2) && std::abs(s2) > std::numeric_limits<double>::min()) {
        for (auto &b : s.beta2) {
            b /= s2;
        }
        for (auto &g : s.gamma) {
            g *= s2;
        }
    }
    // Grid-multiplicity weighted mean: each cohort counts once per (a, t) cell.
    double g_sum = 0.0;
    for (std::size_t a = 0; a < n_a; ++a) {
        for (std::size_t t = 0; t < n_t; ++t) {
            g_sum += s.gamma[slice.cohort_index(a, t)];
        }
    }
    const double g_mean = g_sum / static_cast<double>(n_a * n_t);
    for (auto &g : s.gamma) {
        g -= g_mean;
    }
    for (std::size_t a = 0; a < n_a; ++a) {
        s.beta0[a] += s.beta2[a] * g_mean;
    }
}

FitReport fit_bilinear(const Slice &slice, BilinearState &state, const FitConfig &cfg) {
    cfg.validate();
    FitReport report;
    const auto n_a = slice.n_ages();
    const auto n_t = slice.n_years();
    for (std::size_t a = 0; a < n_a; ++a) {
        double deaths = 0.0;
        for (std::size_t t = 0; t < n_t; ++t) {
            deaths += slice.deaths[a * n_t + t];
        }
        if (deaths == 0.0) {
            report.floored_ages.push_back(slice.ages.first + static_cast<int>(a));
        }
    }

    normalize(slice, state);
    double dev = deviance(slice, state);
    report.deviance_trace.push_back(dev);

    for (std::size_t iter = 1; iter <= cfg.max_iterations; ++iter) {
        const auto previous = state;
        update_beta0(slice, state, cfg.rate_floor, dev);
        update_kappa(slice, state, dev);
        update_beta1(slice, state, dev);
        if (state.has_cohort()) {
            update_gamma(slice, state, dev);
            update_beta2(slice, state, dev);
        }
        normalize(slice, state);
        dev = deviance(slice, state);

        const double last = report.deviance_trace.back();
        if (!(dev <= last)) {
            // Renormalization rounding outweighed the sweep's gain: no further
            // progress is representable.
            state = previous;
            report.converged = true;
            break;
        }
        report.deviance_trace.push_back(dev);
        report.iterations = iter;
        if (last - dev <= cfg.deviance_tol * std::max(1.0, dev)) {
            report.converged = true;
            break;
        }
    }

    double k_max = 0.0;
    for (const auto k : state.kappa) {
        k_max = std::max(k_max, std::abs(k));
    }
    report.near_zero_kappa = k_max < 1e-6;
    return report;
}

} // namespace mortboost::detail
