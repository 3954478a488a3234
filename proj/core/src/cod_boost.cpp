#include "mortboost/cod_boost.hpp"

#include "detail/svg.hpp"
#include "mortboost/errors.hpp"
#include "mortboost/text.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mortboost {

namespace {

void check_same_space(const CauseDeathTable &cod, const ThetaSurface &theta) {
    if (!(theta.space() == cod.space()) || theta.cause_count() != cod.cause_count()) {
        throw std::invalid_argument("theta surface does not match the cause-of-death table");
    }
}

std::string key_columns(const CauseDeathTable &cod, std::size_t i, std::size_t k) {
    const auto x = cod.space().feature_at(i);
    return std::string(to_string(x.gender)) + ',' + std::to_string(x.age) + ',' +
           std::to_string(x.year) + ',' + std::to_string(k);
}

struct Panel {
    double left;
    double top;
    double width;
    double height;

    double x_of(double t, IntRange years) const {
        const double span = std::max(1, years.last - years.first);
        return left + width * (t - years.first) / span;
    }
    double y_of(double v, double lo, double hi) const {
        return top + height * (hi - v) / (hi - lo);
    }
};

void frame(detail::Svg &svg, const Panel &p, std::string_view title, IntRange years,
           double lo, double hi) {
    const detail::Rgb grey{160, 160, 160};
    svg.line(p.left, p.top + p.height, p.left + p.width, p.top + p.height, grey);
    svg.line(p.left, p.top, p.left, p.top + p.height, grey);
    svg.text(p.left + p.width / 2.0, p.top - 6.0, title, 10.0, "middle");
    svg.text(p.left, p.top + p.height + 12.0, std::to_string(years.first), 8.0, "middle");
    svg.text(p.left + p.width, p.top + p.height + 12.0, std::to_string(years.last), 8.0,
             "middle");
    svg.text(p.left - 3.0, p.top + 8.0, text::format_double(std::round(hi * 1000.0) / 1000.0),
             8.0, "end");
    svg.text(p.left - 3.0, p.top + p.height,
             text::format_double(std::round(lo * 1000.0) / 1000.0), 8.0, "end");
}

} // namespace

ThetaInit parse_theta_init(std::string_view text) {
    if (text::iequals(text, "uniform")) {
        return ThetaInit::uniform;
    }
    if (text::iequals(text, "empirical")) {
        return ThetaInit::empirical;
    }
    throw std::invalid_argument("theta init must be 'uniform' or 'empirical', got '" +
                                std::string(text) + "'");
}

std::string_view to_string(ThetaInit mode) noexcept {
    return mode == ThetaInit::uniform ? "uniform" : "empirical";
}

ThetaSurface init_theta(const FeatureSpace &space, std::size_t cause_count) {
    if (cause_count == 0) {
        throw std::invalid_argument("at least one cause is required");
    }
    return ThetaSurface(space, cause_count,
                        std::vector<double>(space.size() * cause_count,
                                            1.0 / static_cast<double>(cause_count)));
}

ThetaSurface init_theta(const CauseDeathTable &cod, ThetaInit mode) {
    const auto k_count = cod.cause_count();
    if (mode == ThetaInit::uniform) {
        return init_theta(cod.space(), k_count);
    }
    std::vector<double> by_cause(k_count, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < cod.space().size(); ++i) {
        for (std::size_t k = 1; k <= k_count; ++k) {
            if (const auto &c = cod.counts()[cod.cell_index(i, k)]) {
                by_cause[k - 1] += static_cast<double>(*c);
                total += static_cast<double>(*c);
            }
        }
    }
    if (!(total > 0.0)) {
        throw DataError("empirical theta needs at least one recorded death");
    }
    std::vector<double> theta(cod.space().size() * k_count);
    for (std::size_t i = 0; i < cod.space().size(); ++i) {
        for (std::size_t k = 0; k < k_count; ++k) {
            theta[i * k_count + k] = by_cause[k] / total;
        }
    }
    return ThetaSurface(cod.space(), k_count, std::move(theta));
}

TreeConfig cod_tree_defaults() {
    TreeConfig cfg;
    cfg.features = {FeatureId::gender, FeatureId::age, FeatureId::year, FeatureId::cause};
    return cfg;
}

CodWorkingData make_cod_working_data(const CauseDeathTable &cod, const CondensedRates &rates,
                                     const ThetaSurface &theta0) {
    check_same_space(cod, theta0);
    const auto &space = cod.space();
    if (!(rates.rates.space() == space) || rates.exposure.size() != space.size()) {
        throw std::invalid_argument("condensed rates do not match the cause-of-death table");
    }
    CodWorkingData out;
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto x = space.feature_at(i);
        const double base = rates.rates.rate(i) * rates.exposure[i];
        for (std::size_t k = 1; k <= cod.cause_count(); ++k) {
            const auto cell = cod.cell_index(i, k);
            const auto &count = cod.counts()[cell];
            const double d = theta0.theta(i, k) * base;
            if (!(d > 0.0)) {
                if (count && *count > 0) {
                    throw DataError("cause " + std::to_string(k) + " at (" +
                                    std::string(to_string(x.gender)) + ", bucket " +
                                    std::to_string(x.age) + ", " + std::to_string(x.year) +
                                    ") has deaths but zero expected deaths");
                }
                ++out.dropped;
                continue;
            }
            out.points.push_back({ExtendedFeature(x.gender, x.age, x.year), k, d, count});
            out.cells.push_back(cell);
        }
    }
    return out;
}

ThetaEstimate estimate_theta_tree(const CauseDeathTable &cod, const CodWorkingData &working,
                                  const ThetaSurface &theta0, const TreeConfig &cfg) {
    check_same_space(cod, theta0);
    if (std::find(cfg.features.begin(), cfg.features.end(), FeatureId::cohort) !=
        cfg.features.end()) {
        throw std::invalid_argument("cohort is not defined on age buckets");
    }
    auto tree = grow_tree(working.points, cfg);
    const auto &space = cod.space();
    const auto k_count = cod.cause_count();
    std::vector<double> mu(space.size() * k_count);
    std::vector<double> raw(mu.size());
    std::vector<double> normalized(mu.size(), 0.0);
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto x = space.feature_at(i);
        const ExtendedFeature ex(x.gender, x.age, x.year);
        double present_sum = 0.0;
        std::size_t present = 0;
        for (std::size_t k = 1; k <= k_count; ++k) {
            const auto cell = cod.cell_index(i, k);
            mu[cell] = predict_mu(tree, ex, k);
            raw[cell] = std::clamp(mu[cell] * theta0.theta(i, k), 0.0, 1.0);
            if (cod.counts()[cell]) {
                present_sum += raw[cell];
                ++present;
            }
        }
        for (std::size_t k = 1; k <= k_count; ++k) {
            const auto cell = cod.cell_index(i, k);
            if (!cod.counts()[cell]) {
                continue;
            }
            normalized[cell] = present_sum > 0.0 ? raw[cell] / present_sum
                                                 : 1.0 / static_cast<double>(present);
        }
    }
    return ThetaEstimate{ThetaSurface(space, k_count, std::move(raw)),
                         ThetaSurface(space, k_count, std::move(normalized)), std::move(mu),
                         std::move(tree)};
}

ResidualGrid pearson_residuals(const CauseDeathTable &cod, const ThetaSurface &theta,
                               std::optional<std::span<const std::int64_t>> all_cause) {
    check_same_space(cod, theta);
    const auto &space = cod.space();
    if (all_cause && all_cause->size() != space.size()) {
        throw std::invalid_argument("all-cause deaths do not match the condensed space");
    }
    const auto totals = cod.present_totals();
    const auto k_count = cod.cause_count();
    ResidualGrid out{space, k_count, std::vector<double>(space.size() * k_count, 0.0),
                     std::vector<bool>(space.size(), false)};
    for (std::size_t i = 0; i < space.size(); ++i) {
        const double d_x =
            static_cast<double>(all_cause ? (*all_cause)[i] : totals[i]);
        out.partial_total[i] = !all_cause && cod.has_missing(i);
        for (std::size_t k = 1; k <= k_count; ++k) {
            const auto cell = cod.cell_index(i, k);
            const auto &count = cod.counts()[cell];
            const double expected = theta.theta(i, k) * d_x;
            if (!count || !(expected > 0.0)) {
                continue;
            }
            out.residual[cell] = (static_cast<double>(*count) - expected) / std::sqrt(expected);
        }
    }
    return out;
}

std::vector<double> moving_average(std::span<const double> series, std::size_t window) {
    std::vector<double> out(series.begin(), series.end());
    const auto half = window / 2;
    if (half == 0) {
        return out;
    }
    const auto n = series.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto h = std::min({half, i, n - 1 - i});
        double sum = 0.0;
        for (std::size_t j = i - h; j <= i + h; ++j) {
            sum += series[j];
        }
        out[i] = sum / static_cast<double>(2 * h + 1);
    }
    return out;
}

std::string theta_csv(const CauseDeathTable &cod, const ThetaEstimate &estimate) {
    check_same_space(cod, estimate.raw);
    std::string out = "gender,age_group,year,cause,theta_raw,theta_norm\n";
    for (std::size_t i = 0; i < cod.space().size(); ++i) {
        for (std::size_t k = 1; k <= cod.cause_count(); ++k) {
            out += key_columns(cod, i, k) + ',' +
                   text::format_double(estimate.raw.theta(i, k)) + ',' +
                   text::format_double(estimate.normalized.theta(i, k)) + '\n';
        }
    }
    return out;
}

std::string smoothed_theta_csv(const CauseDeathTable &cod, const ThetaEstimate &estimate,
                               std::size_t window) {
    check_same_space(cod, estimate.raw);
    const auto &space = cod.space();
    const auto n_years = space.years().size();
    std::vector<double> smoothed(space.size() * cod.cause_count());
    for (const auto g : space.genders()) {
        for (int b = space.ages().first; b <= space.ages().last; ++b) {
            const auto first = space.index({g, b, space.years().first});
            for (std::size_t k = 1; k <= cod.cause_count(); ++k) {
                std::vector<double> series(n_years);
                for (std::size_t t = 0; t < n_years; ++t) {
                    series[t] = estimate.raw.theta(first + t, k);
                }
                const auto s = moving_average(series, window);
                for (std::size_t t = 0; t < n_years; ++t) {
                    smoothed[cod.cell_index(first + t, k)] = s[t];
                }
            }
        }
    }
    std::string out = "gender,age_group,year,cause,theta_raw,theta_raw_smoothed\n";
    for (std::size_t i = 0; i < space.size(); ++i) {
        for (std::size_t k = 1; k <= cod.cause_count(); ++k) {
            out += key_columns(cod, i, k) + ',' +
                   text::format_double(estimate.raw.theta(i, k)) + ',' +
                   text::format_double(smoothed[cod.cell_index(i, k)]) + '\n';
        }
    }
    return out;
}

std::string residuals_csv(const CauseDeathTable &cod, const ResidualGrid &residuals) {
    if (!(residuals.space == cod.space()) || residuals.cause_count != cod.cause_count()) {
        throw std::invalid_argument("residual grid does not match the cause-of-death table");
    }
    std::string out = "gender,age_group,year,cause,delta,missing\n";
    for (std::size_t i = 0; i < cod.space().size(); ++i) {
        for (std::size_t k = 1; k <= cod.cause_count(); ++k) {
            const auto cell = cod.cell_index(i, k);
            out += key_columns(cod, i, k) + ',' + text::format_double(residuals.residual[cell]) +
                   ',' + (cod.counts()[cell] ? "0" : "1") + '\n';
        }
    }
    return out;
}

std::string theta_svg(const CauseDeathTable &cod, const ThetaSurface &theta,
                      std::size_t smooth_window) {
    check_same_space(cod, theta);
    const auto &space = cod.space();
    const auto years = space.years();
    const auto n_buckets = space.ages().size();
    const double pw = 180.0;
    const double ph = 120.0;
    const double gap = 50.0;
    const double legend_h = 16.0 * static_cast<double>((cod.cause_count() + 2) / 3) + 20.0;
    detail::Svg svg(gap + static_cast<double>(n_buckets) * (pw + gap),
                    40.0 + static_cast<double>(space.genders().size()) * (ph + gap) + legend_h);
    svg.text(gap, 20.0,
             smooth_window > 1 ? "theta by year (moving average, window " +
                                     std::to_string(smooth_window) + ")"
                               : std::string("theta by year"),
             12.0);
    double hi = 0.0;
    for (const auto v : theta.values()) {
        hi = std::max(hi, v);
    }
    hi = hi > 0.0 ? hi * 1.05 : 1.0;
    for (std::size_t gi = 0; gi < space.genders().size(); ++gi) {
        const auto g = space.genders()[gi];
        for (std::size_t b = 1; b <= n_buckets; ++b) {
            const Panel p{gap + static_cast<double>(b - 1) * (pw + gap),
                          50.0 + static_cast<double>(gi) * (ph + gap), pw, ph};
            frame(svg, p,
                  std::string(to_string(g)) + ", ages " + cod.buckets().label(b), years, 0.0,
                  hi);
            for (std::size_t k = 1; k <= cod.cause_count(); ++k) {
                std::vector<double> series(years.size());
                for (std::size_t t = 0; t < years.size(); ++t) {
                    series[t] = theta.theta(
                        space.index({g, static_cast<int>(b), years.first + static_cast<int>(t)}),
                        k);
                }
                const auto s = moving_average(series, smooth_window);
                std::vector<std::pair<double, double>> pts;
                for (std::size_t t = 0; t < s.size(); ++t) {
                    pts.emplace_back(p.x_of(years.first + static_cast<double>(t), years),
                                     p.y_of(s[t], 0.0, hi));
                }
                svg.polyline(pts, detail::palette(k - 1), 1.2);
            }
        }
    }
    const double legend_top =
        50.0 + static_cast<double>(space.genders().size()) * (ph + gap);
    for (std::size_t k = 1; k <= cod.cause_count(); ++k) {
        const double x = gap + static_cast<double>((k - 1) % 3) * 260.0;
        const double y = legend_top + 16.0 * static_cast<double>((k - 1) / 3);
        svg.rect(x, y - 8.0, 10.0, 10.0, detail::palette(k - 1));
        svg.text(x + 14.0, y, std::to_string(k) + ": " + cod.causes().label(k), 10.0);
    }
    return svg.finish();
}

std::string residuals_svg(const CauseDeathTable &cod, const ResidualGrid &residuals) {
    const auto &space = cod.space();
    const auto years = space.years();
    const std::size_t cols = 4;
    const auto rows = (cod.cause_count() + cols - 1) / cols;
    const double pw = 200.0;
    const double ph = 120.0;
    const double gap = 50.0;
    detail::Svg svg(gap + static_cast<double>(cols) * (pw + gap),
                    60.0 + static_cast<double>(rows) * (ph + gap));
    svg.text(gap, 20.0, "Pearson residuals by year (female blue, male orange)", 12.0);
    double bound = 1.0;
    for (const auto v : residuals.residual) {
        bound = std::max(bound, std::abs(v));
    }
    for (std::size_t k = 1; k <= cod.cause_count(); ++k) {
        const Panel p{gap + static_cast<double>((k - 1) % cols) * (pw + gap),
                      50.0 + static_cast<double>((k - 1) / cols) * (ph + gap), pw, ph};
        frame(svg, p, std::to_string(k) + ": " + cod.causes().label(k), years, -bound, bound);
        svg.line(p.left, p.y_of(0.0, -bound, bound), p.left + pw, p.y_of(0.0, -bound, bound),
                 {200, 200, 200});
        for (std::size_t i = 0; i < space.size(); ++i) {
            if (!cod.counts()[cod.cell_index(i, k)]) {
                continue;
            }
            const auto x = space.feature_at(i);
            svg.circle(p.x_of(x.year, years), p.y_of(residuals.at(i, k), -bound, bound), 1.5,
                       detail::palette(x.gender == Gender::female ? 0 : 1));
        }
    }
    return svg.finish();
}

} // namespace mortboost
