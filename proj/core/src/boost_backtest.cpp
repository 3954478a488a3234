#include "mortboost/boost_backtest.hpp"

#include "detail/svg.hpp"
#include "mortboost/errors.hpp"
#include "mortboost/io.hpp"
#include "mortboost/text.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mortboost {

namespace {

int tick_step(std::size_t n) {
    for (const int step : {1, 2, 5, 10, 20, 25, 50, 100}) {
        if (n / static_cast<std::size_t>(step) <= 12) {
            return step;
        }
    }
    return 200;
}

detail::Rgb delta_rgb(double delta, double white_band, double max_abs) {
    const double size = std::abs(delta);
    if (size <= white_band || !(max_abs > 0.0)) {
        return {};
    }
    const double s = std::min(1.0, size / max_abs);
    // Capped below 255 so any cell outside the band is visibly tinted.
    const int fade = std::min(254, static_cast<int>(std::lround(255.0 * (1.0 - s))));
    return delta > 0.0 ? detail::Rgb{255, fade, fade} : detail::Rgb{fade, fade, 255};
}

} // namespace

std::string_view to_string(InitialModel model) noexcept {
    switch (model) {
    case InitialModel::lc:
        return "LC";
    case InitialModel::rh:
        return "RH";
    case InitialModel::external:
        return "external";
    }
    return "?";
}

WorkingData make_working_data(const RateSurface &q_init, const MortalityTable &table) {
    const auto &space = table.space();
    if (!(q_init.space() == space)) {
        throw std::invalid_argument("initial rates and table cover different feature spaces");
    }
    WorkingData out;
    out.points.reserve(space.size());
    out.cells.reserve(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto x = space.feature_at(i);
        const double d = q_init.rate(i) * table.exposures()[i];
        const auto deaths = table.deaths()[i];
        if (!(d > 0.0)) {
            if (deaths > 0) {
                throw DataError("cell (" + std::string(to_string(x.gender)) + ", " +
                                std::to_string(x.age) + ", " + std::to_string(x.year) + ") has " +
                                std::to_string(deaths) + " deaths but zero expected deaths");
            }
            out.dropped.push_back(x);
            continue;
        }
        out.points.push_back({ExtendedFeature(x.gender, x.age, x.year), 0, d, deaths});
        out.cells.push_back(i);
    }
    return out;
}

BacktestResult backtest(const RateSurface &q_init, const MortalityTable &table,
                        const TreeConfig &cfg, InitialModel initial_model) {
    auto working = make_working_data(q_init, table);
    auto tree = grow_tree(working.points, cfg);
    const auto &space = table.space();
    std::vector<double> mu(space.size());
    std::vector<double> delta(space.size());
    std::vector<double> q_tree(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto x = space.feature_at(i);
        mu[i] = predict_mu(tree, ExtendedFeature(x.gender, x.age, x.year));
        delta[i] = mu[i] - 1.0;
        q_tree[i] = std::min(1.0, mu[i] * q_init.rate(i));
    }
    return BacktestResult{q_init,
                          RateSurface(space, std::move(q_tree)),
                          std::move(mu),
                          std::move(delta),
                          std::move(tree),
                          initial_model,
                          working.points.size(),
                          std::move(working.dropped)};
}

std::string delta_csv(const BacktestResult &result) {
    const auto &space = result.q_init.space();
    std::string out = "gender,age,year,cohort,delta\n";
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto x = space.feature_at(i);
        out += to_string(x.gender);
        out += ',' + std::to_string(x.age) + ',' + std::to_string(x.year) + ',' +
               std::to_string(x.year - x.age) + ',' + text::format_double(result.delta[i]) + '\n';
    }
    return out;
}

std::string rate_profile_csv(const BacktestResult &result, std::span<const int> years) {
    const auto &space = result.q_init.space();
    std::string out = "gender,age,year,q_init,q_tree\n";
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto x = space.feature_at(i);
        if (!years.empty() && std::find(years.begin(), years.end(), x.year) == years.end()) {
            continue;
        }
        out += to_string(x.gender);
        out += ',' + std::to_string(x.age) + ',' + std::to_string(x.year) + ',' +
               text::format_double(result.q_init.rate(i)) + ',' +
               text::format_double(result.q_tree.rate(i)) + '\n';
    }
    return out;
}

std::string delta_fill(double delta, double white_band, double max_abs) {
    return delta_rgb(delta, white_band, max_abs).hex();
}

std::string delta_heatmap_svg(const BacktestResult &result, Gender gender, double white_band) {
    if (!(white_band >= 0.0)) {
        throw std::invalid_argument("white band must be >= 0");
    }
    const auto &space = result.q_init.space();
    if (!space.has_gender(gender)) {
        throw DomainError("no " + std::string(to_string(gender)) + " cells in the result");
    }
    const auto ages = space.ages();
    const auto years = space.years();
    double max_abs = 0.0;
    for (const auto d : result.delta) {
        max_abs = std::max(max_abs, std::abs(d));
    }

    const double cell_w = std::max(2.0, 800.0 / static_cast<double>(years.size()));
    const double cell_h = std::max(2.0, 500.0 / static_cast<double>(ages.size()));
    const double left = 60.0;
    const double top = 40.0;
    const double plot_w = cell_w * static_cast<double>(years.size());
    const double plot_h = cell_h * static_cast<double>(ages.size());
    detail::Svg svg(left + plot_w + 30.0, top + plot_h + 50.0);
    svg.text(left, 24.0,
             "relative change mu - 1 (" + std::string(to_string(gender)) + ", " +
                 std::string(to_string(result.initial_model)) + "), white for |delta| <= " +
                 text::format_double(white_band),
             13.0);

    for (int a = ages.first; a <= ages.last; ++a) {
        for (int t = years.first; t <= years.last; ++t) {
            const auto i = space.index({gender, a, t});
            const double x = left + cell_w * (t - years.first);
            // Age grows upwards.
            const double y = top + cell_h * (ages.last - a);
            svg.rect(x, y, cell_w, cell_h, delta_rgb(result.delta[i], white_band, max_abs));
        }
    }

    const detail::Rgb black{0, 0, 0};
    svg.line(left, top + plot_h, left + plot_w, top + plot_h, black);
    svg.line(left, top, left, top + plot_h, black);
    const int year_step = tick_step(years.size());
    for (int t = years.first; t <= years.last; ++t) {
        if (t % year_step == 0) {
            const double x = left + cell_w * (t - years.first + 0.5);
            svg.line(x, top + plot_h, x, top + plot_h + 4.0, black);
            svg.text(x, top + plot_h + 16.0, std::to_string(t), 10.0, "middle");
        }
    }
    const int age_step = tick_step(ages.size());
    for (int a = ages.first; a <= ages.last; ++a) {
        if (a % age_step == 0) {
            const double y = top + cell_h * (ages.last - a + 0.5);
            svg.line(left - 4.0, y, left, y, black);
            svg.text(left - 6.0, y + 3.0, std::to_string(a), 10.0, "end");
        }
    }
    svg.text(left + plot_w / 2.0, top + plot_h + 36.0, "calendar year", 11.0, "middle");
    svg.text(14.0, top + plot_h / 2.0, "age", 11.0, "middle");
    return svg.finish();
}

std::vector<std::filesystem::path> export_delta_heatmap(const BacktestResult &result,
                                                        double white_band,
                                                        const std::filesystem::path &dir,
                                                        bool svg) {
    std::vector<std::filesystem::path> written;
    const auto csv_path = dir / "delta.csv";
    write_text_file(csv_path, delta_csv(result));
    written.push_back(csv_path);
    if (svg) {
        for (const auto g : result.q_init.space().genders()) {
            const auto path = dir / ("delta_" + std::string(to_string(g)) + ".svg");
            write_text_file(path, delta_heatmap_svg(result, g, white_band));
            written.push_back(path);
        }
    }
    return written;
}

} // namespace mortboost
