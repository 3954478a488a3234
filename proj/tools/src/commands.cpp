#include "commands.hpp"

#include "manifest.hpp"

#include "mortboost/boost_backtest.hpp"
#include "mortboost/cod_boost.hpp"
#include "mortboost/errors.hpp"
#include "mortboost/hmd_ingest.hpp"
#include "mortboost/lc_model.hpp"
#include "mortboost/rh_model.hpp"
#include "mortboost/synth_oracle.hpp"
#include "mortboost/text.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

namespace mortboost::cli {

namespace {

using json = nlohmann::ordered_json;

std::vector<Gender> parse_genders(std::string_view list) {
    std::vector<Gender> out;
    for (const auto token : text::split(list, ',')) {
        const auto g = parse_gender(text::trim(token));
        if (std::find(out.begin(), out.end(), g) != out.end()) {
            throw std::invalid_argument("gender listed twice");
        }
        out.push_back(g);
    }
    std::sort(out.begin(), out.end());
    return out;
}

json feature_json(const Feature &x) {
    return {{"gender", to_string(x.gender)}, {"age", x.age}, {"year", x.year}};
}

void record_warnings(Manifest &m, const std::vector<CellWarning> &warnings) {
    for (const auto &w : warnings) {
        m.warn(std::string(to_string(w.feature.gender)) + " " + std::to_string(w.feature.age) +
               " " + std::to_string(w.feature.year) + ": " + w.message);
    }
}

MortalityTable load_table(Manifest &m, const std::string &deaths_path,
                          const std::string &exposures_path, const FeatureSpace &space,
                          bool pool) {
    const auto deaths = parse_hmd_1x1(m.read_input(deaths_path), HmdKind::deaths);
    const auto exposures = parse_hmd_1x1(m.read_input(exposures_path), HmdKind::exposures);
    auto clipped = clip_to_space(deaths, exposures, space, pool);
    record_warnings(m, clipped.report.warnings);
    m.result()["ingest"] = {{"cells", space.size()},
                            {"total_deaths", clipped.table.total_deaths()},
                            {"total_exposure", clipped.table.total_exposure()},
                            {"rounding_delta_total", clipped.report.rounding_delta_total},
                            {"max_abs_rounding_delta", clipped.report.max_abs_rounding_delta}};
    return std::move(clipped.table);
}

MortalityTable load_exposure_only(Manifest &m, const std::string &exposures_path,
                                  const FeatureSpace &space, bool pool) {
    const auto exposures = parse_hmd_1x1(m.read_input(exposures_path), HmdKind::exposures);
    // The exposure grid doubles as a zero-death grid; only exposures are used.
    auto clipped = clip_to_space(exposures, exposures, space, pool);
    return MortalityTable(space,
                          std::vector<double>(clipped.table.exposures().begin(),
                                              clipped.table.exposures().end()),
                          std::vector<std::int64_t>(space.size(), 0));
}

json report_json(const FitReport &r) {
    return {{"converged", r.converged},
            {"iterations", r.iterations},
            {"deviance", r.deviance()},
            {"floored_ages", r.floored_ages},
            {"near_zero_kappa", r.near_zero_kappa},
            {"weak_cohorts", r.weak_cohorts}};
}

json tree_json(const PoissonTree &tree) {
    json j = {{"nodes", tree.nodes().size()},
              {"leaves", tree.leaf_count()},
              {"splits", tree.split_count()},
              {"root_deviance", tree.root().deviance},
              {"leaf_deviance", tree.total_leaf_deviance()},
              {"split_gains", tree.split_gains()}};
    if (const auto &s = tree.root().split) {
        j["first_split"] = std::string(to_string(s->feature));
    }
    return j;
}

TreeConfig tree_config(double cp, std::size_t min_bucket, std::size_t max_depth,
                       TreeConfig base = {}) {
    base.cp = cp;
    base.min_bucket = min_bucket;
    base.max_depth = max_depth;
    base.validate();
    return base;
}

InitialModel parse_initial_model(std::string_view text) {
    if (text::iequals(text, "lc")) {
        return InitialModel::lc;
    }
    if (text::iequals(text, "rh")) {
        return InitialModel::rh;
    }
    if (text::iequals(text, "external")) {
        return InitialModel::external;
    }
    throw std::invalid_argument("initial model must be lc, rh or external");
}

RateSurface restrict_rates(const RateSurface &q, const FeatureSpace &space) {
    std::vector<double> rates(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto x = space.feature_at(i);
        if (!q.space().contains(x)) {
            throw DataError("fitted rates do not cover " + std::string(to_string(x.gender)) +
                            " age " + std::to_string(x.age) + " in " + std::to_string(x.year));
        }
        rates[i] = q.rate(x);
    }
    return RateSurface(space, std::move(rates));
}

std::string theta_truth_csv(const ThetaSurface &theta) {
    std::string out = "gender,age_group,year,cause,theta\n";
    const auto &space = theta.space();
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto x = space.feature_at(i);
        for (std::size_t k = 1; k <= theta.cause_count(); ++k) {
            out += to_string(x.gender);
            out += ',' + std::to_string(x.age) + ',' + std::to_string(x.year) + ',' +
                   std::to_string(k) + ',' + text::format_double(theta.theta(i, k)) + '\n';
        }
    }
    return out;
}

} // namespace

int run_fit(const FitOptions &opt) {
    const bool rh = opt.model == "rh";
    Manifest m("fit " + opt.model);
    const FeatureSpace space(parse_genders(opt.genders), parse_int_range(opt.ages),
                             parse_int_range(opt.years));
    FitConfig cfg = rh ? FitConfig::rh_defaults() : FitConfig::lc_defaults();
    if (opt.max_iter) {
        cfg.max_iterations = *opt.max_iter;
    }
    if (opt.tol) {
        cfg.deviance_tol = *opt.tol;
    }
    if (opt.rate_floor) {
        cfg.rate_floor = *opt.rate_floor;
    }
    cfg.validate();
    m.config() = {{"model", opt.model},
                  {"ages", opt.ages},
                  {"years", opt.years},
                  {"genders", opt.genders},
                  {"pool_top_age", !opt.no_pool},
                  {"max_iterations", cfg.max_iterations},
                  {"deviance_tol", cfg.deviance_tol},
                  {"rate_floor", cfg.rate_floor},
                  {"warm_start", opt.warm_start}};

    const auto table = load_table(m, opt.deaths, opt.exposures, space, !opt.no_pool);
    std::vector<LCParams> warm;
    if (!opt.warm_start.empty()) {
        if (!rh) {
            throw std::invalid_argument("--warm-start applies to rh fits only");
        }
        warm = read_lc_params_csv(m.read_input(opt.warm_start));
    }

    bool converged = true;
    json fits = json::object();
    std::string params_csv;
    RateSurface qfit(space, std::vector<double>(space.size(), 0.0));
    if (rh) {
        std::vector<RHParams> params;
        for (const auto g : space.genders()) {
            std::optional<LCParams> start;
            for (const auto &p : warm) {
                if (p.gender == g) {
                    start = p;
                }
            }
            if (!warm.empty() && !start) {
                throw DataError("warm start has no " + std::string(to_string(g)) + " parameters");
            }
            auto fit = fit_rh(table, g, cfg, start);
            converged = converged && fit.report.converged;
            auto j = report_json(fit.report);
            j["constraint_violation"] = constraint_violation(fit.params);
            j["warm_started"] = start.has_value();
            if (start) {
                j["warm_start_deviance"] = lc_deviance(*start, table);
            }
            fits[std::string(to_string(g))] = j;
            params.push_back(std::move(fit.params));
        }
        params_csv = write_params_csv(params);
        qfit = fitted_rates(params, space);
    } else {
        std::vector<LCParams> params;
        for (const auto g : space.genders()) {
            auto fit = fit_lc(table, g, cfg);
            converged = converged && fit.report.converged;
            auto j = report_json(fit.report);
            j["constraint_violation"] = constraint_violation(fit.params);
            fits[std::string(to_string(g))] = j;
            params.push_back(std::move(fit.params));
        }
        params_csv = write_params_csv(params);
        qfit = fitted_rates(params, space);
    }
    for (const auto &[gender, j] : fits.items()) {
        if (!j["converged"].get<bool>()) {
            m.warn(gender + " fit did not converge");
        }
        if (j["near_zero_kappa"].get<bool>()) {
            m.warn(gender + " period index is near zero; age sensitivities are unidentified");
        }
    }
    m.result()["converged"] = converged;
    m.result()["fits"] = fits;
    m.write_output(opt.out, "params.csv", params_csv);
    m.write_output(opt.out, "qfit.csv", write_rates_csv(qfit));
    m.write(opt.out);
    if (!converged) {
        std::cerr << "mortboost: fit did not converge; outputs written with converged=false\n";
        return not_converged;
    }
    return ok;
}

int run_check(const CheckOptions &opt) {
    Manifest m("check");
    m.config() = {{"params", opt.params}, {"qfit", opt.qfit}, {"tol", opt.tol}};
    const auto text = m.read_input(opt.params);
    const bool rh = text.find(",beta2,") != std::string::npos;
    bool pass = true;
    json checks = json::object();
    const auto report = [&](Gender g, double violation) {
        const bool good = violation <= opt.tol;
        pass = pass && good;
        checks[std::string(to_string(g))] = {{"constraint_violation", violation}, {"ok", good}};
        std::cout << to_string(g) << ": constraint violation "
                  << text::format_double(violation) << (good ? " ok" : " FAILED") << '\n';
    };
    if (rh) {
        for (const auto &p : read_rh_params_csv(text)) {
            report(p.gender, constraint_violation(p));
        }
    } else {
        for (const auto &p : read_lc_params_csv(text)) {
            report(p.gender, constraint_violation(p));
        }
    }
    if (!opt.qfit.empty()) {
        const auto q = read_rates_csv(m.read_input(opt.qfit));
        m.result()["qfit_cells"] = q.space().size();
        std::cout << "qfit: " << q.space().size() << " cells, rates in [0, 1]\n";
    }
    m.result()["model"] = rh ? "rh" : "lc";
    m.result()["checks"] = checks;
    m.result()["ok"] = pass;
    if (!opt.out.empty()) {
        m.write(opt.out);
    }
    return pass ? ok : data;
}

int run_backtest(const BacktestOptions &opt) {
    Manifest m("backtest");
    const auto cfg = tree_config(opt.cp, opt.min_bucket, opt.max_depth);
    if (!(opt.white_band >= 0.0)) {
        throw std::invalid_argument("white band must be >= 0");
    }
    const auto model = parse_initial_model(opt.initial_model);
    m.config() = {{"cp", cfg.cp},
                  {"min_bucket", cfg.min_bucket},
                  {"max_depth", cfg.max_depth},
                  {"initial_model", to_string(model)},
                  {"years_to_plot", opt.years_to_plot},
                  {"white_band", opt.white_band},
                  {"svg", !opt.no_svg},
                  {"pool_top_age", !opt.no_pool}};
    const auto q = read_rates_csv(m.read_input(opt.qfit));
    const auto table = load_table(m, opt.deaths, opt.exposures, q.space(), !opt.no_pool);
    const auto result = backtest(q, table, cfg, model);

    auto [lo, hi] = std::minmax_element(result.mu_hat.begin(), result.mu_hat.end());
    m.result()["working_points"] = result.working_points;
    m.result()["dropped"] = json::array();
    for (const auto &x : result.dropped) {
        m.result()["dropped"].push_back(feature_json(x));
    }
    m.result()["tree"] = tree_json(result.tree);
    m.result()["mu_min"] = *lo;
    m.result()["mu_max"] = *hi;

    m.write_output(opt.out, "delta.csv", delta_csv(result));
    m.write_output(opt.out, "tree.txt", serialize_tree(result.tree));
    m.write_output(opt.out, "qtree.csv", write_rates_csv(result.q_tree));
    if (!opt.years_to_plot.empty()) {
        for (const auto y : opt.years_to_plot) {
            if (!q.space().years().contains(y)) {
                throw std::invalid_argument("year " + std::to_string(y) + " is outside the data");
            }
        }
        m.write_output(opt.out, "rate_profile.csv", rate_profile_csv(result, opt.years_to_plot));
    }
    if (!opt.no_svg) {
        for (const auto g : q.space().genders()) {
            m.write_output(opt.out, "delta_" + std::string(to_string(g)) + ".svg",
                           delta_heatmap_svg(result, g, opt.white_band));
        }
    }
    m.write(opt.out);
    return ok;
}

int run_cod(const CodOptions &opt) {
    Manifest m("cod");
    const auto cfg = tree_config(opt.cp, opt.min_bucket, opt.max_depth, cod_tree_defaults());
    const auto init = parse_theta_init(opt.theta_init);
    if (opt.all_cause_from_deaths && opt.deaths.empty()) {
        throw std::invalid_argument("--all-cause-from-deaths needs --deaths");
    }
    const auto q = read_rates_csv(m.read_input(opt.qfit));
    const auto buckets = AgeBucketing::parse(opt.buckets, q.space().ages());
    m.config() = {{"buckets", buckets.to_spec()},
                  {"cp", cfg.cp},
                  {"min_bucket", cfg.min_bucket},
                  {"max_depth", cfg.max_depth},
                  {"causes", opt.causes},
                  {"theta_init", to_string(init)},
                  {"smooth_window", opt.smooth_window},
                  {"all_cause_from_deaths", opt.all_cause_from_deaths},
                  {"svg", !opt.no_svg},
                  {"pool_top_age", !opt.no_pool}};
    const auto cod_text = m.read_input(opt.cod);
    if (opt.causes == 0) {
        throw std::invalid_argument("--causes must be >= 1");
    }
    const auto registry =
        opt.causes == 12 ? CauseRegistry::swiss_default() : CauseRegistry::numbered(opt.causes);
    const auto cod = parse_cod_csv(cod_text, buckets, registry);
    const FeatureSpace single(cod.space().genders(), q.space().ages(), cod.space().years());
    const auto rates_single = restrict_rates(q, single);

    MortalityTable table = opt.deaths.empty()
                               ? load_exposure_only(m, opt.exposures, single, !opt.no_pool)
                               : load_table(m, opt.deaths, opt.exposures, single, !opt.no_pool);
    const auto condensed = aggregate_rates(rates_single, table, buckets);
    std::optional<std::vector<std::int64_t>> all_cause;
    if (!opt.deaths.empty()) {
        const auto condensed_table = condense_table(table, buckets);
        for (const auto &d : validate_cause_totals(cod, condensed_table)) {
            m.warn("cause counts " + std::to_string(d.cause_sum) + " exceed all-cause deaths " +
                   std::to_string(d.all_cause) + " at " + std::string(to_string(d.feature.gender)) +
                   " bucket " + std::to_string(d.feature.age) + " " +
                   std::to_string(d.feature.year));
        }
        if (opt.all_cause_from_deaths) {
            all_cause.emplace(condensed_table.deaths().begin(), condensed_table.deaths().end());
        }
    }

    const auto theta0 = init_theta(cod, init);
    const auto working = make_cod_working_data(cod, condensed, theta0);
    const auto est = estimate_theta_tree(cod, working, theta0, cfg);
    const auto residuals =
        all_cause ? pearson_residuals(cod, est.raw, std::span<const std::int64_t>(*all_cause))
                  : pearson_residuals(cod, est.raw);

    json initial = json::array();
    for (std::size_t k = 1; k <= cod.cause_count(); ++k) {
        initial.push_back({{"cause", cod.causes().label(k)}, {"theta", theta0.theta(0, k)}});
    }
    m.result()["causes"] = cod.cause_count();
    m.result()["theta_init"] = initial;
    m.result()["working_points"] = working.points.size();
    m.result()["missing_points"] =
        std::count_if(working.points.begin(), working.points.end(),
                      [](const WorkingPoint &p) { return !p.response; });
    m.result()["dropped_points"] = working.dropped;
    m.result()["tree"] = tree_json(est.tree);
    json partial = json::array();
    for (std::size_t i = 0; i < cod.space().size(); ++i) {
        if (residuals.partial_total[i]) {
            partial.push_back(feature_json(cod.space().feature_at(i)));
        }
    }
    m.result()["partial_all_cause"] = partial;
    if (!partial.empty()) {
        m.warn(std::to_string(partial.size()) +
               " features use an all-cause total summed over incomplete causes");
    }

    m.write_output(opt.out, "theta.csv", theta_csv(cod, est));
    if (opt.smooth_window > 1) {
        m.write_output(opt.out, "theta_smoothed.csv",
                       smoothed_theta_csv(cod, est, opt.smooth_window));
    }
    m.write_output(opt.out, "residuals.csv", residuals_csv(cod, residuals));
    m.write_output(opt.out, "tree.txt", serialize_tree(est.tree));
    if (!opt.no_svg) {
        m.write_output(opt.out, "theta.svg", theta_svg(cod, est.raw, opt.smooth_window));
        m.write_output(opt.out, "residuals.svg", residuals_svg(cod, residuals));
    }
    m.write(opt.out);
    return ok;
}

int run_simulate(const SimulateOptions &opt) {
    Manifest m("simulate");
    auto cfg = parse_sim_config(m.read_input(opt.spec));
    if (opt.seed) {
        cfg.seed = *opt.seed;
    }
    const auto spec = build_sim_spec(cfg);
    m.config() = {{"seed", cfg.seed},
                  {"ages", std::to_string(cfg.ages.first) + ":" + std::to_string(cfg.ages.last)},
                  {"years",
                   std::to_string(cfg.years.first) + ":" + std::to_string(cfg.years.last)},
                  {"exposure", cfg.exposure},
                  {"causes", cfg.cause_weights.size()}};

    m.write_output(opt.out, "rates.csv", write_rates_csv(spec.q));
    if (spec.theta) {
        const auto sample = sample_cause_deaths(spec);
        m.write_output(opt.out, "deaths.txt",
                       write_hmd_1x1(sample.all_cause, HmdKind::deaths, "Synthetic, Deaths"));
        m.write_output(opt.out, "exposures.txt",
                       write_hmd_1x1(sample.all_cause, HmdKind::exposures, "Synthetic, Exposures"));
        m.write_output(opt.out, "cod.csv", write_cod_csv(sample.causes));
        m.write_output(opt.out, "theta.csv", theta_truth_csv(*spec.theta));
        m.result()["total_deaths"] = sample.all_cause.total_deaths();
        m.result()["buckets"] = spec.buckets->to_spec();
    } else {
        const auto table = sample_deaths(spec);
        m.write_output(opt.out, "deaths.txt",
                       write_hmd_1x1(table, HmdKind::deaths, "Synthetic, Deaths"));
        m.write_output(opt.out, "exposures.txt",
                       write_hmd_1x1(table, HmdKind::exposures, "Synthetic, Exposures"));
        m.result()["total_deaths"] = table.total_deaths();
    }
    m.write(opt.out);
    return ok;
}

} // namespace mortboost::cli
