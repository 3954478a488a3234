#include "commands.hpp"

#include "mortboost/errors.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace mortboost::cli;

namespace {

constexpr const char *version = "0.1.0";

void add_tree_options(CLI::App *cmd, double &cp, std::size_t &min_bucket,
                      std::size_t &max_depth) {
    cmd->add_option("--cp", cp, "Minimum deviance reduction as a fraction of the root deviance")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--min-bucket", min_bucket, "Minimum points with a response per leaf")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--max-depth", max_depth, "Depth cap")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Poisson mortality models with one-step regression-tree boosting"};
    app.set_version_flag("--version", version);
    app.set_config("--config", "", "Read option values from a TOML/INI file; flags override it");
    app.require_subcommand(1);

    FitOptions fit;
    auto *fit_cmd = app.add_subcommand("fit", "Fit Lee-Carter or Renshaw-Haberman by Poisson ML");
    fit_cmd->add_option("model", fit.model, "lc or rh")
        ->required()
        ->check(CLI::IsMember({"lc", "rh"}));
    fit_cmd->add_option("--deaths", fit.deaths, "HMD 1x1 deaths file")->required();
    fit_cmd->add_option("--exposures", fit.exposures, "HMD 1x1 exposures file")->required();
    fit_cmd->add_option("--ages", fit.ages, "Age range A:B")->required();
    fit_cmd->add_option("--years", fit.years, "Year range T0:T1")->required();
    fit_cmd->add_option("--genders", fit.genders, "Comma-separated genders")
        ->capture_default_str();
    fit_cmd->add_option("--out", fit.out, "Output directory")->required();
    fit_cmd->add_option("--max-iter", fit.max_iter, "Iteration cap");
    fit_cmd->add_option("--tol", fit.tol, "Relative deviance tolerance");
    fit_cmd->add_option("--rate-floor", fit.rate_floor, "Lower bound on fitted rates");
    fit_cmd->add_option("--warm-start", fit.warm_start, "LC params.csv to start an rh fit from");
    fit_cmd->add_flag("--no-pool", fit.no_pool, "Do not pool ages above the top age");

    CheckOptions check;
    auto *check_cmd = app.add_subcommand("check", "Verify identifiability constraints of a fit");
    check_cmd->add_option("--params", check.params, "params.csv from fit")->required();
    check_cmd->add_option("--qfit", check.qfit, "qfit.csv to validate");
    check_cmd->add_option("--tol", check.tol, "Largest accepted violation")
        ->capture_default_str();
    check_cmd->add_option("--out", check.out, "Directory for manifest.json");

    BacktestOptions bt;
    auto *bt_cmd = app.add_subcommand("backtest", "Grow a Poisson tree on an initial rate surface");
    bt_cmd->add_option("--qfit", bt.qfit, "Initial rates (gender,age,year,q)")->required();
    bt_cmd->add_option("--deaths", bt.deaths, "HMD 1x1 deaths file")->required();
    bt_cmd->add_option("--exposures", bt.exposures, "HMD 1x1 exposures file")->required();
    bt_cmd->add_option("--out", bt.out, "Output directory")->required();
    add_tree_options(bt_cmd, bt.cp, bt.min_bucket, bt.max_depth);
    bt_cmd->add_option("--initial-model", bt.initial_model, "lc, rh or external")
        ->capture_default_str()
        ->check(CLI::IsMember({"lc", "rh", "external"}, CLI::ignore_case));
    bt_cmd->add_option("--years-to-plot", bt.years_to_plot, "Years for rate_profile.csv")
        ->delimiter(',');
    bt_cmd->add_option("--white-band", bt.white_band, "Heatmap white band for |delta|")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    bt_cmd->add_flag("--no-svg", bt.no_svg, "Skip SVG output");
    bt_cmd->add_flag("--no-pool", bt.no_pool, "Do not pool ages above the top age");

    CodOptions cod;
    auto *cod_cmd = app.add_subcommand("cod", "Estimate cause-of-death probabilities");
    cod_cmd->add_option("--cod", cod.cod, "Cause CSV (gender,age_group,year,cause,deaths)")
        ->required();
    cod_cmd->add_option("--qfit", cod.qfit, "Single-age rates (gender,age,year,q)")->required();
    cod_cmd->add_option("--exposures", cod.exposures, "HMD 1x1 exposures file")->required();
    cod_cmd->add_option("--deaths", cod.deaths, "HMD 1x1 deaths file for consistency checks");
    cod_cmd->add_flag("--all-cause-from-deaths", cod.all_cause_from_deaths,
                      "Use --deaths as the all-cause total in residuals");
    cod_cmd->add_option("--buckets", cod.buckets, "Age buckets")->capture_default_str();
    cod_cmd->add_option("--causes", cod.causes, "Cause count; 12 selects the Swiss labels")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cod_cmd->add_option("--out", cod.out, "Output directory")->required();
    add_tree_options(cod_cmd, cod.cp, cod.min_bucket, cod.max_depth);
    cod_cmd->add_option("--theta-init", cod.theta_init, "uniform or empirical")
        ->capture_default_str()
        ->check(CLI::IsMember({"uniform", "empirical"}));
    cod_cmd->add_option("--smooth-window", cod.smooth_window,
                        "Moving-average window in years for smoothed exports (0 or 1: off)")
        ->capture_default_str();
    cod_cmd->add_flag("--no-svg", cod.no_svg, "Skip SVG output");
    cod_cmd->add_flag("--no-pool", cod.no_pool, "Do not pool ages above the top age");

    SimulateOptions sim;
    auto *sim_cmd = app.add_subcommand("simulate", "Sample synthetic data in the input formats");
    sim_cmd->add_option("--spec", sim.spec, "Scenario file (key = value lines)")->required();
    sim_cmd->add_option("--out", sim.out, "Output directory")->required();
    sim_cmd->add_option("--seed", sim.seed, "Override the scenario seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::Success &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return usage;
    }

    try {
        if (*fit_cmd) {
            return run_fit(fit);
        }
        if (*check_cmd) {
            return run_check(check);
        }
        if (*bt_cmd) {
            return run_backtest(bt);
        }
        if (*cod_cmd) {
            return run_cod(cod);
        }
        if (*sim_cmd) {
            return run_simulate(sim);
        }
    } catch (const std::invalid_argument &e) {
        std::cerr << "mortboost: " << e.what() << '\n';
        return usage;
    } catch (const mortboost::DataError &e) {
        std::cerr << "mortboost: " << e.what() << '\n';
        return data;
    } catch (const mortboost::DomainError &e) {
        std::cerr << "mortboost: " << e.what() << '\n';
        return data;
    } catch (const std::exception &e) {
        std::cerr << "mortboost: internal error: " << e.what() << '\n';
        return internal;
    }
    return internal;
}
