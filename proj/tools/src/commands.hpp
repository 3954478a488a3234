#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mortboost::cli {

enum ExitCode : int { ok = 0, usage = 2, data = 3, not_converged = 4, internal = 5 };

struct FitOptions {
    std::string model; // lc or rh
    std::string deaths;
    std::string exposures;
    std::string ages;
    std::string years;
    std::string genders = "female,male";
    std::string out;
    std::optional<std::size_t> max_iter;
    std::optional<double> tol;
    std::optional<double> rate_floor;
    std::string warm_start;
    bool no_pool = false;
};

struct CheckOptions {
    std::string params;
    std::string qfit;
    double tol = 1e-10;
    std::string out;
};

struct BacktestOptions {
    std::string qfit;
    std::string deaths;
    std::string exposures;
    std::string out;
    double cp = 2e-3;
    std::size_t min_bucket = 10;
    std::size_t max_depth = 30;
    std::string initial_model = "external";
    std::vector<int> years_to_plot;
    double white_band = 0.05;
    bool no_svg = false;
    bool no_pool = false;
};

struct CodOptions {
    std::string cod;
    std::string qfit;
    std::string exposures;
    std::string deaths;
    bool all_cause_from_deaths = false;
    std::string buckets = "0;1-14;15-44;45-64;65-84;85+";
    /// 12 uses the Swiss cause labels; other counts are numbered causes.
    std::size_t causes = 12;
    std::string out;
    double cp = 2e-3;
    std::size_t min_bucket = 10;
    std::size_t max_depth = 30;
    std::string theta_init = "uniform";
    std::size_t smooth_window = 5;
    bool no_svg = false;
    bool no_pool = false;
};

struct SimulateOptions {
    std::string spec;
    std::string out;
    std::optional<std::uint64_t> seed;
};

int run_fit(const FitOptions &opt);
int run_check(const CheckOptions &opt);
int run_backtest(const BacktestOptions &opt);
int run_cod(const CodOptions &opt);
int run_simulate(const SimulateOptions &opt);

} // namespace mortboost::cli
