#pragma once

#include "mortboost/domain.hpp"
#include "mortboost/poisson_tree.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mortboost {

enum class InitialModel { lc, rh, external };

std::string_view to_string(InitialModel model) noexcept;

struct WorkingData {
    std::vector<WorkingPoint> points;
    /// Feature-space index of each point.
    std::vector<std::size_t> cells;
    /// Cells with d = 0 and D = 0.
    std::vector<Feature> dropped;
};

/// One point per cell with volume d = q_init * E and response D. Throws
/// DataError when d = 0 but D > 0.
WorkingData make_working_data(const RateSurface &q_init, const MortalityTable &table);

struct BacktestResult {
    RateSurface q_init;
    /// min(1, mu_hat * q_init).
    RateSurface q_tree;
    /// Dense over the table's space, including dropped cells.
    std::vector<double> mu_hat;
    /// mu_hat - 1.
    std::vector<double> delta;
    PoissonTree tree;
    InitialModel initial_model = InitialModel::external;
    std::size_t working_points = 0;
    std::vector<Feature> dropped;
};

BacktestResult backtest(const RateSurface &q_init, const MortalityTable &table,
                        const TreeConfig &cfg = {},
                        InitialModel initial_model = InitialModel::external);

/// gender,age,year,cohort,delta
std::string delta_csv(const BacktestResult &result);

/// gender,age,year,q_init,q_tree for the listed years (all years when empty).
std::string rate_profile_csv(const BacktestResult &result, std::span<const int> years);

/// Diverging fill: white for |delta| <= white_band, otherwise red (positive)
/// or blue (negative) with intensity |delta| / max_abs.
std::string delta_fill(double delta, double white_band, double max_abs);

/// Age x year heatmap of delta for one gender.
std::string delta_heatmap_svg(const BacktestResult &result, Gender gender,
                              double white_band = 0.05);

/// Writes delta.csv and, with `svg`, delta_<gender>.svg into `dir`.
/// Returns the written paths.
std::vector<std::filesystem::path> export_delta_heatmap(const BacktestResult &result,
                                                        double white_band,
                                                        const std::filesystem::path &dir,
                                                        bool svg = true);

} // namespace mortboost
