#pragma once

#include "mortboost/cause_table.hpp"
#include "mortboost/domain.hpp"
#include "mortboost/poisson_tree.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mortboost {

enum class ThetaInit { uniform, empirical };

ThetaInit parse_theta_init(std::string_view text);
std::string_view to_string(ThetaInit mode) noexcept;

/// theta(k|x) = 1/K on every feature of `space`.
ThetaSurface init_theta(const FeatureSpace &space, std::size_t cause_count);

/// Uniform, or the global relative frequencies sum_x D_{x,k} / sum D over
/// the counts that are present.
ThetaSurface init_theta(const CauseDeathTable &cod, ThetaInit mode);

/// Split features for the cause pipeline: gender, age bucket, year, cause.
TreeConfig cod_tree_defaults();

struct CodWorkingData {
    std::vector<WorkingPoint> points;
    /// Cell index (feature-major, cause-minor) of each point.
    std::vector<std::size_t> cells;
    /// Cells without volume and without deaths.
    std::size_t dropped = 0;
};

/// d_{x,k} = theta0(k|x) q~(x) E~(x) with the cause attached as a
/// categorical feature. Missing counts become points without a response.
/// Throws DataError when d = 0 but D > 0.
CodWorkingData make_cod_working_data(const CauseDeathTable &cod, const CondensedRates &rates,
                                     const ThetaSurface &theta0);

struct ThetaEstimate {
    /// clamp(mu * theta0, 0, 1); the sum over causes is not constrained.
    ThetaSurface raw;
    /// raw divided by its sum over causes with data; 0 for missing cells.
    ThetaSurface normalized;
    /// mu(x, k) per cell.
    std::vector<double> mu;
    PoissonTree tree;
};

ThetaEstimate estimate_theta_tree(const CauseDeathTable &cod, const CodWorkingData &working,
                                  const ThetaSurface &theta0,
                                  const TreeConfig &cfg = cod_tree_defaults());

struct ResidualGrid {
    FeatureSpace space;
    std::size_t cause_count = 0;
    /// Feature-major, cause-minor.
    std::vector<double> residual;
    /// Features whose D_x was summed over an incomplete set of causes.
    std::vector<bool> partial_total;

    double at(std::size_t feature_index, std::size_t cause) const noexcept {
        return residual[feature_index * cause_count + (cause - 1)];
    }
};

/// (D_{x,k} - theta D_x) / sqrt(theta D_x), or 0 when the denominator is 0
/// or the count is missing. D_x is the sum over present causes unless
/// `all_cause` (condensed space order) is supplied.
ResidualGrid pearson_residuals(const CauseDeathTable &cod, const ThetaSurface &theta,
                               std::optional<std::span<const std::int64_t>> all_cause =
                                   std::nullopt);

/// Centered moving average; the window shrinks symmetrically at the ends.
std::vector<double> moving_average(std::span<const double> series, std::size_t window);

/// gender,age_group,year,cause,theta_raw,theta_norm
std::string theta_csv(const CauseDeathTable &cod, const ThetaEstimate &estimate);

/// Same key columns with theta_raw and theta_raw_smoothed, smoothing each
/// (gender, bucket, cause) series over years.
std::string smoothed_theta_csv(const CauseDeathTable &cod, const ThetaEstimate &estimate,
                               std::size_t window);

/// gender,age_group,year,cause,delta,missing
std::string residuals_csv(const CauseDeathTable &cod, const ResidualGrid &residuals);

/// theta over years, one panel per (gender, bucket), one line per cause.
std::string theta_svg(const CauseDeathTable &cod, const ThetaSurface &theta,
                      std::size_t smooth_window = 0);

/// Residuals against year, one panel per cause.
std::string residuals_svg(const CauseDeathTable &cod, const ResidualGrid &residuals);

} // namespace mortboost
