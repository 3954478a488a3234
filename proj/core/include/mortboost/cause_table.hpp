#pragma once

#include "mortboost/domain.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mortboost {

/// Ordered list of cause-of-death labels; causes are addressed 1..K.
class CauseRegistry {
  public:
    explicit CauseRegistry(std::vector<std::string> labels);

    /// The twelve Swiss cause categories.
    static CauseRegistry swiss_default();
    /// Causes labelled "1".."K".
    static CauseRegistry numbered(std::size_t count);

    std::size_t size() const noexcept { return labels_.size(); }
    const std::string &label(std::size_t cause) const;
    /// Resolves a 1-based index or a case-insensitive label.
    std::optional<std::size_t> resolve(std::string_view token) const;

    const std::vector<std::string> &labels() const noexcept { return labels_; }

    friend bool operator==(const CauseRegistry &, const CauseRegistry &) = default;

  private:
    std::vector<std::string> labels_;
};

/// Death counts D_{x,k} by condensed feature (gender, bucket, year) and cause.
/// A missing count is distinct from zero.
class CauseDeathTable {
  public:
    using Count = std::optional<std::int64_t>;

    /// `counts` is laid out feature-major (condensed space order), cause-minor.
    CauseDeathTable(FeatureSpace space, AgeBucketing buckets, CauseRegistry causes,
                    std::vector<Count> counts);

    /// Condensed space: the age axis holds bucket indices 1..I.
    const FeatureSpace &space() const noexcept { return space_; }
    const AgeBucketing &buckets() const noexcept { return buckets_; }
    const CauseRegistry &causes() const noexcept { return causes_; }
    std::size_t cause_count() const noexcept { return causes_.size(); }

    std::span<const Count> counts() const noexcept { return counts_; }
    /// cause is 1-based.
    const Count &count(const Feature &x, std::size_t cause) const;
    std::size_t cell_index(std::size_t feature_index, std::size_t cause) const noexcept {
        return feature_index * causes_.size() + (cause - 1);
    }

    /// Sum over causes with data, per condensed feature.
    std::vector<std::int64_t> present_totals() const;
    /// Whether any cause is missing for the feature.
    bool has_missing(std::size_t feature_index) const noexcept;

    friend bool operator==(const CauseDeathTable &, const CauseDeathTable &) = default;

  private:
    FeatureSpace space_;
    AgeBucketing buckets_;
    CauseRegistry causes_;
    std::vector<Count> counts_;
};

/// Sums a single-age cause table into coarser buckets. Missing propagates.
CauseDeathTable condense_causes(const CauseDeathTable &table, const AgeBucketing &coarse);

/// Conditional cause probabilities theta(k|x) on a condensed space.
class ThetaSurface {
  public:
    ThetaSurface(FeatureSpace space, std::size_t cause_count, std::vector<double> theta);

    const FeatureSpace &space() const noexcept { return space_; }
    std::size_t cause_count() const noexcept { return cause_count_; }
    std::span<const double> values() const noexcept { return theta_; }
    /// cause is 1-based.
    double theta(std::size_t feature_index, std::size_t cause) const noexcept {
        return theta_[feature_index * cause_count_ + (cause - 1)];
    }
    double theta(const Feature &x, std::size_t cause) const {
        return theta(space_.index(x), cause);
    }

  private:
    FeatureSpace space_;
    std::size_t cause_count_;
    std::vector<double> theta_;
};

} // namespace mortboost
