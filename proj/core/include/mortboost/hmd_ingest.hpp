#pragma once

#include "mortboost/cause_table.hpp"
#include "mortboost/domain.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mortboost {

enum class HmdKind { deaths, exposures };

/// One row of an HMD 1x1 file. Missing values ("." in the file) are nullopt.
struct RawHmdRecord {
    int year = 0;
    int age = 0;
    bool open_age = false; // "110+" style row
    std::optional<double> female;
    std::optional<double> male;
    std::optional<double> total;
    std::size_t line = 0;

    std::optional<double> value(Gender gender) const noexcept {
        return gender == Gender::female ? female : male;
    }
};

/// Parsed HMD 1x1 file keyed by (age, year).
class HmdGrid {
  public:
    HmdGrid(HmdKind kind, std::vector<RawHmdRecord> records);

    HmdKind kind() const noexcept { return kind_; }
    const std::vector<RawHmdRecord> &records() const noexcept { return records_; }
    const RawHmdRecord *find(int age, int year) const noexcept;

    IntRange ages() const noexcept { return ages_; }
    IntRange years() const noexcept { return years_; }

    /// Number of (gender, age, year) values present in the file.
    std::size_t cell_count() const noexcept;

  private:
    HmdKind kind_;
    std::vector<RawHmdRecord> records_;
    std::map<std::pair<int, int>, std::size_t> index_;
    IntRange ages_;
    IntRange years_;
};

/// Whitespace-separated Year Age Female Male Total rows after a header block
/// ending in the column-name line. Throws ParseError with the line number.
HmdGrid parse_hmd_1x1(std::string_view text, HmdKind kind);

struct ClipReport {
    /// Sum over cells of (rounded deaths - pooled fractional deaths).
    double rounding_delta_total = 0.0;
    double max_abs_rounding_delta = 0.0;
    std::vector<CellWarning> warnings;
};

struct ClippedTable {
    MortalityTable table;
    ClipReport report;
};

/// Restricts deaths/exposure grids to `space`. With `pool_top_age`, every row
/// at age >= space.ages().last is summed into the top age. Deaths are rounded
/// to integers after pooling.
ClippedTable clip_to_space(const HmdGrid &deaths, const HmdGrid &exposures,
                           const FeatureSpace &space, bool pool_top_age);

std::string write_hmd_1x1(const MortalityTable &table, HmdKind kind, std::string_view title);

/// CSV with header gender,age_group,year,cause,deaths. Empty deaths is
/// missing; rows not present in the file are missing too. The cause column
/// takes a 1-based index or a registry label.
CauseDeathTable parse_cod_csv(std::string_view text, const AgeBucketing &buckets,
                              const CauseRegistry &registry = CauseRegistry::swiss_default());

std::string write_cod_csv(const CauseDeathTable &table);

struct CauseDiscrepancy {
    Feature feature;
    std::int64_t cause_sum = 0;
    std::int64_t all_cause = 0;
};

/// Features where the present cause counts exceed the all-cause deaths of a
/// condensed all-cause table on the same space.
std::vector<CauseDiscrepancy> validate_cause_totals(const CauseDeathTable &causes,
                                                    const MortalityTable &all_cause);

} // namespace mortboost
