#include "mortboost/cause_table.hpp"

#include "mortboost/errors.hpp"
#include "mortboost/text.hpp"

#include <algorithm>

namespace mortboost {

CauseRegistry::CauseRegistry(std::vector<std::string> labels) : labels_{std::move(labels)} {
    if (labels_.empty()) {
        throw std::invalid_argument("cause registry needs at least one cause");
    }
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (text::iequals(labels_[i], labels_[j])) {
                throw std::invalid_argument("duplicate cause label '" + labels_[i] + "'");
            }
        }
    }
}

CauseRegistry CauseRegistry::swiss_default() {
    return CauseRegistry({"infectious diseases", "malignant tumors", "diabetes mellitus",
                          "dementia", "circulatory system", "respiratory organs",
                          "alcoholic liver cirrhosis", "urinary organs",
                          "congenital malformation", "perinatal causes",
                          "accidents and violent impacts", "others/unknown"});
}

CauseRegistry CauseRegistry::numbered(std::size_t count) {
    std::vector<std::string> labels;
    for (std::size_t k = 1; k <= count; ++k) {
        labels.push_back(std::to_string(k));
    }
    return CauseRegistry(std::move(labels));
}

const std::string &CauseRegistry::label(std::size_t cause) const {
    if (cause == 0 || cause > labels_.size()) {
        throw DomainError("cause index " + std::to_string(cause) + " out of range");
    }
    return labels_[cause - 1];
}

std::optional<std::size_t> CauseRegistry::resolve(std::string_view token) const {
    const auto t = text::trim(token);
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (text::iequals(labels_[i], t)) {
            return i + 1;
        }
    }
    if (const auto index = text::parse_int(t); index && *index >= 1 &&
                                               static_cast<std::size_t>(*index) <= labels_.size()) {
        return static_cast<std::size_t>(*index);
    }
    return std::nullopt;
}

CauseDeathTable::CauseDeathTable(FeatureSpace space, AgeBucketing buckets, CauseRegistry causes,
                                 std::vector<Count> counts)
    : space_{std::move(space)}, buckets_{std::move(buckets)}, causes_{std::move(causes)},
      counts_{std::move(counts)} {
    if (space_.ages() != IntRange{1, static_cast<int>(buckets_.size())}) {
        throw std::invalid_argument("cause table age axis must be bucket indices 1..I");
    }
    if (counts_.size() != space_.size() * causes_.size()) {
        throw std::invalid_argument("cause table size mismatch");
    }
    for (const auto &c : counts_) {
        if (c && *c < 0) {
            throw DataError("negative cause-of-death count");
        }
    }
}

const CauseDeathTable::Count &CauseDeathTable::count(const Feature &x, std::size_t cause) const {
    if (cause == 0 || cause > causes_.size()) {
        throw DomainError("cause index " + std::to_string(cause) + " out of range");
    }
    return counts_[cell_index(space_.index(x), cause)];
}

std::vector<std::int64_t> CauseDeathTable::present_totals() const {
    std::vector<std::int64_t> totals(space_.size(), 0);
    for (std::size_t i = 0; i < space_.size(); ++i) {
        for (std::size_t k = 1; k <= causes_.size(); ++k) {
            if (const auto &c = counts_[cell_index(i, k)]) {
                totals[i] += *c;
            }
        }
    }
    return totals;
}

bool CauseDeathTable::has_missing(std::size_t feature_index) const noexcept {
    for (std::size_t k = 1; k <= causes_.size(); ++k) {
        if (!counts_[cell_index(feature_index, k)]) {
            return true;
        }
    }
    return false;
}

CauseDeathTable condense_causes(const CauseDeathTable &table, const AgeBucketing &coarse) {
    const auto &fine = table.buckets();
    if (fine.ages() != coarse.ages()) {
        throw std::invalid_argument("bucketings cover different age ranges");
    }
    // Each fine bucket must sit inside one coarse bucket.
    std::vector<std::size_t> target(fine.size() + 1, 0);
    for (std::size_t b = 1; b <= fine.size(); ++b) {
        const auto range = fine.bucket(b);
        const auto first = coarse.bucket_of(range.first);
        if (coarse.bucket_of(range.last) != first) {
            throw std::invalid_argument("fine bucket " + fine.label(b) +
                                        " straddles a coarse bucket boundary");
        }
        target[b] = first;
    }
    FeatureSpace space(table.space().genders(), {1, static_cast<int>(coarse.size())},
                       table.space().years());
    const auto k_count = table.cause_count();
    std::vector<CauseDeathTable::Count> counts(space.size() * k_count, std::int64_t{0});
    for (std::size_t i = 0; i < table.space().size(); ++i) {
        const auto x = table.space().feature_at(i);
        const auto j = space.index({x.gender, static_cast<int>(target[static_cast<std::size_t>(x.age)]), x.year});
        for (std::size_t k = 1; k <= k_count; ++k) {
            auto &dst = counts[j * k_count + (k - 1)];
            const auto &src = table.counts()[table.cell_index(i, k)];
            if (!src || !dst) {
                dst.reset();
            } else {
                *dst += *src;
            }
        }
    }
    return CauseDeathTable(std::move(space), coarse, table.causes(), std::move(counts));
}

ThetaSurface::ThetaSurface(FeatureSpace space, std::size_t cause_count, std::vector<double> theta)
    : space_{std::move(space)}, cause_count_{cause_count}, theta_{std::move(theta)} {
    if (cause_count_ == 0) {
        throw std::invalid_argument("theta surface needs at least one cause");
    }
    if (theta_.size() != space_.size() * cause_count_) {
        throw std::invalid_argument("theta surface size mismatch");
    }
    for (const auto v : theta_) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw DataError("cause probability outside [0, 1]");
        }
    }
}

} // namespace mortboost
