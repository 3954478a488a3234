#include "mortboost/domain.hpp"

#include "mortboost/errors.hpp"
#include "mortboost/text.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mortboost {

std::string_view to_string(Gender gender) noexcept {
    return gender == Gender::female ? "female" : "male";
}

Gender parse_gender(std::string_view text) {
    const auto t = text::trim(text);
    if (text::iequals(t, "female") || text::iequals(t, "f")) {
        return Gender::female;
    }
    if (text::iequals(t, "male") || text::iequals(t, "m")) {
        return Gender::male;
    }
    throw DataError("unknown gender '" + std::string(t) + "'");
}

IntRange parse_int_range(std::string_view text) {
    const auto parts = text::split(text::trim(text), ':');
    if (parts.size() > 2) {
        throw std::invalid_argument("range must be A:B, got '" + std::string(text) + "'");
    }
    const auto first = text::parse_int(parts[0]);
    const auto last = parts.size() == 2 ? text::parse_int(parts[1]) : first;
    if (!first || !last || *last < *first) {
        throw std::invalid_argument("invalid range '" + std::string(text) + "'");
    }
    return {static_cast<int>(*first), static_cast<int>(*last)};
}

FeatureSpace::FeatureSpace(std::vector<Gender> genders, IntRange ages, IntRange years)
    : genders_{std::move(genders)}, ages_{ages}, years_{years} {
    if (genders_.empty()) {
        throw std::invalid_argument("feature space needs at least one gender");
    }
    std::sort(genders_.begin(), genders_.end());
    if (std::adjacent_find(genders_.begin(), genders_.end()) != genders_.end()) {
        throw std::invalid_argument("duplicate gender in feature space");
    }
    if (ages_.empty() || years_.empty()) {
        throw std::invalid_argument("feature space age and year ranges must be non-empty");
    }
    if (ages_.first < 0) {
        throw std::invalid_argument("ages must be non-negative");
    }
}

bool FeatureSpace::has_gender(Gender gender) const noexcept {
    return std::find(genders_.begin(), genders_.end(), gender) != genders_.end();
}

bool FeatureSpace::contains(const Feature &x) const noexcept {
    return has_gender(x.gender) && ages_.contains(x.age) && years_.contains(x.year);
}

std::size_t FeatureSpace::gender_index(Gender gender) const {
    const auto it = std::find(genders_.begin(), genders_.end(), gender);
    if (it == genders_.end()) {
        throw DomainError("gender " + std::string(to_string(gender)) + " not in feature space");
    }
    return static_cast<std::size_t>(it - genders_.begin());
}

std::size_t FeatureSpace::index(const Feature &x) const {
    if (!contains(x)) {
        throw DomainError("feature (" + std::string(to_string(x.gender)) + ", " +
                          std::to_string(x.age) + ", " + std::to_string(x.year) +
                          ") outside feature space");
    }
    const auto g = gender_index(x.gender);
    const auto a = static_cast<std::size_t>(x.age - ages_.first);
    const auto t = static_cast<std::size_t>(x.year - years_.first);
    return (g * ages_.size() + a) * years_.size() + t;
}

Feature FeatureSpace::feature_at(std::size_t index) const {
    const auto n_years = years_.size();
    const auto n_ages = ages_.size();
    const auto t = index % n_years;
    const auto a = (index / n_years) % n_ages;
    const auto g = index / (n_years * n_ages);
    return {genders_.at(g), ages_.first + static_cast<int>(a), years_.first + static_cast<int>(t)};
}

ExtendedFeature extend_feature(const Feature &x, const FeatureSpace &space) {
    if (!space.contains(x)) {
        throw DomainError("feature (" + std::string(to_string(x.gender)) + ", " +
                          std::to_string(x.age) + ", " + std::to_string(x.year) +
                          ") outside feature space");
    }
    return {x.gender, x.age, x.year};
}

MortalityTable::MortalityTable(FeatureSpace space, std::vector<double> exposure,
                               std::vector<std::int64_t> deaths)
    : space_{std::move(space)}, exposure_{std::move(exposure)}, deaths_{std::move(deaths)} {
    if (exposure_.size() != space_.size() || deaths_.size() != space_.size()) {
        throw std::invalid_argument("mortality table size does not match feature space");
    }
    for (std::size_t i = 0; i < exposure_.size(); ++i) {
        if (!(exposure_[i] >= 0.0) || !std::isfinite(exposure_[i])) {
            throw DataError("negative or non-finite exposure at cell " + std::to_string(i));
        }
        if (deaths_[i] < 0) {
            throw DataError("negative death count at cell " + std::to_string(i));
        }
        if (exposure_[i] == 0.0 && deaths_[i] != 0) {
            const auto x = space_.feature_at(i);
            throw DataError("deaths without exposure at (" + std::string(to_string(x.gender)) +
                            ", " + std::to_string(x.age) + ", " + std::to_string(x.year) + ")");
        }
    }
}

double MortalityTable::total_exposure() const noexcept {
    double total = 0.0;
    for (const auto e : exposure_) {
        total += e;
    }
    return total;
}

std::int64_t MortalityTable::total_deaths() const noexcept {
    std::int64_t total = 0;
    for (const auto d : deaths_) {
        total += d;
    }
    return total;
}

RateSurface::RateSurface(FeatureSpace space, std::vector<double> rates)
    : space_{std::move(space)}, rates_{std::move(rates)} {
    if (rates_.size() != space_.size()) {
        throw std::invalid_argument("rate surface size does not match feature space");
    }
    for (std::size_t i = 0; i < rates_.size(); ++i) {
        if (!(rates_[i] >= 0.0 && rates_[i] <= 1.0)) {
            throw DataError("rate outside [0, 1] at cell " + std::to_string(i));
        }
    }
}

CrudeRates crude_rates(const MortalityTable &table) {
    const auto &space = table.space();
    std::vector<double> rates(space.size(), 0.0);
    std::vector<CellWarning> warnings;
    const auto exposure = table.exposures();
    const auto deaths = table.deaths();
    for (std::size_t i = 0; i < rates.size(); ++i) {
        if (exposure[i] == 0.0) {
            warnings.push_back({space.feature_at(i), "zero exposure; crude rate set to 0"});
            continue;
        }
        const double rate = static_cast<double>(deaths[i]) / exposure[i];
        if (rate > 1.0) {
            warnings.push_back({space.feature_at(i), "deaths exceed exposure; crude rate clamped to 1"});
            rates[i] = 1.0;
        } else {
            rates[i] = rate;
        }
    }
    return {RateSurface(space, std::move(rates)), std::move(warnings)};
}

AgeBucketing::AgeBucketing(std::vector<IntRange> buckets, IntRange ages,
                           std::vector<std::string> labels)
    : buckets_{std::move(buckets)}, ages_{ages}, labels_{std::move(labels)} {
    if (buckets_.empty()) {
        throw std::invalid_argument("age bucketing needs at least one bucket");
    }
    int next = ages_.first;
    for (const auto &b : buckets_) {
        if (b.empty()) {
            throw std::invalid_argument("empty age bucket");
        }
        if (b.first != next) {
            throw std::invalid_argument("age buckets must be contiguous, disjoint and start at " +
                                        std::to_string(ages_.first) + "; bucket starting at " +
                                        std::to_string(b.first) + " breaks the partition");
        }
        next = b.last + 1;
    }
    if (next != ages_.last + 1) {
        throw std::invalid_argument("age buckets do not cover ages up to " +
                                    std::to_string(ages_.last));
    }
    if (labels_.empty()) {
        for (const auto &b : buckets_) {
            labels_.push_back(b.first == b.last ? std::to_string(b.first)
                                                : std::to_string(b.first) + "-" +
                                                      std::to_string(b.last));
        }
    } else if (labels_.size() != buckets_.size()) {
        throw std::invalid_argument("bucket label count mismatch");
    }
}

AgeBucketing AgeBucketing::parse(std::string_view spec, IntRange ages) {
    std::vector<IntRange> buckets;
    std::vector<std::string> labels;
    for (const auto raw : text::split(spec, ';')) {
        const auto part = text::trim(raw);
        if (part.empty()) {
            throw std::invalid_argument("empty entry in bucket spec '" + std::string(spec) + "'");
        }
        IntRange bucket;
        if (part.back() == '+') {
            const auto first = text::parse_int(part.substr(0, part.size() - 1));
            if (!first) {
                throw std::invalid_argument("bad bucket '" + std::string(part) + "'");
            }
            bucket = {static_cast<int>(*first), ages.last};
        } else {
            const auto bounds = text::split(part, '-');
            const auto first = text::parse_int(bounds[0]);
            const auto last = bounds.size() == 2 ? text::parse_int(bounds[1]) : first;
            if (bounds.size() > 2 || !first || !last) {
                throw std::invalid_argument("bad bucket '" + std::string(part) + "'");
            }
            bucket = {static_cast<int>(*first), static_cast<int>(*last)};
        }
        buckets.push_back(bucket);
        labels.emplace_back(part);
    }
    return AgeBucketing(std::move(buckets), ages, std::move(labels));
}

AgeBucketing AgeBucketing::identity(IntRange ages) {
    std::vector<IntRange> buckets;
    for (int a = ages.first; a <= ages.last; ++a) {
        buckets.push_back({a, a});
    }
    return AgeBucketing(std::move(buckets), ages);
}

IntRange AgeBucketing::bucket(std::size_t index) const {
    if (index == 0 || index > buckets_.size()) {
        throw DomainError("bucket index " + std::to_string(index) + " out of range");
    }
    return buckets_[index - 1];
}

const std::string &AgeBucketing::label(std::size_t index) const {
    if (index == 0 || index > labels_.size()) {
        throw DomainError("bucket index " + std::to_string(index) + " out of range");
    }
    return labels_[index - 1];
}

std::size_t AgeBucketing::bucket_of(int age) const {
    const auto it = std::find_if(buckets_.begin(), buckets_.end(),
                                 [age](const IntRange &b) { return b.contains(age); });
    if (it == buckets_.end()) {
        throw DomainError("age " + std::to_string(age) + " not covered by bucketing");
    }
    return static_cast<std::size_t>(it - buckets_.begin()) + 1;
}

std::string AgeBucketing::to_spec() const {
    std::string out;
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (i > 0) {
            out += ';';
        }
        out += labels_[i];
    }
    return out;
}

FeatureSpace condensed_space(const FeatureSpace &space, const AgeBucketing &buckets) {
    if (buckets.ages() != space.ages()) {
        throw std::invalid_argument("bucketing age range does not match feature space");
    }
    return FeatureSpace(space.genders(), {1, static_cast<int>(buckets.size())}, space.years());
}

MortalityTable condense_table(const MortalityTable &table, const AgeBucketing &buckets) {
    const auto &space = table.space();
    auto condensed = condensed_space(space, buckets);
    std::vector<double> exposure(condensed.size(), 0.0);
    std::vector<std::int64_t> deaths(condensed.size(), 0);
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto x = space.feature_at(i);
        const auto j = condensed.index(
            {x.gender, static_cast<int>(buckets.bucket_of(x.age)), x.year});
        exposure[j] += table.exposures()[i];
        deaths[j] += table.deaths()[i];
    }
    return MortalityTable(std::move(condensed), std::move(exposure), std::move(deaths));
}

CondensedRates aggregate_rates(const RateSurface &q, const MortalityTable &table,
                               const AgeBucketing &buckets) {
    const auto &space = table.space();
    if (!(q.space() == space)) {
        throw std::invalid_argument("rate surface and table cover different feature spaces");
    }
    auto condensed = condensed_space(space, buckets);
    std::vector<double> exposure(condensed.size(), 0.0);
    std::vector<double> expected(condensed.size(), 0.0);
    std::vector<std::size_t> members(condensed.size(), 0);
    std::vector<double> last_rate(condensed.size(), 0.0);
    // Ages ascend within each (gender, year), so each bucket accumulates in age order.
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto x = space.feature_at(i);
        const auto j = condensed.index(
            {x.gender, static_cast<int>(buckets.bucket_of(x.age)), x.year});
        exposure[j] += table.exposures()[i];
        expected[j] += table.exposures()[i] * q.rate(i);
        ++members[j];
        last_rate[j] = q.rate(i);
    }
    std::vector<double> rates(condensed.size(), 0.0);
    for (std::size_t j = 0; j < condensed.size(); ++j) {
        if (!(exposure[j] > 0.0)) {
            const auto x = condensed.feature_at(j);
            throw DataError("age bucket '" + buckets.label(static_cast<std::size_t>(x.age)) +
                            "' has zero total exposure for " + std::string(to_string(x.gender)) +
                            " in " + std::to_string(x.year));
        }
        // A one-age bucket keeps its rate exactly rather than E q / E.
        rates[j] = members[j] == 1 ? last_rate[j] : std::min(1.0, expected[j] / exposure[j]);
    }
    return {RateSurface(std::move(condensed), std::move(rates)), std::move(exposure)};
}

std::string write_rates_csv(const RateSurface &rates) {
    const auto &space = rates.space();
    std::string out = "gender,age,year,q\n";
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto x = space.feature_at(i);
        out += to_string(x.gender);
        out += ',' + std::to_string(x.age) + ',' + std::to_string(x.year) + ',' +
               text::format_double(rates.rate(i)) + '\n';
    }
    return out;
}

RateSurface read_rates_csv(std::string_view input) {
    const auto all = text::lines(input);
    std::size_t first = 0;
    while (first < all.size() && text::trim(all[first]).empty()) {
        ++first;
    }
    auto header = first < all.size() ? text::trim(all[first]) : std::string_view{};
    if (header.substr(0, 3) == "\xEF\xBB\xBF") {
        header.remove_prefix(3);
    }
    if (!text::iequals(header, "gender,age,year,q")) {
        throw ParseError(first + 1, "expected header gender,age,year,q");
    }
    struct Row {
        Feature x;
        double q;
        std::size_t line;
    };
    std::vector<Row> rows;
    bool genders[2] = {false, false};
    IntRange ages{std::numeric_limits<int>::max(), std::numeric_limits<int>::min()};
    IntRange years = ages;
    for (std::size_t i = first + 1; i < all.size(); ++i) {
        const auto line = text::trim(all[i]);
        if (line.empty()) {
            continue;
        }
        const auto f = text::split(line, ',');
        if (f.size() != 4) {
            throw ParseError(i + 1, "expected 4 columns, found " + std::to_string(f.size()));
        }
        Row r{};
        r.line = i + 1;
        try {
            r.x.gender = parse_gender(text::trim(f[0]));
        } catch (const DataError &e) {
            throw ParseError(i + 1, e.what());
        }
        const auto age = text::parse_int(text::trim(f[1]));
        const auto year = text::parse_int(text::trim(f[2]));
        const auto q = text::parse_double(text::trim(f[3]));
        if (!age || !year || !q) {
            throw ParseError(i + 1, "bad number");
        }
        r.x.age = static_cast<int>(*age);
        r.x.year = static_cast<int>(*year);
        r.q = *q;
        genders[static_cast<int>(r.x.gender)] = true;
        ages = {std::min(ages.first, r.x.age), std::max(ages.last, r.x.age)};
        years = {std::min(years.first, r.x.year), std::max(years.last, r.x.year)};
        rows.push_back(r);
    }
    if (rows.empty()) {
        throw DataError("rate file has no rows");
    }
    std::vector<Gender> gs;
    for (const auto g : {Gender::female, Gender::male}) {
        if (genders[static_cast<int>(g)]) {
            gs.push_back(g);
        }
    }
    FeatureSpace space(std::move(gs), ages, years);
    std::vector<double> q(space.size(), 0.0);
    std::vector<bool> seen(space.size(), false);
    for (const auto &r : rows) {
        const auto i = space.index(r.x);
        if (seen[i]) {
            throw ParseError(r.line, "duplicate cell");
        }
        seen[i] = true;
        q[i] = r.q;
    }
    if (rows.size() != space.size()) {
        throw DataError("rate file covers " + std::to_string(rows.size()) + " of " +
                        std::to_string(space.size()) + " grid cells");
    }
    return RateSurface(std::move(space), std::move(q));
}

} // namespace mortboost
