#include "mortboost/hmd_ingest.hpp"

#include "mortboost/errors.hpp"
#include "mortboost/text.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

namespace mortboost {

namespace {

std::optional<double> parse_value(std::string_view token, std::size_t line) {
    if (token == ".") {
        return std::nullopt;
    }
    const auto v = text::parse_double(token);
    if (!v) {
        throw ParseError(line, "bad numeric value '" + std::string(token) + "'");
    }
    if (*v < 0.0) {
        throw ParseError(line, "negative value '" + std::string(token) + "'");
    }
    return v;
}

// Always at least one leading space so wide values stay separate fields.
std::string pad_left(std::string_view s, std::size_t width) {
    std::string out(s.size() < width ? width - s.size() : 1, ' ');
    out += s;
    return out;
}

} // namespace

HmdGrid::HmdGrid(HmdKind kind, std::vector<RawHmdRecord> records)
    : kind_{kind}, records_{std::move(records)} {
    if (records_.empty()) {
        throw DataError("HMD table has no data rows");
    }
    ages_ = {records_.front().age, records_.front().age};
    years_ = {records_.front().year, records_.front().year};
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const auto &r = records_[i];
        if (!index_.emplace(std::make_pair(r.age, r.year), i).second) {
            throw ParseError(r.line, "duplicate (year " + std::to_string(r.year) + ", age " +
                                         std::to_string(r.age) + ") row");
        }
        ages_.first = std::min(ages_.first, r.age);
        ages_.last = std::max(ages_.last, r.age);
        years_.first = std::min(years_.first, r.year);
        years_.last = std::max(years_.last, r.year);
    }
}

const RawHmdRecord *HmdGrid::find(int age, int year) const noexcept {
    const auto it = index_.find({age, year});
    return it == index_.end() ? nullptr : &records_[it->second];
}

std::size_t HmdGrid::cell_count() const noexcept {
    std::size_t n = 0;
    for (const auto &r : records_) {
        n += (r.female ? 1 : 0) + (r.male ? 1 : 0);
    }
    return n;
}

HmdGrid parse_hmd_1x1(std::string_view input, HmdKind kind) {
    const auto all = text::lines(input);
    std::size_t first_data = 0;
    bool header_found = false;
    for (std::size_t i = 0; i < all.size(); ++i) {
        const auto fields = text::split_ws(all[i]);
        if (!fields.empty() && text::iequals(fields[0], "Year")) {
            if (fields.size() != 5 || !text::iequals(fields[1], "Age") ||
                !text::iequals(fields[2], "Female") || !text::iequals(fields[3], "Male") ||
                !text::iequals(fields[4], "Total")) {
                throw ParseError(i + 1, "expected columns Year Age Female Male Total");
            }
            first_data = i + 1;
            header_found = true;
            break;
        }
    }
    if (!header_found) {
        throw ParseError(1, "missing 'Year Age Female Male Total' header line");
    }

    std::vector<RawHmdRecord> records;
    for (std::size_t i = first_data; i < all.size(); ++i) {
        const auto line_no = i + 1;
        const auto fields = text::split_ws(all[i]);
        if (fields.empty()) {
            continue;
        }
        if (fields.size() != 5) {
            throw ParseError(line_no, "expected 5 columns, found " + std::to_string(fields.size()));
        }
        RawHmdRecord r;
        r.line = line_no;
        const auto year = text::parse_int(fields[0]);
        if (!year) {
            throw ParseError(line_no, "bad year '" + std::string(fields[0]) + "'");
        }
        r.year = static_cast<int>(*year);
        auto age_token = fields[1];
        if (!age_token.empty() && age_token.back() == '+') {
            r.open_age = true;
            age_token.remove_suffix(1);
        }
        const auto age = text::parse_int(age_token);
        if (!age || *age < 0) {
            throw ParseError(line_no, "bad age '" + std::string(fields[1]) + "'");
        }
        r.age = static_cast<int>(*age);
        r.female = parse_value(fields[2], line_no);
        r.male = parse_value(fields[3], line_no);
        r.total = parse_value(fields[4], line_no);
        records.push_back(r);
    }
    return HmdGrid(kind, std::move(records));
}

ClippedTable clip_to_space(const HmdGrid &deaths, const HmdGrid &exposures,
                           const FeatureSpace &space, bool pool_top_age) {
    std::vector<int> missing_years;
    for (int t = space.years().first; t <= space.years().last; ++t) {
        if (!deaths.years().contains(t) || !exposures.years().contains(t) ||
            !deaths.find(space.ages().first, t) || !exposures.find(space.ages().first, t)) {
            missing_years.push_back(t);
        }
    }
    if (!missing_years.empty()) {
        std::string list;
        for (const auto t : missing_years) {
            list += (list.empty() ? "" : ", ") + std::to_string(t);
        }
        throw DataError("requested years absent from input: " + list);
    }

    const auto top = space.ages().last;
    std::vector<double> exposure(space.size(), 0.0);
    std::vector<double> raw_deaths(space.size(), 0.0);
    std::vector<bool> seen(space.size(), false);

    const auto accumulate = [&](const HmdGrid &grid, std::vector<double> &target,
                                std::vector<bool> *present) {
        for (const auto &r : grid.records()) {
            if (!space.years().contains(r.year) || r.age < space.ages().first) {
                continue;
            }
            int age = r.age;
            if (age > top) {
                if (!pool_top_age) {
                    continue;
                }
                age = top;
            }
            for (const auto g : space.genders()) {
                const auto v = r.value(g);
                if (!v) {
                    throw ParseError(r.line, std::string("missing ") + std::string(to_string(g)) +
                                                 " value inside the requested space");
                }
                const auto i = space.index({g, age, r.year});
                target[i] += *v;
                if (present != nullptr) {
                    (*present)[i] = true;
                }
            }
        }
    };
    accumulate(exposures, exposure, &seen);
    accumulate(deaths, raw_deaths, nullptr);

    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto x = space.feature_at(i);
        if (!seen[i] || !deaths.find(x.age, x.year)) {
            throw DataError("no data for age " + std::to_string(x.age) + " in " +
                            std::to_string(x.year));
        }
    }

    ClipReport report;
    std::vector<std::int64_t> rounded(space.size(), 0);
    for (std::size_t i = 0; i < space.size(); ++i) {
        rounded[i] = std::llround(raw_deaths[i]);
        const double delta = static_cast<double>(rounded[i]) - raw_deaths[i];
        report.rounding_delta_total += delta;
        report.max_abs_rounding_delta = std::max(report.max_abs_rounding_delta, std::abs(delta));
        if (exposure[i] == 0.0 && rounded[i] != 0) {
            const auto x = space.feature_at(i);
            report.warnings.push_back({x, "deaths reported without exposure; deaths set to 0"});
            rounded[i] = 0;
        }
    }
    return {MortalityTable(space, std::move(exposure), std::move(rounded)), std::move(report)};
}

std::string write_hmd_1x1(const MortalityTable &table, HmdKind kind, std::string_view title) {
    const auto &space = table.space();
    std::string out;
    out += title;
    out += '\n';
    out += "  Year      Age          Female            Male           Total\n";
    const auto value = [&](Gender g, int a, int t) -> std::optional<double> {
        if (!space.has_gender(g)) {
            return std::nullopt;
        }
        const auto i = space.index({g, a, t});
        return kind == HmdKind::deaths ? static_cast<double>(table.deaths()[i])
                                       : table.exposures()[i];
    };
    const auto fmt = [&](std::optional<double> v) {
        if (!v) {
            return std::string(".");
        }
        return kind == HmdKind::deaths ? std::to_string(std::llround(*v)) : text::format_double(*v);
    };
    for (int t = space.years().first; t <= space.years().last; ++t) {
        for (int a = space.ages().first; a <= space.ages().last; ++a) {
            const auto f = value(Gender::female, a, t);
            const auto m = value(Gender::male, a, t);
            const std::optional<double> total = f.value_or(0.0) + m.value_or(0.0);
            out += pad_left(std::to_string(t), 6);
            out += pad_left(std::to_string(a), 9);
            out += pad_left(fmt(f), 16);
            out += pad_left(fmt(m), 16);
            out += pad_left(fmt(total), 16);
            out += '\n';
        }
    }
    return out;
}

CauseDeathTable parse_cod_csv(std::string_view input, const AgeBucketing &buckets,
                              const CauseRegistry &registry) {
    const auto all = text::lines(input);
    std::size_t header_line = 0;
    while (header_line < all.size() && text::trim(all[header_line]).empty()) {
        ++header_line;
    }
    if (header_line == all.size()) {
        throw ParseError(1, "empty cause-of-death file");
    }
    auto header = text::trim(all[header_line]);
    if (header.starts_with("\xEF\xBB\xBF")) {
        header.remove_prefix(3);
    }
    if (header != "gender,age_group,year,cause,deaths") {
        throw ParseError(header_line + 1, "expected header gender,age_group,year,cause,deaths");
    }

    struct Row {
        Gender gender;
        int bucket;
        int year;
        std::size_t cause;
        CauseDeathTable::Count deaths;
        std::size_t line;
    };
    std::vector<Row> rows;
    std::set<Gender> genders;
    int year_min = 0;
    int year_max = 0;
    for (std::size_t i = header_line + 1; i < all.size(); ++i) {
        const auto line_no = i + 1;
        const auto line = text::trim(all[i]);
        if (line.empty()) {
            continue;
        }
        const auto fields = text::split(line, ',');
        if (fields.size() != 5) {
            throw ParseError(line_no, "expected 5 fields, found " + std::to_string(fields.size()));
        }
        Row row{};
        row.line = line_no;
        try {
            row.gender = parse_gender(fields[0]);
        } catch (const DataError &e) {
            throw ParseError(line_no, e.what());
        }
        const auto bucket = text::parse_int(fields[1]);
        if (!bucket || *bucket < 1 || static_cast<std::size_t>(*bucket) > buckets.size()) {
            throw ParseError(line_no, "age_group '" + std::string(fields[1]) +
                                          "' outside 1.." + std::to_string(buckets.size()));
        }
        row.bucket = static_cast<int>(*bucket);
        const auto year = text::parse_int(fields[2]);
        if (!year) {
            throw ParseError(line_no, "bad year '" + std::string(fields[2]) + "'");
        }
        row.year = static_cast<int>(*year);
        const auto cause = registry.resolve(fields[3]);
        if (!cause) {
            throw ParseError(line_no, "unknown cause '" + std::string(fields[3]) + "'");
        }
        row.cause = *cause;
        const auto deaths_field = text::trim(fields[4]);
        if (!deaths_field.empty()) {
            const auto d = text::parse_int(deaths_field);
            if (!d) {
                throw ParseError(line_no, "bad death count '" + std::string(deaths_field) + "'");
            }
            if (*d < 0) {
                throw ParseError(line_no, "negative death count");
            }
            row.deaths = *d;
        }
        if (rows.empty()) {
            year_min = year_max = row.year;
        }
        year_min = std::min(year_min, row.year);
        year_max = std::max(year_max, row.year);
        genders.insert(row.gender);
        rows.push_back(row);
    }
    if (rows.empty()) {
        throw ParseError(header_line + 1, "cause-of-death file has no data rows");
    }

    FeatureSpace space(std::vector<Gender>(genders.begin(), genders.end()),
                       {1, static_cast<int>(buckets.size())}, {year_min, year_max});
    const auto k_count = registry.size();
    std::vector<CauseDeathTable::Count> counts(space.size() * k_count);
    std::vector<std::size_t> seen_at(counts.size(), 0);
    for (const auto &row : rows) {
        const auto cell = space.index({row.gender, row.bucket, row.year}) * k_count + (row.cause - 1);
        if (seen_at[cell] != 0) {
            throw ParseError(row.line, "duplicate key (also on line " +
                                           std::to_string(seen_at[cell]) + ")");
        }
        seen_at[cell] = row.line;
        counts[cell] = row.deaths;
    }
    return CauseDeathTable(std::move(space), buckets, registry, std::move(counts));
}

std::string write_cod_csv(const CauseDeathTable &table) {
    std::string out = "gender,age_group,year,cause,deaths\n";
    const auto &space = table.space();
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto x = space.feature_at(i);
        for (std::size_t k = 1; k <= table.cause_count(); ++k) {
            out += to_string(x.gender);
            out += ',' + std::to_string(x.age) + ',' + std::to_string(x.year) + ',' +
                   std::to_string(k) + ',';
            if (const auto &c = table.counts()[table.cell_index(i, k)]) {
                out += std::to_string(*c);
            }
            out += '\n';
        }
    }
    return out;
}

std::vector<CauseDiscrepancy> validate_cause_totals(const CauseDeathTable &causes,
                                                    const MortalityTable &all_cause) {
    std::vector<CauseDiscrepancy> out;
    const auto totals = causes.present_totals();
    const auto &space = causes.space();
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto x = space.feature_at(i);
        if (!all_cause.space().contains(x)) {
            continue;
        }
        const auto d = all_cause.deaths(x);
        if (totals[i] > d) {
            out.push_back({x, totals[i], d});
        }
    }
    return out;
}

} // namespace mortboost
