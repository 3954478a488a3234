#include "detail/param_csv.hpp"

#include "mortboost/errors.hpp"
#include "mortboost/text.hpp"

namespace mortboost::detail {

ParamRows read_param_rows(std::string_view input) {
    const auto all = text::lines(input);
    if (all.empty() || text::trim(all[0]) != "gender,kind,index,value") {
        throw ParseError(1, "expected header gender,kind,index,value");
    }
    ParamRows rows;
    for (std::size_t i = 1; i < all.size(); ++i) {
        const auto line = text::trim(all[i]);
        if (line.empty()) {
            continue;
        }
        const auto fields = text::split(line, ',');
        if (fields.size() != 4) {
            throw ParseError(i + 1, "expected 4 fields");
        }
        Gender gender{};
        try {
            gender = parse_gender(fields[0]);
        } catch (const DataError &e) {
            throw ParseError(i + 1, e.what());
        }
        const auto index = text::parse_int(fields[2]);
        const auto value = text::parse_double(fields[3]);
        if (!index || !value) {
            throw ParseError(i + 1, "bad index or value");
        }
        auto &slot = rows[gender][std::string(text::trim(fields[1]))];
        if (!slot.emplace(static_cast<int>(*index), *value).second) {
            throw ParseError(i + 1, "duplicate parameter");
        }
    }
    return rows;
}

IntRange span_of(const std::map<int, double> &values, const std::string &kind) {
    if (values.empty()) {
        throw DataError("parameter kind '" + kind + "' is empty");
    }
    return {values.begin()->first, values.rbegin()->first};
}

std::vector<double> dense(const std::map<int, double> &values, IntRange range,
                          const std::string &kind) {
    if (values.size() != range.size()) {
        throw DataError("parameter kind '" + kind + "' does not cover " +
                        std::to_string(range.first) + ".." + std::to_string(range.last));
    }
    std::vector<double> out;
    out.reserve(range.size());
    for (int i = range.first; i <= range.last; ++i) {
        const auto it = values.find(i);
        if (it == values.end()) {
            throw DataError("parameter kind '" + kind + "' missing index " + std::to_string(i));
        }
        out.push_back(it->second);
    }
    return out;
}

void append_rows(std::string &out, Gender gender, std::string_view kind, int first,
                 const std::vector<double> &values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        out += to_string(gender);
        out += ',';
        out += kind;
        out += ',' + std::to_string(first + static_cast<int>(i)) + ',' +
               text::format_double(values[i]) + '\n';
    }
}

} // namespace mortboost::detail
