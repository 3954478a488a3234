#pragma once

#include "mortboost/domain.hpp"

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace mortboost::detail {

/// gender -> kind -> index -> value, as read from a parameter CSV.
using ParamRows = std::map<Gender, std::map<std::string, std::map<int, double>>>;

ParamRows read_param_rows(std::string_view text);

/// Values of one kind as a dense vector over `range`; throws DataError on gaps.
std::vector<double> dense(const std::map<int, double> &values, IntRange range,
                          const std::string &kind);

IntRange span_of(const std::map<int, double> &values, const std::string &kind);

void append_rows(std::string &out, Gender gender, std::string_view kind, int first,
                 const std::vector<double> &values);

} // namespace mortboost::detail
