#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace mortboost {

/// Whole-file helpers; both throw std::runtime_error naming the path.
std::string read_text_file(const std::filesystem::path &path);
void write_text_file(const std::filesystem::path &path, std::string_view content);

} // namespace mortboost
