#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace mortboost::cli {

/// Hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

/// One manifest.json per run: command, resolved settings, input digests,
/// written files and warnings. Holds no timestamps so reruns are identical.
class Manifest {
  public:
    explicit Manifest(std::string command);

    nlohmann::ordered_json &config() { return config_; }
    nlohmann::ordered_json &result() { return result_; }

    /// Reads an input file, records its digest and returns its content.
    std::string read_input(const std::filesystem::path &path);
    /// Writes an output file below the output directory and records it.
    void write_output(const std::filesystem::path &dir, const std::string &name,
                      std::string_view content);
    void warn(std::string message);

    std::size_t warning_count() const noexcept { return warnings_.size(); }
    std::string dump() const;
    void write(const std::filesystem::path &dir) const;

  private:
    std::string command_;
    nlohmann::ordered_json config_ = nlohmann::ordered_json::object();
    nlohmann::ordered_json inputs_ = nlohmann::ordered_json::array();
    nlohmann::ordered_json outputs_ = nlohmann::ordered_json::array();
    std::vector<std::string> warnings_;
    nlohmann::ordered_json result_ = nlohmann::ordered_json::object();
};

} // namespace mortboost::cli
