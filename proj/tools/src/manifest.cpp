#include "manifest.hpp"

#include "mortboost/errors.hpp"
#include "mortboost/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <stdexcept>

namespace mortboost::cli {

std::string sha256_hex(std::string_view bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 digest failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xF];
    }
    return out;
}

Manifest::Manifest(std::string command) : command_(std::move(command)) {}

std::string Manifest::read_input(const std::filesystem::path &path) {
    std::string content;
    try {
        content = read_text_file(path);
    } catch (const std::runtime_error &e) {
        // Unreadable inputs are data problems, not internal failures.
        throw DataError(e.what());
    }
    inputs_.push_back({{"path", path.generic_string()}, {"sha256", sha256_hex(content)}});
    return content;
}

void Manifest::write_output(const std::filesystem::path &dir, const std::string &name,
                            std::string_view content) {
    write_text_file(dir / name, content);
    outputs_.push_back({{"path", name}, {"sha256", sha256_hex(content)}});
}

void Manifest::warn(std::string message) { warnings_.push_back(std::move(message)); }

std::string Manifest::dump() const {
    nlohmann::ordered_json j;
    j["tool"] = "mortboost";
    j["command"] = command_;
    j["config"] = config_;
    j["inputs"] = inputs_;
    j["outputs"] = outputs_;
    j["warnings"] = warnings_;
    j["result"] = result_;
    return j.dump(2) + "\n";
}

void Manifest::write(const std::filesystem::path &dir) const {
    write_text_file(dir / "manifest.json", dump());
}

} // namespace mortboost::cli
