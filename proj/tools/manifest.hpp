#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tmsv/serialization.hpp"

namespace tmsv::cli {

std::string sha256_hex(std::string_view bytes);
std::string file_sha256(std::filesystem::path const& path);

/// Collects the files a command writes and emits manifest.json last.
class OutputDir {
public:
    OutputDir(std::filesystem::path dir, std::string command);

    /// Writes `bytes` to dir/name and records its checksum.
    void write(std::string const& name, std::string const& bytes);
    void add_input(std::filesystem::path const& path);

    void set_seed(std::uint64_t seed) { seed_ = seed; }
    void set_config_digest(std::string digest) { config_digest_ = std::move(digest); }
    void set_timestamps(bool on) { timestamps_ = on; }

    std::filesystem::path const& dir() const { return dir_; }

    /// Writes manifest.json; every file written before is listed.
    void finish();

private:
    struct Entry {
        std::string path;
        std::string sha256;
        std::uintmax_t bytes;
    };

    std::filesystem::path dir_;
    std::string command_;
    std::optional<std::uint64_t> seed_;
    std::string config_digest_;
    bool timestamps_ = false;
    std::string started_;
    std::vector<Entry> files_;
    std::vector<Entry> inputs_;
};

/// Recomputes every checksum listed in dir/manifest.json. Returns the names
/// of missing or mismatching files.
std::vector<std::string> verify_manifest(std::filesystem::path const& dir);

} // namespace tmsv::cli
