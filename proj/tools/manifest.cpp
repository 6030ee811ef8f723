#include "manifest.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "version.hpp"

namespace tmsv::cli {

std::string sha256_hex(std::string_view bytes)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 failed");
    }
    std::ostringstream os;
    os << std::hex << std::setfill('0');
    for (unsigned int i = 0; i < length; ++i) {
        os << std::setw(2) << static_cast<int>(digest[i]);
    }
    return os.str();
}

std::string file_sha256(std::filesystem::path const& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot read '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return sha256_hex(buf.str());
}

namespace {

std::string utc_now()
{
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

} // namespace

OutputDir::OutputDir(std::filesystem::path dir, std::string command)
    : dir_(std::move(dir)), command_(std::move(command)), started_(utc_now())
{
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) {
        throw InputError("cannot create output directory '" + dir_.string() + "': " + ec.message());
    }
}

void OutputDir::write(std::string const& name, std::string const& bytes)
{
    std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw InputError("cannot write '" + (dir_ / name).string() + "'");
    }
    files_.push_back({name, sha256_hex(bytes), bytes.size()});
}

void OutputDir::add_input(std::filesystem::path const& path)
{
    inputs_.push_back({path.filename().string(), file_sha256(path), std::filesystem::file_size(path)});
}

void OutputDir::finish()
{
    auto entries = [](std::vector<Entry> list) {
        std::sort(list.begin(), list.end(), [](auto const& a, auto const& b) { return a.path < b.path; });
        Json arr = Json::array();
        for (auto const& e : list) {
            arr.push_back({{"path", e.path}, {"sha256", e.sha256}, {"bytes", e.bytes}});
        }
        return arr;
    };
    Json manifest = {{"tool", "tmsv"}, {"version", kVersion}, {"command", command_}, {"files", entries(files_)}};
    manifest["seed"] = seed_ ? Json(*seed_) : Json(nullptr);
    manifest["config_digest"] = config_digest_.empty() ? Json(nullptr) : Json(config_digest_);
    manifest["inputs"] = entries(inputs_);
    if (timestamps_) {
        manifest["timestamps"] = {{"started", started_}, {"finished", utc_now()}};
    }
    const std::string bytes = manifest.dump(2) + "\n";
    std::ofstream out(dir_ / "manifest.json", std::ios::binary | std::ios::trunc);
    out << bytes;
    if (!out) {
        throw InputError("cannot write manifest in '" + dir_.string() + "'");
    }
}

std::vector<std::string> verify_manifest(std::filesystem::path const& dir)
{
    std::ifstream in(dir / "manifest.json");
    if (!in) {
        return {"manifest.json"};
    }
    const Json manifest = Json::parse(in);
    std::vector<std::string> bad;
    for (auto const& f : manifest.at("files")) {
        const auto name = f.at("path").get<std::string>();
        const auto path = dir / name;
        if (!std::filesystem::exists(path) || file_sha256(path) != f.at("sha256").get<std::string>()) {
            bad.push_back(name);
        }
    }
    return bad;
}

} // namespace tmsv::cli
