#include "volseg/manifest.hpp"

#include <cstdio>
#include <ctime>
#include <fstream>

#include <json.hpp>

#include "volseg/errors.hpp"

#ifndef VOLSEG_VERSION
#define VOLSEG_VERSION "0.0.0"
#endif

namespace volseg {

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed) {
    constexpr std::uint64_t kPrime = 0x100000001b3ULL;
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= kPrime;
    }
    return h;
}

namespace {

std::string hex16(std::uint64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "fnv1a:%016llx", static_cast<unsigned long long>(v));
    return buf;
}

} // namespace

std::string file_digest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open file for digest: " + path.string());
    }
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof(buf));
        const auto got = in.gcount();
        if (got > 0) h = fnv1a(buf, static_cast<std::size_t>(got), h);
    }
    return hex16(h);
}

std::string current_utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void RunManifest::add_input(const std::filesystem::path& path) {
    input_digests[path.string()] = file_digest(path);
}

void RunManifest::add_output(const std::filesystem::path& path) {
    output_digests[path.string()] = file_digest(path);
}

namespace {

nlohmann::json hashed_part(const RunManifest& m) {
    nlohmann::json j;
    j["command"] = m.command;
    j["parameters"] = m.parameters;
    j["inputs"] = m.input_digests;
    j["outputs"] = m.output_digests;
    j["version"] = VOLSEG_VERSION;
    return j;
}

} // namespace

std::string RunManifest::run_hash() const {
    const std::string canon = hashed_part(*this).dump();
    return hex16(fnv1a(canon.data(), canon.size()));
}

std::string RunManifest::to_json() const {
    nlohmann::json j = hashed_part(*this);
    j["tool"] = "volseg";
    j["run_hash"] = run_hash();
    j["timestamp_utc"] = timestamp_utc;
    j["stage_seconds"] = stage_seconds;
    return j.dump(2) + "\n";
}

void RunManifest::write(const std::filesystem::path& directory) {
    if (timestamp_utc.empty()) timestamp_utc = current_utc_timestamp();
    const auto path = directory / "manifest.json";
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write manifest: " + path.string());
    }
    out << to_json();
}

} // namespace volseg
