#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace volseg {

// FNV-1a 64-bit over a byte range; `seed` allows chaining.
std::uint64_t fnv1a(const void* data, std::size_t size,
                    std::uint64_t seed = 0xcbf29ce484222325ULL);

// Streaming content digest of a file, rendered as "fnv1a:<16 hex digits>".
std::string file_digest(const std::filesystem::path& path);

std::string current_utc_timestamp(); // ISO-8601, seconds resolution

// Provenance record dropped next to every command's outputs. The run hash
// covers the command, the resolved parameters and the content digests —
// not the timestamp or the stage timings — so re-running the same command
// on the same data yields the same hash.
struct RunManifest {
    std::string command;
    std::map<std::string, std::string> parameters;
    std::map<std::string, std::string> input_digests;  // path -> digest
    std::map<std::string, std::string> output_digests; // path -> digest
    std::map<std::string, double> stage_seconds;
    std::string timestamp_utc;

    void add_input(const std::filesystem::path& path);
    void add_output(const std::filesystem::path& path);

    std::string run_hash() const;
    std::string to_json() const;

    // Writes <directory>/manifest.json, stamping the timestamp if unset.
    void write(const std::filesystem::path& directory);
};

} // namespace volseg
