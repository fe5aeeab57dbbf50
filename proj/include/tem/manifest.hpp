#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace tem {

/// Everything needed to re-run a CLI invocation bit-identically: the
/// command, the resolved option values, checksums of every input file read,
/// the seed, and where the outputs went.
struct RunManifest {
    std::string command;
    std::map<std::string, std::string> config;
    std::map<std::string, std::uint32_t> input_checksums;
    std::map<std::string, std::string> artifacts;
    std::uint64_t seed = 0;
    double duration_seconds = 0.0;
};

/// Atomic JSON write (tmp file + rename).
void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);

RunManifest read_manifest(const std::filesystem::path& path);

}  // namespace tem
