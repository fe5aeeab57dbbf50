#include "tem/manifest.hpp"

#include <json.hpp>

#include "tem/binio.hpp"
#include "tem/common.hpp"

namespace tem {

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path) {
    nlohmann::json j;
    j["command"] = manifest.command;
    j["config"] = manifest.config;
    nlohmann::json inputs = nlohmann::json::object();
    for (const auto& [file, crc] : manifest.input_checksums) {
        inputs[file] = crc;
    }
    j["inputs_crc32"] = inputs;
    j["artifacts"] = manifest.artifacts;
    j["seed"] = manifest.seed;
    j["duration_seconds"] = manifest.duration_seconds;
    binio::write_file_atomic(path, j.dump(2) + "\n");
}

RunManifest read_manifest(const std::filesystem::path& path) {
    nlohmann::json j = nlohmann::json::parse(binio::read_file(path), nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw Error(path.string() + ": malformed manifest");
    }
    try {
        RunManifest m;
        m.command = j.at("command").get<std::string>();
        m.config = j.at("config").get<std::map<std::string, std::string>>();
        for (const auto& [file, crc] : j.at("inputs_crc32").items()) {
            m.input_checksums[file] = crc.get<std::uint32_t>();
        }
        m.artifacts = j.at("artifacts").get<std::map<std::string, std::string>>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.duration_seconds = j.at("duration_seconds").get<double>();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(path.string() + ": malformed manifest: " + e.what());
    }
}

}  // namespace tem
