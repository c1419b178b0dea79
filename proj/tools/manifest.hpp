#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace bkf::cli {

struct FileDigest {
  std::string path;
  std::string sha256;
};

struct RunManifest {
  std::string command;
  std::vector<std::string> argv;  // arguments after the command name, out-dir stripped
  nlohmann::json config;          // resolved option values
  std::uint64_t seed = 0;
  std::string version;
  std::string isa;
  std::vector<FileDigest> inputs;
  std::vector<FileDigest> outputs;  // paths relative to the output directory
  std::string started;
  std::string finished;
};

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);
std::string utc_timestamp();

nlohmann::json to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j, const std::string& source);

void write_manifest(const std::filesystem::path& path, const RunManifest& m);
RunManifest read_manifest(const std::filesystem::path& path);

}  // namespace bkf::cli
