#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dbal::cli {

struct OutputFile {
  /// Relative to the run's output directory.
  std::string name;
  std::string sha256;
};

/// Written next to the outputs of every command as <command>.manifest.json.
struct RunManifest {
  std::string command;
  /// Arguments after the program name, without --out-dir.
  std::vector<std::string> args;
  /// Every option of the subcommand with its effective value.
  std::map<std::string, std::string> flags;
  std::optional<std::uint64_t> master_seed;
  std::string library_version;
  int format_version = 0;
  std::string started_at;
  std::string finished_at;
  std::string output_dir;
  /// Relative paths in args resolve against this directory.
  std::string working_dir;
  int exit_code = 0;
  std::vector<OutputFile> outputs;
};

std::string sha256_file(const std::filesystem::path& path);

/// UTC, ISO 8601 to the second.
std::string utc_timestamp();

/// $DBAL_OUTPUT_DIR when set and non-empty, else ".".
std::string default_output_dir();

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);
RunManifest read_manifest(const std::filesystem::path& path);

}  // namespace dbal::cli
