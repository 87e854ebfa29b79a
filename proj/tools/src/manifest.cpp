#include "manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <memory>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "dbal/errors.hpp"

namespace dbal::cli {

using nlohmann::json;

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                               EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 unavailable");
  }
  std::array<char, 1 << 16> buffer{};
  while (in.read(buffer.data(), buffer.size()) || in.gcount() > 0) {
    EVP_DigestUpdate(ctx.get(), buffer.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int size = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &size);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < size; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 15];
  }
  return hex;
}

std::string utc_timestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm parts{};
  gmtime_r(&now, &parts);
  char text[32];
  std::strftime(text, sizeof text, "%Y-%m-%dT%H:%M:%SZ", &parts);
  return text;
}

std::string default_output_dir() {
  const char* env = std::getenv("DBAL_OUTPUT_DIR");
  return env != nullptr && *env != '\0' ? std::string(env) : std::string(".");
}

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
  json outputs = json::array();
  for (const auto& file : manifest.outputs) {
    outputs.push_back({{"name", file.name}, {"sha256", file.sha256}});
  }
  const json doc = {
      {"command", manifest.command},
      {"args", manifest.args},
      {"flags", manifest.flags},
      {"master_seed", manifest.master_seed ? json(*manifest.master_seed) : json(nullptr)},
      {"library_version", manifest.library_version},
      {"format_version", manifest.format_version},
      {"started_at", manifest.started_at},
      {"finished_at", manifest.finished_at},
      {"output_dir", manifest.output_dir},
      {"working_dir", manifest.working_dir},
      {"exit_code", manifest.exit_code},
      {"outputs", outputs},
  };
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

RunManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read " + path.string());
  try {
    const json doc = json::parse(in);
    RunManifest manifest;
    manifest.command = doc.at("command").get<std::string>();
    manifest.args = doc.at("args").get<std::vector<std::string>>();
    manifest.flags = doc.at("flags").get<std::map<std::string, std::string>>();
    if (!doc.at("master_seed").is_null()) {
      manifest.master_seed = doc.at("master_seed").get<std::uint64_t>();
    }
    manifest.library_version = doc.at("library_version").get<std::string>();
    manifest.format_version = doc.at("format_version").get<int>();
    manifest.started_at = doc.at("started_at").get<std::string>();
    manifest.finished_at = doc.at("finished_at").get<std::string>();
    manifest.output_dir = doc.at("output_dir").get<std::string>();
    manifest.working_dir = doc.at("working_dir").get<std::string>();
    manifest.exit_code = doc.at("exit_code").get<int>();
    for (const auto& file : doc.at("outputs")) {
      manifest.outputs.push_back(
          {file.at("name").get<std::string>(), file.at("sha256").get<std::string>()});
    }
    return manifest;
  } catch (const json::exception& e) {
    throw ParseError("manifest " + path.string() + ": " + e.what());
  }
}

}  // namespace dbal::cli
