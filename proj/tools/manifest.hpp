#pragma once

// Run manifests: enough to re-run a command and reproduce its outputs.

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "rayreg/errors.hpp"
#include "rayreg/image_io.hpp"
#include "rayreg/version.hpp"

namespace rayreg::cli {

inline std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) throw Error("SHA-256 failed");
  std::string hex;
  char buf[3];
  for (unsigned i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

inline std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Manifest {
  std::string command;
  std::vector<std::string> args;  // argv after the program name, --out-dir removed
  std::string cwd;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["args"] = args;
    j["cwd"] = cwd;
    j["config"] = config;
    j["seed"] = seed;
    j["version"] = std::string(kVersion);
    nlohmann::ordered_json in = nlohmann::ordered_json::array();
    for (const auto& p : inputs) in.push_back({{"path", p}, {"sha256", sha256_hex(io::read_file(p))}});
    j["inputs"] = std::move(in);
    j["outputs"] = outputs;
    j["timestamp"] = utc_timestamp();
    return j;
  }
};

inline constexpr const char* kManifestName = "manifest.json";

}  // namespace rayreg::cli
