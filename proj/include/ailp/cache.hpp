#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <system_error>

#include <nlohmann/json.hpp>

#include "ailp/error.hpp"
#include "ailp/hash.hpp"

namespace ailp {

/// Key/value store of JSON documents. Implementations are safe for
/// concurrent use.
class JsonStore {
 public:
  virtual ~JsonStore() = default;
  virtual std::optional<nlohmann::json> get(const std::string& key) = 0;
  virtual void put(const std::string& key, const nlohmann::json& value) = 0;
};

class MemoryStore final : public JsonStore {
 public:
  std::optional<nlohmann::json> get(const std::string& key) override {
    std::lock_guard lock(mutex_);
    const auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }
  void put(const std::string& key, const nlohmann::json& value) override {
    std::lock_guard lock(mutex_);
    entries_[key] = value;
  }

 private:
  std::mutex mutex_;
  std::map<std::string, nlohmann::json> entries_;
};

/// One file per entry, named by the SHA-256 of the key. Writes go through a
/// temporary file and a rename so readers never see a partial document.
class DiskStore final : public JsonStore {
 public:
  explicit DiskStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw Error(ErrorKind::Cache, "cannot create cache dir " + dir_.string() + ": " + ec.message());
  }

  std::filesystem::path path_for(const std::string& key) const { return dir_ / (sha256_hex(key) + ".json"); }

  std::optional<nlohmann::json> get(const std::string& key) override {
    const auto path = path_for(key);
    std::lock_guard lock(mutex_);
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) return std::nullopt;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Cache, "cannot read " + path.string());
    try {
      auto doc = nlohmann::json::parse(in);
      // A hash collision or a foreign file is a miss, not a hit.
      if (!doc.is_object() || doc.value("key", std::string{}) != key) return std::nullopt;
      return doc.at("value");
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Cache, "corrupt cache entry " + path.string() + ": " + e.what());
    }
  }

  void put(const std::string& key, const nlohmann::json& value) override {
    const auto path = path_for(key);
    auto tmp = path;
    tmp += ".tmp";
    std::lock_guard lock(mutex_);
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw Error(ErrorKind::Cache, "cannot write " + tmp.string());
      out << nlohmann::json{{"key", key}, {"value", value}}.dump();
      if (!out) throw Error(ErrorKind::Cache, "short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorKind::Cache, "cannot commit " + path.string() + ": " + ec.message());
  }

 private:
  std::filesystem::path dir_;
  std::mutex mutex_;
};

inline std::unique_ptr<JsonStore> make_store(const std::filesystem::path& dir) {
  if (dir.empty()) return std::make_unique<MemoryStore>();
  return std::make_unique<DiskStore>(dir);
}

}  // namespace ailp
