#pragma once

// Run artifacts: deterministic CSV/JSON text, content-addressed run ids,
// and run directories that appear atomically under the output root.

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "stablemv/core.hpp"

#ifndef STABLEMV_VERSION
#define STABLEMV_VERSION "0.1.0"
#endif

namespace stablemv {

using Json = nlohmann::ordered_json;

inline constexpr int kConfigSchemaVersion = 1;
inline constexpr const char* kOutputRootEnv = "STABLEMV_OUTPUT_ROOT";

/// Shortest round-trip decimal form.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header) : columns_(header.size()) {
    require(!header.empty(), "CSV header is empty");
    row_start();
    for (const auto& h : header) cell(h);
    row_end();
  }

  CsvWriter& row(std::initializer_list<double> values) {
    require(values.size() == columns_, "CSV row width differs from the header");
    row_start();
    for (double v : values) cell(format_double(v));
    row_end();
    return *this;
  }

  CsvWriter& row(const std::vector<std::string>& cells) {
    require(cells.size() == columns_, "CSV row width differs from the header");
    row_start();
    for (const auto& c : cells) cell(c);
    row_end();
    return *this;
  }

  const std::string& str() const { return text_; }

 private:
  void row_start() { first_ = true; }
  void cell(const std::string& s) {
    if (!first_) text_ += ',';
    text_ += s;
    first_ = false;
  }
  void row_end() { text_ += '\n'; }

  std::size_t columns_;
  std::string text_;
  bool first_ = true;
};

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Hash prefix of the resolved config (which includes the seed).
inline std::string run_id(const Json& resolved) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(resolved.dump())));
  return std::string(buf, 12);
}

inline std::string read_text_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  require(static_cast<bool>(in), "cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), "cannot write " + p.string());
  out << text;
  out.close();
  require(!out.fail(), "write failed for " + p.string());
}

/// Output root: the flag if given, else $STABLEMV_OUTPUT_ROOT, else ./runs.
inline std::filesystem::path resolve_output_root(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kOutputRootEnv); env != nullptr && *env != '\0') return env;
  return "runs";
}

/// Files are written into a hidden staging directory and the whole
/// directory is renamed to output_root/run_id on commit. An uncommitted
/// run removes its staging directory. An existing run with the same id is
/// replaced.
class RunDirectory {
 public:
  RunDirectory(std::filesystem::path output_root, Json resolved_config)
      : root_(std::move(output_root)), config_(std::move(resolved_config)), id_(run_id(config_)),
        start_(std::chrono::steady_clock::now()) {
    std::filesystem::create_directories(root_);
    staging_ = root_ / ("." + id_ + ".partial");
    std::filesystem::remove_all(staging_);
    std::filesystem::create_directories(staging_);
  }

  RunDirectory(const RunDirectory&) = delete;
  RunDirectory& operator=(const RunDirectory&) = delete;

  ~RunDirectory() {
    if (!committed_) {
      std::error_code ec;
      std::filesystem::remove_all(staging_, ec);
    }
  }

  const std::string& id() const { return id_; }
  const Json& config() const { return config_; }
  std::filesystem::path final_path() const { return root_ / id_; }

  void write(const std::string& relative, const std::string& text) {
    require(!committed_, "run directory already committed");
    require(!relative.empty() && relative != "manifest.json", "reserved or empty file name");
    write_text_file(staging_ / relative, text);
    files_.insert(relative);
  }

  void write_json(const std::string& relative, const Json& j) { write(relative, j.dump(2) + "\n"); }
  void write_csv(const std::string& relative, const CsvWriter& csv) { write(relative, csv.str()); }

  /// Writes manifest.json and moves the run into place.
  std::filesystem::path commit() {
    require(!committed_, "run directory already committed");
    const double runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    Json manifest;
    manifest["run_id"] = id_;
    manifest["tool"] = "stablemv";
    manifest["version"] = STABLEMV_VERSION;
    manifest["files"] = Json(std::vector<std::string>(files_.begin(), files_.end()));
    manifest["config"] = config_;
    manifest["runtime_seconds"] = runtime;
    write_text_file(staging_ / "manifest.json", manifest.dump(2) + "\n");
    const auto dest = final_path();
    std::filesystem::remove_all(dest);
    std::filesystem::rename(staging_, dest);
    committed_ = true;
    return dest;
  }

 private:
  std::filesystem::path root_;
  std::filesystem::path staging_;
  Json config_;
  std::string id_;
  std::set<std::string> files_;
  std::chrono::steady_clock::time_point start_;
  bool committed_ = false;
};

/// Schema violation; the message starts with the field path.
class ConfigError : public InvalidArgument {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : InvalidArgument("config field '" + path + "': " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

namespace detail {

inline std::string json_kind(const Json& j) {
  if (j.is_number()) return "number";
  if (j.is_string()) return "string";
  if (j.is_boolean()) return "boolean";
  if (j.is_array()) return "array";
  if (j.is_object()) return "object";
  return "null";
}

inline void merge_into(Json& base, const Json& over, const std::string& prefix,
                       const std::set<std::string>& number_or_string) {
  for (const auto& [key, value] : over.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!base.contains(key)) throw ConfigError(path, "unknown field");
    Json& slot = base[key];
    if (number_or_string.count(path) != 0) {
      if (!value.is_number() && !value.is_string()) throw ConfigError(path, "expected a number or a string");
      slot = value;
      continue;
    }
    if (slot.is_object()) {
      if (!value.is_object()) throw ConfigError(path, "expected an object, got " + json_kind(value));
      merge_into(slot, value, path, number_or_string);
      continue;
    }
    if (json_kind(slot) != json_kind(value))
      throw ConfigError(path, "expected " + json_kind(slot) + ", got " + json_kind(value));
    if (slot.is_number_unsigned() && !value.is_number_unsigned())
      throw ConfigError(path, "expected a non-negative integer");
    if (slot.is_number_integer() && !value.is_number_integer()) throw ConfigError(path, "expected an integer");
    if (slot.is_number_float())
      slot = value.get<double>();
    else
      slot = value;
  }
}

}  // namespace detail

/// Overlays `over` on the defaults. Unknown fields and type mismatches are
/// reported with their paths; `number_or_string` lists fields that accept
/// either (such as delta = "auto").
inline Json merge_config(Json defaults, const Json& over, const std::set<std::string>& number_or_string = {}) {
  if (over.is_null()) return defaults;
  if (!over.is_object()) throw ConfigError("<root>", "config must be a JSON object");
  Json copy = over;
  if (copy.contains("schema_version")) {
    if (!copy["schema_version"].is_number_integer() || copy["schema_version"].get<int>() != kConfigSchemaVersion)
      throw ConfigError("schema_version", "unsupported schema version (expected " +
                                              std::to_string(kConfigSchemaVersion) + ")");
    copy.erase("schema_version");
  }
  detail::merge_into(defaults, copy, "", number_or_string);
  return defaults;
}

inline Json load_config_file(const std::filesystem::path& p) {
  const std::string text = read_text_file(p);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError("<file " + p.string() + ">", std::string("invalid JSON: ") + e.what());
  }
}

/// Byte comparison of two run directories, manifest.json excluded (it
/// records the runtime). Returns the differing or missing files.
inline std::vector<std::string> compare_run_outputs(const std::filesystem::path& a, const std::filesystem::path& b) {
  namespace fs = std::filesystem;
  auto listing = [](const fs::path& root) {
    std::set<std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
      if (e.is_regular_file()) {
        const auto rel = fs::relative(e.path(), root).generic_string();
        if (rel != "manifest.json") out.insert(rel);
      }
    return out;
  };
  const auto la = listing(a), lb = listing(b);
  std::vector<std::string> diff;
  for (const auto& f : la)
    if (lb.count(f) == 0 || read_text_file(a / f) != read_text_file(b / f)) diff.push_back(f);
  for (const auto& f : lb)
    if (la.count(f) == 0) diff.push_back(f);
  return diff;
}

}  // namespace stablemv
