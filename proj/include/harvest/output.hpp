#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <string_view>
#include <vector>

namespace harvest {

/// Shortest round-trip decimal form of `v`.
std::string format_number(double v);

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

/// In-memory CSV table. Cells are rendered on insertion so that repeated
/// runs produce identical bytes.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns);

  template <typename... Ts>
  void add(const Ts&... values) {
    std::vector<std::string> row;
    row.reserve(sizeof...(Ts));
    (row.push_back(cell(values)), ...);
    push(std::move(row));
  }

  /// Throws std::invalid_argument when the row width differs from the header.
  void push(std::vector<std::string> row);

  const std::vector<std::string>& columns() const { return columns_; }
  std::size_t rows() const { return rows_.size(); }

  /// Header comment lines, column names and rows, newline-terminated.
  std::string render(const std::vector<std::string>& metadata) const;

  static std::string cell(double v) { return format_number(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(long v) { return std::to_string(v); }
  static std::string cell(long long v) { return std::to_string(v); }
  static std::string cell(unsigned long v) { return std::to_string(v); }
  static std::string cell(unsigned long long v) { return std::to_string(v); }
  static std::string cell(bool v) { return v ? "1" : "0"; }
  static std::string cell(const char* v) { return quote(v); }
  static std::string cell(const std::string& v) { return quote(v); }

 private:
  static std::string quote(std::string_view v);

  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

struct FileRecord {
  std::string path;  // relative to the run directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

/// One run directory: data files plus a single manifest.json listing each
/// file with its digest. Every CSV starts with "# key=value" lines carrying
/// the code version, the resolved-config hash and the seed.
class RunOutput {
 public:
  RunOutput(std::filesystem::path dir, std::string subcommand, nlohmann::json resolved_config, std::uint64_t seed);

  const std::filesystem::path& dir() const { return dir_; }
  const std::string& config_hash() const { return config_hash_; }

  void write_csv(const std::string& name, const CsvTable& table);
  void write_text(const std::string& name, std::string_view text);

  /// Writes manifest.json; call once after all data files.
  void finish();

  const std::vector<FileRecord>& files() const { return files_; }

 private:
  void record(const std::string& name, std::string_view content);

  std::filesystem::path dir_;
  std::string subcommand_;
  nlohmann::json config_;
  std::uint64_t seed_;
  std::string config_hash_;
  std::string started_at_;
  std::vector<FileRecord> files_;
  bool finished_ = false;
};

/// UTC timestamp in ISO 8601 form.
std::string utc_timestamp();

}  // namespace harvest
