#include "harvest/output.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "harvest/config.hpp"

namespace harvest {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) v = 0.0;  // drop the sign of negative zero
  std::array<char, 32> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) throw std::runtime_error("format_number: conversion failed");
  return std::string(buf.data(), end);
}

namespace {

std::string to_hex(const unsigned char* data, unsigned int n) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(2 * n, '0');
  for (unsigned int i = 0; i < n; ++i) {
    out[2 * i] = digits[data[i] >> 4];
    out[2 * i + 1] = digits[data[i] & 0xF];
  }
  return out;
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int n = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &n, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 digest failed");
  return to_hex(md.data(), n);
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

CsvTable::CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {
  if (columns_.empty()) throw std::invalid_argument("CsvTable: no columns");
}

void CsvTable::push(std::vector<std::string> row) {
  if (row.size() != columns_.size())
    throw std::invalid_argument("CsvTable: row has " + std::to_string(row.size()) + " cells, expected " +
                                std::to_string(columns_.size()));
  rows_.push_back(std::move(row));
}

std::string CsvTable::quote(std::string_view v) {
  if (v.find_first_of(",\"\n") == std::string_view::npos) return std::string(v);
  std::string out = "\"";
  for (char ch : v) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

std::string CsvTable::render(const std::vector<std::string>& metadata) const {
  std::string out;
  for (const auto& m : metadata) out += "# " + m + "\n";
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  std::vector<std::string> header;
  for (const auto& c : columns_) header.push_back(quote(c));
  line(header);
  for (const auto& r : rows_) line(r);
  return out;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

RunOutput::RunOutput(std::filesystem::path dir, std::string subcommand, nlohmann::json resolved_config,
                     std::uint64_t seed)
    : dir_(std::move(dir)),
      subcommand_(std::move(subcommand)),
      config_(std::move(resolved_config)),
      seed_(seed),
      config_hash_(sha256_hex(config_.dump())),
      started_at_(utc_timestamp()) {
  std::filesystem::create_directories(dir_);
  std::filesystem::remove(dir_ / "manifest.json");
}

void RunOutput::record(const std::string& name, std::string_view content) {
  if (finished_) throw std::logic_error("RunOutput: write after finish");
  if (name == "manifest.json") throw std::invalid_argument("RunOutput: reserved file name");
  const auto path = dir_ / name;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed: " + path.string());
  }
  for (auto& f : files_) {
    if (f.path == name) {
      f = {name, sha256_hex(content), content.size()};
      return;
    }
  }
  files_.push_back({name, sha256_hex(content), content.size()});
}

void RunOutput::write_csv(const std::string& name, const CsvTable& table) {
  record(name, table.render({"harvest " + std::string(kVersion), "subcommand=" + subcommand_,
                             "config_hash=" + config_hash_, "seed=" + std::to_string(seed_)}));
}

void RunOutput::write_text(const std::string& name, std::string_view text) { record(name, text); }

void RunOutput::finish() {
  if (finished_) return;
  nlohmann::json files = nlohmann::json::array();
  for (const auto& f : files_) files.push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  const nlohmann::json manifest{{"format", "harvest-manifest"},
                                {"version", 1},
                                {"code_version", kVersion},
                                {"subcommand", subcommand_},
                                {"seed", seed_},
                                {"config_hash", config_hash_},
                                {"config", config_},
                                {"started_at", started_at_},
                                {"finished_at", utc_timestamp()},
                                {"files", files}};
  std::ofstream out(dir_ / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write manifest in " + dir_.string());
  out << manifest.dump(2) << '\n';
  if (!out) throw std::runtime_error("manifest write failed in " + dir_.string());
  finished_ = true;
}

}  // namespace harvest
