#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qunravel/phase_space.hpp"

namespace qunravel::io {

/// Shortest form is not used: every value gets 17 significant digits, which
/// round-trips any double.
std::string format_double(double v);

/// Lowercase hex SHA-256 of a file's bytes or of a string.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(const std::string& data);

struct OutputFile {
  std::string path;  // relative to the output directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

/// Tracks the files of one run; every writer registers its file on close.
class OutputSet {
 public:
  explicit OutputSet(std::filesystem::path directory);

  const std::filesystem::path& directory() const { return dir_; }
  std::filesystem::path resolve(const std::string& name) const { return dir_ / name; }
  void add(const std::string& name);  // checksums the finished file
  const std::vector<OutputFile>& files() const { return files_; }

 private:
  std::filesystem::path dir_;
  std::vector<OutputFile> files_;
};

class CsvWriter {
 public:
  CsvWriter(OutputSet& set, std::string name, const std::vector<std::string>& header);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  CsvWriter& cell(double v);
  CsvWriter& cell(long long v);
  CsvWriter& cell(int v) { return cell(static_cast<long long>(v)); }
  CsvWriter& cell(long v) { return cell(static_cast<long long>(v)); }
  void end_row();
  void close();

 private:
  OutputSet* set_;
  std::string name_;
  std::ofstream out_;
  bool first_ = true;
  bool closed_ = false;
};

/// One JSON object per line. Floating-point members are written with 17
/// significant digits.
class NdjsonWriter {
 public:
  NdjsonWriter(OutputSet& set, std::string name);
  ~NdjsonWriter();
  NdjsonWriter(const NdjsonWriter&) = delete;
  NdjsonWriter& operator=(const NdjsonWriter&) = delete;

  void write(const nlohmann::json& record);
  void close();

 private:
  OutputSet* set_;
  std::string name_;
  std::ofstream out_;
  bool closed_ = false;
};

/// JSON text with floats at 17 significant digits and sorted keys.
std::string dump_json(const nlohmann::json& value, int indent = -1);

void write_json_file(OutputSet& set, const std::string& name, const nlohmann::json& value);

/// Field values as an nq x np CSV matrix plus `<name>.json` describing the grid.
void write_field(OutputSet& set, const std::string& name, const phase::PhaseField& field, double t,
                 const std::string& kind);

}  // namespace qunravel::io
