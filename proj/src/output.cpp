#include "qunravel/output.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

namespace qunravel::io {

using nlohmann::json;

std::string format_double(double v) {
  if (v == 0.0) return "0";  // also folds -0
  std::array<char, 40> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return buf.data();
}

namespace {

std::string to_hex(const unsigned char* data, unsigned int n) {
  std::ostringstream os;
  for (unsigned int i = 0; i < n; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(data[i]);
  return os.str();
}

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (ctx_ == nullptr || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1)
      throw Error("SHA-256 initialization failed");
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(const char* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx_, data, n) != 1) throw Error("SHA-256 update failed");
  }
  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_, md, &len) != 1) throw Error("SHA-256 finalization failed");
    return to_hex(md, len);
  }

 private:
  EVP_MD_CTX* ctx_;
};

// Rewrites floating-point leaves as raw 17-digit numbers.
void dump_value(std::ostringstream& os, const json& v, int indent, int depth) {
  auto newline = [&](int d) {
    if (indent >= 0) os << '\n' << std::string(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (v.type()) {
    case json::value_t::object: {
      if (v.empty()) {
        os << "{}";
        return;
      }
      os << '{';
      bool first = true;
      for (const auto& [key, value] : v.items()) {  // nlohmann objects are key-sorted
        if (!first) os << ',';
        first = false;
        newline(depth + 1);
        os << json(key).dump() << (indent >= 0 ? ": " : ":");
        dump_value(os, value, indent, depth + 1);
      }
      newline(depth);
      os << '}';
      return;
    }
    case json::value_t::array: {
      if (v.empty()) {
        os << "[]";
        return;
      }
      os << '[';
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) os << ',';
        newline(depth + 1);
        dump_value(os, v[i], indent, depth + 1);
      }
      newline(depth);
      os << ']';
      return;
    }
    case json::value_t::number_float: {
      const double d = v.get<double>();
      if (!std::isfinite(d)) {
        os << "null";
        return;
      }
      std::string s = format_double(d);
      if (s.find_first_of(".eE") == std::string::npos) s += ".0";
      os << s;
      return;
    }
    default:
      os << v.dump();
  }
}

}  // namespace

std::string sha256_hex(const std::string& data) {
  Sha256 h;
  h.update(data.data(), data.size());
  return h.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read '" + path.string() + "' for checksumming");
  Sha256 h;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

std::string dump_json(const json& value, int indent) {
  std::ostringstream os;
  dump_value(os, value, indent, 0);
  return os.str();
}

OutputSet::OutputSet(std::filesystem::path directory) : dir_(std::move(directory)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw Error("cannot create output directory '" + dir_.string() + "': " + ec.message());
}

void OutputSet::add(const std::string& name) {
  const auto path = resolve(name);
  files_.push_back({name, sha256_file(path), std::filesystem::file_size(path)});
}

CsvWriter::CsvWriter(OutputSet& set, std::string name, const std::vector<std::string>& header)
    : set_(&set), name_(std::move(name)), out_(set.resolve(name_)) {
  if (!out_) throw Error("cannot open '" + set.resolve(name_).string() + "' for writing");
  for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
  out_ << '\n';
}

CsvWriter::~CsvWriter() {
  try {
    close();
  } catch (...) {
  }
}

CsvWriter& CsvWriter::cell(double v) {
  out_ << (first_ ? "" : ",") << format_double(v);
  first_ = false;
  return *this;
}

CsvWriter& CsvWriter::cell(long long v) {
  out_ << (first_ ? "" : ",") << v;
  first_ = false;
  return *this;
}

void CsvWriter::end_row() {
  out_ << '\n';
  first_ = true;
}

void CsvWriter::close() {
  if (closed_) return;
  closed_ = true;
  out_.close();
  set_->add(name_);
}

NdjsonWriter::NdjsonWriter(OutputSet& set, std::string name)
    : set_(&set), name_(std::move(name)), out_(set.resolve(name_)) {
  if (!out_) throw Error("cannot open '" + set.resolve(name_).string() + "' for writing");
}

NdjsonWriter::~NdjsonWriter() {
  try {
    close();
  } catch (...) {
  }
}

void NdjsonWriter::write(const json& record) { out_ << dump_json(record) << '\n'; }

void NdjsonWriter::close() {
  if (closed_) return;
  closed_ = true;
  out_.close();
  set_->add(name_);
}

void write_json_file(OutputSet& set, const std::string& name, const json& value) {
  {
    std::ofstream out(set.resolve(name));
    if (!out) throw Error("cannot open '" + set.resolve(name).string() + "' for writing");
    out << dump_json(value, 2) << '\n';
  }
  set.add(name);
}

void write_field(OutputSet& set, const std::string& name, const phase::PhaseField& field, double t,
                 const std::string& kind) {
  const auto& g = field.grid;
  {
    std::ofstream out(set.resolve(name + ".csv"));
    if (!out) throw Error("cannot open '" + set.resolve(name + ".csv").string() + "' for writing");
    for (int i = 0; i < g.nq; ++i) {
      for (int j = 0; j < g.np; ++j) out << (j ? "," : "") << format_double(field.values(i, j));
      out << '\n';
    }
  }
  set.add(name + ".csv");
  const bool cyl = g.geometry == phase::PhaseGrid::Geometry::cylinder;
  write_json_file(set, name + ".json",
                  json{{"kind", kind},
                       {"t", t},
                       {"geometry", cyl ? "cylinder" : "plane"},
                       {"rows", cyl ? "theta" : "x"},
                       {"columns", cyl ? "L" : "p"},
                       {"q_range", {g.q_min, g.q_max}},
                       {"p_range", {g.p_min, g.p_max}},
                       {"resolution", {g.nq, g.np}},
                       {"q_values", cyl ? "q_min + i*dq" : "q_min + (i+0.5)*dq"},
                       {"p_values", "p_min + (j+0.5)*dp"}});
}

}  // namespace qunravel::io
