#include "scalelaw/io.hpp"

#include <unistd.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <system_error>
#include <tuple>

#include "scalelaw/errors.hpp"
#include "scalelaw/synthetic.hpp"

namespace scalelaw {

namespace {

const std::vector<std::string> kDenseColumns{"m", "n", "error"};
const std::vector<std::string> kPruneColumns{"depth", "width_scale", "density", "n", "error"};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

struct Row {
  std::size_t line;
  std::vector<std::string_view> cells;
};

struct Table {
  std::vector<std::string_view> header;
  std::size_t header_line = 0;
  std::vector<Row> rows;
};

Table tokenize(std::string_view text) {
  Table t;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool have_header = false;
  if (text.substr(0, 3) == "\xEF\xBB\xBF") pos = 3;  // UTF-8 byte order mark
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view raw = trim(text.substr(pos, end - pos));
    ++line_no;
    pos = end + 1;
    if (raw.empty() || raw.front() == '#') {
      if (end == text.size()) break;
      continue;
    }
    if (!have_header) {
      t.header = split(raw);
      t.header_line = line_no;
      have_header = true;
    } else {
      t.rows.push_back({line_no, split(raw)});
    }
    if (end == text.size()) break;
  }
  if (!have_header) throw ParseError("empty file: no header line");
  return t;
}

[[noreturn]] void fail_at(std::size_t line, std::size_t col, std::string_view column,
                          const std::string& msg, bool domain = false) {
  std::ostringstream os;
  os << "row " << line << ", column " << col << " (" << column << "): " << msg;
  if (domain) throw DomainError(os.str());
  throw ParseError(os.str());
}

bool header_matches(const std::vector<std::string_view>& header,
                    const std::vector<std::string>& required) {
  if (header.size() != required.size() && header.size() != required.size() + 1) return false;
  for (std::size_t i = 0; i < required.size(); ++i)
    if (header[i] != required[i]) return false;
  return header.size() == required.size() || header.back() == "replicate";
}

std::string joined(const std::vector<std::string>& cols) {
  std::string s;
  for (const auto& c : cols) s += (s.empty() ? "" : ",") + c;
  return s;
}

void check_header(const Table& t, const std::vector<std::string>& required) {
  if (!header_matches(t.header, required)) {
    std::ostringstream os;
    os << "row " << t.header_line << ": header must be `" << joined(required) << "` or `"
       << joined(required) << ",replicate`";
    throw ParseError(os.str());
  }
}

double number(const Row& row, std::size_t col, std::string_view name) {
  const std::string_view cell = row.cells[col];
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size())
    fail_at(row.line, col + 1, name, "expected a decimal number, got `" + std::string(cell) + "`");
  if (!std::isfinite(v)) fail_at(row.line, col + 1, name, "value is not finite", true);
  return v;
}

std::optional<int> replicate(const Row& row, std::size_t col) {
  if (col >= row.cells.size() || row.cells[col].empty()) return std::nullopt;
  const std::string_view cell = row.cells[col];
  int v = 0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || v < 0)
    fail_at(row.line, col + 1, "replicate",
            "expected a non-negative integer, got `" + std::string(cell) + "`");
  return v;
}

void check_width(const Table& t, const Row& row) {
  if (row.cells.size() != t.header.size()) {
    std::ostringstream os;
    os << "row " << row.line << ": expected " << t.header.size() << " fields, got "
       << row.cells.size();
    throw ParseError(os.str());
  }
}

void positive(const Row& row, std::size_t col, std::string_view name, double v) {
  if (!(v > 0.0)) fail_at(row.line, col + 1, name, "must be positive", true);
}

}  // namespace

CsvKind detect_csv_kind(std::string_view text) {
  const Table t = tokenize(text);
  if (header_matches(t.header, kDenseColumns)) return CsvKind::kDense;
  if (header_matches(t.header, kPruneColumns)) return CsvKind::kPrune;
  std::ostringstream os;
  os << "row " << t.header_line << ": header matches neither `" << joined(kDenseColumns)
     << "[,replicate]` nor `" << joined(kPruneColumns) << "[,replicate]`";
  throw ParseError(os.str());
}

std::vector<DenseMeasurement> parse_dense_csv(std::string_view text) {
  const Table t = tokenize(text);
  check_header(t, kDenseColumns);
  std::vector<DenseMeasurement> out;
  for (const Row& row : t.rows) {
    check_width(t, row);
    DenseMeasurement d{};
    d.m = number(row, 0, "m");
    d.n = number(row, 1, "n");
    d.error = number(row, 2, "error");
    positive(row, 0, "m", d.m);
    positive(row, 1, "n", d.n);
    positive(row, 2, "error", d.error);
    d.replicate = replicate(row, 3);
    out.push_back(d);
  }
  if (out.empty()) throw ParseError("no data rows after the header");
  return out;
}

LoadedPrune parse_prune_csv(std::string_view text) {
  const Table t = tokenize(text);
  check_header(t, kPruneColumns);
  LoadedPrune out;
  for (const Row& row : t.rows) {
    check_width(t, row);
    PruneMeasurement r{};
    r.depth = number(row, 0, "depth");
    r.width = number(row, 1, "width_scale");
    r.density = number(row, 2, "density");
    r.n = number(row, 3, "n");
    r.error = number(row, 4, "error");
    positive(row, 0, "depth", r.depth);
    positive(row, 1, "width_scale", r.width);
    if (!(r.density > 0.0 && r.density <= 1.0))
      fail_at(row.line, 3, "density", "must lie in (0, 1]", true);
    positive(row, 3, "n", r.n);
    positive(row, 4, "error", r.error);
    r.replicate = replicate(row, 5);
    out.records.push_back(r);
  }
  if (out.records.empty()) throw ParseError("no data rows after the header");
  attach_measured_eps_np(out.records);

  // One warning per group with densities off the 0.8^i ladder.
  std::map<std::tuple<double, double, double>, double> off;
  for (const auto& r : out.records) {
    const double i = std::round(std::log(r.density) / std::log(0.8));
    if (std::abs(r.density / std::pow(0.8, i) - 1.0) > 1e-9)
      off.emplace(std::make_tuple(r.depth, r.width, r.n), r.density);
  }
  for (const auto& [key, d] : off) {
    std::ostringstream os;
    os << "group (depth=" << std::get<0>(key) << ", width_scale=" << std::get<1>(key)
       << ", n=" << std::get<2>(key) << ") has density " << format_double(d)
       << " off the 0.8^i pruning ladder";
    out.warnings.push_back(os.str());
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<DenseMeasurement> load_dense_csv(const std::filesystem::path& path) {
  try {
    return parse_dense_csv(read_text_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  } catch (const DomainError& e) {
    throw DomainError(path.string() + ": " + e.what());
  }
}

LoadedPrune load_prune_csv(const std::filesystem::path& path) {
  try {
    return parse_prune_csv(read_text_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  } catch (const DomainError& e) {
    throw DomainError(path.string() + ": " + e.what());
  }
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string dense_csv(const std::vector<DenseMeasurement>& records) {
  bool reps = false;
  for (const auto& r : records) reps |= r.replicate.has_value();
  std::string out = reps ? "m,n,error,replicate\n" : "m,n,error\n";
  for (const auto& r : records) {
    out += format_double(r.m) + "," + format_double(r.n) + "," + format_double(r.error);
    if (reps) out += "," + (r.replicate ? std::to_string(*r.replicate) : std::string());
    out += "\n";
  }
  return out;
}

std::string prune_csv(const std::vector<PruneMeasurement>& records) {
  bool reps = false;
  for (const auto& r : records) reps |= r.replicate.has_value();
  std::string out = "depth,width_scale,density,n,error";
  out += reps ? ",replicate\n" : "\n";
  for (const auto& r : records) {
    out += format_double(r.depth) + "," + format_double(r.width) + "," +
           format_double(r.density) + "," + format_double(r.n) + "," + format_double(r.error);
    if (reps) out += "," + (r.replicate ? std::to_string(*r.replicate) : std::string());
    out += "\n";
  }
  return out;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  std::error_code ec;
  fs::create_directories(dir, ec);
  const fs::path tmp = dir / ("." + path.filename().string() + ".tmp" + std::to_string(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw ParseError("cannot write " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw ParseError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

}  // namespace scalelaw
