#pragma once

// CSV emission and parsing for metrics, phase events and region maps.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "ecodos/engine.hpp"

namespace ecodos {

/// Shortest round-trip decimal; "nan", "inf", "-inf" for non-finite values.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::vector<std::string> metrics_columns(std::size_t strategies) {
  std::vector<std::string> cols{"t_update", "t_slot"};
  for (std::size_t i = 1; i <= strategies; ++i) cols.push_back("share_s" + std::to_string(i));
  for (const char* c : {"active_su_density", "mu_phase", "pr_success", "su_success", "pr_sinr_db_mean",
                        "pr_sinr_db_median", "su_sinr_db_mean", "su_sinr_db_median"}) {
    cols.emplace_back(c);
  }
  for (std::size_t i = 1; i <= strategies; ++i) cols.push_back("payoff_s" + std::to_string(i));
  return cols;
}

namespace detail {

inline void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << fields[i];
  }
  out << '\n';
}

}  // namespace detail

inline void write_metrics_csv(std::ostream& out, const std::vector<MetricsRecord>& records, std::size_t strategies) {
  detail::write_row(out, metrics_columns(strategies));
  for (const auto& r : records) {
    std::vector<std::string> f{std::to_string(r.t_update), std::to_string(r.t_slot)};
    for (double s : r.shares) f.push_back(format_number(s));
    f.push_back(format_number(r.active_su_density));
    f.emplace_back(to_string(r.mu_phase));
    for (double v : {r.pr_success, r.su_success, r.pr_sinr_db_mean, r.pr_sinr_db_median, r.su_sinr_db_mean,
                     r.su_sinr_db_median}) {
      f.push_back(format_number(v));
    }
    for (double p : r.payoffs) f.push_back(format_number(p));
    detail::write_row(out, f);
  }
}

inline void write_phase_csv(std::ostream& out, const std::vector<PhaseEvent>& events) {
  detail::write_row(out, {"t_update", "t_slot", "old_phase", "new_phase", "trigger_value"});
  for (const auto& e : events) {
    detail::write_row(out, {std::to_string(e.t_update), std::to_string(e.t_slot), std::string(to_string(e.from)),
                            std::string(to_string(e.to)), format_number(e.trigger)});
  }
}

inline void write_region_csv(std::ostream& out, const std::vector<RegionCell>& cells) {
  detail::write_row(out, {"delta", "nu", "kappa", "classification", "terminal_mutant_share"});
  for (const auto& c : cells) {
    detail::write_row(out, {format_number(c.delta), format_number(c.nu), format_number(c.kappa),
                            std::string(to_string(c.result.verdict)), format_number(c.result.terminal_mutant_share)});
  }
}

/// Raised for malformed CSV input; `row()` is the 1-based line number.
class CsvError : public std::runtime_error {
 public:
  CsvError(std::size_t row, const std::string& what)
      : std::runtime_error("row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw std::out_of_range("no column '" + std::string(name) + "'");
  }
  bool has(std::string_view name) const {
    for (const auto& h : header) {
      if (h == name) return true;
    }
    return false;
  }
};

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

/// Reads a rectangular CSV with a header line.
inline CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (row == 1) {
      t.header = split_csv_line(line);
      continue;
    }
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != t.header.size()) {
      throw CsvError(row, "expected " + std::to_string(t.header.size()) + " fields, found " +
                              std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
  }
  if (row == 0) throw CsvError(1, "missing header");
  return t;
}

inline double parse_number(const std::string& s, std::size_t row) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return HUGE_VAL;
  if (s == "-inf") return -HUGE_VAL;
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw CsvError(row, "not a number: '" + s + "'");
  return v;
}

/// Writes `content` to a sibling temp file and renames it over `path`.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out.flush()) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace ecodos
