#pragma once

// Coverage report CSVs. One row per (checkpoint, eps, gamma):
//
//   object_id,sampler,n_valid,attempts,eps,gamma,cov1,cov2,cov3,precision,wall_ms
//
// Undefined cells (empty robust set, wall time not recorded) are written as
// "nan". gamma = 0 rows use the plain success set.

#include "graspcov/core/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace graspcov {

inline constexpr std::string_view kReportHeader =
    "object_id,sampler,n_valid,attempts,eps,gamma,cov1,cov2,cov3,precision,wall_ms";
inline constexpr std::string_view kAggregateHeader =
    "sampler,n_valid,eps,gamma,runs,cov1_mean,cov1_std,cov2_mean,cov2_std,cov3_mean,cov3_std,"
    "precision_mean,precision_std";
inline constexpr std::string_view kPrecisionHeader = "sampler,runs,precision_mean,precision_std";

struct ReportRow {
  std::string object_id;
  std::string sampler;
  std::uint64_t n_valid = 0;
  std::uint64_t attempts = 0;
  double eps = 0.0;
  double gamma = 0.0;
  double cov1 = std::numeric_limits<double>::quiet_NaN();
  double cov2 = std::numeric_limits<double>::quiet_NaN();
  double cov3 = std::numeric_limits<double>::quiet_NaN();
  double precision = std::numeric_limits<double>::quiet_NaN();
  double wall_ms = std::numeric_limits<double>::quiet_NaN();
};

/// Shortest round-trip decimal form; "nan" for NaN.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_number(std::string_view s, const std::string& where) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw Error(ErrorCode::ParseError, where + ": bad number '" + std::string(s) + "'");
  return v;
}

inline std::uint64_t parse_count(std::string_view s, const std::string& where) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw Error(ErrorCode::ParseError, where + ": bad count '" + std::string(s) + "'");
  return v;
}

inline std::string format_report(const std::vector<ReportRow>& rows) {
  std::string out(kReportHeader);
  out += '\n';
  for (const ReportRow& r : rows) {
    out += r.object_id + ',' + r.sampler + ',' + std::to_string(r.n_valid) + ',' + std::to_string(r.attempts) +
           ',' + format_number(r.eps) + ',' + format_number(r.gamma) + ',' + format_number(r.cov1) + ',' +
           format_number(r.cov2) + ',' + format_number(r.cov3) + ',' + format_number(r.precision) + ',' +
           format_number(r.wall_ms) + '\n';
  }
  return out;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

/// Parses a report CSV, rejecting any other schema. `name` labels errors.
inline std::vector<ReportRow> parse_report(std::string_view text, const std::string& name) {
  std::vector<ReportRow> rows;
  std::size_t pos = 0, line_no = 0;
  bool header = true;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (header) {
      if (line != kReportHeader)
        throw Error(ErrorCode::ParseError, name + ": unexpected CSV header '" + std::string(line) + "'");
      header = false;
      continue;
    }
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    const std::string where = name + ":" + std::to_string(line_no);
    if (f.size() != 11) throw Error(ErrorCode::ParseError, where + ": expected 11 fields");
    ReportRow r;
    r.object_id = std::string(f[0]);
    r.sampler = std::string(f[1]);
    r.n_valid = parse_count(f[2], where);
    r.attempts = parse_count(f[3], where);
    r.eps = parse_number(f[4], where);
    r.gamma = parse_number(f[5], where);
    r.cov1 = parse_number(f[6], where);
    r.cov2 = parse_number(f[7], where);
    r.cov3 = parse_number(f[8], where);
    r.precision = parse_number(f[9], where);
    r.wall_ms = parse_number(f[10], where);
    rows.push_back(std::move(r));
  }
  if (header) throw Error(ErrorCode::ParseError, name + ": empty CSV");
  return rows;
}

/// Mean and sample standard deviation of the defined (non-NaN) values.
struct Summary {
  std::size_t count = 0;
  double mean = std::numeric_limits<double>::quiet_NaN();
  double std = std::numeric_limits<double>::quiet_NaN();
};

inline Summary summarize(const std::vector<double>& values) {
  Summary s;
  double sum = 0.0;
  for (double v : values)
    if (!std::isnan(v)) {
      sum += v;
      ++s.count;
    }
  if (s.count == 0) return s;
  s.mean = sum / static_cast<double>(s.count);
  if (s.count < 2) return s;
  double ss = 0.0;
  for (double v : values)
    if (!std::isnan(v)) ss += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(s.count - 1));
  return s;
}

struct AggregateRow {
  std::string sampler;
  std::uint64_t n_valid = 0;
  double eps = 0.0;
  double gamma = 0.0;
  std::size_t runs = 0;
  Summary cov1, cov2, cov3, precision;
};

/// Groups rows by (sampler, n_valid, eps, gamma) across objects and seeds.
/// Samplers keep the order given; within a sampler groups are sorted by
/// n_valid, eps and gamma.
inline std::vector<AggregateRow> aggregate(const std::vector<ReportRow>& rows,
                                           const std::vector<std::string>& sampler_order) {
  struct Acc {
    std::vector<double> c1, c2, c3, p;
  };
  std::map<std::string, std::map<std::tuple<std::uint64_t, double, double>, Acc>> groups;
  for (const ReportRow& r : rows) {
    Acc& a = groups[r.sampler][{r.n_valid, r.eps, r.gamma}];
    a.c1.push_back(r.cov1);
    a.c2.push_back(r.cov2);
    a.c3.push_back(r.cov3);
    a.p.push_back(r.precision);
  }
  std::vector<AggregateRow> out;
  for (const std::string& s : sampler_order) {
    const auto it = groups.find(s);
    if (it == groups.end()) continue;
    for (const auto& [key, a] : it->second) {
      AggregateRow row;
      row.sampler = s;
      std::tie(row.n_valid, row.eps, row.gamma) = key;
      row.runs = a.c1.size();
      row.cov1 = summarize(a.c1);
      row.cov2 = summarize(a.c2);
      row.cov3 = summarize(a.c3);
      row.precision = summarize(a.p);
      out.push_back(row);
    }
  }
  return out;
}

inline std::string format_aggregate(const std::vector<AggregateRow>& rows) {
  std::string out(kAggregateHeader);
  out += '\n';
  for (const AggregateRow& r : rows) {
    out += r.sampler + ',' + std::to_string(r.n_valid) + ',' + format_number(r.eps) + ',' +
           format_number(r.gamma) + ',' + std::to_string(r.runs);
    for (const Summary* s : {&r.cov1, &r.cov2, &r.cov3, &r.precision})
      out += ',' + format_number(s->mean) + ',' + format_number(s->std);
    out += '\n';
  }
  return out;
}

struct PrecisionRow {
  std::string sampler;
  Summary precision;
};

/// Final-checkpoint precision of every run (one value per object and seed),
/// summarized per sampler.
inline std::vector<PrecisionRow> precision_table(const std::vector<std::vector<ReportRow>>& runs,
                                                 const std::vector<std::string>& sampler_order) {
  std::map<std::string, std::vector<double>> values;
  for (const auto& run : runs) {
    if (run.empty()) continue;
    // Precision does not depend on eps or gamma; take the last row.
    values[run.back().sampler].push_back(run.back().precision);
  }
  std::vector<PrecisionRow> out;
  for (const std::string& s : sampler_order) {
    const auto it = values.find(s);
    if (it != values.end()) out.push_back({s, summarize(it->second)});
  }
  return out;
}

inline std::string format_precision_table(const std::vector<PrecisionRow>& rows) {
  std::string out(kPrecisionHeader);
  out += '\n';
  for (const PrecisionRow& r : rows)
    out += r.sampler + ',' + std::to_string(r.precision.count) + ',' + format_number(r.precision.mean) + ',' +
           format_number(r.precision.std) + '\n';
  return out;
}

}  // namespace graspcov
