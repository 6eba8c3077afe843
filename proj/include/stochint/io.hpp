#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "stochint/error.hpp"
#include "stochint/parabolic.hpp"
#include "stochint/prob_core.hpp"
#include "stochint/spde.hpp"

namespace stochint {

enum class Verdict { pass, fail, inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "unknown";
}

struct ReportRow {
  std::string scenario;
  std::string check_id;
  std::string anchor;
  int level = 0;
  std::string metric;
  double value = 0.0;
  double tolerance = 0.0;
  Verdict verdict = Verdict::pass;
  double runtime_ms = 0.0;
};

inline constexpr std::string_view kReportHeader =
    "scenario,check_id,paper_anchor,level,metric,value,tolerance,verdict,runtime_ms";

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

/// Canonical row order: (check_id, level), stable for equal keys.
inline void sort_rows(std::vector<ReportRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
    return a.check_id != b.check_id ? a.check_id < b.check_id : a.level < b.level;
  });
}

inline std::string report_csv(const std::vector<ReportRow>& rows, bool include_runtime = true) {
  std::string out(kReportHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += csv_field(r.scenario) + ',' + csv_field(r.check_id) + ',' + csv_field(r.anchor) + ',' +
           std::to_string(r.level) + ',' + csv_field(r.metric) + ',' + format_number(r.value) + ',' +
           format_number(r.tolerance) + ',' + to_string(r.verdict) + ',' +
           (include_runtime ? format_number(r.runtime_ms) : std::string()) + '\n';
  }
  return out;
}

/// Worst verdict over rows: fail beats inconclusive beats pass.
inline Verdict combine(const std::vector<ReportRow>& rows) {
  Verdict v = Verdict::pass;
  for (const auto& r : rows) {
    if (r.verdict == Verdict::fail) return Verdict::fail;
    if (r.verdict == Verdict::inconclusive) v = Verdict::inconclusive;
  }
  return v;
}

/// One line per check id (worst verdict over its levels) plus an overall line.
inline std::string verdicts_csv(const std::vector<ReportRow>& rows) {
  std::string out = "scenario,check_id,verdict\n";
  std::vector<std::string> ids;
  for (const auto& r : rows)
    if (std::find(ids.begin(), ids.end(), r.check_id) == ids.end()) ids.push_back(r.check_id);
  std::sort(ids.begin(), ids.end());
  const std::string scenario = rows.empty() ? std::string() : rows.front().scenario;
  for (const auto& id : ids) {
    std::vector<ReportRow> sub;
    for (const auto& r : rows)
      if (r.check_id == id) sub.push_back(r);
    out += csv_field(scenario) + ',' + csv_field(id) + ',' + to_string(combine(sub)) + '\n';
  }
  out += csv_field(scenario) + ",overall," + to_string(combine(rows)) + '\n';
  return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw Error("write failed: " + path.string());
}

/// Per node and report time: mean, variance and Ky Fan distance to a reference solution.
inline std::string solution_csv(const FieldSolution& sol, const FieldSolution* reference = nullptr) {
  std::string out = "x_index,t,mean,variance,ky_fan_ref\n";
  if (reference && (!(reference->grid() == sol.grid()) || reference->space_id() != sol.space_id()))
    throw AlignmentError("solution_csv: reference on a different grid or space");
  for (std::size_t ti = 0; ti < sol.times().size(); ++ti) {
    const double t = sol.times()[ti];
    const std::size_t rti = reference ? reference->time_index(t) : 0;
    for (std::size_t node = 0; node < sol.grid().size(); ++node) {
      const Ensemble e = sol.at(ti, node);
      out += std::to_string(node) + ',' + format_number(t) + ',' + format_number(e.mean()) + ',' +
             format_number(e.variance()) + ',';
      if (reference) out += format_number(ky_fan_distance(e, reference->at(rti, node)).value);
      out += '\n';
    }
  }
  return out;
}

// ---- raw ensemble dump -----------------------------------------------------------
//
// Little-endian layout:
//   char[4] "SIFS", u32 version = 1, u32 dim,
//   u64 n_nodes, u64 n_times, u64 n_paths,
//   per axis (dim entries): f64 lo, f64 hi, u64 count,
//   f64 times[n_times],
//   f64 values[n_times][n_nodes][n_paths]   (row-major, path fastest)

inline constexpr char kDumpMagic[4] = {'S', 'I', 'F', 'S'};
inline constexpr std::uint32_t kDumpVersion = 1;

namespace detail {

template <class T>
void put_le(std::string& buf, T v) {
  static_assert(std::endian::native == std::endian::little, "dump writer assumes a little-endian host");
  char raw[sizeof(T)];
  std::memcpy(raw, &v, sizeof(T));
  buf.append(raw, sizeof(T));
}

template <class T>
T get_le(const std::string& buf, std::size_t& pos) {
  if (pos + sizeof(T) > buf.size()) throw Error("ensemble dump: truncated file");
  T v;
  std::memcpy(&v, buf.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace detail

inline std::string encode_dump(const FieldSolution& sol) {
  std::string buf(kDumpMagic, 4);
  const GridSpec& g = sol.grid();
  detail::put_le<std::uint32_t>(buf, kDumpVersion);
  detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(g.dim));
  detail::put_le<std::uint64_t>(buf, g.size());
  detail::put_le<std::uint64_t>(buf, sol.times().size());
  detail::put_le<std::uint64_t>(buf, sol.paths());
  for (int a = 0; a < g.dim; ++a) {
    detail::put_le<double>(buf, g.axes[a].lo);
    detail::put_le<double>(buf, g.axes[a].hi);
    detail::put_le<std::uint64_t>(buf, g.counts[a]);
  }
  for (double t : sol.times()) detail::put_le<double>(buf, t);
  for (double v : sol.raw_values()) detail::put_le<double>(buf, v);
  return buf;
}

struct EnsembleDump {
  GridSpec grid;
  std::vector<double> times;
  std::size_t paths = 0;
  std::vector<double> values;  // [time][node][path]
};

inline EnsembleDump decode_dump(const std::string& buf) {
  if (buf.size() < 4 || std::memcmp(buf.data(), kDumpMagic, 4) != 0) throw Error("ensemble dump: bad magic");
  std::size_t pos = 4;
  if (detail::get_le<std::uint32_t>(buf, pos) != kDumpVersion) throw Error("ensemble dump: unsupported version");
  EnsembleDump d;
  d.grid.dim = static_cast<int>(detail::get_le<std::uint32_t>(buf, pos));
  if (d.grid.dim != 1 && d.grid.dim != 2) throw Error("ensemble dump: bad dimension");
  const auto nodes = detail::get_le<std::uint64_t>(buf, pos);
  const auto ntimes = detail::get_le<std::uint64_t>(buf, pos);
  d.paths = detail::get_le<std::uint64_t>(buf, pos);
  for (int a = 0; a < d.grid.dim; ++a) {
    d.grid.axes[a].lo = detail::get_le<double>(buf, pos);
    d.grid.axes[a].hi = detail::get_le<double>(buf, pos);
    d.grid.counts[a] = detail::get_le<std::uint64_t>(buf, pos);
  }
  if (d.grid.size() != nodes) throw Error("ensemble dump: node count disagrees with the axes");
  for (std::uint64_t i = 0; i < ntimes; ++i) d.times.push_back(detail::get_le<double>(buf, pos));
  const std::size_t count = nodes * ntimes * d.paths;
  if (buf.size() - pos != count * sizeof(double)) throw Error("ensemble dump: payload size mismatch");
  d.values.resize(count);
  std::memcpy(d.values.data(), buf.data() + pos, count * sizeof(double));
  return d;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace stochint
