#ifndef PSTORM_HARNESS_CSV_HPP
#define PSTORM_HARNESS_CSV_HPP

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pstorm/error.hpp"
#include "pstorm/optim.hpp"

namespace pstorm::csv {

inline constexpr std::string_view kMetricsHeader = "epoch,samples,objective,obj_error,stationarity,density_pct,wall_ms";

// Shortest round-trip representation; never locale dependent.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, static_cast<std::size_t>(res.ptr - buf));
}

inline void write_row(std::ostream& out, const MetricsRow& r) {
  out << r.epoch << ',' << r.samples << ',' << format_double(r.objective) << ',' << format_double(r.obj_error) << ','
      << format_double(r.stationarity) << ',' << format_double(r.density_pct) << ',' << r.wall_ms << '\n';
}

inline void write_metrics(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << kMetricsHeader << '\n';
  for (const auto& r : rows) write_row(out, r);
}

inline std::vector<std::string> split(std::string_view line, char sep = ',') {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_double(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw DataError("csv: bad number '" + s + "'");
  return v;
}

template <class Int>
Int parse_int(const std::string& s) {
  Int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw DataError("csv: bad integer '" + s + "'");
  return v;
}

inline std::vector<MetricsRow> read_metrics(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) throw DataError("csv: unexpected header");
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 7) throw DataError("csv: expected 7 fields");
    MetricsRow r;
    r.epoch = parse_int<std::uint64_t>(f[0]);
    r.samples = parse_int<std::uint64_t>(f[1]);
    r.objective = parse_double(f[2]);
    r.obj_error = parse_double(f[3]);
    r.stationarity = parse_double(f[4]);
    r.density_pct = parse_double(f[5]);
    r.wall_ms = parse_int<std::int64_t>(f[6]);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace pstorm::csv

#endif  // PSTORM_HARNESS_CSV_HPP
