#pragma once

// CSV serialization of run traces. Floating-point fields use 17 significant
// digits so that reading a file back reproduces every double exactly.

#include "opflow/flow.hpp"

#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace opflow {

inline constexpr const char *kTraceHeader =
    "iter,sim_time,energy,grad_norm,orth_error,half_spec_min,half_spec_max,dt,"
    "inner_iters";

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void write_trace_csv(std::ostream &os, const std::vector<TraceRecord> &trace) {
  os << kTraceHeader << '\n';
  for (const auto &r : trace) {
    os << r.iter << ',' << format_double(r.sim_time) << ','
       << format_double(r.energy) << ',' << format_double(r.grad_norm) << ','
       << format_double(r.orth_error) << ',' << format_double(r.half_spec_min)
       << ',' << format_double(r.half_spec_max) << ',' << format_double(r.dt)
       << ',' << r.inner_iters << '\n';
  }
}

class CsvError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string &line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_double_cell(const std::string &s, int line) {
  char *end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw CsvError("trace csv line " + std::to_string(line) + ": bad number '" + s + "'");
  return v;
}

inline int parse_int_cell(const std::string &s, int line) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos == s.size()) return v;
  } catch (const std::exception &) {
  }
  throw CsvError("trace csv line " + std::to_string(line) + ": bad integer '" + s + "'");
}

} // namespace detail

inline std::vector<TraceRecord> read_trace_csv(std::istream &is) {
  std::string line;
  if (!std::getline(is, line) || line != kTraceHeader)
    throw CsvError("trace csv: missing or unexpected header");
  std::vector<TraceRecord> out;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto c = detail::split_csv_line(line);
    if (c.size() != 9)
      throw CsvError("trace csv line " + std::to_string(lineno) + ": expected 9 fields");
    TraceRecord r;
    r.iter = detail::parse_int_cell(c[0], lineno);
    r.sim_time = detail::parse_double_cell(c[1], lineno);
    r.energy = detail::parse_double_cell(c[2], lineno);
    r.grad_norm = detail::parse_double_cell(c[3], lineno);
    r.orth_error = detail::parse_double_cell(c[4], lineno);
    r.half_spec_min = detail::parse_double_cell(c[5], lineno);
    r.half_spec_max = detail::parse_double_cell(c[6], lineno);
    r.dt = detail::parse_double_cell(c[7], lineno);
    r.inner_iters = detail::parse_int_cell(c[8], lineno);
    out.push_back(r);
  }
  return out;
}

} // namespace opflow
