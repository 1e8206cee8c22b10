// Deterministic serialization of reports, traces and measurement results.
//
// JSON: objects with sorted keys, two-space indent, trailing newline; doubles
// in shortest round-trip form. CSV: fixed column order, LF line endings,
// doubles printed with 17 significant digits. Negative zero is written as 0.

#pragma once

#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "zeno_tsvf/measurement.hpp"
#include "zeno_tsvf/quantum_core.hpp"
#include "zeno_tsvf/schedule.hpp"
#include "zeno_tsvf/tsvf.hpp"

namespace zeno_tsvf::io {

using Json = nlohmann::json;

inline double clean(double x) { return x + 0.0; }

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", clean(x));
  return buf;
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

inline std::string pair_key(int m, int n) { return std::to_string(m) + "," + std::to_string(n); }

inline Json complex_json(Complex z) { return Json{{"re", clean(z.real())}, {"im", clean(z.imag())}}; }

inline Json report_to_json(const RunReport& report) {
  Json d3 = Json::object();
  for (const auto& [m, p] : report.p_d3) d3[std::to_string(m)] = clean(p);
  Json bob = Json::object();
  for (const auto& [mn, p] : report.p_bob_absorb) bob[pair_key(mn.first, mn.second)] = clean(p);
  return Json{
      {"M", report.outer_cycles},
      {"N", report.inner_cycles},
      {"bit", static_cast<int>(report.bit)},
      {"p_D1", clean(report.p_d1)},
      {"p_D2", clean(report.p_d2)},
      {"p_D3", d3},
      {"p_D3_total", clean(report.sum_p_d3())},
      {"p_bob_absorb", bob},
      {"p_bob_absorb_total", clean(report.sum_p_absorb())},
      {"total", clean(report.total)},
  };
}

inline Json schedule_to_json(const Schedule& schedule) {
  Json events = Json::array();
  for (const Event& e : schedule.events) {
    events.push_back(Json{{"index", e.index},
                          {"kind", std::string(event_kind_name(e.kind))},
                          {"m", e.cycle},
                          {"n", e.step}});
  }
  return Json{{"M", schedule.outer_cycles()},
              {"N", schedule.inner_cycles()},
              {"bit", static_cast<int>(schedule.bit())},
              {"theta_outer", schedule.theta_outer},
              {"theta_inner", schedule.theta_inner},
              {"events", events}};
}

// Presence-trace columns, in order.
inline std::vector<std::string> trace_columns() {
  std::vector<std::string> cols = {"slice_index", "event_kind", "m", "n"};
  for (const char* prefix : {"fwd", "bwd", "W"}) {
    for (PathMode mode : kAllModes) {
      cols.push_back(std::string(prefix) + "_" + mode_letter(mode) + "_re");
      cols.push_back(std::string(prefix) + "_" + mode_letter(mode) + "_im");
    }
  }
  cols.push_back("abl_c");
  return cols;
}

inline void write_csv_header(std::ostream& out, const std::vector<std::string>& cols) {
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
}

inline void write_trace_csv(std::ostream& out, const std::vector<PresenceRow>& rows) {
  write_csv_header(out, trace_columns());
  auto put = [&](Complex z) { out << ',' << format_double(z.real()) << ',' << format_double(z.imag()); };
  for (const PresenceRow& r : rows) {
    out << r.slice_index << ',' << r.event_kind << ',' << r.m << ',' << r.n;
    for (PathMode mode : kAllModes) put(r.forward[mode]);
    for (PathMode mode : kAllModes) put(r.backward[mode]);
    for (const Complex& w : r.weak_values) put(w);
    out << ',' << format_double(r.abl_c) << '\n';
  }
}

inline Json trace_to_json(const std::vector<PresenceRow>& rows) {
  Json arr = Json::array();
  for (const PresenceRow& r : rows) {
    Json fwd = Json::object();
    Json bwd = Json::object();
    Json w = Json::object();
    for (PathMode mode : kAllModes) {
      const std::string key(1, mode_letter(mode));
      fwd[key] = complex_json(r.forward[mode]);
      bwd[key] = complex_json(r.backward[mode]);
      w[key] = complex_json(r.weak_values[static_cast<std::size_t>(mode)]);
    }
    arr.push_back(Json{{"slice_index", r.slice_index},
                       {"event_kind", r.event_kind},
                       {"m", r.m},
                       {"n", r.n},
                       {"forward", fwd},
                       {"backward", bwd},
                       {"weak_values", w},
                       {"abl_c", clean(r.abl_c)}});
  }
  return arr;
}

inline Json sink_counts_json(const std::map<SinkId, std::uint64_t>& counts) {
  Json j = Json::object();
  for (const auto& [sink, n] : counts) j[sink.label()] = n;
  return j;
}

inline Json distribution_json(const ConditionalDistribution& dist) {
  Json probs = Json::object();
  for (const auto& [sink, p] : dist.probabilities) probs[sink.label()] = clean(p);
  return Json{{"probabilities", probs},
              {"conditioning_probability", clean(dist.conditioning_probability)}};
}

inline Json monte_carlo_to_json(const Schedule& schedule, const MonteCarloSummary& mc) {
  Json found = Json::object();
  for (const auto& [slice, n] : mc.found_histogram) {
    const Event& e = schedule.events[slice.after_event_index];
    found[pair_key(e.cycle, e.step)] = n;
  }
  return Json{{"M", schedule.outer_cycles()},
              {"N", schedule.inner_cycles()},
              {"bit", static_cast<int>(schedule.bit())},
              {"n_runs", mc.n_runs},
              {"seed", mc.seed},
              {"detector_counts", sink_counts_json(mc.detector_counts)},
              {"found_histogram", found},
              {"never_found_runs", mc.never_found_runs},
              {"never_found_detector_counts", sink_counts_json(mc.never_found_detector_counts)}};
}

inline void write_density_csv(std::ostream& out, const EveResult& eve) {
  out << "x,p0,p1\n";
  for (std::size_t i = 0; i < eve.grid.points; ++i) {
    const double x = eve.grid.x(i);
    out << format_double(x) << ',' << format_double(eve.bit0.density(x)) << ','
        << format_double(eve.bit1.density(x)) << '\n';
  }
}

inline void write_density_csv(std::ostream& out, const PointerDistribution& dist) {
  const DensityGrid grid = default_grid(dist);
  out << "x,p\n";
  for (std::size_t i = 0; i < grid.points; ++i) {
    const double x = grid.x(i);
    out << format_double(x) << ',' << format_double(dist.density(x)) << '\n';
  }
}

}  // namespace zeno_tsvf::io
