// Parameter sweeps over (M, N[, g]) with deterministic row order.

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <optional>
#include <ostream>
#include <thread>
#include <vector>

#include "zeno_tsvf/errors.hpp"
#include "zeno_tsvf/io.hpp"
#include "zeno_tsvf/measurement.hpp"
#include "zeno_tsvf/schedule.hpp"
#include "zeno_tsvf/tsvf.hpp"

namespace zeno_tsvf {

inline constexpr std::size_t kDefaultSweepCap = 1'000'000;

struct SweepSpec {
  std::vector<int> outer;
  std::vector<int> inner;
  std::vector<double> couplings;  // empty: detector statistics only
  LogicBit bit = LogicBit::kZero;
  double sigma = 1.0;
  int eve_cycle = 0;  // 0 selects the last outer cycle
  int eve_step = 1;
  double prior = 0.5;
  std::size_t max_points = kDefaultSweepCap;

  bool with_eve() const { return !couplings.empty(); }

  std::size_t point_count() const {
    return outer.size() * inner.size() * std::max<std::size_t>(1, couplings.size());
  }
};

struct SweepRow {
  int outer_cycles = 0;
  int inner_cycles = 0;
  LogicBit bit = LogicBit::kZero;
  RunReport report;
  std::optional<double> coupling;
  double mutual_information_bits = 0.0;
  double tv_distance = 0.0;
};

namespace detail {

inline SweepRow run_sweep_point(const SweepSpec& spec, int m, int n, std::optional<double> g) {
  SweepRow row;
  row.outer_cycles = m;
  row.inner_cycles = n;
  row.bit = spec.bit;
  row.coupling = g;
  const Schedule schedule = build_schedule({m, n, spec.bit, {}});
  row.report = forward_evolve(schedule).report;
  if (g) {
    const Schedule s0 = spec.bit == LogicBit::kZero ? schedule : build_schedule({m, n, LogicBit::kZero, {}});
    const Schedule s1 = spec.bit == LogicBit::kOne ? schedule : build_schedule({m, n, LogicBit::kOne, {}});
    const int cycle = spec.eve_cycle == 0 ? m : spec.eve_cycle;
    const EveResult eve =
        eve_information(s0, s1, inner_slice(s0, cycle, spec.eve_step), {*g, spec.sigma}, spec.prior);
    row.mutual_information_bits = eve.mutual_information_bits;
    row.tv_distance = eve.tv_distance;
  }
  return row;
}

}  // namespace detail

// Rows come back ordered by (M, N, g) in the order the lists were given,
// whatever the number of worker threads.
inline std::vector<SweepRow> run_sweep(const SweepSpec& spec, unsigned jobs = 1) {
  if (spec.outer.empty() || spec.inner.empty()) {
    throw Error(ErrorCode::kInvalidParameter, "sweep needs nonempty M and N lists");
  }
  if (spec.point_count() > spec.max_points) {
    throw Error(ErrorCode::kCapacityExceeded, "sweep of " + std::to_string(spec.point_count()) +
                                                  " points exceeds the cap of " +
                                                  std::to_string(spec.max_points));
  }
  for (int m : spec.outer) {
    for (int n : spec.inner) build_schedule({m, n, spec.bit, {}});
  }

  struct Point {
    int m;
    int n;
    std::optional<double> g;
  };
  std::vector<Point> points;
  points.reserve(spec.point_count());
  for (int m : spec.outer) {
    for (int n : spec.inner) {
      if (spec.with_eve()) {
        for (double g : spec.couplings) points.push_back({m, n, g});
      } else {
        points.push_back({m, n, std::nullopt});
      }
    }
  }

  std::vector<SweepRow> rows(points.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      try {
        rows[i] = detail::run_sweep_point(spec, points[i].m, points[i].n, points[i].g);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  jobs = std::clamp<unsigned>(jobs, 1, static_cast<unsigned>(std::max<std::size_t>(1, points.size())));
  if (jobs == 1) {
    work();
  } else {
    std::vector<std::jthread> threads;
    for (unsigned w = 0; w < jobs; ++w) threads.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  return rows;
}

namespace io {

inline void write_sweep_csv(std::ostream& out, const SweepSpec& spec,
                            const std::vector<SweepRow>& rows) {
  std::vector<std::string> cols = {"M", "N", "bit", "p_D1", "p_D2", "sum_p_D3", "sum_p_absorb"};
  if (spec.with_eve()) {
    for (const char* c : {"g", "sigma", "I_bits", "TV"}) cols.emplace_back(c);
  }
  write_csv_header(out, cols);
  for (const SweepRow& r : rows) {
    out << r.outer_cycles << ',' << r.inner_cycles << ',' << static_cast<int>(r.bit) << ','
        << format_double(r.report.p_d1) << ',' << format_double(r.report.p_d2) << ','
        << format_double(r.report.sum_p_d3()) << ',' << format_double(r.report.sum_p_absorb());
    if (spec.with_eve()) {
      out << ',' << format_double(*r.coupling) << ',' << format_double(spec.sigma) << ','
          << format_double(r.mutual_information_bits) << ',' << format_double(r.tv_distance);
    }
    out << '\n';
  }
}

}  // namespace io

}  // namespace zeno_tsvf
