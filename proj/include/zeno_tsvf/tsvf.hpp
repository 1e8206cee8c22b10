// Forward evolution, backward (post-selected) evolution, weak values and the
// ABL rule, together with the closed-form oracles the simulator is checked
// against.
//
// Slice numbering: slice 0 is the initial state, slice k + 1 is the state
// immediately after event k. A SliceLocator{e} therefore names slice e + 1.

#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "zeno_tsvf/errors.hpp"
#include "zeno_tsvf/quantum_core.hpp"
#include "zeno_tsvf/schedule.hpp"

namespace zeno_tsvf {

// Sink amplitudes below this are treated as roundoff: cos(pi/2) in double
// precision is ~6e-17, and chains of 10^4 rotations accumulate ~1e-12.
inline constexpr double kImpossibleAmplitude = 1e-10;

inline PathMode pre_sink_mode(const SinkId& sink) {
  switch (sink.kind) {
    case SinkId::Kind::kD1: return PathMode::kA;
    case SinkId::Kind::kD2: return PathMode::kB;
    case SinkId::Kind::kD3:
    case SinkId::Kind::kBobAbsorb: return PathMode::kC;
  }
  return PathMode::kA;
}

// Applies one scheduled event to a photon.
inline PhotonState apply_event(PhotonState state, const Schedule& schedule, const Event& event) {
  switch (event.kind) {
    case EventKind::kOuterBS:
      return rotate(std::move(state), {PathMode::kA, PathMode::kB}, schedule.theta_outer);
    case EventKind::kInnerBS:
      return rotate(std::move(state), {PathMode::kB, PathMode::kC}, schedule.theta_inner);
    case EventKind::kBobAbsorb:
      return absorb(std::move(state), PathMode::kC, SinkId::bob_absorb(event.cycle, event.step),
                    event.index);
    case EventKind::kD3Detect:
      return absorb(std::move(state), PathMode::kC, SinkId::d3(event.cycle), event.index);
    case EventKind::kFinalDetect:
      state = absorb(std::move(state), PathMode::kA, SinkId::d1(), event.index);
      return absorb(std::move(state), PathMode::kB, SinkId::d2(), event.index);
  }
  return state;
}

// Same event on bare live amplitudes, with sink amplitudes dropped.
inline ModeVector apply_event(const ModeVector& live, const Schedule& schedule, const Event& event) {
  switch (event.kind) {
    case EventKind::kOuterBS:
      return rotate(live, PathMode::kA, PathMode::kB, schedule.theta_outer);
    case EventKind::kInnerBS:
      return rotate(live, PathMode::kB, PathMode::kC, schedule.theta_inner);
    case EventKind::kBobAbsorb:
    case EventKind::kD3Detect: return project_out(live, PathMode::kC);
    case EventKind::kFinalDetect: return ModeVector{};
  }
  return live;
}

struct SliceRecord {
  std::size_t slice = 0;
  ModeVector forward;
};

struct RunReport {
  int outer_cycles = 0;
  int inner_cycles = 0;
  LogicBit bit = LogicBit::kZero;
  double p_d1 = 0.0;
  double p_d2 = 0.0;
  std::map<int, double> p_d3;
  std::map<std::pair<int, int>, double> p_bob_absorb;
  double total = 0.0;

  double sum_p_d3() const {
    double s = 0.0;
    for (const auto& [m, p] : p_d3) s += p;
    return s;
  }
  double sum_p_absorb() const {
    double s = 0.0;
    for (const auto& [mn, p] : p_bob_absorb) s += p;
    return s;
  }
};

inline RunReport report_from_leaks(const Schedule& schedule, const std::vector<LeakRecord>& leaks) {
  RunReport report;
  report.outer_cycles = schedule.outer_cycles();
  report.inner_cycles = schedule.inner_cycles();
  report.bit = schedule.bit();
  for (int m = 1; m <= schedule.outer_cycles(); ++m) report.p_d3[m] = 0.0;
  for (const LeakRecord& leak : leaks) {
    const double p = leak.probability();
    switch (leak.sink.kind) {
      case SinkId::Kind::kD1: report.p_d1 += p; break;
      case SinkId::Kind::kD2: report.p_d2 += p; break;
      case SinkId::Kind::kD3: report.p_d3[leak.sink.cycle] += p; break;
      case SinkId::Kind::kBobAbsorb:
        report.p_bob_absorb[{leak.sink.cycle, leak.sink.step}] += p;
        break;
    }
  }
  report.total = report.p_d1 + report.p_d2 + report.sum_p_d3() + report.sum_p_absorb();
  return report;
}

struct ForwardRun {
  std::vector<SliceRecord> slices;  // events.size() + 1 records
  PhotonState final_state;
  RunReport report;
};

// Evolves (1, 0, 0) through the schedule, recording the live state at every
// slice.
inline ForwardRun forward_evolve(const Schedule& schedule) {
  ForwardRun run;
  run.slices.reserve(schedule.events.size() + 1);
  PhotonState state = PhotonState::in_mode(PathMode::kA);
  run.slices.push_back({0, state.live()});
  for (const Event& event : schedule.events) {
    state = apply_event(std::move(state), schedule, event);
    run.slices.push_back({event.index + 1, state.live()});
  }
  run.report = report_from_leaks(schedule, state.leaks());
  run.final_state = std::move(state);
  return run;
}

// cos^(2M)(pi / 2M): D1 probability of the open channel, independent of N.
inline double closed_form_pD1_unblocked(int outer_cycles) {
  if (outer_cycles < 1) {
    throw Error(ErrorCode::kInvalidParameter, "M must be >= 1");
  }
  return std::pow(std::cos(std::numbers::pi / (2.0 * outer_cycles)), 2.0 * outer_cycles);
}

struct BlockedOutcome {
  double p_d1 = 0.0;
  double p_d2 = 0.0;
  double p_absorbed = 0.0;
};

// Two real amplitudes per outer cycle: the outer rotation, then the blocked
// inner chain survives with factor cos^N(pi / 2N) and the rest is absorbed.
inline BlockedOutcome blocked_recursion_oracle(int outer_cycles, int inner_cycles) {
  if (outer_cycles < 1 || inner_cycles < 1) {
    throw Error(ErrorCode::kInvalidParameter, "M and N must be >= 1");
  }
  const double theta_outer = std::numbers::pi / (2.0 * outer_cycles);
  const double theta_inner = std::numbers::pi / (2.0 * inner_cycles);
  const double survive = std::pow(std::cos(theta_inner), inner_cycles);
  const double co = std::cos(theta_outer);
  const double so = std::sin(theta_outer);

  double a = 1.0;
  double b = 0.0;
  double absorbed = 0.0;
  for (int m = 0; m < outer_cycles; ++m) {
    const double next_a = a * co - b * so;
    const double entering = a * so + b * co;
    absorbed += entering * entering * (1.0 - survive * survive);
    a = next_a;
    b = entering * survive;
  }
  return {a * a, b * b, absorbed};
}

struct PostSelection {
  SinkId target;

  friend bool operator==(const PostSelection&, const PostSelection&) = default;
};

struct TwoStateSlice {
  std::size_t slice = 0;
  ModeVector forward;
  ModeVector backward;  // unnormalized conditional state
  std::array<Complex, 3> weak_values{};
  Complex overlap;

  const Complex& weak_value(PathMode mode) const {
    return weak_values[static_cast<std::size_t>(mode)];
  }
};

struct TwoStateTrace {
  PostSelection post;
  std::size_t post_event_index = 0;
  Complex sink_amplitude;
  std::vector<TwoStateSlice> slices;
};

inline std::size_t post_selection_event(const Schedule& schedule, const PostSelection& post) {
  if (!schedule.has_sink(post.target)) {
    throw Error(ErrorCode::kInvalidParameter,
                "post-selection target " + post.target.label() + " is not a sink of this schedule");
  }
  switch (post.target.kind) {
    case SinkId::Kind::kD1:
    case SinkId::Kind::kD2: return *schedule.find(EventKind::kFinalDetect);
    case SinkId::Kind::kD3: return *schedule.find(EventKind::kD3Detect, post.target.cycle);
    case SinkId::Kind::kBobAbsorb:
      return *schedule.find(EventKind::kBobAbsorb, post.target.cycle, post.target.step);
  }
  return 0;
}

// Propagates the post-selected outcome backward through the schedule.
//
// The slice right after the post-selecting event holds the state incident on
// the sink together with the unit vector of the sink's input mode; slices
// later than that are not part of the trace. Rotations are undone by their
// adjoint; absorption events other than the post-selecting one keep only the
// surviving branch, zeroing the absorbed mode of the backward state.
inline TwoStateTrace backward_evolve(const Schedule& schedule, const std::vector<SliceRecord>& slices,
                                     const PostSelection& post) {
  if (slices.size() != schedule.events.size() + 1) {
    throw Error(ErrorCode::kInvalidParameter, "slice records do not match schedule length");
  }
  const std::size_t post_event = post_selection_event(schedule, post);
  const PathMode sink_mode = pre_sink_mode(post.target);
  const ModeVector& incident = slices[post_event].forward;

  TwoStateTrace trace;
  trace.post = post;
  trace.post_event_index = post_event;
  trace.sink_amplitude = incident[sink_mode];
  if (std::abs(trace.sink_amplitude) < kImpossibleAmplitude) {
    throw Error(ErrorCode::kImpossiblePostSelection,
                "post-selection on " + post.target.label() + " has amplitude " +
                    std::to_string(std::abs(trace.sink_amplitude)));
  }

  const std::size_t count = post_event + 2;
  std::vector<ModeVector> backward(count);
  backward[count - 1] = ModeVector::unit(sink_mode);
  for (std::size_t k = post_event + 1; k-- > 0;) {
    const Event& event = schedule.events[k];
    const ModeVector& after = backward[k + 1];
    if (k == post_event) {
      backward[k] = project(after, sink_mode);
      continue;
    }
    switch (event.kind) {
      case EventKind::kOuterBS:
        backward[k] = rotate(after, PathMode::kA, PathMode::kB, -schedule.theta_outer);
        break;
      case EventKind::kInnerBS:
        backward[k] = rotate(after, PathMode::kB, PathMode::kC, -schedule.theta_inner);
        break;
      case EventKind::kBobAbsorb:
      case EventKind::kD3Detect: backward[k] = project_out(after, PathMode::kC); break;
      case EventKind::kFinalDetect: backward[k] = project(after, sink_mode); break;
    }
  }

  trace.slices.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    TwoStateSlice row;
    row.slice = s;
    row.forward = s == count - 1 ? incident : slices[s].forward;
    row.backward = backward[s];
    row.overlap = inner_product(row.backward, row.forward);
    for (PathMode mode : kAllModes) {
      row.weak_values[static_cast<std::size_t>(mode)] =
          std::conj(row.backward[mode]) * row.forward[mode] / row.overlap;
    }
    trace.slices.push_back(row);
  }
  return trace;
}

inline TwoStateTrace two_state_trace(const Schedule& schedule, const PostSelection& post) {
  return backward_evolve(schedule, forward_evolve(schedule).slices, post);
}

// Probability that an ideal projective measurement of P_mode between pre- and
// post-selection finds the photon:
//   |<phi|P|psi>|^2 / (|<phi|P|psi>|^2 + |<phi|(1-P)|psi>|^2)
inline double abl_probability(const ModeVector& forward, const ModeVector& backward, PathMode mode) {
  const double found = std::norm(std::conj(backward[mode]) * forward[mode]);
  const double absent = std::norm(inner_product(backward, project_out(forward, mode)));
  const double denominator = found + absent;
  if (!(denominator > 0.0)) {
    throw Error(ErrorCode::kUndefinedAbl,
                std::string("both branches vanish for mode ") + mode_letter(mode));
  }
  return found / denominator;
}

struct PresenceRow {
  std::size_t slice_index = 0;
  std::string event_kind;  // "Init" for slice 0
  int m = 0;
  int n = 0;
  ModeVector forward;
  ModeVector backward;
  std::array<Complex, 3> weak_values{};
  double abl_c = 0.0;
};

inline std::vector<PresenceRow> presence_trace_export(const Schedule& schedule,
                                                      const TwoStateTrace& trace) {
  std::vector<PresenceRow> rows;
  rows.reserve(trace.slices.size());
  for (const TwoStateSlice& s : trace.slices) {
    PresenceRow row;
    row.slice_index = s.slice;
    if (s.slice == 0) {
      row.event_kind = "Init";
    } else {
      const Event& e = schedule.events[s.slice - 1];
      row.event_kind = std::string(event_kind_name(e.kind));
      row.m = e.cycle;
      row.n = e.step;
    }
    row.forward = s.forward;
    row.backward = s.backward;
    row.weak_values = s.weak_values;
    row.abl_c = abl_probability(s.forward, s.backward, PathMode::kC);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace zeno_tsvf
