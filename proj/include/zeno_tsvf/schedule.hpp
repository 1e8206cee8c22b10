// Event schedule of the nested chained-Zeno interferometer.
//
// Per outer cycle m = 1..M:
//   OuterBS(m)                        rotate (A, B) by pi / (2M)
//   for n = 1..N:
//     InnerBS(m, n)                   rotate (B, C) by pi / (2N)
//     BobAbsorb(m, n)   [bit One]     absorb C
//   D3Detect(m)                       absorb C into D3(m)
// FinalDetect                         A -> D1, B -> D2

#pragma once

#include <cmath>
#include <compare>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "zeno_tsvf/errors.hpp"
#include "zeno_tsvf/quantum_core.hpp"

namespace zeno_tsvf {

enum class LogicBit : std::uint8_t {
  kZero = 0,  // channel open
  kOne = 1,   // Bob blocks after every inner beam splitter
};

enum class EventKind : std::uint8_t { kOuterBS, kInnerBS, kBobAbsorb, kD3Detect, kFinalDetect };

inline constexpr std::string_view event_kind_name(EventKind kind) {
  switch (kind) {
    case EventKind::kOuterBS: return "OuterBS";
    case EventKind::kInnerBS: return "InnerBS";
    case EventKind::kBobAbsorb: return "BobAbsorb";
    case EventKind::kD3Detect: return "D3Detect";
    case EventKind::kFinalDetect: return "FinalDetect";
  }
  return "?";
}

struct Event {
  EventKind kind = EventKind::kOuterBS;
  int cycle = 0;  // m, 0 for FinalDetect
  int step = 0;   // n, 0 unless InnerBS/BobAbsorb
  std::size_t index = 0;

  friend bool operator==(const Event&, const Event&) = default;
};

// A point in the schedule immediately after the referenced event.
struct SliceLocator {
  std::size_t after_event_index = 0;

  friend constexpr auto operator<=>(const SliceLocator&, const SliceLocator&) = default;
};

struct ProtocolParams {
  int outer_cycles = 1;
  int inner_cycles = 1;
  LogicBit bit = LogicBit::kZero;
  std::set<SliceLocator> monitor_slices;
};

// Upper bound on schedule length; keeps event counts inside int/size_t range
// and memory for per-slice traces bounded.
inline constexpr std::size_t kMaxScheduleEvents = 50'000'000;

inline std::size_t expected_event_count(int outer, int inner, LogicBit bit) {
  const std::size_t per_inner = bit == LogicBit::kOne ? 2 : 1;
  return static_cast<std::size_t>(outer) * (2 + per_inner * static_cast<std::size_t>(inner)) + 1;
}

struct Schedule {
  ProtocolParams params;
  std::vector<Event> events;
  double theta_outer = 0.0;
  double theta_inner = 0.0;

  int outer_cycles() const { return params.outer_cycles; }
  int inner_cycles() const { return params.inner_cycles; }
  LogicBit bit() const { return params.bit; }

  // Index of the event matching (kind, m, n), if present.
  std::optional<std::size_t> find(EventKind kind, int cycle = 0, int step = 0) const {
    const int outer = params.outer_cycles;
    const int inner = params.inner_cycles;
    const std::size_t per_inner = params.bit == LogicBit::kOne ? 2 : 1;
    const std::size_t cycle_len = 2 + per_inner * static_cast<std::size_t>(inner);
    if (kind == EventKind::kFinalDetect) return events.size() - 1;
    if (cycle < 1 || cycle > outer) return std::nullopt;
    const std::size_t base = static_cast<std::size_t>(cycle - 1) * cycle_len;
    switch (kind) {
      case EventKind::kOuterBS: return base;
      case EventKind::kD3Detect: return base + cycle_len - 1;
      case EventKind::kInnerBS:
        if (step < 1 || step > inner) return std::nullopt;
        return base + 1 + per_inner * static_cast<std::size_t>(step - 1);
      case EventKind::kBobAbsorb:
        if (params.bit != LogicBit::kOne || step < 1 || step > inner) return std::nullopt;
        return base + 2 + 2 * static_cast<std::size_t>(step - 1);
      case EventKind::kFinalDetect: break;
    }
    return std::nullopt;
  }

  bool has_sink(const SinkId& sink) const {
    switch (sink.kind) {
      case SinkId::Kind::kD1:
      case SinkId::Kind::kD2: return true;
      case SinkId::Kind::kD3: return find(EventKind::kD3Detect, sink.cycle).has_value();
      case SinkId::Kind::kBobAbsorb:
        return find(EventKind::kBobAbsorb, sink.cycle, sink.step).has_value();
    }
    return false;
  }
};

namespace detail {

inline bool is_inner_slice(const Schedule& schedule, const SliceLocator& slice) {
  return slice.after_event_index < schedule.events.size() &&
         schedule.events[slice.after_event_index].kind == EventKind::kInnerBS;
}

}  // namespace detail

inline Schedule build_schedule(const ProtocolParams& params) {
  if (params.outer_cycles < 1 || params.inner_cycles < 1) {
    throw Error(ErrorCode::kInvalidParameter,
                "outer and inner cycle counts must be >= 1 (got M=" +
                    std::to_string(params.outer_cycles) +
                    ", N=" + std::to_string(params.inner_cycles) + ")");
  }
  const std::size_t count = expected_event_count(params.outer_cycles, params.inner_cycles, params.bit);
  if (count > kMaxScheduleEvents) {
    throw Error(ErrorCode::kInvalidParameter,
                "schedule would have " + std::to_string(count) + " events (limit " +
                    std::to_string(kMaxScheduleEvents) + ")");
  }

  Schedule schedule;
  schedule.params = params;
  schedule.theta_outer = std::numbers::pi / (2.0 * params.outer_cycles);
  schedule.theta_inner = std::numbers::pi / (2.0 * params.inner_cycles);
  schedule.events.reserve(count);

  auto push = [&](EventKind kind, int m, int n) {
    schedule.events.push_back({kind, m, n, schedule.events.size()});
  };
  for (int m = 1; m <= params.outer_cycles; ++m) {
    push(EventKind::kOuterBS, m, 0);
    for (int n = 1; n <= params.inner_cycles; ++n) {
      push(EventKind::kInnerBS, m, n);
      if (params.bit == LogicBit::kOne) push(EventKind::kBobAbsorb, m, n);
    }
    push(EventKind::kD3Detect, m, 0);
  }
  push(EventKind::kFinalDetect, 0, 0);

  for (const SliceLocator& slice : params.monitor_slices) {
    if (!detail::is_inner_slice(schedule, slice)) {
      throw Error(ErrorCode::kInvalidParameter,
                  "monitor slice after event " + std::to_string(slice.after_event_index) +
                      " is not inside the transmission channel");
    }
  }
  return schedule;
}

struct SliceValidation {
  std::set<SliceLocator> accepted;
  std::vector<SliceLocator> rejected;
  std::optional<std::string> warning;
};

// Keeps the locators that sit immediately after an InnerBS event, the only
// places where channel amplitude is meaningful.
inline SliceValidation validate_monitor_slices(const Schedule& schedule,
                                               const std::set<SliceLocator>& slices) {
  SliceValidation out;
  for (const SliceLocator& slice : slices) {
    if (detail::is_inner_slice(schedule, slice)) {
      out.accepted.insert(slice);
    } else {
      out.rejected.push_back(slice);
    }
  }
  if (!slices.empty() && out.accepted.empty()) {
    out.warning = "none of the " + std::to_string(slices.size()) +
                  " requested slices lies inside the transmission channel";
  }
  return out;
}

// Every post-InnerBS locator of the schedule.
inline std::set<SliceLocator> all_inner_slices(const Schedule& schedule) {
  std::set<SliceLocator> out;
  for (const Event& e : schedule.events) {
    if (e.kind == EventKind::kInnerBS) out.insert({e.index});
  }
  return out;
}

inline SliceLocator inner_slice(const Schedule& schedule, int cycle, int step) {
  const auto index = schedule.find(EventKind::kInnerBS, cycle, step);
  if (!index) {
    throw Error(ErrorCode::kInvalidParameter, "no InnerBS(" + std::to_string(cycle) + "," +
                                                  std::to_string(step) + ") in schedule");
  }
  return {*index};
}

}  // namespace zeno_tsvf
