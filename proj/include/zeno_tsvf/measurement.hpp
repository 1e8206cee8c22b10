// Measurement layer: von Neumann pointer coupled to the channel projector,
// projective monitoring trajectories, and the eavesdropper's pointer
// statistics.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "zeno_tsvf/errors.hpp"
#include "zeno_tsvf/quantum_core.hpp"
#include "zeno_tsvf/schedule.hpp"
#include "zeno_tsvf/tsvf.hpp"

namespace zeno_tsvf {

// ---------------------------------------------------------------------------
// Pointer model and Gaussian mixtures
// ---------------------------------------------------------------------------

struct PointerModel {
  double coupling = 0.0;  // displacement g applied on the channel branch
  double sigma = 1.0;     // standard deviation of the pointer position density

  void validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
      throw Error(ErrorCode::kInvalidParameter, "pointer width must be positive and finite");
    }
    if (!std::isfinite(coupling)) {
      throw Error(ErrorCode::kInvalidParameter, "pointer coupling must be finite");
    }
  }
};

struct GaussianComponent {
  double mean = 0.0;
  double sigma = 1.0;
  double weight = 0.0;  // may be negative for interference terms
};

inline double normal_pdf(double x, double mean, double sigma) {
  const double z = (x - mean) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

// Position density of the pointer: a weighted sum of Gaussians whose weights
// sum to one. Interference between branches shows up as components at the
// midpoint of two shifts, possibly with negative weight; the sum is a
// squared modulus and therefore non-negative.
struct PointerDistribution {
  std::vector<GaussianComponent> components;

  double density(double x) const {
    double p = 0.0;
    for (const GaussianComponent& c : components) p += c.weight * normal_pdf(x, c.mean, c.sigma);
    return p;
  }
};

// Uniform trapezoid grid.
struct DensityGrid {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t points = 0;

  double step() const { return (hi - lo) / static_cast<double>(points - 1); }
  double x(std::size_t i) const { return lo + step() * static_cast<double>(i); }

  template <typename F>
  double integrate(F&& f) const {
    const double h = step();
    double sum = 0.5 * (f(x(0)) + f(x(points - 1)));
    for (std::size_t i = 1; i + 1 < points; ++i) sum += f(x(i));
    return sum * h;
  }
};

inline constexpr std::size_t kDefaultGridPoints = 4001;
inline constexpr double kGridHalfWidthSigmas = 8.0;

// [min mean - 8 sigma, max mean + 8 sigma] over every given distribution.
inline DensityGrid default_grid(std::initializer_list<const PointerDistribution*> dists) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const PointerDistribution* d : dists) {
    for (const GaussianComponent& c : d->components) {
      lo = std::min(lo, c.mean - kGridHalfWidthSigmas * c.sigma);
      hi = std::max(hi, c.mean + kGridHalfWidthSigmas * c.sigma);
    }
  }
  if (!(lo < hi)) {
    throw Error(ErrorCode::kInvalidParameter, "cannot build a grid for an empty distribution");
  }
  return {lo, hi, kDefaultGridPoints};
}

inline DensityGrid default_grid(const PointerDistribution& dist) { return default_grid({&dist}); }

inline double density_integral(const PointerDistribution& dist) {
  return default_grid(dist).integrate([&](double x) { return dist.density(x); });
}

// Readout statistic: trapezoid estimate of the first moment on the default grid.
inline double pointer_mean(const PointerDistribution& dist) {
  return default_grid(dist).integrate([&](double x) { return x * dist.density(x); });
}

// Exact first moment of the mixture.
inline double mixture_mean(const PointerDistribution& dist) {
  double mean = 0.0;
  for (const GaussianComponent& c : dist.components) mean += c.weight * c.mean;
  return mean;
}

// ---------------------------------------------------------------------------
// Exact photon-pointer branch evolution
// ---------------------------------------------------------------------------

inline constexpr std::size_t kMaxPointerCouplings = 20;

namespace detail {

// Photon amplitude conditional on the pointer having been displaced by
// shift * g, together with what this branch has deposited in each sink.
struct PointerBranch {
  ModeVector live;
  std::map<SinkId, Complex> sinks;
};

inline void apply_event_to_branch(PointerBranch& branch, const Schedule& schedule,
                                  const Event& event) {
  switch (event.kind) {
    case EventKind::kBobAbsorb:
      branch.sinks[SinkId::bob_absorb(event.cycle, event.step)] += branch.live[PathMode::kC];
      break;
    case EventKind::kD3Detect:
      branch.sinks[SinkId::d3(event.cycle)] += branch.live[PathMode::kC];
      break;
    case EventKind::kFinalDetect:
      branch.sinks[SinkId::d1()] += branch.live[PathMode::kA];
      branch.sinks[SinkId::d2()] += branch.live[PathMode::kB];
      break;
    default: break;
  }
  branch.live = apply_event(branch.live, schedule, event);
}

inline void validate_couplings(const Schedule& schedule, const std::set<SliceLocator>& couple_at) {
  if (couple_at.size() > kMaxPointerCouplings) {
    throw Error(ErrorCode::kCapacityExceeded,
                std::to_string(couple_at.size()) + " pointer couplings exceed the branch cap of " +
                    std::to_string(kMaxPointerCouplings));
  }
  const SliceValidation checked = validate_monitor_slices(schedule, couple_at);
  if (!checked.rejected.empty()) {
    throw Error(ErrorCode::kInvalidParameter,
                "pointer coupling after event " +
                    std::to_string(checked.rejected.front().after_event_index) +
                    " is not inside the transmission channel");
  }
}

// Branch index = number of channel couplings the amplitude went through.
inline std::vector<PointerBranch> evolve_branches(const Schedule& schedule,
                                                  const std::set<SliceLocator>& couple_at) {
  std::vector<PointerBranch> branches(1);
  branches[0].live = ModeVector::unit(PathMode::kA);
  for (const Event& event : schedule.events) {
    for (PointerBranch& b : branches) apply_event_to_branch(b, schedule, event);
    if (!couple_at.contains(SliceLocator{event.index})) continue;
    std::vector<PointerBranch> next(branches.size() + 1);
    for (std::size_t j = 0; j < branches.size(); ++j) {
      next[j].sinks = std::move(branches[j].sinks);
      next[j].live = next[j].live + project_out(branches[j].live, PathMode::kC);
      next[j + 1].live = project(branches[j].live, PathMode::kC);
    }
    branches = std::move(next);
  }
  return branches;
}

}  // namespace detail

// Pointer density after coupling g * P_C at each listed slice. With a
// post-selection the density is conditional on that sink; without one it is
// the reduced density summed over every terminal outcome.
inline PointerDistribution couple_pointer(const Schedule& schedule,
                                          const std::set<SliceLocator>& couple_at,
                                          const PointerModel& model,
                                          const std::optional<PostSelection>& post) {
  model.validate();
  detail::validate_couplings(schedule, couple_at);
  if (post && !schedule.has_sink(post->target)) {
    throw Error(ErrorCode::kInvalidParameter,
                "post-selection target " + post->target.label() + " is not a sink of this schedule");
  }

  const std::vector<detail::PointerBranch> branches = detail::evolve_branches(schedule, couple_at);

  std::set<SinkId> outcomes;
  if (post) {
    outcomes.insert(post->target);
  } else {
    for (const auto& b : branches) {
      for (const auto& [sink, amp] : b.sinks) outcomes.insert(sink);
    }
  }

  // Component for branch pair (j, k) sits at (j + k) g / 2; pairs sharing
  // j + k are merged.
  const double g = model.coupling;
  const double sigma = model.sigma;
  std::vector<double> weight_by_sum(2 * branches.size() - 1, 0.0);
  for (const SinkId& sink : outcomes) {
    std::vector<Complex> alpha(branches.size());
    for (std::size_t j = 0; j < branches.size(); ++j) {
      const auto it = branches[j].sinks.find(sink);
      if (it != branches[j].sinks.end()) alpha[j] = it->second;
    }
    for (std::size_t j = 0; j < alpha.size(); ++j) {
      weight_by_sum[2 * j] += std::norm(alpha[j]);
      for (std::size_t k = j + 1; k < alpha.size(); ++k) {
        const double delta = static_cast<double>(k - j) * g;
        const double overlap = std::exp(-delta * delta / (8.0 * sigma * sigma));
        weight_by_sum[j + k] += 2.0 * std::real(alpha[j] * std::conj(alpha[k])) * overlap;
      }
    }
  }

  double total = 0.0;
  for (double w : weight_by_sum) total += w;
  if (!(total > kImpossibleAmplitude * kImpossibleAmplitude)) {
    throw Error(ErrorCode::kImpossiblePostSelection,
                "pointer post-selection" + (post ? " on " + post->target.label() : std::string()) +
                    " has vanishing probability");
  }

  PointerDistribution dist;
  for (std::size_t s = 0; s < weight_by_sum.size(); ++s) {
    if (weight_by_sum[s] == 0.0) continue;
    dist.components.push_back({0.5 * static_cast<double>(s) * g, sigma, weight_by_sum[s] / total});
  }
  return dist;
}

// ---------------------------------------------------------------------------
// Projective monitoring trajectories
// ---------------------------------------------------------------------------

// Default: the projective check sits right after each InnerBS, before Bob's
// absorber. kAfterAbsorber moves it past the absorber when one follows.
enum class MonitorPlacement : std::uint8_t { kAfterInnerBS, kAfterAbsorber };

struct MonitorOutcome {
  SinkId detector;
  std::vector<SliceLocator> found_events;
};

// SplitMix64 finalizer.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Seed of trajectory i in a run seeded with `seed`: the i-th output of a
// SplitMix64 stream started at `seed`.
inline std::uint64_t trajectory_seed(std::uint64_t seed, std::uint64_t i) {
  return splitmix64(seed + i * 0x9E3779B97F4A7C15ULL);
}

// mt19937_64 words mapped to [0, 1) with 53 random bits; both steps are
// fully specified, so draws are identical across platforms.
class UniformSource {
 public:
  explicit UniformSource(std::uint64_t seed) : engine_(seed) {}
  double next() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

namespace detail {

// Maps each event index after which a projective check happens to the
// locator that requested it.
inline std::map<std::size_t, SliceLocator> measurement_points(const Schedule& schedule,
                                                              const std::set<SliceLocator>& monitor,
                                                              MonitorPlacement placement) {
  const SliceValidation checked = validate_monitor_slices(schedule, monitor);
  if (!checked.rejected.empty()) {
    throw Error(ErrorCode::kInvalidParameter,
                "monitor slice after event " +
                    std::to_string(checked.rejected.front().after_event_index) +
                    " is not inside the transmission channel");
  }
  std::map<std::size_t, SliceLocator> points;
  for (const SliceLocator& slice : checked.accepted) {
    std::size_t at = slice.after_event_index;
    if (placement == MonitorPlacement::kAfterAbsorber && at + 1 < schedule.events.size() &&
        schedule.events[at + 1].kind == EventKind::kBobAbsorb) {
      ++at;
    }
    points.emplace(at, slice);
  }
  return points;
}

inline void remove_mode_and_renormalize(ModeVector& live, PathMode mode) {
  live[mode] = 0.0;
  const double norm = std::sqrt(live.norm_sq());
  if (norm > 0.0) live = Complex(1.0 / norm) * live;
}

inline MonitorOutcome run_trajectory(const Schedule& schedule,
                                     const std::map<std::size_t, SliceLocator>& points,
                                     std::uint64_t seed) {
  UniformSource rng(seed);
  MonitorOutcome outcome;
  ModeVector live = ModeVector::unit(PathMode::kA);
  for (const Event& event : schedule.events) {
    switch (event.kind) {
      case EventKind::kOuterBS:
      case EventKind::kInnerBS: live = apply_event(live, schedule, event); break;
      case EventKind::kBobAbsorb:
      case EventKind::kD3Detect: {
        const double p = std::norm(live[PathMode::kC]);
        if (rng.next() < p) {
          outcome.detector = event.kind == EventKind::kD3Detect
                                 ? SinkId::d3(event.cycle)
                                 : SinkId::bob_absorb(event.cycle, event.step);
          return outcome;
        }
        remove_mode_and_renormalize(live, PathMode::kC);
        break;
      }
      case EventKind::kFinalDetect: {
        const double pa = std::norm(live[PathMode::kA]);
        const double pb = std::norm(live[PathMode::kB]);
        outcome.detector = rng.next() * (pa + pb) < pa ? SinkId::d1() : SinkId::d2();
        return outcome;
      }
    }
    const auto point = points.find(event.index);
    if (point == points.end()) continue;
    const Complex c = live[PathMode::kC];
    if (rng.next() < std::norm(c)) {
      // Nondemolition: the photon survives, localized in the channel.
      live = ModeVector{};
      live[PathMode::kC] = c / std::abs(c);
      outcome.found_events.push_back(point->second);
    } else {
      remove_mode_and_renormalize(live, PathMode::kC);
    }
  }
  return outcome;
}

}  // namespace detail

// One photon through the schedule with projective P_C checks at the monitored
// slices; deterministic given the seed.
inline MonitorOutcome monitored_run(const Schedule& schedule, const std::set<SliceLocator>& monitor,
                                    std::uint64_t seed,
                                    MonitorPlacement placement = MonitorPlacement::kAfterInnerBS) {
  return detail::run_trajectory(schedule, detail::measurement_points(schedule, monitor, placement),
                                seed);
}

struct MonteCarloSummary {
  std::uint64_t n_runs = 0;
  std::uint64_t seed = 0;
  std::map<SinkId, std::uint64_t> detector_counts;
  std::map<SliceLocator, std::uint64_t> found_histogram;  // "found" count per monitored slice
  std::uint64_t never_found_runs = 0;
  std::map<SinkId, std::uint64_t> never_found_detector_counts;
};

// Trajectory i uses trajectory_seed(seed, i); counts are order independent,
// so the result does not depend on `jobs`.
inline MonteCarloSummary run_monte_carlo(const Schedule& schedule,
                                         const std::set<SliceLocator>& monitor, std::uint64_t seed,
                                         std::uint64_t n_runs,
                                         MonitorPlacement placement = MonitorPlacement::kAfterInnerBS,
                                         unsigned jobs = 1) {
  const auto points = detail::measurement_points(schedule, monitor, placement);
  jobs = std::max(1u, jobs);

  std::vector<MonteCarloSummary> partial(jobs);
  auto work = [&](unsigned worker) {
    MonteCarloSummary& out = partial[worker];
    for (std::uint64_t i = worker; i < n_runs; i += jobs) {
      const MonitorOutcome o = detail::run_trajectory(schedule, points, trajectory_seed(seed, i));
      ++out.detector_counts[o.detector];
      for (const SliceLocator& s : o.found_events) ++out.found_histogram[s];
      if (o.found_events.empty()) {
        ++out.never_found_runs;
        ++out.never_found_detector_counts[o.detector];
      }
    }
  };
  if (jobs == 1) {
    work(0);
  } else {
    std::vector<std::jthread> threads;
    for (unsigned w = 0; w < jobs; ++w) threads.emplace_back(work, w);
  }

  MonteCarloSummary total;
  total.n_runs = n_runs;
  total.seed = seed;
  for (const SliceLocator& s : monitor) total.found_histogram[s] = 0;
  for (const MonteCarloSummary& p : partial) {
    for (const auto& [k, v] : p.detector_counts) total.detector_counts[k] += v;
    for (const auto& [k, v] : p.found_histogram) total.found_histogram[k] += v;
    for (const auto& [k, v] : p.never_found_detector_counts) total.never_found_detector_counts[k] += v;
    total.never_found_runs += p.never_found_runs;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Monitoring versus blocking
// ---------------------------------------------------------------------------

struct ConditionalDistribution {
  std::map<SinkId, double> probabilities;  // D1, D2, D3(1..M)
  double conditioning_probability = 0.0;
};

inline constexpr double kImpossibleProbability = 1e-20;

namespace detail {

inline ConditionalDistribution normalize_conditional(std::map<SinkId, double> weights,
                                                     const std::string& what) {
  double kept = 0.0;
  for (const auto& [sink, p] : weights) kept += p;
  if (!(kept > kImpossibleProbability)) {
    throw Error(ErrorCode::kImpossiblePostSelection, what + " has probability 0");
  }
  ConditionalDistribution out;
  out.conditioning_probability = kept;
  for (auto& [sink, p] : weights) out.probabilities[sink] = p / kept;
  return out;
}

}  // namespace detail

// Detector distribution of the open, fully monitored channel conditioned on
// the monitor never firing: every post-InnerBS channel amplitude is dropped
// (unnormalized) and the surviving sink weights are renormalized at the end.
inline ConditionalDistribution never_found_equivalence_oracle(int outer_cycles, int inner_cycles) {
  const Schedule schedule = build_schedule({outer_cycles, inner_cycles, LogicBit::kZero, {}});
  std::map<SinkId, double> weights;
  ModeVector live = ModeVector::unit(PathMode::kA);
  for (const Event& event : schedule.events) {
    if (event.kind == EventKind::kD3Detect) {
      weights[SinkId::d3(event.cycle)] += std::norm(live[PathMode::kC]);
    } else if (event.kind == EventKind::kFinalDetect) {
      weights[SinkId::d1()] += std::norm(live[PathMode::kA]);
      weights[SinkId::d2()] += std::norm(live[PathMode::kB]);
    }
    live = apply_event(live, schedule, event);
    if (event.kind == EventKind::kInnerBS) live[PathMode::kC] = 0.0;
  }
  return detail::normalize_conditional(std::move(weights), "never-found conditioning");
}

// Blocked run's detector distribution given that Bob's absorber did not fire.
inline ConditionalDistribution blocked_kept_branch_distribution(int outer_cycles, int inner_cycles) {
  const Schedule schedule = build_schedule({outer_cycles, inner_cycles, LogicBit::kOne, {}});
  const RunReport report = forward_evolve(schedule).report;
  std::map<SinkId, double> weights;
  weights[SinkId::d1()] = report.p_d1;
  weights[SinkId::d2()] = report.p_d2;
  for (const auto& [m, p] : report.p_d3) weights[SinkId::d3(m)] = p;
  return detail::normalize_conditional(std::move(weights), "non-absorption conditioning");
}

// ---------------------------------------------------------------------------
// Eavesdropper
// ---------------------------------------------------------------------------

struct EveResult {
  double mutual_information_bits = 0.0;
  double tv_distance = 0.0;
  PointerDistribution bit0;
  PointerDistribution bit1;
  DensityGrid grid;
};

// Tolerated deviation of a density integral from 1 on the evaluation grid.
inline constexpr double kDensityIntegralTolerance = 1e-4;

// Locator of the same InnerBS(m, n) in another schedule.
inline SliceLocator matching_inner_slice(const Schedule& from, const Schedule& to,
                                         SliceLocator slice) {
  if (!detail::is_inner_slice(from, slice)) {
    throw Error(ErrorCode::kInvalidParameter,
                "coupling slice after event " + std::to_string(slice.after_event_index) +
                    " is not inside the transmission channel");
  }
  const Event& e = from.events[slice.after_event_index];
  return inner_slice(to, e.cycle, e.step);
}

// Eve couples a pointer to P_C at one channel slice and sees only her pointer
// (unless `condition_on` asks for a detector-conditioned analysis). The slice
// is given in the bit-0 schedule and matched by (m, n) in the bit-1 schedule.
inline EveResult eve_information(const Schedule& bit0, const Schedule& bit1, SliceLocator couple_at,
                                 const PointerModel& model, double prior = 0.5,
                                 const std::optional<PostSelection>& condition_on = std::nullopt) {
  if (bit0.bit() != LogicBit::kZero || bit1.bit() != LogicBit::kOne) {
    throw Error(ErrorCode::kInvalidParameter, "schedule pair must be (bit 0, bit 1)");
  }
  if (bit0.outer_cycles() != bit1.outer_cycles() || bit0.inner_cycles() != bit1.inner_cycles()) {
    throw Error(ErrorCode::kInvalidParameter, "schedule pair must share M and N");
  }
  if (!(prior > 0.0 && prior < 1.0)) {
    throw Error(ErrorCode::kInvalidParameter, "prior must lie in (0, 1)");
  }
  const SliceLocator slice1 = matching_inner_slice(bit0, bit1, couple_at);

  EveResult out;
  out.bit0 = couple_pointer(bit0, {couple_at}, model, condition_on);
  out.bit1 = couple_pointer(bit1, {slice1}, model, condition_on);
  out.grid = default_grid({&out.bit0, &out.bit1});

  const std::size_t n = out.grid.points;
  std::vector<double> p0(n);
  std::vector<double> p1(n);
  for (std::size_t i = 0; i < n; ++i) {
    p0[i] = std::max(0.0, out.bit0.density(out.grid.x(i)));
    p1[i] = std::max(0.0, out.bit1.density(out.grid.x(i)));
  }
  auto integrate = [&](auto&& f) {
    double sum = 0.5 * (f(0) + f(n - 1));
    for (std::size_t i = 1; i + 1 < n; ++i) sum += f(i);
    return sum * out.grid.step();
  };
  const double norm0 = integrate([&](std::size_t i) { return p0[i]; });
  const double norm1 = integrate([&](std::size_t i) { return p1[i]; });
  if (std::abs(norm0 - 1.0) > kDensityIntegralTolerance ||
      std::abs(norm1 - 1.0) > kDensityIntegralTolerance) {
    throw Error(ErrorCode::kPrecisionLoss,
                "pointer densities integrate to " + std::to_string(norm0) + " and " +
                    std::to_string(norm1) + " on the evaluation grid");
  }

  const double q0 = prior;
  const double q1 = 1.0 - prior;
  auto term = [](double p, double mix) { return p > 0.0 ? p * std::log2(p / mix) : 0.0; };
  out.mutual_information_bits = integrate([&](std::size_t i) {
    const double mix = q0 * p0[i] + q1 * p1[i];
    return mix > 0.0 ? q0 * term(p0[i], mix) + q1 * term(p1[i], mix) : 0.0;
  });
  out.mutual_information_bits = std::max(0.0, out.mutual_information_bits);
  out.tv_distance = 0.5 * integrate([&](std::size_t i) { return std::abs(p0[i] - p1[i]); });
  return out;
}

}  // namespace zeno_tsvf
