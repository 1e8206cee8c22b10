// Single-photon state algebra over the three live path modes of the nested
// interferometer, plus a ledger of amplitude that has left the live modes
// (absorbed by Bob or registered by a detector).

#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "zeno_tsvf/errors.hpp"

namespace zeno_tsvf {

using Complex = std::complex<double>;

// Assertion tolerance for multi-step results and the tighter one for a
// single algebraic step.
inline constexpr double kAssertTolerance = 1e-12;
inline constexpr double kStepTolerance = 1e-15;

enum class PathMode : std::uint8_t {
  kA = 0,  // Alice's retained arm
  kB = 1,  // inner-chain arm on Alice's side
  kC = 2,  // transmission channel
};

inline constexpr std::array<PathMode, 3> kAllModes = {PathMode::kA, PathMode::kB,
                                                      PathMode::kC};

inline constexpr char mode_letter(PathMode mode) {
  switch (mode) {
    case PathMode::kA: return 'a';
    case PathMode::kB: return 'b';
    case PathMode::kC: return 'c';
  }
  return '?';
}

// Where amplitude goes when it leaves the live modes. D3 carries its outer
// cycle; Bob's absorber carries (outer cycle, inner step). Both are 1-based.
struct SinkId {
  enum class Kind : std::uint8_t { kD1, kD2, kD3, kBobAbsorb };

  Kind kind = Kind::kD1;
  int cycle = 0;
  int step = 0;

  static constexpr SinkId d1() { return {Kind::kD1, 0, 0}; }
  static constexpr SinkId d2() { return {Kind::kD2, 0, 0}; }
  static constexpr SinkId d3(int cycle) { return {Kind::kD3, cycle, 0}; }
  static constexpr SinkId bob_absorb(int cycle, int step) {
    return {Kind::kBobAbsorb, cycle, step};
  }

  friend constexpr auto operator<=>(const SinkId&, const SinkId&) = default;

  // "D1", "D2", "D3(m)", "Bob(m,n)".
  std::string label() const {
    switch (kind) {
      case Kind::kD1: return "D1";
      case Kind::kD2: return "D2";
      case Kind::kD3: return "D3(" + std::to_string(cycle) + ")";
      case Kind::kBobAbsorb:
        return "Bob(" + std::to_string(cycle) + "," + std::to_string(step) + ")";
    }
    return "?";
  }
};

// Live amplitudes over (A, B, C).
class ModeVector {
 public:
  constexpr ModeVector() = default;
  constexpr ModeVector(Complex a, Complex b, Complex c) : amp_{a, b, c} {}

  static constexpr ModeVector unit(PathMode mode) {
    ModeVector v;
    v[mode] = 1.0;
    return v;
  }

  constexpr Complex& operator[](PathMode mode) { return amp_[static_cast<std::size_t>(mode)]; }
  constexpr const Complex& operator[](PathMode mode) const {
    return amp_[static_cast<std::size_t>(mode)];
  }

  double norm_sq() const {
    double sum = 0.0;
    for (const Complex& z : amp_) sum += std::norm(z);
    return sum;
  }

  bool is_finite() const {
    for (const Complex& z : amp_) {
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    }
    return true;
  }

  friend ModeVector operator+(ModeVector lhs, const ModeVector& rhs) {
    for (std::size_t i = 0; i < 3; ++i) lhs.amp_[i] += rhs.amp_[i];
    return lhs;
  }
  friend ModeVector operator*(Complex s, ModeVector v) {
    for (Complex& z : v.amp_) z *= s;
    return v;
  }

  friend bool operator==(const ModeVector&, const ModeVector&) = default;

 private:
  std::array<Complex, 3> amp_{};
};

struct LeakRecord {
  SinkId sink;
  std::size_t event_index = 0;
  Complex amplitude;

  double probability() const { return std::norm(amplitude); }
};

// A photon: live amplitudes plus the ordered record of everything that left.
// Operations below take the state by value so callers can move through a
// long event sequence without copying the ledger.
class PhotonState {
 public:
  PhotonState() = default;
  explicit PhotonState(ModeVector live) : live_(live) {}
  PhotonState(ModeVector live, std::vector<LeakRecord> leaks)
      : live_(live), leaks_(std::move(leaks)) {}

  static PhotonState in_mode(PathMode mode) { return PhotonState(ModeVector::unit(mode)); }

  const ModeVector& live() const { return live_; }
  ModeVector& live() { return live_; }
  const Complex& operator[](PathMode mode) const { return live_[mode]; }

  const std::vector<LeakRecord>& leaks() const { return leaks_; }

  double live_norm_sq() const { return live_.norm_sq(); }
  double leaked_probability() const {
    double sum = 0.0;
    for (const LeakRecord& r : leaks_) sum += r.probability();
    return sum;
  }
  double total_probability() const { return live_norm_sq() + leaked_probability(); }

  // Event indices strictly increase, except that the final detection writes
  // D1 then D2 under one index.
  void append_leak(LeakRecord record) {
    if (!leaks_.empty()) {
      const LeakRecord& last = leaks_.back();
      const bool ordered =
          record.event_index > last.event_index ||
          (record.event_index == last.event_index && last.sink == SinkId::d1() &&
           record.sink == SinkId::d2());
      if (!ordered) {
        throw Error(ErrorCode::kContractViolation,
                    "leak " + record.sink.label() + " at event " +
                        std::to_string(record.event_index) + " does not follow " +
                        last.sink.label() + " at event " + std::to_string(last.event_index));
      }
    }
    leaks_.push_back(record);
  }

 private:
  ModeVector live_;
  std::vector<LeakRecord> leaks_;
};

// (u, v) <- (cos t * u - sin t * v, sin t * u + cos t * v) on an ordered pair.
inline ModeVector rotate(ModeVector v, PathMode first, PathMode second, double theta) {
  if (!std::isfinite(theta)) {
    throw Error(ErrorCode::kInvalidParameter, "rotation angle must be finite");
  }
  if (first == second) {
    throw Error(ErrorCode::kInvalidParameter, "rotation needs two distinct modes");
  }
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const Complex u = v[first];
  const Complex w = v[second];
  v[first] = c * u - s * w;
  v[second] = s * u + c * w;
  return v;
}

inline PhotonState rotate(PhotonState state, std::pair<PathMode, PathMode> pair, double theta) {
  state.live() = rotate(state.live(), pair.first, pair.second, theta);
  return state;
}

// Moves amp[mode] into a new leak record and zeroes the mode.
inline PhotonState absorb(PhotonState state, PathMode mode, SinkId sink, std::size_t event_index) {
  state.append_leak({sink, event_index, state[mode]});
  state.live()[mode] = 0.0;
  return state;
}

// <bra|ket>, conjugate-linear in bra.
inline Complex inner_product(const ModeVector& bra, const ModeVector& ket) {
  Complex sum = 0.0;
  for (PathMode m : kAllModes) sum += std::conj(bra[m]) * ket[m];
  return sum;
}

// Leaks are not part of the live Hilbert space and never contribute.
inline Complex inner_product(const PhotonState& bra, const PhotonState& ket) {
  return inner_product(bra.live(), ket.live());
}

inline ModeVector project(const ModeVector& v, PathMode mode) {
  ModeVector out;
  out[mode] = v[mode];
  return out;
}

inline PhotonState project(const PhotonState& state, PathMode mode) {
  return PhotonState(project(state.live(), mode));
}

// Complement of the single-mode projector.
inline ModeVector project_out(ModeVector v, PathMode mode) {
  v[mode] = 0.0;
  return v;
}

}  // namespace zeno_tsvf
