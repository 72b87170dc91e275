#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace parade {

using GroupId = int;

/// Thrown when a domain invariant is violated (bad parameter, malformed state).
class invalid_model : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Function catalogue
//
// The pointwise ingredients of the velocity law are declarative specs: a kind
// tag plus named scalars, evaluable anywhere. Keeping them closed-catalogue
// (instead of std::function) keeps scenarios serializable and runs
// reproducible.
// ---------------------------------------------------------------------------

/// Eye-sight kernel: nonnegative, nonincreasing, Lipschitz on [0, inf).
struct SightSpec {
  enum class Kind { Constant, Gaussian, Ramp };

  Kind kind = Kind::Constant;
  double radius = 1.0;  // Ramp support radius; unused otherwise.

  double eval(double r) const {
    switch (kind) {
      case Kind::Constant:
        return 1.0;
      case Kind::Gaussian:
        return std::exp(-r * r);
      case Kind::Ramp:
        return std::max(0.0, 1.0 - r / radius);
    }
    return 0.0;
  }

  /// Kernel value at zero separation, the sup of the kernel.
  double at_zero() const { return eval(0.0); }

  void validate() const {
    if (kind == Kind::Ramp && !(radius > 0.0))
      throw invalid_model("sight.radius: must be > 0 for ramp kernel");
  }
};

/// Isolation profile: 1 on [0, d_lo], 0 on [d_hi, inf), nonincreasing ramp
/// between. The AlwaysOne kind disables the panic mechanism entirely.
struct PanicProfileSpec {
  enum class Kind { Ramp, AlwaysOne };

  Kind kind = Kind::Ramp;

  double eval(double r, double d_lo, double d_hi) const {
    if (kind == Kind::AlwaysOne) return 1.0;
    return std::clamp((d_hi - r) / (d_hi - d_lo), 0.0, 1.0);
  }
};

/// External forcing f(r, t), Lipschitz in both arguments.
///
/// Waves act below the shoreline only:
///   f(r, t) = amplitude * sin(omega * t + phase) * ramp((shoreline - r) / blend)
/// with ramp(x) = clamp(x, 0, 1), so the forcing fades to exactly zero at the
/// shoreline and reaches full strength one blend-width below it.
struct EnvironmentSpec {
  enum class Kind { Neutral, Waves };

  Kind kind = Kind::Neutral;
  double amplitude = 0.0;
  double omega = 0.0;
  double phase = 0.0;
  double shoreline = 0.0;
  double blend = 0.5;

  double eval(double r, double t) const {
    if (kind == Kind::Neutral) return 0.0;
    const double depth = std::clamp((shoreline - r) / blend, 0.0, 1.0);
    return amplitude * std::sin(omega * t + phase) * depth;
  }

  /// True when the forcing vanishes everywhere (enables the frozen fast path).
  bool identically_zero() const {
    return kind == Kind::Neutral || amplitude == 0.0;
  }

  /// Exact inf of f over R x [t, inf). Closed form for the whole catalogue.
  double infimum_from(double t) const {
    if (identically_zero()) return 0.0;
    if (omega != 0.0) return -std::abs(amplitude);  // sin sweeps [-1, 1]
    return std::min(0.0, amplitude * std::sin(omega * t + phase));
  }

  void validate() const {
    if (kind == Kind::Waves && !(blend > 0.0))
      throw invalid_model("environment.blend: must be > 0 for waves");
  }
};

// ---------------------------------------------------------------------------
// Parameters and state
// ---------------------------------------------------------------------------

/// All scalar constants of the velocity law plus the function catalogue picks.
struct ModelParams {
  double epsilon = 0.1;  // homeward drift speed, >= 0
  double v = 1.0;        // cruising speed of large groups, > epsilon
  int kappa = 2;         // group-size threshold for cruising, >= 2
  double home = 4.0;     // burrow position, > 0
  double d_lo = 0.3;     // self-confidence distance, > 0
  double d_hi = 1.0;     // panic distance, > d_lo

  SightSpec sight;
  PanicProfileSpec panic_profile;
  EnvironmentSpec environment;

  void validate() const {
    if (kappa < 2) throw invalid_model("params.kappa: kappa >= 2 required");
    if (!(v > epsilon)) throw invalid_model("params.v: v > epsilon required");
    if (!(epsilon >= 0.0)) throw invalid_model("params.epsilon: epsilon >= 0 required");
    if (!(d_lo > 0.0)) throw invalid_model("params.d_lo: 0 < d_lo required");
    if (!(d_hi > d_lo)) throw invalid_model("params.d_hi: d_lo < d_hi required");
    if (!(home > 0.0)) throw invalid_model("params.home: home > 0 required");
    sight.validate();
    environment.validate();
  }
};

/// One group that has reached home and left the equations of motion.
struct ArrivalRecord {
  GroupId id = -1;
  int weight = 0;
  double time = 0.0;

  friend bool operator==(const ArrivalRecord&, const ArrivalRecord&) = default;
};

/// Live configuration at one instant: the active groups (sorted by position)
/// plus everyone already home.
struct HerdState {
  double time = 0.0;
  std::vector<GroupId> ids;
  std::vector<double> positions;  // strictly increasing
  std::vector<int> weights;       // all >= 1
  std::vector<ArrivalRecord> arrived;

  std::size_t size() const { return positions.size(); }
  bool empty() const { return positions.empty(); }

  int active_weight() const {
    int sum = 0;
    for (int w : weights) sum += w;
    return sum;
  }

  int arrived_weight() const {
    int sum = 0;
    for (const auto& a : arrived) sum += a.weight;
    return sum;
  }

  /// Conserved population count.
  int total_weight() const { return active_weight() + arrived_weight(); }

  void validate() const {
    if (ids.size() != positions.size() || weights.size() != positions.size())
      throw invalid_model("herd: ids/positions/weights size mismatch");
    for (double p : positions)
      if (!std::isfinite(p)) throw invalid_model("herd: positions must be finite");
    for (std::size_t i = 0; i + 1 < positions.size(); ++i)
      if (!(positions[i] < positions[i + 1]))
        throw invalid_model("herd: positions must be strictly increasing");
    for (int w : weights)
      if (w < 1) throw invalid_model("herd: weights must be >= 1");
  }
};

// ---------------------------------------------------------------------------
// Pointwise velocity-law functions
// ---------------------------------------------------------------------------

inline double sign(double r) { return r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0); }

/// 1 when the group is large enough to cruise, 0 otherwise.
inline int mu(int ell, int kappa) { return ell >= kappa ? 1 : 0; }

/// 1 for a proper group (two or more members), 0 for a singleton.
inline int group_indicator(int ell) { return ell >= 2 ? 1 : 0; }

namespace detail {
inline void check_index(std::size_t i, std::size_t n, const char* fn) {
  if (i >= n) throw std::out_of_range(std::string(fn) + ": group index out of range");
}
}  // namespace detail

/// Signed visual drive of group i: each other group pulls toward itself with
/// strength weight * sight(distance). With sorted positions this is the
/// weighted sight-sum ahead minus the one behind.
inline double visual_drive(std::size_t i, std::span<const double> positions,
                           std::span<const int> weights, const SightSpec& sight) {
  detail::check_index(i, positions.size(), "visual_drive");
  double drive = 0.0;
  for (std::size_t j = 0; j < positions.size(); ++j) {
    if (j == i) continue;
    const double diff = positions[j] - positions[i];
    drive += sign(diff) * weights[j] * sight.eval(std::abs(diff));
  }
  return drive;
}

/// Strategic velocity: the visual drive for small groups, the cruising speed
/// v for groups of size >= kappa.
inline double strategic_velocity(std::size_t i, std::span<const double> positions,
                                 std::span<const int> weights,
                                 const ModelParams& params) {
  detail::check_index(i, positions.size(), "strategic_velocity");
  if (mu(weights[i], params.kappa)) return params.v;
  return visual_drive(i, positions, weights, params.sight);
}

/// Panic multiplier in [0, 1]: 1 for proper groups or when some other group
/// is close, fading to 0 for an isolated singleton. The max over the empty
/// neighbor set (lone group) counts as 0, so a lone singleton freezes while a
/// lone proper group proceeds.
inline double panic(std::size_t i, std::span<const double> positions,
                    std::span<const int> weights, const ModelParams& params) {
  detail::check_index(i, positions.size(), "panic");
  if (params.panic_profile.kind == PanicProfileSpec::Kind::AlwaysOne) return 1.0;
  if (group_indicator(weights[i])) return 1.0;
  double nearest = 0.0;  // max over the empty neighbor set is 0
  for (std::size_t j = 0; j < positions.size(); ++j) {
    if (j == i) continue;
    const double phi = params.panic_profile.eval(std::abs(positions[i] - positions[j]),
                                                 params.d_lo, params.d_hi);
    nearest = std::max(nearest, phi);
  }
  return nearest;
}

/// Right-hand side of the equations of motion for every active group:
///   dp_i/dt = panic_i * (epsilon + strategic_velocity_i) + f(p_i, t).
/// Total on any position array; inside the strictly ordered domain it is
/// Lipschitz for fixed weights.
inline void rhs(std::span<const double> positions, std::span<const int> weights,
                double t, const ModelParams& params, std::span<double> out) {
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const double p = panic(i, positions, weights, params);
    const double vel = strategic_velocity(i, positions, weights, params);
    out[i] = p * (params.epsilon + vel) + params.environment.eval(positions[i], t);
  }
}

inline std::vector<double> rhs(std::span<const double> positions,
                               std::span<const int> weights, double t,
                               const ModelParams& params) {
  std::vector<double> out(positions.size());
  rhs(positions, weights, t, params, out);
  return out;
}

}  // namespace parade
