#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "parade/engine.hpp"
#include "parade/model.hpp"

namespace parade {

// ---------------------------------------------------------------------------
// Homecoming bookkeeping
// ---------------------------------------------------------------------------

/// Total weight that has arrived home by time t.
inline int homecoming_count(const Trajectory& traj, double t) {
  if (!traj.in_span(t))
    throw std::out_of_range("homecoming_count: time outside trajectory span");
  return traj.arrived_weight_at(t);
}

/// Summary of one run: the homecoming step function, the arrival log, and
/// whoever is still out at the end.
struct HomecomingReport {
  int total_weight = 0;
  std::vector<std::pair<double, int>> count_steps;  // (time, count) breakpoints
  std::vector<ArrivalRecord> arrivals;

  struct Straggler {
    GroupId id;
    double position;
    int weight;
  };
  std::vector<Straggler> frozen_at_horizon;  // active groups at the end
};

inline HomecomingReport make_report(const Trajectory& traj) {
  HomecomingReport report;
  report.total_weight = traj.total_weight;
  report.arrivals = traj.arrivals;
  int count = 0;
  report.count_steps.emplace_back(traj.t_begin(), 0);
  for (const auto& a : traj.arrivals) {
    count += a.weight;
    report.count_steps.emplace_back(a.time, count);
  }
  const HerdState& fin = traj.final_state;
  for (std::size_t i = 0; i < fin.size(); ++i)
    report.frozen_at_horizon.push_back({fin.ids[i], fin.positions[i], fin.weights[i]});
  return report;
}

// ---------------------------------------------------------------------------
// Homecoming theorems as executable sufficient-condition checkers
// ---------------------------------------------------------------------------

/// Numerical witness for one of the two homecoming guarantees. `applicable`
/// reports whether the hypotheses hold at t_o; when they do, full (theorem 1)
/// or partial (theorem 2) homecoming must be witnessed by bound_T.
struct TheoremCertificate {
  int theorem = 1;  // 1: rear group of >= 2; 2: some group of >= kappa
  double t_o = 0.0;
  std::size_t group_index = 0;  // theorem 2 only: index j_o at t_o (0-based)
  double iota = 0.0;            // guaranteed speed lower bound
  double bound_T = 0.0;         // latest guaranteed homecoming time
  int required_weight = 0;      // arrived weight the theorem promises
  bool applicable = false;
  bool witnessed = false;
  double witnessed_T = std::numeric_limits<double>::quiet_NaN();
  std::string inf_method = "closed-form";  // how inf f was bounded
};

namespace detail {

/// Earliest arrival-log time at which the arrived weight reaches `required`.
inline double first_time_reaching(const Trajectory& traj, int required) {
  int sum = 0;
  for (const auto& a : traj.arrivals) {
    sum += a.weight;
    if (sum >= required) return a.time;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

inline void witness_certificate(TheoremCertificate& cert, const Trajectory& traj) {
  const double t = first_time_reaching(traj, cert.required_weight);
  if (std::isnan(t)) return;
  // Each numerical merge may relocate the tracked worldline backward by up to
  // merge_gap (participants sit within one contact chain, not at one exact
  // point), delaying arrival by merge_gap / iota. Exact-equality bound cases
  // need that slack on top of the event localization tolerance.
  int merges = 0;
  for (const auto& ev : traj.events)
    if (ev.kind == Event::Kind::Merge) ++merges;
  const double slack =
      traj.settings.event_tol + merges * traj.settings.merge_gap / cert.iota;
  // The count is nondecreasing, so if it reached the required weight before
  // t_o, the earliest witness inside the theorem's interval is t_o itself.
  const double witness = std::max(t, cert.t_o);
  if (witness <= cert.bound_T + slack) {
    cert.witnessed = true;
    cert.witnessed_T = witness;
  }
}

}  // namespace detail

/// Rear-group guarantee: if the hindmost group has >= 2 members at t_o and
/// the drift dominates the environment (iota = epsilon + inf f > 0), the whole
/// herd is home by t_o + (home - p_1(t_o)) / iota.
inline TheoremCertificate check_theorem1(const Trajectory& traj,
                                         const ModelParams& params, double t_o) {
  if (!traj.in_span(t_o))
    throw std::out_of_range("check_theorem1: t_o outside trajectory span");
  TheoremCertificate cert;
  cert.theorem = 1;
  cert.t_o = t_o;
  cert.iota = params.epsilon + params.environment.infimum_from(t_o);
  cert.required_weight = traj.total_weight;

  const Segment& seg = traj.segment_at(t_o);
  if (seg.ids.empty()) return cert;  // nobody left on the move at t_o
  const int rear_weight = seg.weights.front();
  if (rear_weight < 2 || !(cert.iota > 0.0)) return cert;

  cert.applicable = true;
  const double rear_position = traj.positions_at(t_o).front();
  cert.bound_T = t_o + (params.home - rear_position) / cert.iota;
  detail::witness_certificate(cert, traj);
  return cert;
}

/// Large-group guarantee: if group j_o has >= kappa members at t_o and
/// iota = epsilon + v + inf f > 0, then it and every group ahead of it are
/// home by t_o + (home - p_{j_o}(t_o)) / iota.
inline TheoremCertificate check_theorem2(const Trajectory& traj,
                                         const ModelParams& params, double t_o,
                                         std::size_t group_index) {
  if (!traj.in_span(t_o))
    throw std::out_of_range("check_theorem2: t_o outside trajectory span");
  const Segment& seg = traj.segment_at(t_o);
  if (group_index >= seg.ids.size())
    throw std::out_of_range("check_theorem2: group index not active at t_o");

  TheoremCertificate cert;
  cert.theorem = 2;
  cert.t_o = t_o;
  cert.group_index = group_index;
  cert.iota = params.epsilon + params.v + params.environment.infimum_from(t_o);
  int ahead = 0;
  for (std::size_t j = group_index; j < seg.weights.size(); ++j)
    ahead += seg.weights[j];
  cert.required_weight = ahead;

  if (seg.weights[group_index] < params.kappa || !(cert.iota > 0.0)) return cert;

  cert.applicable = true;
  const double position = traj.positions_at(t_o)[group_index];
  cert.bound_T = t_o + (params.home - position) / cert.iota;
  detail::witness_certificate(cert, traj);
  return cert;
}

// ---------------------------------------------------------------------------
// Brute-force oracle integrator
//
// Explicit Euler at a micro step with the same merge/arrival reset rules,
// built from the velocity-law definitions directly. Shares no stepping or
// right-hand-side code with the engine, so the two trajectories cross-check
// each other.
// ---------------------------------------------------------------------------

namespace oracle_detail {

inline double sight_value(const SightSpec& s, double r) {
  switch (s.kind) {
    case SightSpec::Kind::Constant: return 1.0;
    case SightSpec::Kind::Gaussian: return std::exp(-r * r);
    case SightSpec::Kind::Ramp: return r >= s.radius ? 0.0 : 1.0 - r / s.radius;
  }
  return 0.0;
}

/// Velocity of group i spelled out from the definitions.
inline double velocity(std::size_t i, const std::vector<double>& pos,
                       const std::vector<int>& w, double t, const ModelParams& mp) {
  double drive = 0.0;
  for (std::size_t j = 0; j < pos.size(); ++j) {
    if (j == i) continue;
    const double d = pos[j] - pos[i];
    const double s = sight_value(mp.sight, std::abs(d));
    drive += (d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0)) * w[j] * s;
  }
  const double strategic = w[i] >= mp.kappa ? mp.v : drive;

  double fear;
  if (mp.panic_profile.kind == PanicProfileSpec::Kind::AlwaysOne) {
    fear = 1.0;
  } else if (w[i] >= 2) {
    fear = 1.0;
  } else {
    fear = 0.0;
    for (std::size_t j = 0; j < pos.size(); ++j) {
      if (j == i) continue;
      const double r = std::abs(pos[i] - pos[j]);
      fear = std::max(fear, std::clamp((mp.d_hi - r) / (mp.d_hi - mp.d_lo), 0.0, 1.0));
    }
  }

  double force = 0.0;
  if (mp.environment.kind == EnvironmentSpec::Kind::Waves) {
    const auto& env = mp.environment;
    force = env.amplitude * std::sin(env.omega * t + env.phase) *
            std::clamp((env.shoreline - pos[i]) / env.blend, 0.0, 1.0);
  }
  return fear * (mp.epsilon + strategic) + force;
}

}  // namespace oracle_detail

/// Cross-validation reference run. Guarded to small instances; records a
/// sample roughly every hundredth micro step plus every reset.
inline Trajectory oracle_integrate(const HerdState& initial, const ModelParams& params,
                                   const SolverSettings& settings, double micro_step) {
  params.validate();
  settings.validate();
  if (!(micro_step > 0.0)) throw invalid_model("oracle: micro_step must be > 0");
  if (initial.size() > 5) throw invalid_model("oracle: instance too large (n > 5)");

  std::vector<std::pair<double, int>> groups;
  for (std::size_t i = 0; i < initial.size(); ++i)
    groups.emplace_back(initial.positions[i], initial.weights[i]);
  std::sort(groups.begin(), groups.end());

  int population = 0;
  for (auto& [p, w] : groups) population += w;
  if (population > 8) throw invalid_model("oracle: instance too large (population > 8)");

  Trajectory traj;
  traj.settings = settings;
  traj.params = params;
  traj.total_weight = population;

  std::vector<double> pos;
  std::vector<int> wgt;
  std::vector<GroupId> ids;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    pos.push_back(groups[i].first);
    wgt.push_back(groups[i].second);
    ids.push_back(static_cast<GroupId>(i));
  }
  GroupId next_id = static_cast<GroupId>(groups.size());
  double t = initial.time;

  const auto fear_of = [&](std::size_t i) {
    if (params.panic_profile.kind == PanicProfileSpec::Kind::AlwaysOne) return 1.0;
    if (wgt[i] >= 2) return 1.0;
    double fear = 0.0;
    for (std::size_t j = 0; j < pos.size(); ++j) {
      if (j == i) continue;
      const double r = std::abs(pos[i] - pos[j]);
      fear = std::max(fear, std::clamp((params.d_hi - r) / (params.d_hi - params.d_lo),
                                       0.0, 1.0));
    }
    return fear;
  };

  const auto snapshot = [&]() {
    Sample s;
    s.time = t;
    s.positions = pos;
    for (std::size_t i = 0; i < pos.size(); ++i) s.panic.push_back(fear_of(i));
    return s;
  };

  const auto open_segment = [&]() {
    Segment seg;
    seg.t_begin = t;
    seg.t_end = t;
    seg.ids = ids;
    seg.weights = wgt;
    seg.samples.push_back(snapshot());
    traj.segments.push_back(std::move(seg));
  };

  const auto close_sample = [&]() {
    traj.segments.back().samples.push_back(snapshot());
    traj.segments.back().t_end = t;
  };

  // Resets at the current time: adjacent chains with gaps <= merge_gap merge
  // leftmost first, then groups at or past home arrive, leftmost first.
  const auto apply_resets = [&]() {
    bool changed = false;
    std::size_t i = 0;
    while (i + 1 < pos.size()) {
      std::size_t j = i;
      while (j + 1 < pos.size() && pos[j + 1] - pos[j] <= settings.merge_gap) ++j;
      if (j > i) {
        Event ev;
        ev.kind = Event::Kind::Merge;
        ev.time = t;
        double mass = 0.0, moment = 0.0;
        int weight = 0;
        for (std::size_t k = i; k <= j; ++k) {
          ev.participants.push_back(ids[k]);
          mass += wgt[k];
          moment += wgt[k] * pos[k];
          weight += wgt[k];
        }
        ev.result = next_id++;
        ev.merged_position = moment / mass;
        traj.genealogy[ev.result] = ev.participants;
        pos.erase(pos.begin() + i, pos.begin() + j + 1);
        wgt.erase(wgt.begin() + i, wgt.begin() + j + 1);
        ids.erase(ids.begin() + i, ids.begin() + j + 1);
        pos.insert(pos.begin() + i, ev.merged_position);
        wgt.insert(wgt.begin() + i, weight);
        ids.insert(ids.begin() + i, ev.result);
        traj.events.push_back(std::move(ev));
        changed = true;
      }
      i += 1;
    }
    std::size_t k = 0;
    while (k < pos.size()) {
      if (pos[k] >= params.home) {
        Event ev;
        ev.kind = Event::Kind::Arrival;
        ev.time = t;
        ev.participants = {ids[k]};
        ev.result = ids[k];
        traj.arrivals.push_back({ids[k], wgt[k], t});
        traj.events.push_back(std::move(ev));
        pos.erase(pos.begin() + k);
        wgt.erase(wgt.begin() + k);
        ids.erase(ids.begin() + k);
        changed = true;
      } else {
        ++k;
      }
    }
    return changed;
  };

  apply_resets();  // initial duplicates or at-home starts
  open_segment();

  const long record_every = 100;
  long step_count = 0;
  while (!pos.empty() && t < settings.horizon) {
    const double h = std::min(micro_step, settings.horizon - t);
    if (t + h == t) break;
    std::vector<double> vel(pos.size());
    for (std::size_t i = 0; i < pos.size(); ++i)
      vel[i] = oracle_detail::velocity(i, pos, wgt, t, params);
    for (std::size_t i = 0; i < pos.size(); ++i) {
      pos[i] += h * vel[i];
      pos[i] = std::min(pos[i], params.home);
    }
    t += h;
    ++step_count;

    const bool reset_due =
        (pos.size() > 1 &&
         [&] {
           for (std::size_t i = 0; i + 1 < pos.size(); ++i)
             if (pos[i + 1] - pos[i] <= settings.merge_gap) return true;
           return false;
         }()) ||
        (!pos.empty() && pos.back() >= params.home);
    if (reset_due) {
      close_sample();
      apply_resets();
      if (!pos.empty() && t < settings.horizon) open_segment();
    } else if (step_count % record_every == 0 || t >= settings.horizon) {
      close_sample();
    }
  }

  if (!pos.empty()) {
    if (t < settings.horizon) t = settings.horizon;
    if (traj.segments.back().t_end < t) close_sample();
    Event ev;
    ev.kind = Event::Kind::Horizon;
    ev.time = t;
    ev.participants = ids;
    traj.events.push_back(ev);
  }

  traj.final_state.time = t;
  traj.final_state.ids = ids;
  traj.final_state.positions = pos;
  traj.final_state.weights = wgt;
  for (const auto& a : traj.arrivals) traj.final_state.arrived.push_back(a);
  return traj;
}

// ---------------------------------------------------------------------------
// Trajectory comparison (engine vs oracle)
// ---------------------------------------------------------------------------

/// Event identity independent of minted ids: kind plus the initial ids each
/// participant is built from.
struct EventSignature {
  Event::Kind kind;
  std::vector<std::vector<GroupId>> participant_leaves;
  double time;

  friend bool operator==(const EventSignature& a, const EventSignature& b) {
    return a.kind == b.kind && a.participant_leaves == b.participant_leaves;
  }
};

/// Signatures of merge/arrival events in time order (horizon stops excluded).
inline std::vector<EventSignature> event_signatures(const Trajectory& traj) {
  std::vector<EventSignature> out;
  for (const auto& ev : traj.events) {
    if (ev.kind == Event::Kind::Horizon) continue;
    EventSignature sig;
    sig.kind = ev.kind;
    sig.time = ev.time;
    for (GroupId id : ev.participants) sig.participant_leaves.push_back(traj.leaves_of(id));
    std::sort(sig.participant_leaves.begin(), sig.participant_leaves.end());
    out.push_back(std::move(sig));
  }
  return out;
}

struct TrajectoryComparison {
  bool same_events = false;
  double max_event_time_diff = 0.0;
  double sup_position_diff = 0.0;
};

/// Compares two runs of the same initial herd: event sequences by leaf
/// signature, event times, and per-leaf positions on the union of both sample
/// grids over the common time span.
inline TrajectoryComparison compare_trajectories(const Trajectory& a,
                                                 const Trajectory& b) {
  TrajectoryComparison result;

  const auto sig_a = event_signatures(a);
  const auto sig_b = event_signatures(b);
  result.same_events = sig_a.size() == sig_b.size();
  if (result.same_events) {
    for (std::size_t k = 0; k < sig_a.size(); ++k) {
      if (!(sig_a[k] == sig_b[k])) {
        result.same_events = false;
        break;
      }
      result.max_event_time_diff =
          std::max(result.max_event_time_diff, std::abs(sig_a[k].time - sig_b[k].time));
    }
  }

  std::vector<GroupId> leaves;
  if (!a.segments.empty()) {
    for (GroupId id : a.segments.front().ids) {
      auto ls = a.leaves_of(id);
      leaves.insert(leaves.end(), ls.begin(), ls.end());
    }
  }
  for (const auto& arr : a.arrivals) {
    auto ls = a.leaves_of(arr.id);
    leaves.insert(leaves.end(), ls.begin(), ls.end());
  }
  std::sort(leaves.begin(), leaves.end());
  leaves.erase(std::unique(leaves.begin(), leaves.end()), leaves.end());

  std::vector<double> times;
  const double t_lo = std::max(a.t_begin(), b.t_begin());
  const double t_hi = std::min(a.t_end(), b.t_end());
  for (const auto& seg : a.segments)
    for (const auto& s : seg.samples)
      if (s.time >= t_lo && s.time <= t_hi) times.push_back(s.time);
  for (const auto& seg : b.segments)
    for (const auto& s : seg.samples)
      if (s.time >= t_lo && s.time <= t_hi) times.push_back(s.time);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  for (const double t : times)
    for (GroupId leaf : leaves)
      result.sup_position_diff =
          std::max(result.sup_position_diff,
                   std::abs(a.leaf_position_at(leaf, t) - b.leaf_position_at(leaf, t)));
  return result;
}

// ---------------------------------------------------------------------------
// Structured-text renderings
// ---------------------------------------------------------------------------

namespace detail {

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

}  // namespace detail

inline std::string report_to_text(const HomecomingReport& report) {
  std::ostringstream out;
  out << "homecoming report\n";
  out << "population: " << report.total_weight << "\n";
  const int home = report.count_steps.empty() ? 0 : report.count_steps.back().second;
  out << "home: " << home << "\n";
  out << "arrivals: " << report.arrivals.size() << "\n";
  for (const auto& a : report.arrivals)
    out << "  t=" << detail::format_double(a.time) << " group=" << a.id
        << " weight=" << a.weight << "\n";
  out << "still out: " << report.frozen_at_horizon.size() << "\n";
  for (const auto& s : report.frozen_at_horizon)
    out << "  group=" << s.id << " position=" << detail::format_double(s.position)
        << " weight=" << s.weight << "\n";
  return out.str();
}

inline std::string certificate_to_text(const TheoremCertificate& cert) {
  std::ostringstream out;
  out << "certificate theorem=" << cert.theorem << "\n";
  out << "t_o: " << detail::format_double(cert.t_o) << "\n";
  if (cert.theorem == 2) out << "group_index: " << cert.group_index << "\n";
  out << "iota: " << detail::format_double(cert.iota) << "\n";
  out << "inf_method: " << cert.inf_method << "\n";
  out << "applicable: " << (cert.applicable ? "yes" : "no") << "\n";
  if (cert.applicable) {
    out << "bound_T: " << detail::format_double(cert.bound_T) << "\n";
    out << "required_weight: " << cert.required_weight << "\n";
    out << "witnessed: " << (cert.witnessed ? "yes" : "no") << "\n";
    if (cert.witnessed)
      out << "witnessed_T: " << detail::format_double(cert.witnessed_T) << "\n";
  }
  return out.str();
}

}  // namespace parade
