#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "parade/model.hpp"

namespace parade {

/// Engine diagnostic: the run cannot continue (event budget exhausted,
/// localization failure). Distinct from invalid_model so callers can map it
/// to a different exit path.
class engine_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Settings, events, trajectory
// ---------------------------------------------------------------------------

struct SolverSettings {
  double step = 0.01;       // base integrator step
  double event_tol = 1e-9;  // event-time localization tolerance
  double merge_gap = 1e-9;  // spatial threshold for declaring contact
  double horizon = 10.0;    // stop time
  int max_events = 10000;   // guard against event accumulation

  void validate() const {
    if (!(step > 0.0)) throw invalid_model("settings.step: must be > 0");
    if (!(event_tol > 0.0 && event_tol <= step))
      throw invalid_model("settings.event_tol: 0 < event_tol <= step required");
    if (!(merge_gap >= 0.0)) throw invalid_model("settings.merge_gap: must be >= 0");
    if (!(horizon > 0.0)) throw invalid_model("settings.horizon: must be > 0");
    if (max_events < 0) throw invalid_model("settings.max_events: must be >= 0");
  }
};

struct Event {
  enum class Kind { Merge, Arrival, Horizon };

  Kind kind = Kind::Merge;
  double time = 0.0;
  std::vector<GroupId> participants;
  GroupId result = -1;           // merge: the minted id; arrival: the arriving id
  double merged_position = 0.0;  // merge only
};

inline const char* to_string(Event::Kind k) {
  switch (k) {
    case Event::Kind::Merge: return "merge";
    case Event::Kind::Arrival: return "arrival";
    case Event::Kind::Horizon: return "horizon";
  }
  return "?";
}

/// One instant of one smooth segment: positions and panic values of every
/// group active in that segment.
struct Sample {
  double time = 0.0;
  std::vector<double> positions;
  std::vector<double> panic;
};

/// A maximal interval between resets: fixed group set, smooth dynamics.
struct Segment {
  double t_begin = 0.0;
  double t_end = 0.0;
  std::vector<GroupId> ids;
  std::vector<int> weights;
  std::vector<Sample> samples;  // first at t_begin, last at t_end
};

/// Full piecewise record of one run.
struct Trajectory {
  std::vector<Segment> segments;
  std::vector<Event> events;
  std::map<GroupId, std::vector<GroupId>> genealogy;  // merged id -> parents
  std::vector<ArrivalRecord> arrivals;                // in arrival-time order
  HerdState final_state;
  int total_weight = 0;  // conserved population count
  SolverSettings settings;
  ModelParams params;

  double t_begin() const { return segments.empty() ? 0.0 : segments.front().t_begin; }
  double t_end() const { return segments.empty() ? 0.0 : segments.back().t_end; }

  bool in_span(double t) const { return t >= t_begin() && t <= t_end(); }

  /// Segment owning time t. Segment boundaries belong to the later segment
  /// (post-reset state), except the final endpoint.
  const Segment& segment_at(double t) const {
    if (segments.empty() || !in_span(t))
      throw std::out_of_range("trajectory: time outside span");
    for (std::size_t k = segments.size(); k-- > 0;) {
      if (t >= segments[k].t_begin) return segments[k];
    }
    return segments.front();
  }

  /// Active positions at time t, linearly interpolated inside steps; parallel
  /// to segment_at(t).ids.
  std::vector<double> positions_at(double t) const {
    const Segment& seg = segment_at(t);
    const auto& ss = seg.samples;
    if (ss.size() == 1 || t <= ss.front().time) return ss.front().positions;
    if (t >= ss.back().time) return ss.back().positions;
    const auto it = std::lower_bound(ss.begin(), ss.end(), t,
                                     [](const Sample& s, double x) { return s.time < x; });
    const Sample& a = *(it - 1);
    const Sample& b = *it;
    const double span = b.time - a.time;
    const double u = span > 0.0 ? (t - a.time) / span : 0.0;
    std::vector<double> out(a.positions.size());
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = a.positions[i] + u * (b.positions[i] - a.positions[i]);
    return out;
  }

  /// Total weight arrived home by time t.
  int arrived_weight_at(double t) const {
    int sum = 0;
    for (const auto& a : arrivals)
      if (a.time <= t) sum += a.weight;
    return sum;
  }

  /// The id that contains `id` at time t, following merges.
  GroupId representative_at(GroupId id, double t) const {
    GroupId cur = id;
    for (const auto& ev : events) {
      if (ev.kind != Event::Kind::Merge || ev.time > t) continue;
      for (GroupId p : ev.participants)
        if (p == cur) { cur = ev.result; break; }
    }
    return cur;
  }

  /// Initial (leaf) ids contained in group `id`, in increasing order.
  std::vector<GroupId> leaves_of(GroupId id) const {
    std::vector<GroupId> out;
    std::vector<GroupId> stack{id};
    while (!stack.empty()) {
      GroupId cur = stack.back();
      stack.pop_back();
      auto it = genealogy.find(cur);
      if (it == genealogy.end()) {
        out.push_back(cur);
      } else {
        for (GroupId p : it->second) stack.push_back(p);
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Position of the group containing leaf `leaf` at time t (home position
  /// once arrived).
  double leaf_position_at(GroupId leaf, double t) const {
    const GroupId rep = representative_at(leaf, t);
    for (const auto& a : arrivals)
      if (a.id == rep && a.time <= t) return params.home;
    const Segment& seg = segment_at(t);
    const auto pos = positions_at(t);
    for (std::size_t i = 0; i < seg.ids.size(); ++i)
      if (seg.ids[i] == rep) return pos[i];
    throw std::out_of_range("trajectory: leaf not found at requested time");
  }
};

// ---------------------------------------------------------------------------
// Smooth flow
// ---------------------------------------------------------------------------

namespace detail {

/// Smooth-segment velocity field: the drive counts groups by their segment
/// index order (ahead-sum minus behind-sum) instead of the instantaneous
/// position sign. On the strictly ordered domain this equals `rhs` exactly;
/// unlike it, it extends Lipschitz-continuously across the domain boundary,
/// so integrator stages that poke past a contact still see a smooth field
/// (the position-sign form flips there and can cancel a step's net update,
/// hiding the contact from event detection).
inline void segment_rhs(std::span<const double> positions, std::span<const int> weights,
                        double t, const ModelParams& params, std::span<double> out) {
  const std::size_t n = positions.size();
  for (std::size_t i = 0; i < n; ++i) {
    double strategic;
    if (mu(weights[i], params.kappa)) {
      strategic = params.v;
    } else {
      double drive = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const double pull = weights[j] * params.sight.eval(std::abs(positions[i] - positions[j]));
        drive += j > i ? pull : -pull;
      }
      strategic = drive;
    }
    const double p = panic(i, positions, weights, params);
    out[i] = p * (params.epsilon + strategic) + params.environment.eval(positions[i], t);
  }
}

/// One classical RK4 step of size h applied to the active groups, under the
/// segment velocity field.
inline HerdState rk4_step(const HerdState& state, const ModelParams& params, double h) {
  const std::size_t n = state.size();
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
  const auto& p = state.positions;
  const auto w = std::span<const int>(state.weights);
  const double t = state.time;

  segment_rhs(p, w, t, params, k1);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = p[i] + 0.5 * h * k1[i];
  segment_rhs(tmp, w, t + 0.5 * h, params, k2);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = p[i] + 0.5 * h * k2[i];
  segment_rhs(tmp, w, t + 0.5 * h, params, k3);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = p[i] + h * k3[i];
  segment_rhs(tmp, w, t + h, params, k4);

  HerdState next = state;
  next.time = t + h;
  for (std::size_t i = 0; i < n; ++i)
    next.positions[i] = p[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return next;
}

inline double min_adjacent_gap(const HerdState& s) {
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < s.size(); ++i)
    gap = std::min(gap, s.positions[i + 1] - s.positions[i]);
  return gap;
}

inline double max_position(const HerdState& s) {
  return s.empty() ? -std::numeric_limits<double>::infinity() : s.positions.back();
}

/// Contact with the ordered-domain boundary or an upward crossing of home.
inline bool event_condition(const HerdState& s, const ModelParams& params,
                            const SolverSettings& settings) {
  return min_adjacent_gap(s) <= settings.merge_gap || max_position(s) >= params.home;
}

}  // namespace detail

/// Advances all active groups by one RK4 step of size <= settings.step
/// (clamped to the horizon). Weights are untouched; the caller is responsible
/// for event handling.
///
/// The step is additionally capped at the predicted contact time of any
/// closing adjacent pair. Stages evaluated past a contact see the reversed
/// drive and can cancel the whole update, hiding the event from endpoint
/// detection; landing just at the contact threshold keeps every stage inside
/// the smooth region and hands the boundary to the event localizer.
inline HerdState step_smooth(const HerdState& state, const ModelParams& params,
                             const SolverSettings& settings) {
  const double h_max = std::max(std::min(settings.step, settings.horizon - state.time), 0.0);
  double h = h_max;
  if (state.size() >= 2 && h > 0.0) {
    std::vector<double> vel(state.size());
    detail::segment_rhs(state.positions, state.weights, state.time, params, vel);
    for (std::size_t i = 0; i + 1 < state.size(); ++i) {
      const double closing = vel[i] - vel[i + 1];
      if (closing <= 0.0) continue;
      const double travel =
          state.positions[i + 1] - state.positions[i] - 0.5 * settings.merge_gap;
      if (travel <= 0.0) continue;
      h = std::min(h, travel / closing);
    }
    // A cap this small cannot advance the clock; take a representable tick
    // instead and let the localizer resolve the de-facto contact.
    const double tick =
        2.0 * (std::nextafter(state.time, std::numeric_limits<double>::infinity()) -
               state.time);
    if (h < tick) h = std::min(tick, h_max);
  }
  return detail::rk4_step(state, params, h);
}

/// Result of event localization: the state on the boundary and the events to
/// apply there, already ordered by the simultaneity rule (merges leftmost
/// first, then arrivals). Merge events carry participants only; ids are
/// minted by apply_merge.
struct EventLocation {
  HerdState state;
  std::vector<Event> events;
};

namespace detail {

/// Merge events at `state`: one per maximal run of adjacent groups with gaps
/// <= merge_gap, leftmost first.
inline std::vector<Event> pending_merges(const HerdState& state,
                                         const SolverSettings& settings) {
  std::vector<Event> out;
  std::size_t i = 0;
  while (i + 1 < state.size()) {
    std::size_t j = i;
    while (j + 1 < state.size() &&
           state.positions[j + 1] - state.positions[j] <= settings.merge_gap)
      ++j;
    if (j > i) {
      Event ev;
      ev.kind = Event::Kind::Merge;
      ev.time = state.time;
      ev.participants.assign(state.ids.begin() + i, state.ids.begin() + j + 1);
      out.push_back(std::move(ev));
    }
    i = j + 1;
  }
  return out;
}

/// Arrival events at `state`: every group at or beyond home, leftmost first.
inline std::vector<Event> pending_arrivals(const HerdState& state,
                                           const ModelParams& params) {
  std::vector<Event> out;
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (state.positions[i] >= params.home) {
      Event ev;
      ev.kind = Event::Kind::Arrival;
      ev.time = state.time;
      ev.participants = {state.ids[i]};
      ev.result = state.ids[i];
      out.push_back(std::move(ev));
    }
  }
  return out;
}

inline GroupId next_group_id(const HerdState& state) {
  GroupId next = 0;
  for (GroupId id : state.ids) next = std::max(next, id + 1);
  for (const auto& a : state.arrived) next = std::max(next, a.id + 1);
  return next;
}

}  // namespace detail

/// Searches the step from `pre` to `post` for the earliest boundary contact
/// (adjacent gap <= merge_gap) or home crossing. The event time is localized
/// by bisection on the step to within event_tol; the returned state sits just
/// past the boundary so the triggering condition holds on it.
inline std::optional<EventLocation> locate_event(const HerdState& pre,
                                                 const HerdState& post,
                                                 const ModelParams& params,
                                                 const SolverSettings& settings) {
  if (!detail::event_condition(post, params, settings)) return std::nullopt;

  const double h = post.time - pre.time;
  double lo = 0.0;
  double hi = h;
  HerdState at_hi = post;
  int iterations = 0;
  while (hi - lo > settings.event_tol) {
    if (++iterations > 256)
      throw engine_error("event localization did not converge: step too large "
                         "relative to event_tol");
    const double mid = 0.5 * (lo + hi);
    HerdState at_mid = detail::rk4_step(pre, params, mid);
    if (detail::event_condition(at_mid, params, settings)) {
      hi = mid;
      at_hi = std::move(at_mid);
    } else {
      lo = mid;
    }
  }

  EventLocation loc;
  loc.state = std::move(at_hi);
  // An upward crossing may overshoot home by up to event_tol * speed; clamp
  // back so arrivals land exactly on home (groups meeting there merge first).
  for (double& p : loc.state.positions) p = std::min(p, params.home);
  // Touching groups sit on the ordered-domain boundary: collapse each contact
  // chain onto its weighted mean so the recorded boundary state is sorted
  // (with ties) and the paths meet exactly at the merge point.
  {
    auto& pos = loc.state.positions;
    const auto& wgt = loc.state.weights;
    std::size_t i = 0;
    while (i + 1 < pos.size()) {
      std::size_t j = i;
      while (j + 1 < pos.size() && pos[j + 1] - pos[j] <= settings.merge_gap) ++j;
      if (j > i) {
        double mass = 0.0, moment = 0.0;
        for (std::size_t k = i; k <= j; ++k) {
          mass += wgt[k];
          moment += wgt[k] * pos[k];
        }
        const double mean = moment / mass;
        for (std::size_t k = i; k <= j; ++k) pos[k] = mean;
      }
      i = j + 1;
    }
  }
  loc.events = detail::pending_merges(loc.state, settings);
  auto arrivals = detail::pending_arrivals(loc.state, params);
  loc.events.insert(loc.events.end(), arrivals.begin(), arrivals.end());
  return loc;
}

/// Replaces the participants of a merge event by a single group carrying
/// their combined weight, placed at the weighted mean of their (numerically
/// coincident) positions. Fills the event's minted id and merged position.
inline HerdState apply_merge(const HerdState& state, Event& event) {
  if (event.kind != Event::Kind::Merge)
    throw std::logic_error("apply_merge: event is not a merge");
  if (event.participants.size() < 2)
    throw std::logic_error("apply_merge: merge needs at least 2 participants");

  std::vector<std::size_t> idx;
  for (GroupId id : event.participants) {
    auto it = std::find(state.ids.begin(), state.ids.end(), id);
    if (it == state.ids.end())
      throw std::logic_error("apply_merge: participant not active");
    idx.push_back(static_cast<std::size_t>(it - state.ids.begin()));
  }
  std::sort(idx.begin(), idx.end());
  for (std::size_t k = 0; k + 1 < idx.size(); ++k)
    if (idx[k + 1] != idx[k] + 1)
      throw std::logic_error("apply_merge: participants must be adjacent");

  double mass = 0.0;
  double moment = 0.0;
  int weight = 0;
  for (std::size_t k : idx) {
    mass += state.weights[k];
    moment += state.weights[k] * state.positions[k];
    weight += state.weights[k];
  }
  const double merged_pos = moment / mass;

  HerdState next = state;
  const std::size_t first = idx.front();
  next.ids.erase(next.ids.begin() + first, next.ids.begin() + idx.back() + 1);
  next.positions.erase(next.positions.begin() + first,
                       next.positions.begin() + idx.back() + 1);
  next.weights.erase(next.weights.begin() + first,
                     next.weights.begin() + idx.back() + 1);

  const GroupId minted = detail::next_group_id(state);
  next.ids.insert(next.ids.begin() + first, minted);
  next.positions.insert(next.positions.begin() + first, merged_pos);
  next.weights.insert(next.weights.begin() + first, weight);

  event.result = minted;
  event.merged_position = merged_pos;
  return next;
}

/// Clamps the arriving group to home, moves it to the arrived set and out of
/// the equations of motion. Other groups are untouched.
inline HerdState apply_arrival(const HerdState& state, const Event& event) {
  if (event.kind != Event::Kind::Arrival)
    throw std::logic_error("apply_arrival: event is not an arrival");
  auto it = std::find(state.ids.begin(), state.ids.end(), event.participants.at(0));
  if (it == state.ids.end())
    throw std::logic_error("apply_arrival: participant not active");
  const std::size_t k = static_cast<std::size_t>(it - state.ids.begin());

  HerdState next = state;
  next.arrived.push_back({state.ids[k], state.weights[k], event.time});
  next.ids.erase(next.ids.begin() + k);
  next.positions.erase(next.positions.begin() + k);
  next.weights.erase(next.weights.begin() + k);
  return next;
}

namespace detail {

inline Sample make_sample(const HerdState& state, const ModelParams& params) {
  Sample s;
  s.time = state.time;
  s.positions = state.positions;
  s.panic.resize(state.size());
  for (std::size_t i = 0; i < state.size(); ++i)
    s.panic[i] = panic(i, state.positions, state.weights, params);
  return s;
}

inline void begin_segment(Trajectory& traj, const HerdState& state,
                          const ModelParams& params) {
  Segment seg;
  seg.t_begin = state.time;
  seg.t_end = state.time;
  seg.ids = state.ids;
  seg.weights = state.weights;
  seg.samples.push_back(make_sample(state, params));
  traj.segments.push_back(std::move(seg));
}

inline void append_sample(Trajectory& traj, const HerdState& state,
                          const ModelParams& params) {
  Segment& seg = traj.segments.back();
  seg.samples.push_back(make_sample(state, params));
  seg.t_end = state.time;
}

/// Applies all events pending at state's time: merges leftmost first, then
/// arrivals derived from the post-merge configuration. Returns the reset
/// state; appends completed events and genealogy/arrival records.
inline HerdState apply_pending_events(HerdState state, Trajectory& traj,
                                      const ModelParams& params,
                                      const SolverSettings& settings,
                                      int& event_count) {
  auto merges = pending_merges(state, settings);
  for (Event& ev : merges) {
    state = apply_merge(state, ev);
    traj.genealogy[ev.result] = ev.participants;
    traj.events.push_back(ev);
    if (++event_count > settings.max_events)
      throw engine_error("max_events exceeded: possible event accumulation");
  }
  auto arrivals = pending_arrivals(state, params);
  for (const Event& ev : arrivals) {
    state = apply_arrival(state, ev);
    traj.arrivals.push_back(state.arrived.back());
    traj.events.push_back(ev);
    if (++event_count > settings.max_events)
      throw engine_error("max_events exceeded: possible event accumulation");
  }
  return state;
}

}  // namespace detail

/// Runs the full stop-and-go construction from `initial` until the horizon or
/// full arrival. Duplicate initial positions (gap <= merge_gap) are merged at
/// the start time before integrating. Deterministic: identical inputs give
/// identical trajectories.
inline Trajectory simulate(const HerdState& initial, const ModelParams& params,
                           const SolverSettings& settings) {
  params.validate();
  settings.validate();

  // Sort the initial groups by position; ties keep input order and are then
  // pre-merged below.
  HerdState state = initial;
  {
    std::vector<std::size_t> order(initial.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return initial.positions[a] < initial.positions[b];
    });
    for (std::size_t i = 0; i < order.size(); ++i) {
      state.ids[i] = initial.ids[order[i]];
      state.positions[i] = initial.positions[order[i]];
      state.weights[i] = initial.weights[order[i]];
    }
  }
  for (int w : state.weights)
    if (w < 1) throw invalid_model("initial herd: weights must be >= 1");

  Trajectory traj;
  traj.settings = settings;
  traj.params = params;
  traj.total_weight = state.total_weight();

  int event_count = 0;
  if (detail::event_condition(state, params, settings))
    state = detail::apply_pending_events(std::move(state), traj, params, settings,
                                         event_count);
  state.validate();

  const double horizon = settings.horizon;
  bool horizon_reached = false;
  detail::begin_segment(traj, state, params);

  while (!state.empty() && state.time < horizon) {
    // Frozen fast path: with no external forcing and an exactly stationary
    // herd, nothing can change; jump straight to the horizon.
    if (params.environment.identically_zero()) {
      const auto velocities = rhs(state.positions, state.weights, state.time, params);
      if (std::all_of(velocities.begin(), velocities.end(),
                      [](double x) { return x == 0.0; })) {
        state.time = horizon;
        detail::append_sample(traj, state, params);
        horizon_reached = true;
        break;
      }
    }

    HerdState candidate = step_smooth(state, params, settings);
    if (candidate.time <= state.time) {  // step underflow at the horizon
      state.time = horizon;
      detail::append_sample(traj, state, params);
      horizon_reached = true;
      break;
    }

    if (auto loc = locate_event(state, candidate, params, settings)) {
      state = std::move(loc->state);
      detail::append_sample(traj, state, params);
      state = detail::apply_pending_events(std::move(state), traj, params, settings,
                                           event_count);
      if (!state.empty() && state.time < horizon)
        detail::begin_segment(traj, state, params);
    } else {
      state = std::move(candidate);
      detail::append_sample(traj, state, params);
      if (state.time >= horizon) horizon_reached = true;
    }
  }

  if (!state.empty() && state.time >= horizon) horizon_reached = true;
  if (horizon_reached && !state.empty()) {
    Event ev;
    ev.kind = Event::Kind::Horizon;
    ev.time = state.time;
    ev.participants = state.ids;
    traj.events.push_back(ev);
  }

  traj.final_state = std::move(state);
  return traj;
}

/// Convenience: build a herd from (position, weight) pairs with ids 0..n-1
/// assigned in sorted-position order.
inline HerdState make_herd(std::vector<std::pair<double, int>> groups, double time = 0.0) {
  std::stable_sort(groups.begin(), groups.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  HerdState state;
  state.time = time;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    state.ids.push_back(static_cast<GroupId>(i));
    state.positions.push_back(groups[i].first);
    state.weights.push_back(groups[i].second);
  }
  return state;
}

}  // namespace parade
