#pragma once

#include <algorithm>
#include <cstdio>
#include <string>
#include <vector>

#include "parade/engine.hpp"

namespace parade {

namespace csv_detail {

struct Row {
  double t;
  GroupId id;
  double position;
  int weight;
  double panic;
};

inline std::string format12(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

}  // namespace csv_detail

/// Renders the trajectory as CSV, one row per active group per solver output
/// time plus one terminal row per arrival. Event instants carry the
/// post-reset configuration. Output is deterministic byte for byte.
inline std::string export_csv(const Trajectory& traj) {
  using csv_detail::Row;
  std::vector<Row> rows;

  // Segment boundaries belong to the following segment; the final state
  // supplies the rows at the very end of the run.
  for (const auto& seg : traj.segments) {
    for (const auto& sample : seg.samples) {
      if (sample.time >= seg.t_end && seg.t_end > seg.t_begin) continue;
      for (std::size_t i = 0; i < seg.ids.size(); ++i)
        rows.push_back(
            {sample.time, seg.ids[i], sample.positions[i], seg.weights[i], sample.panic[i]});
    }
  }
  const HerdState& fin = traj.final_state;
  for (std::size_t i = 0; i < fin.size(); ++i)
    rows.push_back({fin.time, fin.ids[i], fin.positions[i], fin.weights[i],
                    panic(i, fin.positions, fin.weights, traj.params)});
  for (const auto& a : traj.arrivals)
    rows.push_back({a.time, a.id, traj.params.home, a.weight, 1.0});

  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.t != b.t) return a.t < b.t;
    return a.id < b.id;
  });

  std::string out = "t,group_id,position,weight,panic\n";
  for (const Row& r : rows) {
    out += csv_detail::format12(r.t);
    out += ',';
    out += std::to_string(r.id);
    out += ',';
    out += csv_detail::format12(r.position);
    out += ',';
    out += std::to_string(r.weight);
    out += ',';
    out += csv_detail::format12(r.panic);
    out += '\n';
  }
  return out;
}

/// One line per event, in time order.
inline std::string export_events_text(const Trajectory& traj) {
  std::string out;
  for (const auto& ev : traj.events) {
    out += "t=";
    out += csv_detail::format12(ev.time);
    out += " kind=";
    out += to_string(ev.kind);
    out += " participants=[";
    for (std::size_t k = 0; k < ev.participants.size(); ++k) {
      if (k) out += ',';
      out += std::to_string(ev.participants[k]);
    }
    out += ']';
    if (ev.kind == Event::Kind::Merge) {
      out += " -> group ";
      out += std::to_string(ev.result);
      out += " at ";
      out += csv_detail::format12(ev.merged_position);
    }
    out += '\n';
  }
  return out;
}

}  // namespace parade
