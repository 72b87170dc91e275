#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "parade/engine.hpp"
#include "parade/model.hpp"

namespace parade {

/// Thrown for malformed or invalid scenario documents. The message names the
/// offending field.
class scenario_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A complete, runnable scenario: parameters, initial herd, solver settings.
/// When `seed` is set, the initial herd is regenerated pseudo-randomly with
/// the listed herd's size and ranges (see effective_initial).
struct ScenarioConfig {
  std::string name;
  ModelParams params;
  std::vector<std::pair<double, int>> initial;  // (position, weight)
  SolverSettings settings;
  std::optional<std::uint64_t> seed;

  void validate() const {
    params.validate();
    settings.validate();
    if (initial.empty()) throw scenario_error("initial: at least one group required");
    for (const auto& [pos, w] : initial) {
      if (w < 1) throw scenario_error("initial.weight: weights must be >= 1");
      if (!(pos < params.home))
        throw scenario_error("initial.position: all initial positions must be < home");
    }
  }
};

/// Deterministic pseudo-random herd: n_groups positions uniform in
/// [pos_min, pos_max] (sorted; coincident draws combine their weights) with
/// weights uniform in [w_min, w_max].
inline std::vector<std::pair<double, int>> random_herd(std::uint64_t seed, int n_groups,
                                                       double pos_min, double pos_max,
                                                       int w_min, int w_max) {
  if (n_groups < 1) throw scenario_error("random_herd: n_groups must be >= 1");
  if (!(pos_min <= pos_max)) throw scenario_error("random_herd: bad position range");
  if (w_min < 1 || w_min > w_max) throw scenario_error("random_herd: bad weight range");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos_dist(pos_min, pos_max);
  std::uniform_int_distribution<int> w_dist(w_min, w_max);

  std::vector<std::pair<double, int>> herd(static_cast<std::size_t>(n_groups));
  for (auto& [pos, w] : herd) pos = pos_dist(rng);
  for (auto& [pos, w] : herd) w = w_dist(rng);
  std::sort(herd.begin(), herd.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  std::vector<std::pair<double, int>> out;
  for (const auto& g : herd) {
    if (!out.empty() && out.back().first == g.first)
      out.back().second += g.second;  // de-duplicate coincident draws
    else
      out.push_back(g);
  }
  return out;
}

/// The initial herd the scenario actually runs with: the listed groups, or,
/// when a seed is present, a random herd of the same size drawn from the
/// listed groups' position and weight ranges.
inline std::vector<std::pair<double, int>> effective_initial(const ScenarioConfig& config) {
  if (!config.seed || config.initial.empty()) return config.initial;
  double pos_min = config.initial.front().first;
  double pos_max = pos_min;
  int w_min = config.initial.front().second;
  int w_max = w_min;
  for (const auto& [pos, w] : config.initial) {
    pos_min = std::min(pos_min, pos);
    pos_max = std::max(pos_max, pos);
    w_min = std::min(w_min, w);
    w_max = std::max(w_max, w);
  }
  return random_herd(*config.seed, static_cast<int>(config.initial.size()), pos_min,
                     pos_max, w_min, w_max);
}

/// Runs a scenario end to end.
inline Trajectory run_scenario(const ScenarioConfig& config) {
  config.validate();
  return simulate(make_herd(effective_initial(config)), config.params, config.settings);
}

// ---------------------------------------------------------------------------
// Parsing (strict JSON: unknown keys are rejected to catch typos)
// ---------------------------------------------------------------------------

namespace detail {

using json = nlohmann::ordered_json;

inline void check_keys(const json& obj, const std::string& path,
                       std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* k : allowed)
      if (item.key() == k) { known = true; break; }
    if (!known)
      throw scenario_error("unknown key \"" + path + item.key() + "\"");
  }
}

inline const json& need(const json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end())
    throw scenario_error("missing required key \"" + path + key + "\"");
  return *it;
}

inline double need_number(const json& obj, const char* key, const std::string& path) {
  const json& v = need(obj, key, path);
  if (!v.is_number())
    throw scenario_error("field \"" + path + key + "\": expected a number");
  return v.get<double>();
}

inline double opt_number(const json& obj, const char* key, const std::string& path,
                         double fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_number())
    throw scenario_error("field \"" + path + key + "\": expected a number");
  return it->get<double>();
}

inline int need_int(const json& obj, const char* key, const std::string& path) {
  const json& v = need(obj, key, path);
  if (!v.is_number_integer())
    throw scenario_error("field \"" + path + key + "\": expected an integer");
  return v.get<int>();
}

inline std::string need_string(const json& obj, const char* key, const std::string& path) {
  const json& v = need(obj, key, path);
  if (!v.is_string())
    throw scenario_error("field \"" + path + key + "\": expected a string");
  return v.get<std::string>();
}

inline SightSpec parse_sight(const json& obj) {
  if (!obj.is_object()) throw scenario_error("field \"params.sight\": expected an object");
  const std::string kind = need_string(obj, "kind", "params.sight.");
  SightSpec spec;
  if (kind == "constant") {
    check_keys(obj, "params.sight.", {"kind"});
    spec.kind = SightSpec::Kind::Constant;
  } else if (kind == "gaussian") {
    check_keys(obj, "params.sight.", {"kind"});
    spec.kind = SightSpec::Kind::Gaussian;
  } else if (kind == "ramp") {
    check_keys(obj, "params.sight.", {"kind", "radius"});
    spec.kind = SightSpec::Kind::Ramp;
    spec.radius = need_number(obj, "radius", "params.sight.");
  } else {
    throw scenario_error("field \"params.sight.kind\": unknown kind \"" + kind + "\"");
  }
  return spec;
}

inline PanicProfileSpec parse_panic_profile(const json& obj) {
  if (!obj.is_object())
    throw scenario_error("field \"params.panic_profile\": expected an object");
  check_keys(obj, "params.panic_profile.", {"kind"});
  const std::string kind = need_string(obj, "kind", "params.panic_profile.");
  PanicProfileSpec spec;
  if (kind == "ramp")
    spec.kind = PanicProfileSpec::Kind::Ramp;
  else if (kind == "always_one")
    spec.kind = PanicProfileSpec::Kind::AlwaysOne;
  else
    throw scenario_error("field \"params.panic_profile.kind\": unknown kind \"" + kind +
                         "\"");
  return spec;
}

inline EnvironmentSpec parse_environment(const json& obj) {
  if (!obj.is_object())
    throw scenario_error("field \"params.environment\": expected an object");
  const std::string kind = need_string(obj, "kind", "params.environment.");
  EnvironmentSpec spec;
  if (kind == "neutral") {
    check_keys(obj, "params.environment.", {"kind"});
    spec.kind = EnvironmentSpec::Kind::Neutral;
  } else if (kind == "waves") {
    check_keys(obj, "params.environment.",
               {"kind", "amplitude", "omega", "phase", "shoreline", "blend"});
    spec.kind = EnvironmentSpec::Kind::Waves;
    spec.amplitude = need_number(obj, "amplitude", "params.environment.");
    spec.omega = need_number(obj, "omega", "params.environment.");
    spec.phase = need_number(obj, "phase", "params.environment.");
    spec.shoreline = opt_number(obj, "shoreline", "params.environment.", 0.0);
    spec.blend = need_number(obj, "blend", "params.environment.");
  } else {
    throw scenario_error("field \"params.environment.kind\": unknown kind \"" + kind +
                         "\"");
  }
  return spec;
}

inline ModelParams parse_params(const json& obj) {
  if (!obj.is_object()) throw scenario_error("field \"params\": expected an object");
  check_keys(obj, "params.",
             {"epsilon", "v", "kappa", "home", "d_lo", "d_hi", "sight", "panic_profile",
              "environment"});
  ModelParams params;
  params.epsilon = need_number(obj, "epsilon", "params.");
  params.v = need_number(obj, "v", "params.");
  params.kappa = need_int(obj, "kappa", "params.");
  params.home = need_number(obj, "home", "params.");
  params.d_lo = need_number(obj, "d_lo", "params.");
  params.d_hi = need_number(obj, "d_hi", "params.");
  params.sight = parse_sight(need(obj, "sight", "params."));
  params.panic_profile = parse_panic_profile(need(obj, "panic_profile", "params."));
  params.environment = parse_environment(need(obj, "environment", "params."));
  return params;
}

inline SolverSettings parse_settings(const json& obj) {
  if (!obj.is_object()) throw scenario_error("field \"settings\": expected an object");
  check_keys(obj, "settings.", {"step", "event_tol", "merge_gap", "horizon", "max_events"});
  SolverSettings settings;
  settings.step = need_number(obj, "step", "settings.");
  settings.event_tol = need_number(obj, "event_tol", "settings.");
  settings.merge_gap = need_number(obj, "merge_gap", "settings.");
  settings.horizon = need_number(obj, "horizon", "settings.");
  settings.max_events = need_int(obj, "max_events", "settings.");
  return settings;
}

}  // namespace detail

/// Parses and fully validates a scenario document. Every invariant of every
/// embedded type is checked; unknown keys are rejected.
inline ScenarioConfig parse_scenario(const std::string& text) {
  detail::json doc;
  try {
    doc = detail::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw scenario_error(std::string("malformed scenario document: ") + e.what());
  }
  if (!doc.is_object()) throw scenario_error("scenario document must be an object");
  detail::check_keys(doc, "", {"name", "params", "initial", "settings", "seed"});

  ScenarioConfig config;
  config.name = detail::need_string(doc, "name", "");
  config.params = detail::parse_params(detail::need(doc, "params", ""));

  const detail::json& initial = detail::need(doc, "initial", "");
  if (!initial.is_array()) throw scenario_error("field \"initial\": expected an array");
  for (const auto& entry : initial) {
    if (!entry.is_object())
      throw scenario_error("field \"initial\": entries must be objects");
    detail::check_keys(entry, "initial.", {"position", "weight"});
    config.initial.emplace_back(detail::need_number(entry, "position", "initial."),
                                detail::need_int(entry, "weight", "initial."));
  }

  config.settings = detail::parse_settings(detail::need(doc, "settings", ""));
  if (auto it = doc.find("seed"); it != doc.end()) {
    if (!it->is_number_unsigned())
      throw scenario_error("field \"seed\": expected a nonnegative integer");
    config.seed = it->get<std::uint64_t>();
  }

  try {
    config.validate();
  } catch (const invalid_model& e) {
    throw scenario_error(e.what());
  }
  return config;
}

/// Serializes a scenario to its document form; parse_scenario(serialize(c))
/// reconstructs an equal config.
inline std::string serialize_scenario(const ScenarioConfig& config) {
  detail::json doc;
  doc["name"] = config.name;

  detail::json params;
  params["epsilon"] = config.params.epsilon;
  params["v"] = config.params.v;
  params["kappa"] = config.params.kappa;
  params["home"] = config.params.home;
  params["d_lo"] = config.params.d_lo;
  params["d_hi"] = config.params.d_hi;
  switch (config.params.sight.kind) {
    case SightSpec::Kind::Constant: params["sight"] = {{"kind", "constant"}}; break;
    case SightSpec::Kind::Gaussian: params["sight"] = {{"kind", "gaussian"}}; break;
    case SightSpec::Kind::Ramp:
      params["sight"] = {{"kind", "ramp"}, {"radius", config.params.sight.radius}};
      break;
  }
  params["panic_profile"] = {
      {"kind", config.params.panic_profile.kind == PanicProfileSpec::Kind::Ramp
                   ? "ramp"
                   : "always_one"}};
  if (config.params.environment.kind == EnvironmentSpec::Kind::Neutral) {
    params["environment"] = {{"kind", "neutral"}};
  } else {
    params["environment"] = {{"kind", "waves"},
                             {"amplitude", config.params.environment.amplitude},
                             {"omega", config.params.environment.omega},
                             {"phase", config.params.environment.phase},
                             {"shoreline", config.params.environment.shoreline},
                             {"blend", config.params.environment.blend}};
  }
  doc["params"] = std::move(params);

  doc["initial"] = detail::json::array();
  for (const auto& [pos, w] : config.initial)
    doc["initial"].push_back({{"position", pos}, {"weight", w}});

  doc["settings"] = {{"step", config.settings.step},
                     {"event_tol", config.settings.event_tol},
                     {"merge_gap", config.settings.merge_gap},
                     {"horizon", config.settings.horizon},
                     {"max_events", config.settings.max_events}};
  if (config.seed) doc["seed"] = *config.seed;
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Builtin scenarios: the four behavior classes of the 20-penguin setup, home
// at level 4, shoreline at 0. Initial herds are tuned so each scenario ends
// in its named state on the stated horizon.
// ---------------------------------------------------------------------------

namespace detail {

inline ModelParams builtin_params(SightSpec sight) {
  ModelParams params;
  params.epsilon = 0.1;
  params.v = 1.0;
  params.kappa = 5;
  params.home = 4.0;
  params.d_lo = 0.3;
  params.d_hi = 1.0;
  params.sight = sight;
  params.panic_profile.kind = PanicProfileSpec::Kind::Ramp;
  params.environment.kind = EnvironmentSpec::Kind::Waves;
  params.environment.amplitude = 0.15;
  params.environment.omega = 3.0;
  params.environment.phase = 0.5;
  params.environment.shoreline = 0.0;
  params.environment.blend = 0.5;
  return params;
}

inline SolverSettings builtin_settings(double horizon) {
  SolverSettings settings;
  settings.step = 0.01;
  settings.event_tol = 1e-9;
  settings.merge_gap = 1e-9;
  settings.horizon = horizon;
  settings.max_events = 1000;
  return settings;
}

inline void add_chain(std::vector<std::pair<double, int>>& herd, double start,
                      double gap, int count) {
  for (int k = 0; k < count; ++k) herd.emplace_back(start + gap * k, 1);
}

}  // namespace detail

/// The four shipped 20-penguin scenarios.
inline std::vector<ScenarioConfig> builtin_scenarios() {
  std::vector<ScenarioConfig> out;

  {  // Everyone makes it home, sea starters included.
    ScenarioConfig c;
    c.name = "all-home";
    c.params = detail::builtin_params({SightSpec::Kind::Gaussian});
    detail::add_chain(c.initial, -2.0, 0.24, 20);
    c.settings = detail::builtin_settings(12.0);
    out.push_back(std::move(c));
  }

  {  // A big group forms and leaves; a pair stays slowly paddling in the sea.
    ScenarioConfig c;
    c.name = "two-left-in-water";
    c.params = detail::builtin_params({SightSpec::Kind::Ramp, 3.0});
    c.initial.emplace_back(-3.0, 1);
    c.initial.emplace_back(-2.8, 1);
    detail::add_chain(c.initial, 0.1, 0.14, 18);
    c.settings = detail::builtin_settings(12.0);
    out.push_back(std::move(c));
  }

  {  // One isolated penguin freezes in the water, rocked by the waves; a pair
     // gets together in the sea and slowly waddles ashore.
    ScenarioConfig c;
    c.name = "one-frozen-in-water";
    c.params = detail::builtin_params({SightSpec::Kind::Gaussian});
    c.initial.emplace_back(-3.5, 1);
    c.initial.emplace_back(-2.0, 1);
    c.initial.emplace_back(-1.8, 1);
    detail::add_chain(c.initial, 0.2, 0.15, 17);
    c.settings = detail::builtin_settings(30.0);
    out.push_back(std::move(c));
  }

  {  // One penguin freezes on land while the herd marches past above.
    ScenarioConfig c;
    c.name = "frozen-on-shore";
    c.params = detail::builtin_params({SightSpec::Kind::Ramp, 3.0});
    c.initial.emplace_back(-3.0, 1);
    c.initial.emplace_back(0.6, 1);
    detail::add_chain(c.initial, 1.7, 0.11, 18);
    c.settings = detail::builtin_settings(12.0);
    out.push_back(std::move(c));
  }

  return out;
}

inline const ScenarioConfig& builtin_scenario(const std::string& name) {
  static const std::vector<ScenarioConfig> all = builtin_scenarios();
  for (const auto& c : all)
    if (c.name == name) return c;
  throw scenario_error("unknown builtin scenario \"" + name + "\"");
}

}  // namespace parade
