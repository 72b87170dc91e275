#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "parade/verify.hpp"

using namespace parade;
using Catch::Approx;

namespace {

ModelParams drift_params() {
  ModelParams p;
  p.epsilon = 0.1;
  p.v = 1.0;
  p.kappa = 5;
  p.home = 4.0;
  p.d_lo = 0.3;
  p.d_hi = 1.0;
  p.sight.kind = SightSpec::Kind::Gaussian;
  p.panic_profile.kind = PanicProfileSpec::Kind::Ramp;
  p.environment.kind = EnvironmentSpec::Kind::Neutral;
  return p;
}

SolverSettings settings_with_horizon(double horizon) {
  SolverSettings s;
  s.step = 0.01;
  s.event_tol = 1e-9;
  s.merge_gap = 1e-9;
  s.horizon = horizon;
  s.max_events = 1000;
  return s;
}

}  // namespace

TEST_CASE("homecoming count is a nondecreasing step function") {
  auto params = drift_params();
  params.kappa = 2;
  // A pair cruising from 0 arrives at 4/1.1;3 singles frozen behind.
  const auto traj = simulate(
      make_herd({{-3.0, 2}, {-8.0, 1}, {-7.0, 1}, {-6.0, 1}}), params,
      settings_with_horizon(10.0));

  CHECK(homecoming_count(traj, 0.0) == 0);
  CHECK(homecoming_count(traj, 10.0) == 2);
  CHECK_THROWS_AS(homecoming_count(traj, -1.0), std::out_of_range);
  CHECK_THROWS_AS(homecoming_count(traj, 11.0), std::out_of_range);

  REQUIRE(traj.arrivals.size() == 1);
  const double t_arr = traj.arrivals[0].time;
  CHECK(homecoming_count(traj, t_arr - 0.01) == 0);
  CHECK(homecoming_count(traj, t_arr) == 2);
  CHECK(homecoming_count(traj, t_arr + 0.01) == 2);  // constant between arrivals

  const auto report = make_report(traj);
  CHECK(report.total_weight == 5);
  CHECK(report.frozen_at_horizon.size() == 3);
  int prev = -1;
  for (const auto& [t, n] : report.count_steps) {
    CHECK(n >= prev);
    CHECK(n <= report.total_weight);
    prev = n;
  }
  const std::string text = report_to_text(report);
  CHECK(text.find("population: 5") != std::string::npos);
  CHECK(text.find("home: 2") != std::string::npos);
}

TEST_CASE("rear-pair guarantee: explicit fixture reaches home by the bound") {
  auto params = drift_params();
  const auto traj =
      simulate(make_herd({{0.0, 2}}), params, settings_with_horizon(45.0));

  const auto cert = check_theorem1(traj, params, 0.0);
  CHECK(cert.applicable);
  CHECK(cert.iota == Approx(0.1));
  CHECK(cert.bound_T == Approx(40.0));
  CHECK(cert.witnessed);
  CHECK(cert.witnessed_T <= cert.bound_T + traj.settings.event_tol);
  CHECK(cert.witnessed_T == Approx(40.0).margin(1e-6));
}

TEST_CASE("rear-pair guarantee requires a rear group of two") {
  auto params = drift_params();
  params.d_hi = 0.5;
  const auto traj = simulate(make_herd({{0.0, 1}, {2.0, 1}}), params,
                             settings_with_horizon(5.0));
  const auto cert = check_theorem1(traj, params, 0.0);
  CHECK(!cert.applicable);  // hindmost group is a singleton
}

TEST_CASE("rear-pair guarantee requires the drift to dominate the waves") {
  auto params = drift_params();
  params.environment.kind = EnvironmentSpec::Kind::Waves;
  params.environment.amplitude = 0.2;  // exceeds epsilon = 0.1
  params.environment.omega = 3.0;
  params.environment.phase = 0.0;
  params.environment.blend = 0.5;
  const auto traj =
      simulate(make_herd({{-1.0, 2}}), params, settings_with_horizon(5.0));
  const auto cert = check_theorem1(traj, params, 0.0);
  CHECK(cert.iota == Approx(-0.1));
  CHECK(!cert.applicable);
}

TEST_CASE("rear-pair guarantee is monotone in the observation time") {
  auto params = drift_params();
  const auto traj =
      simulate(make_herd({{0.0, 2}}), params, settings_with_horizon(45.0));
  for (double t_o : {0.0, 5.0, 10.0, 20.0}) {
    const auto cert = check_theorem1(traj, params, t_o);
    CHECK(cert.applicable);  // the rear weight never decreases
    CHECK(cert.witnessed);
  }
}

TEST_CASE("large-group guarantee: fixture arrives exactly on its bound") {
  auto params = drift_params();
  const auto traj =
      simulate(make_herd({{0.0, 5}}), params, settings_with_horizon(10.0));

  const auto cert = check_theorem2(traj, params, 0.0, 0);
  CHECK(cert.applicable);
  CHECK(cert.iota == Approx(1.1));
  CHECK(cert.bound_T == Approx(3.6363636363636362));
  CHECK(cert.required_weight == 5);
  CHECK(cert.witnessed);
  CHECK(cert.witnessed_T == Approx(3.6363636363636362).margin(1e-6));
}

TEST_CASE("large-group guarantee needs kappa members") {
  auto params = drift_params();
  const auto traj =
      simulate(make_herd({{0.0, 4}}), params, settings_with_horizon(10.0));
  const auto cert = check_theorem2(traj, params, 0.0, 0);
  CHECK(!cert.applicable);
  CHECK_THROWS_AS(check_theorem2(traj, params, 0.0, 3), std::out_of_range);
}

TEST_CASE("large-group guarantee covers the groups ahead") {
  auto params = drift_params();
  // A cruising five collects the frozen singleton ahead; both count.
  const auto traj = simulate(make_herd({{0.0, 5}, {2.0, 1}}), params,
                             settings_with_horizon(10.0));
  const auto cert = check_theorem2(traj, params, 0.0, 0);
  CHECK(cert.applicable);
  CHECK(cert.required_weight == 6);
  CHECK(cert.witnessed);
  CHECK(cert.witnessed_T <= cert.bound_T + traj.settings.event_tol);
  CHECK(homecoming_count(traj, cert.witnessed_T) >= 6);
}

TEST_CASE("oracle integrator reproduces closed forms") {
  SECTION("frozen singleton stays put in both integrators") {
    auto params = drift_params();
    const auto settings = settings_with_horizon(5.0);
    const auto engine = simulate(make_herd({{0.5, 1}}), params, settings);
    const auto oracle =
        oracle_integrate(make_herd({{0.5, 1}}), params, settings, 0.001);
    CHECK(engine.final_state.positions[0] == 0.5);
    CHECK(oracle.final_state.positions[0] == 0.5);
  }
  SECTION("symmetric pair merges at t=1 in both integrators") {
    auto params = drift_params();
    params.epsilon = 0.0;
    params.kappa = 2;
    params.sight.kind = SightSpec::Kind::Constant;
    params.panic_profile.kind = PanicProfileSpec::Kind::AlwaysOne;
    const auto settings = settings_with_horizon(8.0);
    const auto herd = make_herd({{-1.0, 1}, {1.0, 1}});
    const auto engine = simulate(herd, params, settings);
    const auto oracle = oracle_integrate(herd, params, settings, settings.step / 1000.0);

    const auto comparison = compare_trajectories(engine, oracle);
    CHECK(comparison.same_events);
    CHECK(comparison.max_event_time_diff <= 1e-3);
    CHECK(comparison.sup_position_diff <= 1e-4);

    REQUIRE(!oracle.events.empty());
    CHECK(std::abs(oracle.events[0].time - 1.0) <= 1e-3);
    REQUIRE(oracle.arrivals.size() == 1);
    CHECK(std::abs(oracle.arrivals[0].time - 5.0) <= 1e-3);
  }
  SECTION("constant-speed arrival time matches the engine") {
    auto params = drift_params();
    const auto settings = settings_with_horizon(5.0);
    const auto herd = make_herd({{0.0, 5}});
    const auto engine = simulate(herd, params, settings);
    const auto oracle = oracle_integrate(herd, params, settings, settings.step / 1000.0);
    REQUIRE(engine.arrivals.size() == 1);
    REQUIRE(oracle.arrivals.size() == 1);
    CHECK(std::abs(engine.arrivals[0].time - oracle.arrivals[0].time) <= 1e-3);
  }
}

TEST_CASE("oracle guards against oversized instances") {
  auto params = drift_params();
  const auto settings = settings_with_horizon(1.0);
  CHECK_THROWS_AS(
      oracle_integrate(
          make_herd({{0.0, 1}, {1.0, 1}, {2.0, 1}, {2.5, 1}, {3.0, 1}, {3.5, 1}}),
          params, settings, 0.001),
      invalid_model);
  CHECK_THROWS_AS(oracle_integrate(make_herd({{0.0, 9}}), params, settings, 0.001),
                  invalid_model);
}

TEST_CASE("certificates render as structured text") {
  auto params = drift_params();
  const auto traj =
      simulate(make_herd({{0.0, 5}}), params, settings_with_horizon(10.0));
  const auto cert = check_theorem2(traj, params, 0.0, 0);
  const std::string text = certificate_to_text(cert);
  CHECK(text.find("theorem=2") != std::string::npos);
  CHECK(text.find("applicable: yes") != std::string::npos);
  CHECK(text.find("witnessed: yes") != std::string::npos);
  CHECK(text.find("closed-form") != std::string::npos);
}
