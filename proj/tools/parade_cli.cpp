// Command-line front end: run scenario documents or builtins, export
// trajectories (CSV), events and homecoming reports (text), figures (SVG),
// theorem certificates, and seeded sweeps.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "parade/csv.hpp"
#include "parade/scenario.hpp"
#include "parade/svg.hpp"
#include "parade/verify.hpp"

namespace {

// Exit codes, also documented in --help.
constexpr int kOk = 0;
constexpr int kUsageError = 1;
constexpr int kMissingFile = 2;
constexpr int kInvalidScenario = 3;
constexpr int kEngineFailure = 4;
constexpr int kWriteFailure = 5;

struct CliError {
  int code;
  std::string message;
};

parade::ScenarioConfig load_scenario(const std::string& file, const std::string& builtin) {
  if (!builtin.empty()) {
    try {
      return parade::builtin_scenario(builtin);
    } catch (const parade::scenario_error& e) {
      throw CliError{kInvalidScenario, e.what()};
    }
  }
  std::ifstream in(file);
  if (!in) throw CliError{kMissingFile, "cannot open scenario file: " + file};
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parade::parse_scenario(buffer.str());
  } catch (const parade::scenario_error& e) {
    throw CliError{kInvalidScenario, std::string(e.what()) + " (in " + file + ")"};
  }
}

std::filesystem::path resolve_outdir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("PARADE_OUT"); env && *env) return env;
  return ".";
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CliError{kWriteFailure, "cannot write " + path.string()};
  out << content;
  if (!out) throw CliError{kWriteFailure, "failed while writing " + path.string()};
}

parade::Trajectory run(const parade::ScenarioConfig& config) {
  try {
    return parade::run_scenario(config);
  } catch (const parade::scenario_error& e) {
    throw CliError{kInvalidScenario, e.what()};
  } catch (const parade::invalid_model& e) {
    throw CliError{kInvalidScenario, e.what()};
  } catch (const parade::engine_error& e) {
    throw CliError{kEngineFailure, e.what()};
  }
}

int do_simulate(const parade::ScenarioConfig& config, const std::filesystem::path& outdir) {
  const auto traj = run(config);

  std::error_code ec;
  std::filesystem::create_directories(outdir, ec);
  if (ec) throw CliError{kWriteFailure, "cannot create " + outdir.string()};

  parade::PlotStyle style;
  style.home = config.params.home;
  style.shoreline = config.params.environment.shoreline;

  write_file(outdir / "trajectory.csv", parade::export_csv(traj));
  write_file(outdir / "events.txt", parade::export_events_text(traj));
  write_file(outdir / "report.txt", parade::report_to_text(parade::make_report(traj)));
  write_file(outdir / "plot.svg", parade::render_svg(traj, style));

  const int home = traj.arrived_weight_at(traj.t_end());
  std::cout << config.name << ": " << home << "/" << traj.total_weight
            << " home, " << traj.events.size() << " events, outputs in "
            << outdir.string() << "\n";
  return kOk;
}

int do_verify(const parade::ScenarioConfig& config, const std::filesystem::path& outdir) {
  const auto traj = run(config);

  std::string text;
  const auto t1 = parade::check_theorem1(traj, config.params, traj.t_begin());
  text += parade::certificate_to_text(t1);

  // Certificates for every group already large enough at the start.
  const auto& first = traj.segments.front();
  for (std::size_t j = 0; j < first.weights.size(); ++j) {
    if (first.weights[j] >= config.params.kappa) {
      text += "\n";
      text += parade::certificate_to_text(
          parade::check_theorem2(traj, config.params, traj.t_begin(), j));
    }
  }

  // And one for the first merge that builds a group of size kappa.
  for (const auto& ev : traj.events) {
    if (ev.kind != parade::Event::Kind::Merge || ev.time >= traj.t_end()) continue;
    const auto& seg = traj.segment_at(ev.time);
    bool emitted = false;
    for (std::size_t j = 0; j < seg.ids.size(); ++j) {
      if (seg.ids[j] == ev.result && seg.weights[j] >= config.params.kappa) {
        text += "\n";
        text += parade::certificate_to_text(
            parade::check_theorem2(traj, config.params, ev.time, j));
        emitted = true;
        break;
      }
    }
    if (emitted) break;
  }

  std::error_code ec;
  std::filesystem::create_directories(outdir, ec);
  if (ec) throw CliError{kWriteFailure, "cannot create " + outdir.string()};
  write_file(outdir / "certificates.txt", text);

  std::cout << config.name << ": theorem 1 "
            << (t1.applicable ? (t1.witnessed ? "witnessed" : "NOT witnessed")
                              : "not applicable")
            << ", certificates in " << (outdir / "certificates.txt").string() << "\n";
  return kOk;
}

int do_sweep(const parade::ScenarioConfig& config, const std::string& seed_range,
             const std::filesystem::path& outdir) {
  std::uint64_t seed_lo = 0, seed_hi = 0;
  const auto sep = seed_range.find("..");
  try {
    if (sep == std::string::npos) throw std::invalid_argument("no ..");
    seed_lo = std::stoull(seed_range.substr(0, sep));
    seed_hi = std::stoull(seed_range.substr(sep + 2));
  } catch (const std::exception&) {
    throw CliError{kUsageError, "--seeds expects a range like 0..19"};
  }
  if (seed_hi < seed_lo) throw CliError{kUsageError, "--seeds range is empty"};

  std::ostringstream summary;
  summary << "sweep of " << config.name << " seeds " << seed_lo << ".." << seed_hi << "\n";
  summary << "seed home population events still_out\n";

  int min_home = -1, max_home = -1;
  double mean_home = 0.0;
  for (std::uint64_t seed = seed_lo; seed <= seed_hi; ++seed) {
    parade::ScenarioConfig variant = config;
    variant.seed = seed;
    const auto traj = run(variant);
    const int home = traj.arrived_weight_at(traj.t_end());
    summary << seed << " " << home << " " << traj.total_weight << " "
            << traj.events.size() << " " << traj.final_state.size() << "\n";
    min_home = min_home < 0 ? home : std::min(min_home, home);
    max_home = std::max(max_home, home);
    mean_home += home;
  }
  const auto runs = seed_hi - seed_lo + 1;
  mean_home /= static_cast<double>(runs);
  summary << "aggregate runs=" << runs << " min=" << min_home << " mean=" << mean_home
          << " max=" << max_home << "\n";

  std::error_code ec;
  std::filesystem::create_directories(outdir, ec);
  if (ec) throw CliError{kWriteFailure, "cannot create " + outdir.string()};
  write_file(outdir / "sweep.txt", summary.str());
  std::cout << "sweep: " << runs << " runs, home min=" << min_home
            << " mean=" << mean_home << " max=" << max_home << ", summary in "
            << (outdir / "sweep.txt").string() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"penguin parade simulator"};
  app.require_subcommand(1);
  app.footer(
      "Exit codes:\n"
      "  0  success\n"
      "  1  usage error\n"
      "  2  scenario file missing or unreadable\n"
      "  3  malformed or invalid scenario\n"
      "  4  engine diagnostic (event budget or localization failure)\n"
      "  5  cannot write outputs\n"
      "\n"
      "The default output directory is $PARADE_OUT, falling back to '.'");

  std::string file, builtin, outdir, seeds;

  auto add_source = [&](CLI::App* cmd) {
    cmd->add_option("scenario", file, "scenario document (JSON)");
    cmd->add_option("--builtin", builtin, "builtin scenario name (see list-builtins)");
    cmd->add_option("--out", outdir, "output directory");
  };

  auto* simulate_cmd = app.add_subcommand(
      "simulate", "run a scenario; writes trajectory.csv, events.txt, report.txt, plot.svg");
  add_source(simulate_cmd);
  auto* verify_cmd =
      app.add_subcommand("verify", "run a scenario and write homecoming certificates");
  add_source(verify_cmd);
  auto* sweep_cmd = app.add_subcommand(
      "sweep", "run seeded random variants of a scenario and write a summary");
  add_source(sweep_cmd);
  sweep_cmd->add_option("--seeds", seeds, "inclusive seed range, e.g. 0..19")->required();
  app.add_subcommand("list-builtins", "print the builtin scenario names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (app.got_subcommand("list-builtins")) {
      for (const auto& config : parade::builtin_scenarios()) std::cout << config.name << "\n";
      return kOk;
    }

    if (file.empty() == builtin.empty())
      throw CliError{kUsageError, "provide exactly one of <scenario> or --builtin"};
    const auto config = load_scenario(file, builtin);
    const auto out = resolve_outdir(outdir);

    if (app.got_subcommand("simulate")) return do_simulate(config, out);
    if (app.got_subcommand("verify")) return do_verify(config, out);
    if (app.got_subcommand("sweep")) return do_sweep(config, seeds, out);
    throw CliError{kUsageError, "unknown subcommand"};
  } catch (const CliError& e) {
    std::cerr << "error: " << e.message << "\n";
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kEngineFailure;
  }
}
