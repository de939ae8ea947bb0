// ubvm: run, replay and report simulated bladder-volume sessions.
//
// Exit codes: 0 success, 1 pipeline error, 2 usage error, 3 a sweep failed
// under --strict.

#include <cmath>
#include <iostream>
#include <limits>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ubvm/error.hpp"
#include "ubvm/harness.hpp"

namespace {

constexpr int kExitPipeline = 1;
constexpr int kExitStrict = 3;

struct SimArgs {
  std::string scenario;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> snr_db;
  bool noiseless = false;
  std::string out;
  std::string trace_dir;
  bool strict = false;
};

int run_sim(const SimArgs& a) {
  ubvm::Scenario s = a.config.empty() ? ubvm::builtin_scenario(a.scenario) : ubvm::load_scenario(a.config);
  if (a.seed) s.seed = *a.seed;
  if (a.snr_db) s.noise_snr_db = *a.snr_db;
  if (a.noiseless) s.noise_snr_db.reset();

  ubvm::RunOptions opts;
  if (!a.trace_dir.empty()) opts.trace_dir = a.trace_dir;
  const ubvm::SessionLog log = ubvm::run_scenario(s, opts);
  if (!a.out.empty()) ubvm::save_session(log, a.out);

  ubvm::write_report_table(std::cout, ubvm::make_report(log), s.name);

  bool failed = false;
  for (const auto& rec : log.samples) {
    if (rec.result.outcome == ubvm::Outcome::error || rec.result.outcome == ubvm::Outcome::no_sweep) {
      std::cerr << "t=" << rec.time_min << " min: " << rec.result.error_kind << ": " << rec.result.message
                << '\n';
      failed = true;
    }
  }
  return (failed && a.strict) ? kExitStrict : 0;
}

int run_replay(const std::string& in) {
  const ubvm::LoadedSession loaded = ubvm::load_session(in);
  const ubvm::ReplayResult res = ubvm::replay(loaded);
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
  ubvm::SessionLog view = loaded.log;
  view.samples = res.samples;
  ubvm::write_report_table(std::cout, ubvm::make_report(view), view.scenario.name);
  std::cout << "replay: " << res.samples.size() << " sample(s) match stored estimates\n";
  return 0;
}

int run_report(const std::string& in, const std::string& out_dir) {
  const ubvm::LoadedSession loaded = ubvm::load_session(in);
  const ubvm::Report rep = ubvm::report(loaded.log, out_dir);
  ubvm::write_report_table(std::cout, rep, loaded.log.scenario.name);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ultrasonic bladder-volume monitor simulator"};
  app.require_subcommand(1);

  SimArgs sim;
  auto* sim_cmd = app.add_subcommand("sim", "Run a scenario and optionally save the session");
  auto* name_opt = sim_cmd->add_option("--scenario", sim.scenario, "Built-in scenario name");
  auto* cfg_opt = sim_cmd->add_option("--config", sim.config, "Scenario YAML file")->check(CLI::ExistingFile);
  name_opt->excludes(cfg_opt);
  sim_cmd->add_option("--seed", sim.seed, "Override the scenario seed");
  auto* snr_opt = sim_cmd->add_option("--snr-db", sim.snr_db, "Override the noise SNR in dB");
  sim_cmd->add_flag("--noiseless", sim.noiseless, "Disable noise")->excludes(snr_opt);
  sim_cmd->add_option("--out", sim.out, "Session output directory");
  sim_cmd->add_option("--trace-dir", sim.trace_dir, "Dump raw echo traces here");
  sim_cmd->add_flag("--strict", sim.strict, "Exit 3 if any sweep produced an error");

  std::string replay_in;
  auto* replay_cmd = app.add_subcommand("replay", "Re-run the estimator over a saved session");
  replay_cmd->add_option("--in", replay_in, "Session directory")->required()->check(CLI::ExistingDirectory);

  std::string report_in, report_out;
  auto* report_cmd = app.add_subcommand("report", "Write the summary table and plot data");
  report_cmd->add_option("--in", report_in, "Session directory")->required()->check(CLI::ExistingDirectory);
  report_cmd->add_option("--out-dir", report_out, "Output directory")->required();

  auto* list_cmd = app.add_subcommand("list-scenarios", "Print the built-in scenario names");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim_cmd->parsed()) {
      if (sim.scenario.empty() && sim.config.empty()) {
        std::cerr << "sim: one of --scenario or --config is required\n";
        return static_cast<int>(CLI::ExitCodes::RequiredError);
      }
      return run_sim(sim);
    }
    if (replay_cmd->parsed()) return run_replay(replay_in);
    if (report_cmd->parsed()) return run_report(report_in, report_out);
    if (list_cmd->parsed()) {
      for (const auto& n : ubvm::builtin_scenario_names()) std::cout << n << '\n';
      return 0;
    }
  } catch (const ubvm::Error& e) {
    std::cerr << "error [" << ubvm::to_string(e.kind()) << "]: " << e.what() << '\n';
    return kExitPipeline;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitPipeline;
  }
  return 0;
}
