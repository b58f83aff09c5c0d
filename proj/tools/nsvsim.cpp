/// @file nsvsim.cpp
/// @brief Command line driver: single runs, refinement sweeps, stability
///        pairs, and CSV export of stored diagnostics.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "nsv/harness.hpp"

namespace {

nsv::SimConfig load_with_overrides(const std::string& config_path,
                                   const std::string& out_dir, int seed) {
  nsv::SimConfig cfg = nsv::load_config(config_path);
  if (!out_dir.empty()) cfg.directory = out_dir;
  if (seed >= 0) cfg.seed = static_cast<unsigned>(seed);
  return cfg;
}

int do_run(const nsv::SimConfig& cfg) {
  nsv::RunOutcome out = nsv::run_experiment(cfg);
  std::printf("status=%s\n", out.ok ? "ok" : "failed");
  std::printf("config=%s\n", out.hash.c_str());
  std::printf("ledger=%s\n", out.ledger_path.c_str());
  std::printf("summary=%s\n", out.summary_path.c_str());
  if (!out.ok) {
    std::fprintf(stderr, "run failed at t=%.17g: %s\n", out.fail_time,
                 out.message.c_str());
    return 1;
  }
  if (out.have_report) {
    std::printf("k1=%.17g k2=%.17g k3=%.17g k4=%.17g\n", out.report.k1,
                out.report.k2, out.report.k3, out.report.k4);
    std::printf("energy_initial=%.17g energy_final=%.17g\n",
                out.report.energy_initial, out.report.energy_final);
  }
  return 0;
}

int do_sweep(const nsv::SimConfig& cfg, int workers) {
  if (cfg.j_list.empty() || cfg.n_list.empty())
    throw nsv::config_error(
        "sweep: the configuration must provide sweep.j_list and "
        "sweep.n_list");
  nsv::SweepOutcome out =
      nsv::run_sweep(cfg, cfg.j_list, cfg.n_list, workers);
  for (const nsv::CellOutcome& c : out.cells)
    std::printf("cell j=%d n=%d status=%s\n", c.j, c.n,
                c.run.ok ? "ok" : "failed");
  if (out.have_boundedness)
    for (const nsv::SweepCheck& chk : out.boundedness.checks)
      std::printf("check %s spread_j=%.6g spread_n=%.6g growth_j=%.6g %s\n",
                  chk.name.c_str(), chk.spread_j, chk.spread_n, chk.growth_j,
                  chk.pass ? "pass" : "FAIL");
  std::printf("matrix=%s\n", out.matrix_path.c_str());
  std::printf("status=%s\n", out.pass ? "ok" : "failed");
  return out.pass ? 0 : 1;
}

int do_stability(const nsv::SimConfig& cfg, int workers) {
  nsv::StabilityOutcome out =
      nsv::run_stability(cfg, cfg.epsilons, workers);
  for (const nsv::EpsilonOutcome& p : out.pairs) {
    std::printf("pair epsilon=%.6g %s", p.epsilon,
                p.pass ? "pass" : "FAIL");
    if (!p.ok) std::printf(" error=%s", p.message.c_str());
    std::printf("\n");
  }
  std::printf("scale_gap=%.6g %s\n", out.scale_gap,
              out.scale_pass ? "pass" : "FAIL");
  std::printf("status=%s\n", out.pass ? "ok" : "failed");
  return out.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral simulator for density-coupled viscoelastic flow"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  int workers = 1;
  int seed = -1;

  CLI::App* cmd_run = app.add_subcommand("run", "Execute one configured run");
  CLI::App* cmd_sweep =
      app.add_subcommand("sweep", "Run the (modes, mollification) product");
  CLI::App* cmd_stab =
      app.add_subcommand("stability", "Run perturbation pairs and the "
                         "difference-energy bound");
  CLI::App* cmd_export =
      app.add_subcommand("export-plots", "Convert stored ledgers to CSV");

  for (CLI::App* cmd : {cmd_run, cmd_sweep, cmd_stab}) {
    cmd->add_option("--config", config_path, "Configuration file")
        ->required();
    cmd->add_option("--out", out_dir, "Output directory override");
    cmd->add_option("--workers", workers, "Concurrent worker count");
    cmd->add_option("--seed", seed, "Seed override for seeded presets");
  }
  cmd_export->add_option("--out", out_dir, "Directory holding ledgers")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_run->parsed())
      return do_run(load_with_overrides(config_path, out_dir, seed));
    if (cmd_sweep->parsed())
      return do_sweep(load_with_overrides(config_path, out_dir, seed),
                      workers);
    if (cmd_stab->parsed())
      return do_stability(load_with_overrides(config_path, out_dir, seed),
                          workers);
    const int count = nsv::export_plots(out_dir);
    std::printf("exported=%d\n", count);
    if (count == 0) {
      std::fprintf(stderr, "no ledgers found under '%s'\n", out_dir.c_str());
      return 1;
    }
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
