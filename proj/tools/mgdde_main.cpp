#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mgdde/comm_sim.hpp"
#include "mgdde/csv_io.hpp"
#include "mgdde/equilibrium.hpp"
#include "mgdde/errors.hpp"
#include "mgdde/scenario.hpp"
#include "mgdde/spectrum.hpp"
#include "mgdde/time_domain.hpp"

namespace {

using namespace mgdde;

std::string default_out_dir() {
  const char* env = std::getenv("MGDDE_OUT");
  return env != nullptr && *env != '\0' ? env : ".";
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir + ": " + ec.message());
}

struct Common {
  std::string config_path;
  std::string out_dir = default_out_dir();
  bool plots = false;
};

void add_common(CLI::App* cmd, Common& common, bool config_required = true) {
  auto* opt = cmd->add_option("config", common.config_path, "scenario JSON file");
  if (config_required) opt->required();
  cmd->add_option("--out", common.out_dir, "output directory (default: $MGDDE_OUT or .)");
  cmd->add_flag("--plots", common.plots, "also emit matplotlib scripts");
}

SystemFactory make_factory(const ScenarioConfig& cfg, const std::string& param) {
  if (param == "delay") {
    const auto eq =
        solve_equilibrium(cfg.network, LoadFlowMode::SecondaryRestored, &cfg.graph,
                          NewtonOptions{50, cfg.tolerances.newton});
    return [cfg, eq](double value) {
      return build_dde_system(cfg.network, eq, cfg.graph, value, cfg.consensus_variant,
                              cfg.diffusion_constant);
    };
  }
  if (param == "kpr" || param == "kp") {
    return [cfg, param](double value) {
      NetworkSpec spec = cfg.network;
      for (auto& inv : spec.inverters) {
        (param == "kpr" ? inv.k_pr : inv.k_p) = value;
      }
      const auto eq = solve_equilibrium(spec, LoadFlowMode::SecondaryRestored, &cfg.graph,
                                        NewtonOptions{50, cfg.tolerances.newton});
      return build_dde_system(spec, eq, cfg.graph, cfg.delay, cfg.consensus_variant,
                              cfg.diffusion_constant);
    };
  }
  throw ConfigError("unknown sweep parameter '" + param + "' (expected delay, kpr or kp)");
}

int run(int argc, char** argv) {
  CLI::App app{"Droop microgrid delay-differential small-signal toolkit"};
  app.require_subcommand(1);

  // equilibrium
  Common eq_common;
  std::string eq_mode = "secondary";
  auto* cmd_eq = app.add_subcommand("equilibrium", "solve the droop load flow");
  add_common(cmd_eq, eq_common);
  cmd_eq->add_option("--mode", eq_mode, "primary | secondary (default secondary)");

  // assemble
  Common as_common;
  std::optional<double> as_td;
  auto* cmd_as = app.add_subcommand("assemble", "write the DDE matrices A, A_d");
  add_common(cmd_as, as_common);
  cmd_as->add_option("--td", as_td, "delay in seconds (default: config)");

  // spectrum
  Common sp_common;
  std::optional<double> sp_td;
  std::optional<int> sp_order;
  std::string sp_load_dir;
  bool sp_refine = false;
  auto* cmd_sp = app.add_subcommand("spectrum", "DDE spectrum by Chebyshev collocation");
  add_common(cmd_sp, sp_common, false);
  cmd_sp->add_option("--td", sp_td, "delay in seconds (default: config)");
  cmd_sp->add_option("--order", sp_order, "collocation order N (default: config)");
  cmd_sp->add_option("--load-matrices", sp_load_dir,
                     "read A.csv/A_d.csv/system.json from this directory instead of assembling");
  cmd_sp->add_flag("--refine", sp_refine, "Newton-refine retained roots");

  // rootlocus
  Common rl_common;
  std::string rl_param = "delay";
  double rl_from = 0.0, rl_to = 0.2;
  int rl_steps = 21;
  std::optional<int> rl_order;
  auto* cmd_rl = app.add_subcommand("rootlocus", "sweep delay or a gain and track the spectrum");
  add_common(cmd_rl, rl_common);
  cmd_rl->add_option("--param", rl_param, "delay | kpr | kp")->required();
  cmd_rl->add_option("--from", rl_from, "first sweep value")->required();
  cmd_rl->add_option("--to", rl_to, "last sweep value")->required();
  cmd_rl->add_option("--steps", rl_steps, "number of sweep points")->required();
  cmd_rl->add_option("--order", rl_order, "collocation order N (default: config)");

  // simulate
  Common si_common;
  std::string si_engine = "dde";
  std::optional<double> si_td;
  std::optional<double> si_step;
  auto* cmd_si = app.add_subcommand("simulate", "load-step transient (linear DDE or nonlinear)");
  add_common(cmd_si, si_common);
  cmd_si->add_option("--engine", si_engine, "dde | nonlinear (default dde)");
  cmd_si->add_option("--td", si_td, "delay in seconds (default: config)");
  cmd_si->add_option("--step", si_step, "nonlinear fixed step (default: config)");

  // commsim
  Common cs_common;
  double cs_fs = 50.0, cs_loss = 0.0;
  std::uint64_t cs_seed = 0;
  std::optional<double> cs_td;
  auto* cmd_cs = app.add_subcommand("commsim", "sampled lossy-communication simulation");
  add_common(cmd_cs, cs_common);
  cmd_cs->add_option("--fs", cs_fs, "secondary sampling rate in Hz")->required();
  cmd_cs->add_option("--loss", cs_loss, "packet loss probability per link")->required();
  cmd_cs->add_option("--seed", cs_seed, "RNG seed")->required();
  cmd_cs->add_option("--td", cs_td, "delay in seconds (default: config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (cmd_eq->parsed()) {
    const auto cfg = parse_config(eq_common.config_path);
    ensure_dir(eq_common.out_dir);
    LoadFlowMode mode;
    if (eq_mode == "secondary") {
      mode = LoadFlowMode::SecondaryRestored;
    } else if (eq_mode == "primary") {
      mode = LoadFlowMode::PrimaryOnly;
    } else {
      throw ConfigError("--mode must be primary or secondary");
    }
    const auto eq = solve_equilibrium(cfg.network, mode, &cfg.graph,
                                      NewtonOptions{50, cfg.tolerances.newton});
    write_equilibrium_csv(eq_common.out_dir + "/equilibrium.csv", eq);
    std::cout << "omega = " << eq.omega << " rad/s\n";
    for (int i = 0; i < eq.size(); ++i) {
      std::cout << "inverter " << (i + 1) << ": P = " << eq.p(i) << " W, Q = " << eq.q(i)
                << " var, |E| = " << eq.e_mag(i) << " V, delta = " << eq.delta(i) << " rad\n";
    }
    std::cout << "wrote " << eq_common.out_dir << "/equilibrium.csv\n";
    return 0;
  }

  if (cmd_as->parsed()) {
    const auto cfg = parse_config(as_common.config_path);
    ensure_dir(as_common.out_dir);
    const auto eq = solve_equilibrium(cfg.network, LoadFlowMode::SecondaryRestored, &cfg.graph,
                                      NewtonOptions{50, cfg.tolerances.newton});
    const auto sys = build_dde_system(cfg.network, eq, cfg.graph, as_td.value_or(cfg.delay),
                                      cfg.consensus_variant, cfg.diffusion_constant);
    write_dde_system(as_common.out_dir, sys);
    std::cout << "wrote " << as_common.out_dir << "/A.csv, A_d.csv, system.json (dimension "
              << sys.dimension() << ", t_d = " << sys.delay << " s)\n";
    return 0;
  }

  if (cmd_sp->parsed()) {
    DdeSystem sys;
    SpectrumOptions opts;
    opts.refine = sp_refine;
    if (!sp_load_dir.empty()) {
      sys = read_dde_system(sp_load_dir);
      if (sp_td) sys.delay = *sp_td;
      if (sp_order) opts.order = *sp_order;
    } else {
      if (sp_common.config_path.empty()) {
        throw ConfigError("spectrum: give a config file or --load-matrices");
      }
      const auto cfg = parse_config(sp_common.config_path);
      const auto eq = solve_equilibrium(cfg.network, LoadFlowMode::SecondaryRestored, &cfg.graph,
                                        NewtonOptions{50, cfg.tolerances.newton});
      sys = build_dde_system(cfg.network, eq, cfg.graph, sp_td.value_or(cfg.delay),
                             cfg.consensus_variant, cfg.diffusion_constant);
      opts.order = sp_order.value_or(cfg.spectral_order);
    }
    ensure_dir(sp_common.out_dir);
    const auto result = dde_spectrum(sys, opts);
    write_spectrum_csv(sp_common.out_dir + "/spectrum.csv", result);
    if (sp_common.plots) {
      emit_spectrum_plot_script(sp_common.out_dir + "/plot_spectrum.py", "spectrum.csv");
    }
    if (result.rightmost) {
      std::cout << "rightmost non-origin eigenvalue: " << result.rightmost->real() << " + "
                << result.rightmost->imag() << "i\n";
    }
    if (result.origin_mode_magnitude) {
      std::cout << "origin mode magnitude: " << *result.origin_mode_magnitude << "\n";
    }
    std::cout << "wrote " << sp_common.out_dir << "/spectrum.csv\n";
    return 0;
  }

  if (cmd_rl->parsed()) {
    const auto cfg = parse_config(rl_common.config_path);
    if (rl_steps < 1) throw ConfigError("rootlocus: --steps must be >= 1");
    ensure_dir(rl_common.out_dir);
    std::vector<double> values(rl_steps);
    for (int k = 0; k < rl_steps; ++k) {
      values[k] = rl_steps == 1
                      ? rl_from
                      : rl_from + (rl_to - rl_from) * static_cast<double>(k) / (rl_steps - 1);
    }
    SpectrumOptions opts;
    opts.order = rl_order.value_or(cfg.spectral_order);
    const auto locus = root_locus(make_factory(cfg, rl_param), values, opts);
    write_root_locus_csv(rl_common.out_dir + "/rootlocus.csv", locus);
    if (rl_common.plots) {
      emit_root_locus_plot_script(rl_common.out_dir + "/plot_rootlocus.py", "rootlocus.csv");
    }
    std::cout << "wrote " << rl_common.out_dir << "/rootlocus.csv (" << values.size()
              << " sweep points)\n";
    return 0;
  }

  if (cmd_si->parsed()) {
    const auto cfg = parse_config(si_common.config_path);
    ensure_dir(si_common.out_dir);
    const double td = si_td.value_or(cfg.delay);
    Trajectory traj;
    if (si_engine == "dde") {
      IntegratorOptions opts;
      opts.rel_tol = cfg.tolerances.dde_rel;
      opts.abs_tol = cfg.tolerances.dde_abs;
      traj = simulate_linear(cfg.network, cfg.graph, cfg.load_step(), td, opts,
                             cfg.consensus_variant, cfg.diffusion_constant);
    } else if (si_engine == "nonlinear") {
      NonlinearOptions opts;
      opts.step = si_step.value_or(cfg.tolerances.nonlinear_step);
      opts.newton.tolerance = cfg.tolerances.newton;
      traj = simulate_nonlinear(cfg.network, cfg.graph, cfg.load_step(), td, opts,
                                cfg.consensus_variant, cfg.diffusion_constant);
    } else {
      throw ConfigError("--engine must be dde or nonlinear");
    }
    write_trajectory_csv(si_common.out_dir + "/trajectory.csv", traj);
    if (si_common.plots) {
      emit_trajectory_plot_script(si_common.out_dir + "/plot_trajectory.py", "trajectory.csv",
                                  traj.inverter_count);
    }
    std::cout << "wrote " << si_common.out_dir << "/trajectory.csv (" << traj.samples()
              << " samples, engine " << traj.engine << ")\n";
    return 0;
  }

  if (cmd_cs->parsed()) {
    const auto cfg = parse_config(cs_common.config_path);
    ensure_dir(cs_common.out_dir);
    CommConfig comm;
    comm.sample_rate = cs_fs;
    comm.loss_probability = cs_loss;
    comm.seed = cs_seed;
    comm.delay = cs_td.value_or(cfg.delay);
    NonlinearOptions opts;
    opts.step = cfg.tolerances.nonlinear_step;
    opts.newton.tolerance = cfg.tolerances.newton;
    const auto result = simulate_sampled(cfg.network, cfg.graph, cfg.load_step(), comm, opts,
                                         cfg.consensus_variant, cfg.diffusion_constant);
    write_trajectory_csv(cs_common.out_dir + "/trajectory.csv", result.trajectory);
    write_packet_log_csv(cs_common.out_dir + "/packets.csv", result.packets);
    if (cs_common.plots) {
      emit_trajectory_plot_script(cs_common.out_dir + "/plot_trajectory.py", "trajectory.csv",
                                  result.trajectory.inverter_count);
    }
    std::size_t lost = 0;
    for (const auto& p : result.packets) lost += p.delivered ? 0 : 1;
    std::cout << "wrote " << cs_common.out_dir << "/trajectory.csv and packets.csv (" << lost
              << " of " << result.packets.size() << " packets lost)\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
