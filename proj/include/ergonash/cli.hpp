#pragma once

// Subcommand driver: every solver pipeline behind one configuration-driven
// binary. Artifacts are pure functions of (config, seed); the manifest holds
// the wall time and hash so a run can be audited and reproduced. Exit codes:
// 0 success, 2 configuration or validation error, 3 solver non-convergence
// (artifacts are still written so the trace can be inspected).

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ergonash/config.hpp"
#include "ergonash/core.hpp"
#include "ergonash/game.hpp"
#include "ergonash/io.hpp"
#include "ergonash/mather_lp.hpp"
#include "ergonash/meanfield.hpp"
#include "ergonash/weakkam.hpp"

namespace ergonash {

namespace detail {

inline std::string fnv1a_hex(const std::string& text) {
   std::uint64_t h = 1469598103934665603ull;
   for (unsigned char c : text) {
      h ^= c;
      h *= 1099511628211ull;
   }
   char buf[17];
   std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
   return buf;
}

struct RunContext {
   ExperimentConfig cfg;
   std::string subcommand;
   std::filesystem::path outdir;
   std::vector<std::string> artifacts;

   void emit(const std::string& name, const json& j) {
      write_json((outdir / name).string(), j);
      artifacts.push_back(name);
   }
   void note_artifact(const std::string& name) { artifacts.push_back(name); }
   std::string path(const std::string& name) const { return (outdir / name).string(); }
};

// potential W for the measure-free subcommands (weakkam, mather): only the
// coupling kinds that are functions of x alone qualify
template <int D>
GridFunction<D> standalone_potential(const ExperimentConfig& cfg, const TorusGrid<D>& xg) {
   const CouplingSpec& c = cfg.coupling;
   if (c.kind != CouplingKind::zero && c.kind != CouplingKind::separable)
      throw ConfigError("game.coupling.kind: this subcommand needs a measure-free potential; "
                        "use the zero or separable kinds");
   return GridFunction<D>::from_function(xg, [&](const Vec<D>& x) {
      return c.kind == CouplingKind::zero ? c.offset : c.offset + coupling_separable<D>(c, x);
   });
}

template <int D>
SymmetricOptions symmetric_options(const ExperimentConfig& cfg) {
   SymmetricOptions opt;
   opt.damping = cfg.damping;
   opt.tol = cfg.tol;
   opt.max_iterations = cfg.max_iterations;
   opt.mc_samples = cfg.mc_samples;
   opt.seed = cfg.seed;
   opt.mather.detect_multiplicity = cfg.detect_multiplicity;
   if (!cfg.schedule.empty()) opt.discount_schedule = cfg.schedule;
   opt.discounted.tol = cfg.discount_tol;
   opt.discounted.threads = cfg.threads;
   return opt;
}

template <int D>
int run_subcommand(RunContext& ctx) {
   const ExperimentConfig& cfg = ctx.cfg;
   TorusGrid<D> xg(cfg.n);
   VelocityGrid<D> vg(cfg.R, cfg.m);
   GameSpec<D> game =
       GameSpec<D>::symmetric_game(cfg.players, cfg.lagrangian, cfg.coupling, xg, vg);
   int status = 0;

   if (ctx.subcommand == "weakkam") {
      GridFunction<D> W = standalone_potential<D>(cfg, xg);
      DiscountedOptions dopt;
      dopt.tol = cfg.discount_tol;
      dopt.threads = cfg.threads;
      std::vector<double> schedule =
          cfg.schedule.empty() ? default_discount_schedule() : cfg.schedule;
      WeakKamSolution<D> sol = ergodic_constant<D>(cfg.lagrangian, vg, W, schedule, dopt);
      ctx.emit("weakkam.json", to_json<D>(sol));
   } else if (ctx.subcommand == "mather") {
      GridFunction<D> W = standalone_potential<D>(cfg, xg);
      MatherOptions mopt;
      mopt.detect_multiplicity = cfg.detect_multiplicity;
      MatherResult<D> res = solve_mather<D>(cfg.lagrangian, W, vg, mopt);
      ctx.emit("mather.json", to_json<D>(res));
   } else if (ctx.subcommand == "nash") {
      NashOptions opt;
      opt.damping = cfg.damping;
      opt.tol = cfg.tol;
      opt.max_iterations = cfg.max_iterations;
      opt.mather.detect_multiplicity = cfg.detect_multiplicity;
      if (!cfg.schedule.empty()) opt.discount_schedule = cfg.schedule;
      opt.discounted.tol = cfg.discount_tol;
      opt.discounted.threads = cfg.threads;
      NashResult<D> res = solve_nash_mixed<D>(game, opt);
      ctx.emit("nash.json", to_json<D>(res));
      write_trace_csv(ctx.path("nash_trace.csv"), res.gap_trace, res.movement_trace);
      ctx.note_artifact("nash_trace.csv");
      if (!res.converged) status = 3;
   } else if (ctx.subcommand == "pure") {
      std::vector<Vec<D>> starts;
      for (const auto& s : cfg.starts) {
         Vec<D> x{};
         for (int k = 0; k < D; ++k) x[k] = s[static_cast<std::size_t>(k)];
         starts.push_back(x);
      }
      DiscountedOptions dopt;
      dopt.tol = cfg.discount_tol;
      dopt.threads = cfg.threads;
      PureStrategyReport<D> rep = pure_strategy_game<D>(game, cfg.horizon, cfg.sim_dt, starts,
                                                        cfg.pure_tol, cfg.pure_schedule, dopt,
                                                        cfg.seed);
      ctx.emit("pure.json", to_json<D>(rep));
      for (std::size_t i = 0; i < rep.solutions.size(); ++i) {
         auto field = policy_field<D>(xg, rep.solutions[i]);
         for (std::size_t j = 0; j < starts.size(); ++j) {
            Trajectory<D> traj = simulate_feedback<D>(field, starts[j], cfg.sim_dt, cfg.horizon);
            std::string name =
                "pure_run_" + std::to_string(i) + "_" + std::to_string(j) + ".csv";
            write_trajectory_csv<D>(ctx.path(name), traj);
            ctx.note_artifact(name);
         }
      }
      if (!rep.certified) status = 3;
   } else if (ctx.subcommand == "mfg") {
      SymmetricOptions opt = symmetric_options<D>(cfg);
      MfgSolution<D> sol = solve_ergodic_mfg<D>(game, opt);
      ctx.emit("mfg.json", to_json<D>(sol));
      write_trace_csv(ctx.path("mfg_trace.csv"), sol.gap_trace, sol.movement_trace);
      ctx.note_artifact("mfg_trace.csv");
      if (!sol.converged) status = 3;
   } else if (ctx.subcommand == "nsweep") {
      SymmetricOptions opt = symmetric_options<D>(cfg);
      NSweepRecord<D> rec = nsweep<D>(game, cfg.Ns, opt);
      ctx.emit("nsweep.json", to_json<D>(rec));
      write_nsweep_csv<D>(ctx.path("nsweep.csv"), rec);
      ctx.note_artifact("nsweep.csv");
      bool all_ok = rec.limit.converged;
      for (const auto& row : rec.rows) all_ok = all_ok && row.ok;
      if (!all_ok) status = 3;
   } else if (ctx.subcommand == "hewitt-savage") {
      auto uniform = StateMeasure<D>::uniform(xg);
      auto table =
          hewitt_savage_check<D>(uniform, cfg.coupling, cfg.Ns, cfg.mc_samples, cfg.seed);
      ctx.emit("hewitt_savage.json", hewitt_savage_to_json(table));
      write_hewitt_savage_csv(ctx.path("hewitt_savage.csv"), table);
      ctx.note_artifact("hewitt_savage.csv");
   } else {
      throw ConfigError("unknown subcommand " + ctx.subcommand);
   }
   return status;
}

inline void write_manifest(RunContext& ctx, int status, double wall_seconds,
                           const std::string& error) {
   json manifest{{"subcommand", ctx.subcommand},
                 {"version", version_string},
                 {"config", ctx.cfg.resolved},
                 {"config_hash", fnv1a_hex(ctx.cfg.resolved.dump())},
                 {"seed", ctx.cfg.seed},
                 {"threads", ctx.cfg.threads},
                 {"status", status},
                 {"wall_time_s", wall_seconds},
                 {"artifacts", ctx.artifacts}};
   if (!error.empty()) manifest["error"] = error;
   write_json((ctx.outdir / "manifest.json").string(), manifest);
}

}  // namespace detail

inline int cli_main(int argc, char** argv) {
   CLI::App app{"ergodic equilibrium toolkit: weak KAM, minimizing measures, "
                "and N-player Nash solvers on the torus"};
   app.require_subcommand(1);

   std::string config_path;
   std::vector<std::string> overrides;
   std::string outdir_override;
   int threads_override = 0;

   const std::vector<std::string> names{"weakkam", "mather",       "nash",
                                        "pure",    "mfg",          "nsweep",
                                        "hewitt-savage", "validate"};
   const std::vector<std::string> blurbs{
       "ergodic constant and corrector of the configured model",
       "minimizing occupation measure by linear programming",
       "mixed-strategy equilibrium of the configured N-player game",
       "pure-strategy feedback equilibrium of a decoupled game",
       "limiting ergodic mean-field system",
       "convergence sweep of symmetric equilibria toward the limit",
       "empirical-measure moment convergence table",
       "parse and validate a config, writing nothing"};
   for (std::size_t i = 0; i < names.size(); ++i) {
      CLI::App* sub = app.add_subcommand(names[i], blurbs[i]);
      sub->add_option("config", config_path, "experiment config (JSON)")
          ->required()
          ->check(CLI::ExistingFile);
      sub->add_option("--set", overrides, "override a config field, e.g. solver.tol=1e-6");
      sub->add_option("--out", outdir_override, "output directory (overrides output.dir)");
      sub->add_option("--threads", threads_override, "cap worker threads");
   }

   try {
      app.parse(argc, argv);
   } catch (const CLI::ParseError& e) {
      return app.exit(e);
   }
   std::string sub = app.get_subcommands().front()->get_name();

   auto t0 = std::chrono::steady_clock::now();
   detail::RunContext ctx;
   ctx.subcommand = sub;
   try {
      std::ifstream in(config_path);
      json doc = json::parse(in, nullptr, true, true);  // tolerate // comments
      for (const std::string& assignment : overrides) apply_override(doc, assignment);
      if (!outdir_override.empty()) doc["output"]["dir"] = outdir_override;
      if (threads_override > 0) doc["solver"]["threads"] = threads_override;
      ctx.cfg = parse_config(doc);
   } catch (const json::exception& e) {
      std::cerr << "config parse error: " << e.what() << "\n";
      return 2;
   } catch (const std::exception& e) {
      std::cerr << "invalid config: " << e.what() << "\n";
      return 2;
   }

   if (sub == "validate") {
      std::cout << "config ok: " << config_path << "\n";
      return 0;
   }

   ctx.outdir = ctx.cfg.outdir;
   std::error_code ec;
   std::filesystem::create_directories(ctx.outdir, ec);
   if (ec) {
      std::cerr << "cannot create output directory " << ctx.outdir << ": " << ec.message()
                << "\n";
      return 2;
   }

   int status = 0;
   std::string error;
   try {
      status = ctx.cfg.dimension == 1 ? detail::run_subcommand<1>(ctx)
                                      : detail::run_subcommand<2>(ctx);
   } catch (const ConfigError& e) {
      std::cerr << "invalid config: " << e.what() << "\n";
      return 2;
   } catch (const GridError& e) {
      std::cerr << "discretization error: " << e.what() << "\n";
      return 2;
   } catch (const SolverError& e) {
      // keep whatever artifacts were written; the manifest records the failure
      error = e.what();
      status = 3;
      std::cerr << "solver did not converge: " << e.what() << "\n";
   }
   double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
   detail::write_manifest(ctx, status, wall, error);
   if (status == 3 && error.empty())
      std::cerr << "solver did not converge; artifacts and trace written to " << ctx.outdir
                << "\n";
   return status;
}

}  // namespace ergonash
