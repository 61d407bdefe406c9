#pragma once

// N-player ergodic games on the torus. Player i pays the long-run average of
// L^i(x_i, v_i) + F^i(x_i, x_{-i}); against mixed strategies the interaction
// collapses to an effective potential V^i on the torus (others enter only
// through their state marginals), so exact best responses are Mather LP
// solves of L^i + V^i. Equilibria are certified by deviation gaps, which are
// exact here: the deviation set equals the LP feasible set.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "ergonash/catalog.hpp"
#include "ergonash/core.hpp"
#include "ergonash/euler_flow.hpp"
#include "ergonash/grid.hpp"
#include "ergonash/mather_lp.hpp"
#include "ergonash/measures.hpp"
#include "ergonash/weakkam.hpp"

namespace ergonash {

template <int D>
struct GameSpec {
   int players = 2;
   std::vector<LagrangianSpec> lagrangians;  // one per player
   std::vector<CouplingSpec> couplings;      // one per player
   TorusGrid<D> xgrid;
   VelocityGrid<D> vgrid;
   bool symmetric = false;  // indistinguishable players: shared L and F

   void validate() const {
      if (players < 2 || players > 5)
         throw ConfigError("player count must be between 2 and 5 for exact couplings");
      if (static_cast<int>(lagrangians.size()) != players ||
          static_cast<int>(couplings.size()) != players)
         throw ConfigError("need one Lagrangian and one coupling per player");
      for (const auto& l : lagrangians)
         if (l.d != D) throw ConfigError("player Lagrangian dimension mismatch");
      if (symmetric)
         for (int i = 1; i < players; ++i)
            if (!(lagrangians[i] == lagrangians[0]) || !(couplings[i] == couplings[0]))
               throw ConfigError("symmetric game requires identical player specs");
   }

   static GameSpec symmetric_game(int n_players, const LagrangianSpec& l, const CouplingSpec& c,
                                  const TorusGrid<D>& xg, const VelocityGrid<D>& vg) {
      GameSpec g;
      g.players = n_players;
      g.lagrangians.assign(n_players, l);
      g.couplings.assign(n_players, c);
      g.xgrid = xg;
      g.vgrid = vg;
      g.symmetric = true;
      g.validate();
      return g;
   }
};

// Effective potential V^i(y) = E[F^i(y, X_{-i})] under the product of the
// other players' marginals. Catalog couplings factor through one-player
// integrals (first and second moments for the quadratic functional), so the
// tensor expectation is exact. The mean-field functional kinds read the
// empirical measure of the other N-1 players, hence the variance term
// in the quadratic case instead of the squared mean alone.
template <int D>
GridFunction<D> coupling_potential(const GameSpec<D>& game, int i,
                                   const std::vector<StateMeasure<D>>& marginals) {
   game.validate();
   if (i < 0 || i >= game.players) throw ConfigError("player index out of range");
   if (static_cast<int>(marginals.size()) != game.players)
      throw ConfigError("need one marginal per player");
   if (game.players > 4)
      throw ConfigError(
          "exact coupling integration supports at most 4 players; "
          "use the sampled empirical coupling for larger games");
   for (const auto& m : marginals)
      if (m.grid.n != game.xgrid.n) throw GridError("marginal grid mismatch");

   const CouplingSpec& c = game.couplings[i];
   const TorusGrid<D>& xg = game.xgrid;
   GridFunction<D> V(xg);
   int N = game.players;
   switch (c.kind) {
      case CouplingKind::zero:
         for (double& v : V.values) v = c.offset;
         break;
      case CouplingKind::separable:
         for (std::size_t iy = 0; iy < xg.size(); ++iy)
            V.values[iy] = c.offset + coupling_separable<D>(c, xg.node(iy));
         break;
      case CouplingKind::pairwise:
      case CouplingKind::mf_linear:
         for (std::size_t iy = 0; iy < xg.size(); ++iy) {
            Vec<D> y = xg.node(iy);
            double s = 0.0;
            for (int j = 0; j < N; ++j) {
               if (j == i) continue;
               for (std::size_t ix = 0; ix < xg.size(); ++ix)
                  s += marginals[j].w[ix] * coupling_kernel<D>(c, y, xg.node(ix));
            }
            V.values[iy] = c.offset + s / (N - 1);
         }
         break;
      case CouplingKind::mf_quadratic: {
         // E[(mean_{j != i} f(X_j))^2] = (sum m2_j + (sum m1_j)^2 - sum m1_j^2) / (N-1)^2
         double sum_m1 = 0.0, sum_m2 = 0.0, sum_m1sq = 0.0;
         for (int j = 0; j < N; ++j) {
            if (j == i) continue;
            double m1 = 0.0, m2 = 0.0;
            for (std::size_t ix = 0; ix < xg.size(); ++ix) {
               double f = coupling_moment_fn<D>(c, xg.node(ix));
               m1 += marginals[j].w[ix] * f;
               m2 += marginals[j].w[ix] * f * f;
            }
            sum_m1 += m1;
            sum_m2 += m2;
            sum_m1sq += m1 * m1;
         }
         double denom = static_cast<double>(N - 1) * (N - 1);
         double value = c.offset + c.amp * (sum_m2 + sum_m1 * sum_m1 - sum_m1sq) / denom;
         for (double& v : V.values) v = value;
         break;
      }
   }
   return V;
}

// J^i: expected long-run cost of playing eta while the others hold the
// profile behind `marginals`. Affine in eta.
template <int D>
double mixed_payoff(const GameSpec<D>& game, int i, const std::vector<StateMeasure<D>>& marginals,
                    const PhaseMeasure<D>& eta) {
   GridFunction<D> V = coupling_potential<D>(game, i, marginals);
   const LagrangianSpec& L = game.lagrangians[i];
   double s = 0.0;
   std::size_t nv = eta.vgrid.size();
   for (std::size_t ix = 0; ix < eta.xgrid.size(); ++ix) {
      Vec<D> x = eta.xgrid.node(ix);
      for (std::size_t iv = 0; iv < nv; ++iv) {
         double w = eta.w[ix * nv + iv];
         if (w == 0.0) continue;
         s += w * (eval_lagrangian<D>(L, x, eta.vgrid.node(iv)) + V.values[ix]);
      }
   }
   return s;
}

template <int D>
MatherResult<D> best_response(const GameSpec<D>& game, int i,
                              const std::vector<StateMeasure<D>>& marginals,
                              const MatherOptions& opt = {}) {
   GridFunction<D> V = coupling_potential<D>(game, i, marginals);
   return solve_mather<D>(game.lagrangians[i], V, game.vgrid, opt);
}

template <int D>
struct NashResult {
   std::vector<PhaseMeasure<D>> measures;
   std::vector<StateMeasure<D>> state_marginals;
   std::vector<double> values;   // J^i at the profile
   std::vector<double> lambdas;  // ergodic constants of L^i + V^i[profile]
   std::vector<double> deviation_gaps;
   int iterations = 0;
   bool converged = false;
   std::vector<double> movement_trace;  // max_i W1 step size per sweep
   std::vector<double> gap_trace;       // max_i deviation gap per sweep
};

struct NashOptions {
   double damping = 0.5;  // theta in (0, 1]
   double tol = 1e-3;     // bound for both the gap and the W1 movement
   int max_iterations = 120;
   bool compute_lambdas = true;
   MatherOptions mather;
   std::vector<double> discount_schedule = default_discount_schedule();
   DiscountedOptions discounted;
};

// Simultaneous damped best response from a (default uniform-at-rest) profile.
// Convergence is declared from the certificate, not the fixed-point residual
// alone: every sweep prices the current profile by exact LP best responses,
// and the run converges when both the worst deviation gap and the worst W1
// update movement sit below tol. Hitting the sweep cap reports
// converged = false with the full trace; it is an outcome, not an error.
template <int D>
NashResult<D> solve_nash_mixed(const GameSpec<D>& game, const NashOptions& opt = {},
                               const std::vector<PhaseMeasure<D>>& initial = {}) {
   game.validate();
   if (opt.damping <= 0.0 || opt.damping > 1.0)
      throw ConfigError("damping must lie in (0, 1]");
   int N = game.players;

   std::vector<PhaseMeasure<D>> profile;
   if (initial.empty()) {
      profile.assign(N, PhaseMeasure<D>::uniform_rest(game.xgrid, game.vgrid));
   } else {
      if (static_cast<int>(initial.size()) != N)
         throw ConfigError("initial profile must have one measure per player");
      profile = initial;
      for (auto& mu : profile) mu.validate();
   }

   NashResult<D> out;
   std::vector<GridFunction<D>> V(N);
   std::vector<MatherResult<D>> br(N);
   std::vector<double> values(N), gaps(N);

   auto evaluate = [&](const std::vector<StateMeasure<D>>& marginals) {
      for (int i = 0; i < N; ++i) {
         V[i] = coupling_potential<D>(game, i, marginals);
         br[i] = solve_mather<D>(game.lagrangians[i], V[i], game.vgrid, opt.mather);
         const PhaseMeasure<D>& mu = profile[i];
         double s = 0.0;
         std::size_t nv = game.vgrid.size();
         for (std::size_t ix = 0; ix < game.xgrid.size(); ++ix) {
            Vec<D> x = game.xgrid.node(ix);
            for (std::size_t iv = 0; iv < nv; ++iv) {
               double w = mu.w[ix * nv + iv];
               if (w == 0.0) continue;
               s += w * (eval_lagrangian<D>(game.lagrangians[i], x, game.vgrid.node(iv)) +
                         V[i].values[ix]);
            }
         }
         values[i] = s;
         gaps[i] = s - br[i].value;
      }
   };

   std::vector<StateMeasure<D>> marginals(N, StateMeasure<D>(game.xgrid));
   for (int iter = 0; iter < opt.max_iterations; ++iter) {
      for (int i = 0; i < N; ++i) marginals[i] = marginal<D>(profile[i]);
      evaluate(marginals);
      double max_gap = 0.0;
      for (double g : gaps) max_gap = std::max(max_gap, g);

      double movement = 0.0;
      std::vector<PhaseMeasure<D>> next = profile;
      for (int i = 0; i < N; ++i) {
         next[i].scale_add(1.0 - opt.damping, br[i].measure, opt.damping);
         movement = std::max(movement, wasserstein1<D>(marginals[i], marginal<D>(next[i])));
      }
      out.gap_trace.push_back(max_gap);
      out.movement_trace.push_back(movement);
      out.iterations = iter + 1;
      if (max_gap <= opt.tol && movement <= opt.tol) {
         out.converged = true;  // keep the certified profile, drop the update
         break;
      }
      profile = std::move(next);
   }
   if (!out.converged) {
      // profile moved after the last sweep; re-certify what we return
      for (int i = 0; i < N; ++i) marginals[i] = marginal<D>(profile[i]);
      evaluate(marginals);
   }

   out.measures = std::move(profile);
   out.state_marginals = marginals;
   out.values = values;
   out.deviation_gaps = gaps;
   if (opt.compute_lambdas) {
      out.lambdas.resize(N);
      for (int i = 0; i < N; ++i)
         out.lambdas[i] =
             ergodic_constant<D>(game.lagrangians[i], game.vgrid, V[i], opt.discount_schedule,
                                 opt.discounted)
                 .lambda;
   }
   return out;
}

// Unilateral-deviation certificate at a stored profile: how much player i
// could still gain by switching to an exact best response. Nonnegative up to
// LP tolerance, zero exactly at a mixed Nash profile.
template <int D>
double deviation_gap(const GameSpec<D>& game, int i, const NashResult<D>& result,
                     const MatherOptions& opt = {}) {
   MatherResult<D> br = best_response<D>(game, i, result.state_marginals, opt);
   return mixed_payoff<D>(game, i, result.state_marginals, result.measures[i]) - br.value;
}

template <int D>
struct PureRun {
   Vec<D> start{};
   double average = 0.0;
   double tail_average = 0.0;
   double lambda_gap = 0.0;          // |tail average - lambda|
   double calibration_slack = 0.0;   // corrector drift along the feedback path
   bool calibrated = false;
};

struct DeviationTrial {
   std::string label;
   double average = 0.0;
   double margin = 0.0;  // average - lambda; nonnegative when feedback is optimal
};

template <int D>
struct PureStrategyReport {
   std::vector<WeakKamSolution<D>> solutions;        // per player
   std::vector<std::vector<PureRun<D>>> runs;        // per player, per start
   std::vector<std::vector<DeviationTrial>> trials;  // per player
   double tol = 0.0;
   bool certified = false;  // all runs hit lambda and no trial beats it
};

namespace detail {

template <int D>
Trajectory<D> constant_velocity_trajectory(const Vec<D>& x0, const Vec<D>& v, double dt, double T) {
   std::size_t steps = static_cast<std::size_t>(std::llround(T / dt));
   Trajectory<D> out;
   out.dt = dt;
   out.x.reserve(steps + 1);
   out.v.assign(steps + 1, v);
   Vec<D> x = wrap<D>(x0);
   out.x.push_back(x);
   for (std::size_t k = 0; k < steps; ++k) {
      x = wrap<D>(axpy<D>(dt, v, x));
      out.x.push_back(x);
   }
   return out;
}

}  // namespace detail

// Pure-strategy equilibrium check, exact only for decoupled games (zero or
// separable couplings): each player's feedback policy from the weak KAM
// corrector is simulated from every start, its ergodic average is compared
// with lambda_i, the corrector is checked for calibration along the path,
// and a panel of fixed deviations (constant velocities plus seeded random
// feedback fields) must not beat the equilibrium average.
template <int D>
PureStrategyReport<D> pure_strategy_game(const GameSpec<D>& game, double T, double dt,
                                         const std::vector<Vec<D>>& initial_states,
                                         double tol = 0.05,
                                         const std::vector<double>& schedule = {0.02, 0.01, 0.005},
                                         const DiscountedOptions& dopt = {},
                                         std::uint64_t panel_seed = 7) {
   game.validate();
   for (const auto& c : game.couplings)
      if (c.kind != CouplingKind::zero && c.kind != CouplingKind::separable)
         throw ConfigError(
             "pure-strategy feedback equilibria require a decoupled game: "
             "each coupling must be zero or separable so the per-player "
             "reduction to a single-state problem is exact");
   if (initial_states.empty()) throw ConfigError("need at least one initial state");

   PureStrategyReport<D> out;
   out.tol = tol;
   out.certified = true;
   int N = game.players;
   out.solutions.reserve(N);
   out.runs.resize(N);
   out.trials.resize(N);

   for (int i = 0; i < N; ++i) {
      const LagrangianSpec& L = game.lagrangians[i];
      const CouplingSpec& F = game.couplings[i];
      GridFunction<D> W = GridFunction<D>::from_function(game.xgrid, [&](const Vec<D>& x) {
         return F.kind == CouplingKind::zero ? F.offset
                                             : F.offset + coupling_separable<D>(F, x);
      });
      WeakKamSolution<D> sol = ergodic_constant<D>(L, game.vgrid, W, schedule, dopt);
      auto field = policy_field<D>(game.xgrid, sol);
      // the corrector is a forward value function, so u drops by the excess
      // running cost along its own feedback orbits; the function calibrated
      // for c = -lambda in the increment-vs-cost sense is -u
      ProductGridFunction phi = ProductGridFunction::from_function(
          D, static_cast<int>(game.xgrid.n), [&](const std::array<double, 3>& z) {
             Vec<D> x{};
             for (int k = 0; k < D; ++k) x[k] = z[k];
             return -sol.corrector.eval(x);
          });

      for (const Vec<D>& x0 : initial_states) {
         std::vector<Trajectory<D>> tuple{simulate_feedback<D>(field, x0, dt, T)};
         ErgodicAverage avg = ergodic_average<D>(tuple, L, F, 0);
         DominationReport cal = check_calibrated<D>(phi, -sol.lambda, tuple, L, F, 0, tol);
         PureRun<D> run;
         run.start = x0;
         run.average = avg.average;
         run.tail_average = avg.tail_average;
         run.lambda_gap = std::fabs(avg.tail_average - sol.lambda);
         run.calibration_slack = cal.worst_slack;
         run.calibrated = cal.holds;
         if (run.lambda_gap > tol || !run.calibrated) out.certified = false;
         out.runs[i].push_back(run);
      }

      // deviation panel, all from the first start
      const Vec<D>& x0 = initial_states.front();
      std::vector<std::pair<std::string, Trajectory<D>>> panel;
      for (double c : {0.5, 1.0, -1.0}) {
         Vec<D> v{};
         for (int k = 0; k < D; ++k) v[k] = c;
         panel.push_back({"constant v=" + std::to_string(c),
                          detail::constant_velocity_trajectory<D>(x0, v, dt, T)});
      }
      Rng rng(panel_seed, static_cast<std::uint64_t>(i));
      for (int trial = 0; trial < 2; ++trial) {
         std::array<GridFunction<D>, D> comps;
         for (int k = 0; k < D; ++k) {
            comps[k] = GridFunction<D>(game.xgrid);
            for (double& val : comps[k].values)
               val = game.vgrid.axis_node(static_cast<int>(rng.uniform01() * game.vgrid.m));
         }
         auto rnd_field = [comps](const Vec<D>& x) {
            Vec<D> v{};
            for (int k = 0; k < D; ++k) v[k] = comps[k].eval(x);
            return v;
         };
         panel.push_back({"random policy " + std::to_string(trial),
                          simulate_feedback<D>(rnd_field, x0, dt, T)});
      }
      for (auto& [label, traj] : panel) {
         std::vector<Trajectory<D>> tuple{std::move(traj)};
         ErgodicAverage avg = ergodic_average<D>(tuple, L, F, 0);
         DeviationTrial dev;
         dev.label = label;
         dev.average = avg.average;
         dev.margin = avg.average - sol.lambda;
         if (dev.margin < -tol) out.certified = false;
         out.trials[i].push_back(dev);
      }
      out.solutions.push_back(std::move(sol));
   }
   return out;
}

}  // namespace ergonash
