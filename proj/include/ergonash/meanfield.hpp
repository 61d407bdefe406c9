#pragma once

// Symmetric-population machinery: empirical couplings V^N and their exact
// mean-field limits, one-population equilibrium fixed points, the limiting
// ergodic MFG system, the N-sweep that measures convergence of (lambda^N,
// v^N, m^N) to the limit triple, and the Hewitt-Savage moment check.
//
// Both one-population solvers stop on the deviation-gap certificate (the
// current measure beats the exact LP best response up to tol) evaluated
// before the damped update. A movement-based stop can stall on a
// non-equilibrium or walk off a degenerate optimal face that the current
// measure already certifies; the gap cannot. W1 movements are still traced.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "ergonash/catalog.hpp"
#include "ergonash/core.hpp"
#include "ergonash/game.hpp"
#include "ergonash/grid.hpp"
#include "ergonash/mather_lp.hpp"
#include "ergonash/measures.hpp"
#include "ergonash/rng.hpp"
#include "ergonash/weakkam.hpp"

namespace ergonash {

// F(., m) for the population measure m: the N -> infinity coupling.
template <int D>
GridFunction<D> mean_field_potential(const CouplingSpec& c, const StateMeasure<D>& m) {
   const TorusGrid<D>& xg = m.grid;
   GridFunction<D> V(xg);
   switch (c.kind) {
      case CouplingKind::zero:
         for (double& v : V.values) v = c.offset;
         break;
      case CouplingKind::separable:
         for (std::size_t i = 0; i < xg.size(); ++i)
            V.values[i] = c.offset + coupling_separable<D>(c, xg.node(i));
         break;
      case CouplingKind::pairwise:
      case CouplingKind::mf_linear:
         for (std::size_t i = 0; i < xg.size(); ++i) {
            Vec<D> x = xg.node(i);
            double s = 0.0;
            for (std::size_t j = 0; j < xg.size(); ++j)
               s += m.w[j] * coupling_kernel<D>(c, x, xg.node(j));
            V.values[i] = c.offset + s;
         }
         break;
      case CouplingKind::mf_quadratic: {
         double m1 = 0.0;
         for (std::size_t j = 0; j < xg.size(); ++j)
            m1 += m.w[j] * coupling_moment_fn<D>(c, xg.node(j));
         for (double& v : V.values) v = c.offset + c.amp * m1 * m1;
         break;
      }
   }
   return V;
}

template <int D>
struct EmpiricalCoupling {
   GridFunction<D> V;
   double se = 0.0;   // Monte Carlo standard error; 0 on the exact paths
   bool exact = true;
};

// V^N(x) = E[F(x, empirical measure of N-1 i.i.d. m-draws)]. Couplings that
// are affine in the measure collapse to the mean-field potential exactly for
// every N (the expectation of an empirical mean is the mean), and reuse the
// same evaluation so the N-sweep distances vanish bit for bit. The quadratic
// functional keeps the genuine 1/(N-1) variance correction and is sampled.
template <int D>
EmpiricalCoupling<D> empirical_coupling(const CouplingSpec& c, const StateMeasure<D>& m, int N,
                                        long K, Rng& rng) {
   if (N < 2) throw ConfigError("empirical couplings need at least 2 players");
   EmpiricalCoupling<D> out;
   if (c.kind != CouplingKind::mf_quadratic) {
      out.V = mean_field_potential<D>(c, m);
      return out;
   }
   if (K < 1000) throw ConfigError("sampled empirical couplings need K >= 1000 draws");
   std::vector<double> fnode(m.grid.size());
   for (std::size_t i = 0; i < fnode.size(); ++i)
      fnode[i] = coupling_moment_fn<D>(c, m.grid.node(i));
   MeasureSampler<D> sampler(m);
   double sum = 0.0, sumsq = 0.0;
   for (long k = 0; k < K; ++k) {
      double s = 0.0;
      for (int j = 0; j + 1 < N; ++j) s += fnode[sampler.draw_index(rng)];
      s /= (N - 1);
      sum += s * s;
      sumsq += s * s * s * s;
   }
   double mean = sum / K;
   double var = std::max(0.0, sumsq / K - mean * mean);
   out.V = GridFunction<D>(m.grid);
   for (double& v : out.V.values) v = c.offset + c.amp * mean;
   out.se = std::fabs(c.amp) * std::sqrt(var / K);
   out.exact = false;
   return out;
}

template <int D>
EmpiricalCoupling<D> empirical_coupling(const GameSpec<D>& game, const StateMeasure<D>& m, int N,
                                        long K, std::uint64_t seed) {
   game.validate();
   if (!game.symmetric) throw ConfigError("empirical couplings are defined for symmetric games");
   Rng rng(seed, static_cast<std::uint64_t>(N));
   return empirical_coupling<D>(game.couplings[0], m, N, K, rng);
}

struct SymmetricOptions {
   double damping = 0.5;
   double tol = 1e-3;  // deviation-gap certificate bound
   int max_iterations = 80;
   long mc_samples = 100000;
   std::uint64_t seed = 12345;
   MatherOptions mather;
   std::vector<double> discount_schedule = default_discount_schedule();
   DiscountedOptions discounted;
   bool compute_corrector = true;  // run weakkam at the fixed point
};

namespace detail {

template <int D>
struct FixedPointRun {
   PhaseMeasure<D> mu;
   StateMeasure<D> m;
   GridFunction<D> V;       // potential at the final measure
   double lambda_lp = 0.0;  // LP value at the final measure
   double gap = 0.0;
   bool converged = false;
   int iterations = 0;
   std::vector<double> gap_trace, movement_trace;
};

// Damped one-population best response: mu <- (1-theta) mu + theta BR(mu),
// stopping when the current measure's deviation gap is within tol.
template <int D, class PotentialFn>
FixedPointRun<D> symmetric_fixed_point(const LagrangianSpec& L, const TorusGrid<D>& xg,
                                       const VelocityGrid<D>& vg, PotentialFn&& potential_of,
                                       const SymmetricOptions& opt,
                                       const PhaseMeasure<D>* initial) {
   FixedPointRun<D> run;
   run.mu = initial ? *initial : PhaseMeasure<D>::uniform_rest(xg, vg);
   run.mu.validate();
   for (int iter = 0; iter < opt.max_iterations; ++iter) {
      run.m = marginal<D>(run.mu);
      run.V = potential_of(run.m);
      MatherResult<D> br = solve_mather<D>(L, run.V, vg, opt.mather);
      double value = 0.0;
      std::size_t nv = vg.size();
      for (std::size_t ix = 0; ix < xg.size(); ++ix) {
         Vec<D> x = xg.node(ix);
         for (std::size_t iv = 0; iv < nv; ++iv) {
            double w = run.mu.w[ix * nv + iv];
            if (w == 0.0) continue;
            value += w * (eval_lagrangian<D>(L, x, vg.node(iv)) + run.V.values[ix]);
         }
      }
      run.lambda_lp = br.value;
      run.gap = value - br.value;
      run.gap_trace.push_back(run.gap);
      run.iterations = iter + 1;
      if (run.gap <= opt.tol) {
         run.movement_trace.push_back(0.0);
         run.converged = true;
         break;
      }
      PhaseMeasure<D> next = run.mu;
      next.scale_add(1.0 - opt.damping, br.measure, opt.damping);
      run.movement_trace.push_back(wasserstein1<D>(run.m, marginal<D>(next)));
      run.mu = std::move(next);
   }
   if (!run.converged) {
      run.m = marginal<D>(run.mu);
      run.V = potential_of(run.m);
      MatherResult<D> br = solve_mather<D>(L, run.V, vg, opt.mather);
      double value = 0.0;
      std::size_t nv = vg.size();
      for (std::size_t ix = 0; ix < xg.size(); ++ix) {
         Vec<D> x = xg.node(ix);
         for (std::size_t iv = 0; iv < nv; ++iv) {
            double w = run.mu.w[ix * nv + iv];
            if (w == 0.0) continue;
            value += w * (eval_lagrangian<D>(L, x, vg.node(iv)) + run.V.values[ix]);
         }
      }
      run.lambda_lp = br.value;
      run.gap = value - br.value;
   }
   return run;
}

}  // namespace detail

template <int D>
struct SymmetricNashResult {
   PhaseMeasure<D> mu;
   StateMeasure<D> m;
   double lambda = 0.0;     // ergodic constant of L + V^N[m]
   double lambda_lp = 0.0;  // LP value at the fixed point
   GridFunction<D> v;       // mean-zero corrector
   double gap = 0.0;
   double coupling_se = 0.0;
   bool converged = false;
   int iterations = 0;
   std::vector<double> gap_trace, movement_trace;
};

// One-population equilibrium of the symmetric N-player game: the full
// N-player solve collapses to a single damped fixed point under symmetry.
// Sampled couplings freeze their seed per evaluation (common random numbers)
// so V^N is a deterministic function of m and of (seed, N).
template <int D>
SymmetricNashResult<D> solve_symmetric_nash(const GameSpec<D>& game, int N,
                                            const SymmetricOptions& opt = {},
                                            const PhaseMeasure<D>* initial = nullptr) {
   game.validate();
   if (!game.symmetric) throw ConfigError("one-population solve needs a symmetric game");
   if (N < 2) throw ConfigError("need at least 2 players");
   const LagrangianSpec& L = game.lagrangians[0];
   const CouplingSpec& c = game.couplings[0];

   double last_se = 0.0;
   auto potential_of = [&](const StateMeasure<D>& m) {
      Rng rng(opt.seed, static_cast<std::uint64_t>(N));
      EmpiricalCoupling<D> ec = empirical_coupling<D>(c, m, N, opt.mc_samples, rng);
      last_se = ec.se;
      return ec.V;
   };
   detail::FixedPointRun<D> run = detail::symmetric_fixed_point<D>(
       L, game.xgrid, game.vgrid, potential_of, opt, initial);

   SymmetricNashResult<D> out;
   out.mu = std::move(run.mu);
   out.m = std::move(run.m);
   out.lambda_lp = run.lambda_lp;
   out.gap = run.gap;
   out.coupling_se = last_se;
   out.converged = run.converged;
   out.iterations = run.iterations;
   out.gap_trace = std::move(run.gap_trace);
   out.movement_trace = std::move(run.movement_trace);
   if (opt.compute_corrector) {
      WeakKamSolution<D> sol =
          ergodic_constant<D>(L, game.vgrid, run.V, opt.discount_schedule, opt.discounted);
      out.lambda = sol.lambda;
      out.v = std::move(sol.corrector);
   } else {
      out.lambda = run.lambda_lp;
      out.v = GridFunction<D>(game.xgrid);
   }
   return out;
}

template <int D>
struct MfgSolution {
   double lambda_bar = 0.0;  // LP value at the fixed point
   double lambda_pde = 0.0;  // ergodic constant of L + F(., m_bar), cross-check
   GridFunction<D> v_bar;    // mean-zero corrector
   PhaseMeasure<D> mu_bar;
   StateMeasure<D> m_bar;
   double gap = 0.0;
   bool converged = false;
   int iterations = 0;
   std::vector<double> gap_trace, movement_trace;
   double stationarity_residual = 0.0;  // worst holonomy row at mu_bar
   double variational_gap = 0.0;        // |int (L+F) dmu_bar - LP minimum|
};

// Limiting ergodic mean-field system: a population measure m_bar optimal for
// its own potential F(., m_bar), with corrector and constant from the
// ergodic Hamilton-Jacobi equation at that potential. The stationarity rows
// and the variational identity are evaluated on the returned solution.
template <int D>
MfgSolution<D> solve_ergodic_mfg(const GameSpec<D>& game, const SymmetricOptions& opt = {},
                                 const PhaseMeasure<D>* initial = nullptr) {
   game.validate();
   if (!game.symmetric) throw ConfigError("the mean-field limit needs a symmetric game");
   const CouplingSpec& c = game.couplings[0];
   if (c.kind == CouplingKind::pairwise)
      throw ConfigError(
          "pairwise couplings have no declared population limit here; use the "
          "mf_linear kind, whose empirical form agrees with pairwise averaging");
   const LagrangianSpec& L = game.lagrangians[0];

   auto potential_of = [&](const StateMeasure<D>& m) { return mean_field_potential<D>(c, m); };
   detail::FixedPointRun<D> run = detail::symmetric_fixed_point<D>(
       L, game.xgrid, game.vgrid, potential_of, opt, initial);

   MfgSolution<D> out;
   out.lambda_bar = run.lambda_lp;
   out.mu_bar = std::move(run.mu);
   out.m_bar = std::move(run.m);
   out.gap = run.gap;
   out.converged = run.converged;
   out.iterations = run.iterations;
   out.gap_trace = std::move(run.gap_trace);
   out.movement_trace = std::move(run.movement_trace);
   out.stationarity_residual = holonomy_residual<D>(out.mu_bar);
   out.variational_gap = std::fabs(out.gap);
   if (opt.compute_corrector) {
      WeakKamSolution<D> sol =
          ergodic_constant<D>(L, game.vgrid, run.V, opt.discount_schedule, opt.discounted);
      out.lambda_pde = sol.lambda;
      out.v_bar = std::move(sol.corrector);
   } else {
      out.lambda_pde = run.lambda_lp;
      out.v_bar = GridFunction<D>(game.xgrid);
   }
   return out;
}

struct NSweepRow {
   int N = 0;
   double lambda_N = 0.0;
   double dist_lambda = 0.0;  // |lambda_N - lambda of the limit|, like for like
   double dist_v = 0.0;       // sup |v_N - v_bar|
   double dist_m = 0.0;       // W1(m_N, m_bar)
   double se = 0.0;           // coupling standard error at the fixed point
   bool ok = false;
   std::string note;
};

template <int D>
struct NSweepRecord {
   std::vector<NSweepRow> rows;  // sorted by N
   MfgSolution<D> limit;
};

// Convergence sweep of symmetric equilibria toward the mean-field limit.
// lambda distances compare the discounted-scheme constants on both sides so
// discretization bias cancels; v distances compare mean-zero correctors.
// A failing N is marked and the sweep continues.
template <int D>
NSweepRecord<D> nsweep(const GameSpec<D>& game, std::vector<int> Ns,
                       const SymmetricOptions& opt = {}) {
   if (Ns.empty()) Ns = {2, 4, 8, 16, 32};
   std::sort(Ns.begin(), Ns.end());
   NSweepRecord<D> out;
   out.limit = solve_ergodic_mfg<D>(game, opt);
   for (int N : Ns) {
      NSweepRow row;
      row.N = N;
      try {
         SymmetricNashResult<D> sn = solve_symmetric_nash<D>(game, N, opt);
         row.lambda_N = sn.lambda;
         row.dist_lambda = std::fabs(sn.lambda - out.limit.lambda_pde);
         row.dist_m = wasserstein1<D>(sn.m, out.limit.m_bar);
         double sup = 0.0;
         for (std::size_t i = 0; i < sn.v.values.size(); ++i)
            sup = std::max(sup, std::fabs(sn.v.values[i] - out.limit.v_bar.values[i]));
         row.dist_v = sup;
         row.se = sn.coupling_se;
         row.ok = sn.converged;
         if (!sn.converged)
            row.note = "fixed point hit the sweep cap";
         else if (row.dist_m > 10.0 * opt.tol)
            row.note = "different equilibrium branch from the limit solve";
      } catch (const std::exception& e) {
         row.ok = false;
         row.note = e.what();
      }
      out.rows.push_back(row);
   }
   return out;
}

struct HewittSavageRow {
   int N = 0;
   double estimate = 0.0;  // Monte Carlo E phi(empirical_N)
   double se = 0.0;
   double exact = 0.0;  // phi(m)
   double abs_err = 0.0;
};

// Moment functional phi from the coupling sub-catalog (affine or quadratic in
// the measure), estimated on empirical measures of N i.i.d. m-draws. The
// linear kind is unbiased for every N; the quadratic kind carries the
// Var(f)/N correction that must vanish as N grows.
template <int D>
std::vector<HewittSavageRow> hewitt_savage_check(const StateMeasure<D>& m, const CouplingSpec& phi,
                                                 const std::vector<int>& Ns, long K,
                                                 std::uint64_t seed) {
   if (phi.kind != CouplingKind::mf_linear && phi.kind != CouplingKind::mf_quadratic)
      throw ConfigError("moment functionals are the mf_linear and mf_quadratic kinds");
   if (K < 1000) throw ConfigError("moment estimates need K >= 1000 draws");
   bool quadratic = phi.kind == CouplingKind::mf_quadratic;
   std::vector<double> fnode(m.grid.size());
   for (std::size_t i = 0; i < fnode.size(); ++i)
      fnode[i] = coupling_moment_fn<D>(phi, m.grid.node(i));
   double m1 = 0.0;
   for (std::size_t i = 0; i < fnode.size(); ++i) m1 += m.w[i] * fnode[i];
   double exact = phi.offset + (quadratic ? phi.amp * m1 * m1 : phi.amp * m1);

   MeasureSampler<D> sampler(m);
   std::vector<HewittSavageRow> table;
   for (std::size_t row_i = 0; row_i < Ns.size(); ++row_i) {
      int N = Ns[row_i];
      if (N < 1) throw ConfigError("sample sizes must be positive");
      Rng rng(seed, static_cast<std::uint64_t>(N));
      double sum = 0.0, sumsq = 0.0;
      for (long k = 0; k < K; ++k) {
         double s = 0.0;
         for (int j = 0; j < N; ++j) s += fnode[sampler.draw_index(rng)];
         s /= N;
         double val = phi.offset + (quadratic ? phi.amp * s * s : phi.amp * s);
         sum += val;
         sumsq += val * val;
      }
      HewittSavageRow row;
      row.N = N;
      row.estimate = sum / K;
      row.se = std::sqrt(std::max(0.0, sumsq / K - row.estimate * row.estimate) / K);
      row.exact = exact;
      row.abs_err = std::fabs(row.estimate - exact);
      table.push_back(row);
   }
   return table;
}

}  // namespace ergonash
