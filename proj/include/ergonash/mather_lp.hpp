#pragma once

// Minimizing (Mather) measures as linear programs over discretized closed
// measures: nonnegative weights on phase nodes with unit mass whose momentum
// field has vanishing discrete divergence. Holonomy rows test against the
// periodic hat function at each node with central differences,
//   sum_{x,v} mu(x,v) <v, Dphi_y(x)> = 0  for every node y,
// so each column (x,v) touches only the 2*d neighbor rows of x and the mass
// row. Constants are annihilated by central differences, hence every measure
// of the form g(v) dx is feasible, as is any rest measure delta_(x0, 0).

#include <cmath>
#include <string>
#include <vector>

#include "ergonash/catalog.hpp"
#include "ergonash/core.hpp"
#include "ergonash/grid.hpp"
#include "ergonash/measures.hpp"
#include "ergonash/simplex.hpp"

namespace ergonash {

template <int D>
struct HolonomyConstraints {
   TorusGrid<D> xgrid;
   VelocityGrid<D> vgrid;
   LpProblem lp;  // costs left at zero; mass row is the last row
};

template <int D>
HolonomyConstraints<D> assemble_constraints(const TorusGrid<D>& xg, const VelocityGrid<D>& vg) {
   HolonomyConstraints<D> out;
   out.xgrid = xg;
   out.vgrid = vg;
   std::size_t nx = xg.size(), nv = vg.size();
   out.lp.rows = static_cast<int>(nx + 1);
   out.lp.rhs.assign(nx + 1, 0.0);
   out.lp.rhs[nx] = 1.0;
   double inv2h = 0.5 * xg.n;  // 1 / (2h)
   std::vector<std::pair<int, double>> entries;
   for (std::size_t ix = 0; ix < nx; ++ix) {
      auto mi = xg.unpack(ix);
      std::array<std::size_t, 2 * D> nbr{};
      for (int k = 0; k < D; ++k) {
         auto up = mi, dn = mi;
         up[k] = (mi[k] + 1) % xg.n;
         dn[k] = (mi[k] - 1 + xg.n) % xg.n;
         nbr[2 * k] = xg.pack(up);
         nbr[2 * k + 1] = xg.pack(dn);
      }
      for (std::size_t iv = 0; iv < nv; ++iv) {
         Vec<D> v = vg.node(iv);
         entries.clear();
         for (int k = 0; k < D; ++k) {
            if (v[k] == 0.0) continue;
            entries.push_back({static_cast<int>(nbr[2 * k]), v[k] * inv2h});
            entries.push_back({static_cast<int>(nbr[2 * k + 1]), -v[k] * inv2h});
         }
         entries.push_back({static_cast<int>(nx), 1.0});
         out.lp.add_column(0.0, entries);
      }
   }
   return out;
}

template <int D>
struct MatherResult {
   PhaseMeasure<D> measure;
   double value = 0.0;
   std::vector<std::size_t> support;  // phase-node indices carrying weight
   std::vector<double> dual;          // per holonomy row, then mass row
   double complementarity_gap = 0.0;
   double constraint_residual = 0.0;
   bool multiple_optima = false;
   long lp_iterations = 0;
};

struct MatherOptions {
   double lp_tol = 1e-9;
   bool pure_bland = false;
   double support_tol = 1e-12;
   bool detect_multiplicity = true;
};

// Minimize int (L + W) dmu over discretized closed measures. Returns the
// optimal vertex, its dual certificate, and a non-uniqueness flag from a
// second solve under the lexicographic objective perturbation 1e-9 * index.
template <int D>
MatherResult<D> solve_mather(const LagrangianSpec& spec, const GridFunction<D>& W,
                             const VelocityGrid<D>& vg, const MatherOptions& opt = {}) {
   const TorusGrid<D>& xg = W.grid;
   HolonomyConstraints<D> hc = assemble_constraints<D>(xg, vg);
   std::size_t nv = vg.size();
   for (std::size_t ix = 0; ix < xg.size(); ++ix) {
      double wx = W.values[ix];
      Vec<D> x = xg.node(ix);
      for (std::size_t iv = 0; iv < nv; ++iv)
         hc.lp.cost[ix * nv + iv] = eval_lagrangian<D>(spec, x, vg.node(iv)) + wx;
   }
   LpOptions lo;
   lo.tol = opt.lp_tol;
   lo.pure_bland = opt.pure_bland;
   LpSolution sol = solve_lp(hc.lp, lo);

   MatherResult<D> out;
   out.measure = PhaseMeasure<D>(xg, vg);
   out.measure.w = sol.x;
   out.value = sol.value;
   out.dual = sol.y;
   out.lp_iterations = sol.iterations;
   out.constraint_residual = sol.max_primal_residual;
   out.complementarity_gap = complementary_slackness_gap(hc.lp, sol);
   for (std::size_t i = 0; i < sol.x.size(); ++i)
      if (sol.x[i] > opt.support_tol) out.support.push_back(i);

   if (opt.detect_multiplicity) {
      // Tilt the objective toward the low-index and the high-index ends of
      // the optimal face in turn; a tilt in only one direction can land on
      // the vertex the unperturbed solve already picked and miss the tie.
      for (double sign : {1.0, -1.0}) {
         LpProblem perturbed = hc.lp;
         for (std::size_t j = 0; j < perturbed.cost.size(); ++j)
            perturbed.cost[j] += sign * 1e-9 * static_cast<double>(j);
         LpSolution alt = solve_lp(perturbed, lo);
         double alt_value = 0.0;
         for (std::size_t j = 0; j < hc.lp.cost.size(); ++j) alt_value += hc.lp.cost[j] * alt.x[j];
         bool same_support = true;
         for (std::size_t i = 0; i < sol.x.size() && same_support; ++i) {
            bool a = sol.x[i] > opt.support_tol, b = alt.x[i] > opt.support_tol;
            if (a != b) same_support = false;
         }
         if (!same_support &&
             std::fabs(alt_value - out.value) <= 1e-7 * (1.0 + std::fabs(out.value))) {
            out.multiple_optima = true;
            break;
         }
      }
   }
   return out;
}

template <int D>
double mather_value(const LagrangianSpec& spec, const GridFunction<D>& W, const VelocityGrid<D>& vg,
                    const MatherOptions& opt = {}) {
   return solve_mather<D>(spec, W, vg, opt).value;
}

// Worst violation of the discrete stationarity (holonomy) rows by a measure;
// the mass row is excluded, PhaseMeasure::validate already polices it.
template <int D>
double holonomy_residual(const PhaseMeasure<D>& mu) {
   HolonomyConstraints<D> hc = assemble_constraints<D>(mu.xgrid, mu.vgrid);
   std::size_t nx = mu.xgrid.size();
   std::vector<double> res(nx, 0.0);
   const LpProblem& lp = hc.lp;
   for (std::size_t j = 0; j + 1 <= lp.cost.size(); ++j) {
      double w = mu.w[j];
      if (w == 0.0) continue;
      for (int e = lp.col_ptr[j]; e < lp.col_ptr[j + 1]; ++e) {
         std::size_t r = static_cast<std::size_t>(lp.row_idx[e]);
         if (r < nx) res[r] += lp.col_val[e] * w;
      }
   }
   double worst = 0.0;
   for (double r : res) worst = std::max(worst, std::fabs(r));
   return worst;
}

// x-nodes of the projected support: state marginal mass above tol.
template <int D>
std::vector<std::size_t> mather_support(const MatherResult<D>& r, double tol = 1e-12) {
   StateMeasure<D> m = marginal(r.measure);
   std::vector<std::size_t> nodes;
   for (std::size_t i = 0; i < m.w.size(); ++i)
      if (m.w[i] > tol) nodes.push_back(i);
   return nodes;
}

}  // namespace ergonash
