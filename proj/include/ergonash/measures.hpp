#pragma once

// Probability measures on grid nodes: state measures on the torus grid, phase
// measures on (state x velocity) nodes, marginals, small product measures,
// empirical measures, and the exact Wasserstein-1 distance for the torus
// metric min(|x-y|, 1-|x-y|) summed per axis.

#include <algorithm>
#include <cmath>
#include <type_traits>
#include <vector>

#include "ergonash/core.hpp"
#include "ergonash/grid.hpp"
#include "ergonash/rng.hpp"
#include "ergonash/simplex.hpp"

namespace ergonash {

inline constexpr double measure_mass_tol = 1e-10;
inline constexpr double measure_neg_tol = -1e-12;

template <int D>
struct StateMeasure {
   TorusGrid<D> grid;
   std::vector<double> w;

   StateMeasure() = default;
   explicit StateMeasure(const TorusGrid<D>& g, double fill = 0.0) : grid(g), w(g.size(), fill) {}

   static StateMeasure uniform(const TorusGrid<D>& g) {
      return StateMeasure(g, 1.0 / static_cast<double>(g.size()));
   }
   static StateMeasure dirac(const TorusGrid<D>& g, const Vec<D>& x) {
      StateMeasure m(g);
      m.w[g.nearest(x)] = 1.0;
      return m;
   }

   double mass() const {
      double s = 0.0;
      for (double v : w) s += v;
      return s;
   }
   void validate(const char* what = "state measure") const {
      for (double v : w)
         if (v < measure_neg_tol) throw ConfigError(std::string(what) + ": negative weight");
      if (std::fabs(mass() - 1.0) > measure_mass_tol)
         throw ConfigError(std::string(what) + ": mass differs from 1");
   }

   // integral of f over the measure
   double integrate(const std::function<double(const Vec<D>&)>& f) const {
      double s = 0.0;
      for (std::size_t i = 0; i < w.size(); ++i)
         if (w[i] != 0.0) s += w[i] * f(grid.node(i));
      return s;
   }
};

template <int D>
struct PhaseMeasure {
   TorusGrid<D> xgrid;
   VelocityGrid<D> vgrid;
   std::vector<double> w;  // x-major: index = ix * vgrid.size() + iv

   PhaseMeasure() = default;
   PhaseMeasure(const TorusGrid<D>& xg, const VelocityGrid<D>& vg)
       : xgrid(xg), vgrid(vg), w(xg.size() * vg.size(), 0.0) {}

   std::size_t index(std::size_t ix, std::size_t iv) const { return ix * vgrid.size() + iv; }

   static PhaseMeasure dirac(const TorusGrid<D>& xg, const VelocityGrid<D>& vg, std::size_t ix,
                             std::size_t iv) {
      PhaseMeasure m(xg, vg);
      m.w[m.index(ix, iv)] = 1.0;
      return m;
   }

   // uniform in x, all mass at the zero-velocity node
   static PhaseMeasure uniform_rest(const TorusGrid<D>& xg, const VelocityGrid<D>& vg) {
      PhaseMeasure m(xg, vg);
      std::array<int, D> c{};
      for (int k = 0; k < D; ++k) c[k] = vg.center();
      std::size_t iv0 = vg.pack(c);
      double u = 1.0 / static_cast<double>(xg.size());
      for (std::size_t ix = 0; ix < xg.size(); ++ix) m.w[m.index(ix, iv0)] = u;
      return m;
   }

   double mass() const {
      double s = 0.0;
      for (double v : w) s += v;
      return s;
   }
   void validate(const char* what = "phase measure") const {
      for (double v : w)
         if (v < measure_neg_tol) throw ConfigError(std::string(what) + ": negative weight");
      if (std::fabs(mass() - 1.0) > measure_mass_tol)
         throw ConfigError(std::string(what) + ": mass differs from 1");
   }

   double integrate(const std::function<double(const Vec<D>&, const Vec<D>&)>& f) const {
      double s = 0.0;
      std::size_t nv = vgrid.size();
      for (std::size_t i = 0; i < w.size(); ++i)
         if (w[i] != 0.0) s += w[i] * f(xgrid.node(i / nv), vgrid.node(i % nv));
      return s;
   }

   void scale_add(double a, const PhaseMeasure& other, double b) {
      // this <- a*this + b*other, used by damped fixed-point updates
      for (std::size_t i = 0; i < w.size(); ++i) w[i] = a * w[i] + b * other.w[i];
   }
};

template <int D>
StateMeasure<D> marginal(const PhaseMeasure<D>& mu) {
   StateMeasure<D> m(mu.xgrid);
   std::size_t nv = mu.vgrid.size();
   for (std::size_t ix = 0; ix < mu.xgrid.size(); ++ix) {
      double s = 0.0;
      for (std::size_t iv = 0; iv < nv; ++iv) s += mu.w[ix * nv + iv];
      m.w[ix] = s;
   }
   return m;
}

// Dense joint product of a few marginals, tuple index in player-major order.
template <int D>
struct ProductMeasure {
   int players = 0;
   TorusGrid<D> grid;
   std::vector<double> w;

   std::vector<std::size_t> unpack(std::size_t idx) const {
      std::vector<std::size_t> t(players);
      std::size_t base = grid.size();
      for (int i = players - 1; i >= 0; --i) {
         t[i] = idx % base;
         idx /= base;
      }
      return t;
   }
};

template <int D>
ProductMeasure<D> product_measure(const std::vector<StateMeasure<D>>& marginals) {
   if (marginals.empty() || marginals.size() > 4)
      throw GridError("product measures support 1..4 factors");
   ProductMeasure<D> out;
   out.players = static_cast<int>(marginals.size());
   out.grid = marginals[0].grid;
   std::size_t base = out.grid.size();
   std::size_t total = 1;
   for (int i = 0; i < out.players; ++i) {
      if (marginals[i].grid.n != out.grid.n) throw GridError("product factors on mismatched grids");
      total *= base;
      if (total > (std::size_t{1} << 26)) throw GridError("product measure too large to enumerate");
   }
   out.w.assign(total, 1.0);
   for (std::size_t idx = 0; idx < total; ++idx) {
      std::size_t rest = idx;
      for (int i = out.players - 1; i >= 0; --i) {
         out.w[idx] *= marginals[i].w[rest % base];
         rest /= base;
      }
   }
   return out;
}

template <int D>
StateMeasure<D> empirical_measure(const TorusGrid<D>& g,
                                  const std::type_identity_t<std::vector<Vec<D>>>& points) {
   if (points.empty()) throw ConfigError("empirical measure of an empty sample");
   StateMeasure<D> m(g);
   double u = 1.0 / static_cast<double>(points.size());
   for (const auto& x : points) m.w[g.nearest(x)] += u;
   return m;
}

// Exact optimal transport by linear program; ground cost is the per-axis
// circle distance summed over axes. Used directly in d=2 and as the oracle
// the 1-d shifted-CDF formula is checked against.
template <int D>
double wasserstein1_lp(const StateMeasure<D>& a, const StateMeasure<D>& b) {
   std::vector<std::size_t> sa, sb;
   for (std::size_t i = 0; i < a.w.size(); ++i)
      if (a.w[i] > 0.0) sa.push_back(i);
   for (std::size_t i = 0; i < b.w.size(); ++i)
      if (b.w[i] > 0.0) sb.push_back(i);
   if (sa.size() * sb.size() > 250000 || sa.size() + sb.size() > 1300)
      throw GridError("measure supports too large for the exact transport program");
   LpProblem lp;
   lp.rows = static_cast<int>(sa.size() + sb.size());
   lp.rhs.resize(lp.rows);
   for (std::size_t i = 0; i < sa.size(); ++i) lp.rhs[i] = a.w[sa[i]];
   for (std::size_t j = 0; j < sb.size(); ++j) lp.rhs[sa.size() + j] = b.w[sb[j]];
   for (std::size_t i = 0; i < sa.size(); ++i) {
      Vec<D> xi = a.grid.node(sa[i]);
      for (std::size_t j = 0; j < sb.size(); ++j) {
         double cost = torus_dist<D>(xi, b.grid.node(sb[j]));
         lp.add_column(cost, {{static_cast<int>(i), 1.0}, {static_cast<int>(sa.size() + j), 1.0}});
      }
   }
   LpSolution sol = solve_lp(lp);
   return sol.value;
}

// d=1 exact formula: W1 = min over cyclic offsets alpha of the shifted-CDF sum
// sum_k |G_k - alpha| * h with G the cumulative weight difference. The optimum
// is attained at one of the n values of G, so scanning all of them is exact.
inline double wasserstein1_circle(const StateMeasure<1>& a, const StateMeasure<1>& b) {
   int n = a.grid.n;
   std::vector<double> G(n);
   double acc = 0.0;
   for (int k = 0; k < n; ++k) {
      acc += a.w[k] - b.w[k];
      G[k] = acc;
   }
   double h = a.grid.h();
   double best = 1e300;
   for (int c = 0; c < n; ++c) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += std::fabs(G[k] - G[c]);
      best = std::min(best, s * h);
   }
   return best;
}

template <int D>
double wasserstein1(const StateMeasure<D>& a, const StateMeasure<D>& b) {
   if (a.grid.n != b.grid.n) throw GridError("wasserstein1 needs a shared grid");
   if constexpr (D == 1) {
      return wasserstein1_circle(a, b);
   } else {
      return wasserstein1_lp<D>(a, b);
   }
}

// Prepared inverse-CDF sampler over a state measure's atoms.
template <int D>
struct MeasureSampler {
   const StateMeasure<D>* m;
   std::vector<double> cdf;

   explicit MeasureSampler(const StateMeasure<D>& mm) : m(&mm), cdf(Rng::cumulative(mm.w)) {}

   std::size_t draw_index(Rng& rng) const { return rng.sample(cdf); }
   Vec<D> draw(Rng& rng) const { return m->grid.node(rng.sample(cdf)); }
};

}  // namespace ergonash
