#pragma once

// Flow of the Euler-Lagrange equation d/dt D_vL = D_x(L + F), trajectory
// containers, the first-integral along that flow, push-forward invariance
// residuals for phase measures, and the trajectory-wise domination and
// calibration checks used to certify equilibrium values.

#include <cmath>
#include <functional>
#include <vector>

#include "ergonash/catalog.hpp"
#include "ergonash/core.hpp"
#include "ergonash/grid.hpp"
#include "ergonash/measures.hpp"

namespace ergonash {

template <int D>
struct PhaseState {
   Vec<D> x{};
   Vec<D> v{};
};

template <int D>
struct Trajectory {
   double dt = 0.0;
   std::vector<Vec<D>> x;  // wrapped positions, length T/dt + 1
   std::vector<Vec<D>> v;

   double horizon() const { return dt * (x.size() - 1); }
};

template <int D>
using PotentialGradient = std::function<Vec<D>(const Vec<D>&)>;

// One symmetric Stormer-Verlet step of
//   xdot = v,  d/dt D_vL(v) = D_xL(x) + D_xF(x).
// All catalog kinds are separable (velocity Hessian independent of x), so the
// momentum half-steps make the update second order and volume preserving.
template <int D>
PhaseState<D> el_step(const LagrangianSpec& s, const PotentialGradient<D>& grad_f,
                      const PhaseState<D>& state, double dt) {
   if (!(dt > 0.0) || dt > 0.1) throw ConfigError("el_step requires 0 < dt <= 0.1");
   auto force = [&](const Vec<D>& x) {
      Vec<D> g = potential_gradient<D>(s, x);
      if (grad_f) {
         Vec<D> e = grad_f(x);
         for (int k = 0; k < D; ++k) g[k] += e[k];
      }
      return g;
   };
   Vec<D> p = momentum<D>(s, state.v);
   Vec<D> g0 = force(state.x);
   for (int k = 0; k < D; ++k) p[k] += 0.5 * dt * g0[k];
   Vec<D> vh = velocity_from_momentum<D>(s, p);
   PhaseState<D> out;
   out.x = wrap<D>(axpy<D>(dt, vh, state.x));
   Vec<D> g1 = force(out.x);
   for (int k = 0; k < D; ++k) p[k] += 0.5 * dt * g1[k];
   out.v = velocity_from_momentum<D>(s, p);
   return out;
}

template <int D>
Trajectory<D> integrate_el(const LagrangianSpec& s, const PotentialGradient<D>& grad_f,
                           const PhaseState<D>& start, double dt, double T) {
   std::size_t steps = static_cast<std::size_t>(std::llround(T / dt));
   Trajectory<D> out;
   out.dt = dt;
   out.x.reserve(steps + 1);
   out.v.reserve(steps + 1);
   PhaseState<D> cur{wrap<D>(start.x), start.v};
   out.x.push_back(cur.x);
   out.v.push_back(cur.v);
   for (std::size_t k = 0; k < steps; ++k) {
      cur = el_step<D>(s, grad_f, cur, dt);
      out.x.push_back(cur.x);
      out.v.push_back(cur.v);
   }
   return out;
}

// First integral <D_vL, v> - L - F, conserved by the flow above.
template <int D>
double energy(const LagrangianSpec& s, const std::function<double(const Vec<D>&)>& F,
              const PhaseState<D>& state) {
   double e = dot<D>(momentum<D>(s, state.v), state.v) - eval_lagrangian<D>(s, state.x, state.v);
   if (F) e -= F(state.x);
   return e;
}

namespace detail {

// Low-frequency trig in x times velocity monomials of degree <= 2; the family
// separates nearby phase points well enough to flag non-invariant measures.
template <int D>
double observable(int id, const Vec<D>& x, const Vec<D>& v);

template <>
inline double observable<1>(int id, const Vec<1>& x, const Vec<1>& v) {
   static constexpr int ntrig = 5;
   int p = id / ntrig, t = id % ntrig;
   double tv = 1.0;
   switch (t) {
      case 1: tv = std::sin(two_pi * x[0]); break;
      case 2: tv = std::cos(two_pi * x[0]); break;
      case 3: tv = std::sin(2 * two_pi * x[0]); break;
      case 4: tv = std::cos(2 * two_pi * x[0]); break;
      default: break;
   }
   double pv = (p == 0) ? 1.0 : (p == 1 ? v[0] : v[0] * v[0]);
   return tv * pv;
}

template <>
inline double observable<2>(int id, const Vec<2>& x, const Vec<2>& v) {
   static constexpr int ntrig = 5;
   int p = id / ntrig, t = id % ntrig;
   double tv = 1.0;
   switch (t) {
      case 1: tv = std::sin(two_pi * x[0]); break;
      case 2: tv = std::cos(two_pi * x[0]); break;
      case 3: tv = std::sin(two_pi * x[1]); break;
      case 4: tv = std::cos(two_pi * x[1]); break;
      default: break;
   }
   double pv = 1.0;
   switch (p) {
      case 1: pv = v[0]; break;
      case 2: pv = v[1]; break;
      case 3: pv = v[0] * v[0]; break;
      case 4: pv = v[1] * v[1]; break;
      case 5: pv = v[0] * v[1]; break;
      default: break;
   }
   return tv * pv;
}

template <int D>
constexpr int observable_count() {
   return D == 1 ? 15 : 30;
}

}  // namespace detail

// max_f |int f d(Phi_dt # mu) - int f dmu| over the observable family; the
// first `count` non-constant members are used.
template <int D>
double invariance_residual(const PhaseMeasure<D>& mu, const LagrangianSpec& s,
                           const PotentialGradient<D>& grad_f, double dt, int count = 12) {
   count = std::min(count, detail::observable_count<D>() - 1);
   std::size_t nv = mu.vgrid.size();
   std::vector<double> diff(count, 0.0);
   for (std::size_t i = 0; i < mu.w.size(); ++i) {
      if (mu.w[i] == 0.0) continue;
      Vec<D> x = mu.xgrid.node(i / nv);
      Vec<D> v = mu.vgrid.node(i % nv);
      PhaseState<D> moved = el_step<D>(s, grad_f, PhaseState<D>{x, v}, dt);
      for (int f = 0; f < count; ++f)
         diff[f] += mu.w[i] * (detail::observable<D>(f + 1, moved.x, moved.v) -
                               detail::observable<D>(f + 1, x, v));
   }
   double worst = 0.0;
   for (double d : diff) worst = std::max(worst, std::fabs(d));
   return worst;
}

struct DominationReport {
   bool holds = false;
   double worst_slack = 0.0;  // max over prefix windows of left - right
   double horizon = 0.0;
};

namespace detail {

// Shared evaluation of phi(X(t_k)) - phi(X(0)) - int_0^{t_k} (L^i + F^i) - c*t_k
// over all prefix windows; trapezoid quadrature on the trajectory time grid.
template <int D>
std::vector<double> domination_slacks(const ProductGridFunction& phi, double c,
                                      const std::vector<Trajectory<D>>& trajs,
                                      const LagrangianSpec& L_i, const CouplingSpec& F_i, int i) {
   int N = static_cast<int>(trajs.size());
   if (N * D != phi.dims) throw GridError("phi dimension mismatch with trajectory tuple");
   std::size_t len = trajs[0].x.size();
   for (const auto& t : trajs)
      if (t.x.size() != len || t.dt != trajs[0].dt)
         throw ConfigError("trajectory tuple must share dt and horizon");
   double dt = trajs[0].dt;
   auto coords = [&](std::size_t k) {
      std::array<double, 3> z{};
      int slot = 0;
      for (int j = 0; j < N; ++j)
         for (int a = 0; a < D; ++a) z[slot++] = trajs[j].x[k][a];
      return z;
   };
   std::vector<Vec<D>> pos(N);
   auto running_cost = [&](std::size_t k) {
      for (int j = 0; j < N; ++j) pos[j] = trajs[j].x[k];
      return eval_lagrangian<D>(L_i, trajs[i].x[k], trajs[i].v[k]) + coupling_joint<D>(F_i, pos, i);
   };
   std::vector<double> slack(len, 0.0);
   double phi0 = phi.eval(coords(0));
   double integral = 0.0;
   double prev_cost = running_cost(0);
   for (std::size_t k = 1; k < len; ++k) {
      double cost = running_cost(k);
      integral += 0.5 * dt * (prev_cost + cost);
      prev_cost = cost;
      double left = phi.eval(coords(k)) - phi0;
      slack[k] = left - integral - c * (dt * k);
   }
   return slack;
}

}  // namespace detail

template <int D>
DominationReport check_dominated(const ProductGridFunction& phi, double c,
                                 const std::vector<Trajectory<D>>& trajs,
                                 const LagrangianSpec& L_i, const CouplingSpec& F_i, int i,
                                 double tol) {
   auto slack = detail::domination_slacks<D>(phi, c, trajs, L_i, F_i, i);
   DominationReport rep;
   rep.horizon = trajs[0].horizon();
   rep.worst_slack = -1e300;
   for (std::size_t k = 1; k < slack.size(); ++k) rep.worst_slack = std::max(rep.worst_slack, slack[k]);
   rep.holds = rep.worst_slack <= tol;
   return rep;
}

template <int D>
DominationReport check_calibrated(const ProductGridFunction& phi, double c,
                                  const std::vector<Trajectory<D>>& trajs,
                                  const LagrangianSpec& L_i, const CouplingSpec& F_i, int i,
                                  double tol) {
   auto slack = detail::domination_slacks<D>(phi, c, trajs, L_i, F_i, i);
   DominationReport rep;
   rep.horizon = trajs[0].horizon();
   rep.worst_slack = 0.0;
   for (std::size_t k = 1; k < slack.size(); ++k)
      rep.worst_slack = std::max(rep.worst_slack, std::fabs(slack[k]));
   rep.holds = rep.worst_slack <= tol;
   return rep;
}

struct ErgodicAverage {
   double average = 0.0;       // (1/T) int_0^T (L^i + F^i)
   double tail_average = 0.0;  // same over [T/2, T], exposes Cesaro convergence
   double horizon = 0.0;
};

template <int D>
ErgodicAverage ergodic_average(const std::vector<Trajectory<D>>& trajs, const LagrangianSpec& L_i,
                               const CouplingSpec& F_i, int i) {
   double T = trajs[0].horizon();
   if (T < 10.0 - 1e-9) throw ConfigError("ergodic averages need horizon T >= 10");
   std::size_t len = trajs[0].x.size();
   double dt = trajs[0].dt;
   std::vector<Vec<D>> pos(trajs.size());
   auto cost = [&](std::size_t k) {
      for (std::size_t j = 0; j < trajs.size(); ++j) pos[j] = trajs[j].x[k];
      return eval_lagrangian<D>(L_i, trajs[i].x[k], trajs[i].v[k]) +
             coupling_joint<D>(F_i, pos, i);
   };
   ErgodicAverage out;
   out.horizon = T;
   double full = 0.0;
   std::size_t half = len / 2;
   double tail = 0.0;
   double prev = cost(0);
   for (std::size_t k = 1; k < len; ++k) {
      double cur = cost(k);
      full += 0.5 * dt * (prev + cur);
      if (k > half) tail += 0.5 * dt * (prev + cur);
      prev = cur;
   }
   out.average = full / T;
   double tail_T = dt * (len - 1 - half);
   out.tail_average = (tail_T > 0.0) ? tail / tail_T : out.average;
   return out;
}

}  // namespace ergonash
