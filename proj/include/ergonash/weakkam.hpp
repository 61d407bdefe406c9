#pragma once

// Ergodic constants by discounted approximation. solve_discounted iterates the
// monotone semi-Lagrangian Bellman operator
//   (T u)(x) = min_v { dt (L(x,v) + W(x)) + (1 - delta dt) u(x + dt v) }
// to its fixed point u_delta; delta * mean(u_delta) tends to the ergodic
// constant lambda of lambda + H(x, Du) = W(x) as delta -> 0, and a vanishing
// discount schedule with Richardson extrapolation removes the O(delta) bias.
// The corrector is the mean-zero gauge of u at the smallest discount.

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "ergonash/catalog.hpp"
#include "ergonash/core.hpp"
#include "ergonash/euler_flow.hpp"
#include "ergonash/grid.hpp"

namespace ergonash {

struct DiscountedOptions {
   double dt = 0.0;        // 0 -> h / R
   double tol = 1e-6;      // sup-norm tolerance on u itself
   long max_sweeps = 6000000;
   int threads = 1;
   bool boundary_check = true;  // reject converged policies on the velocity box edge
};

template <int D>
struct DiscountedSolve {
   GridFunction<D> u;
   std::vector<int> policy;  // argmin velocity node per x node
   double delta = 0.0;
   double dt = 0.0;
   long sweeps = 0;
   double final_diff = 0.0;
};

namespace detail {

// Interpolation stencil for the shift x -> x + dt*v on the periodic grid; the
// same offsets apply at every node, which keeps sweeps cheap.
template <int D>
struct ShiftStencil;

template <>
struct ShiftStencil<1> {
   int base = 0;
   double w = 0.0;
   ShiftStencil() = default;
   ShiftStencil(double shift, int n) {
      double r = shift * n;
      double fl = std::floor(r);
      base = static_cast<int>(fl) % n;
      if (base < 0) base += n;
      w = r - fl;
   }
   double interp(const std::vector<double>& u, int i, int n) const {
      int i0 = i + base;
      if (i0 >= n) i0 -= n;
      int i1 = i0 + 1;
      if (i1 >= n) i1 -= n;
      return (1.0 - w) * u[i0] + w * u[i1];
   }
};

template <>
struct ShiftStencil<2> {
   int b0 = 0, b1 = 0;
   double w0 = 0.0, w1 = 0.0;
   ShiftStencil() = default;
   ShiftStencil(const Vec<2>& shift, int n) {
      double r0 = shift[0] * n, r1 = shift[1] * n;
      double f0 = std::floor(r0), f1 = std::floor(r1);
      b0 = static_cast<int>(f0) % n;
      if (b0 < 0) b0 += n;
      b1 = static_cast<int>(f1) % n;
      if (b1 < 0) b1 += n;
      w0 = r0 - f0;
      w1 = r1 - f1;
   }
   double interp(const std::vector<double>& u, int a, int b, int n) const {
      int a0 = a + b0;
      if (a0 >= n) a0 -= n;
      int a1 = a0 + 1;
      if (a1 >= n) a1 -= n;
      int c0 = b + b1;
      if (c0 >= n) c0 -= n;
      int c1 = c0 + 1;
      if (c1 >= n) c1 -= n;
      const double* r0 = &u[static_cast<std::size_t>(a0) * n];
      const double* r1 = &u[static_cast<std::size_t>(a1) * n];
      return (1 - w0) * ((1 - w1) * r0[c0] + w1 * r0[c1]) +
             w0 * ((1 - w1) * r1[c0] + w1 * r1[c1]);
   }
};

// Velocity nodes ordered by (|v|, lexicographic); iterating candidates in this
// order with a strict improvement test realizes the argmin tie rule.
template <int D>
std::vector<std::size_t> tie_order(const VelocityGrid<D>& vg) {
   std::vector<std::size_t> order(vg.size());
   for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
   std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      double na = norm2<D>(vg.node(a)), nb = norm2<D>(vg.node(b));
      if (na != nb) return na < nb;
      return vg.node(a) < vg.node(b);
   });
   return order;
}

}  // namespace detail

// One application of the Bellman operator; exposed so that its monotonicity
// and contraction properties can be exercised directly.
template <int D>
GridFunction<D> bellman_apply(const LagrangianSpec& spec, const VelocityGrid<D>& vg,
                              const GridFunction<D>& W, double delta, double dt,
                              const GridFunction<D>& u, std::vector<int>* argmin = nullptr) {
   const TorusGrid<D>& xg = W.grid;
   int n = xg.n;
   double beta = 1.0 - delta * dt;
   if (beta < 0.0) throw ConfigError("discount requires delta * dt <= 1");
   GridFunction<D> out(xg);
   std::vector<double> best(xg.size(), 1e300);
   std::vector<int> arg(xg.size(), -1);
   auto order = detail::tie_order<D>(vg);
   for (std::size_t oj = 0; oj < order.size(); ++oj) {
      std::size_t j = order[oj];
      Vec<D> v = vg.node(j);
      if constexpr (D == 1) {
         detail::ShiftStencil<1> st(dt * v[0], n);
         for (int i = 0; i < n; ++i) {
            Vec<D> x = xg.node(i);
            double cand = dt * eval_lagrangian<D>(spec, x, v) + beta * st.interp(u.values, i, n);
            if (cand < best[i]) {
               best[i] = cand;
               arg[i] = static_cast<int>(j);
            }
         }
      } else {
         detail::ShiftStencil<2> st(Vec<2>{dt * v[0], dt * v[1]}, n);
         for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
               std::size_t i = static_cast<std::size_t>(a) * n + b;
               Vec<D> x = xg.node(i);
               double cand = dt * eval_lagrangian<D>(spec, x, v) + beta * st.interp(u.values, a, b, n);
               if (cand < best[i]) {
                  best[i] = cand;
                  arg[i] = static_cast<int>(j);
               }
            }
      }
   }
   for (std::size_t i = 0; i < xg.size(); ++i) out.values[i] = best[i] + dt * W.values[i];
   if (argmin) *argmin = std::move(arg);
   return out;
}

template <int D>
DiscountedSolve<D> solve_discounted(const LagrangianSpec& spec, const VelocityGrid<D>& vg,
                                    const GridFunction<D>& W, double delta,
                                    const DiscountedOptions& opt = {},
                                    const GridFunction<D>* warm = nullptr) {
   if (!(delta > 0.0)) throw ConfigError("discount rate must be positive");
   const TorusGrid<D>& xg = W.grid;
   double dt = (opt.dt > 0.0) ? opt.dt : xg.h() / vg.R;
   if (delta * dt > 1.0) throw ConfigError("discount requires delta * dt <= 1");

   // Precompute L(x, v_j) per velocity node and the per-node shift stencils.
   int n = xg.n;
   std::size_t nx = xg.size(), nvel = vg.size();
   std::vector<double> ltab(nvel * nx);
   for (std::size_t j = 0; j < nvel; ++j) {
      Vec<D> v = vg.node(j);
      for (std::size_t i = 0; i < nx; ++i)
         ltab[j * nx + i] = dt * eval_lagrangian<D>(spec, xg.node(i), v);
   }
   auto order = detail::tie_order<D>(vg);
   double beta = 1.0 - delta * dt;

   DiscountedSolve<D> out;
   out.delta = delta;
   out.dt = dt;
   out.u = warm ? *warm : GridFunction<D>(xg);
   GridFunction<D> next(xg);
   std::vector<double> best(nx);
   std::vector<int> arg(nx, -1);
   double stop = std::max(opt.tol * delta * dt, 1e-15);

   if constexpr (D == 1) {
      std::vector<detail::ShiftStencil<1>> st(nvel);
      for (std::size_t j = 0; j < nvel; ++j) st[j] = detail::ShiftStencil<1>(dt * vg.node(j)[0], n);
      while (true) {
         std::fill(best.begin(), best.end(), 1e300);
         const std::vector<double>& u = out.u.values;
         for (std::size_t oj = 0; oj < nvel; ++oj) {
            std::size_t j = order[oj];
            const double* lrow = &ltab[j * nx];
            const auto& s = st[j];
            for (int i = 0; i < n; ++i) {
               double cand = lrow[i] + beta * s.interp(u, i, n);
               if (cand < best[i]) {
                  best[i] = cand;
                  arg[i] = static_cast<int>(j);
               }
            }
         }
         double diff = 0.0;
         for (std::size_t i = 0; i < nx; ++i) {
            double nv = best[i] + dt * W.values[i];
            diff = std::max(diff, std::fabs(nv - out.u.values[i]));
            next.values[i] = nv;
         }
         std::swap(out.u.values, next.values);
         ++out.sweeps;
         out.final_diff = diff;
         double floor = 5e-15 * (1.0 + std::fabs(out.u.values[0]));
         if (diff <= std::max(stop, floor)) break;
         if (out.sweeps >= opt.max_sweeps)
            throw SolverError("discounted value iteration hit the sweep cap, residual " +
                              std::to_string(diff));
      }
   } else {
      std::vector<detail::ShiftStencil<2>> st(nvel);
      for (std::size_t j = 0; j < nvel; ++j) {
         Vec<2> v = vg.node(j);
         st[j] = detail::ShiftStencil<2>(Vec<2>{dt * v[0], dt * v[1]}, n);
      }
      while (true) {
         std::fill(best.begin(), best.end(), 1e300);
         const std::vector<double>& u = out.u.values;
         for (std::size_t oj = 0; oj < nvel; ++oj) {
            std::size_t j = order[oj];
            const double* lrow = &ltab[j * nx];
            const auto& s = st[j];
            for (int a = 0; a < n; ++a)
               for (int b = 0; b < n; ++b) {
                  std::size_t i = static_cast<std::size_t>(a) * n + b;
                  double cand = lrow[i] + beta * s.interp(u, a, b, n);
                  if (cand < best[i]) {
                     best[i] = cand;
                     arg[i] = static_cast<int>(j);
                  }
               }
         }
         double diff = 0.0;
         for (std::size_t i = 0; i < nx; ++i) {
            double nv = best[i] + dt * W.values[i];
            diff = std::max(diff, std::fabs(nv - out.u.values[i]));
            next.values[i] = nv;
         }
         std::swap(out.u.values, next.values);
         ++out.sweeps;
         out.final_diff = diff;
         double floor = 5e-15 * (1.0 + std::fabs(out.u.values[0]));
         if (diff <= std::max(stop, floor)) break;
         if (out.sweeps >= opt.max_sweeps)
            throw SolverError("discounted value iteration hit the sweep cap, residual " +
                              std::to_string(diff));
      }
   }
   out.policy.assign(arg.begin(), arg.end());
   if (opt.boundary_check) {
      for (std::size_t i = 0; i < nx; ++i)
         if (vg.on_boundary(static_cast<std::size_t>(out.policy[i])))
            throw GridError("velocity grid too small: converged policy uses the box boundary");
   }
   return out;
}

template <int D>
struct WeakKamSolution {
   double lambda = 0.0;
   GridFunction<D> corrector;  // mean-zero
   std::vector<int> policy;
   std::vector<std::pair<double, double>> discount_trace;  // (delta, delta*mean(u_delta))
   VelocityGrid<D> vgrid;
   double dt = 0.0;
   double delta_min = 0.0;
   double u_mean = 0.0;  // mean of u at delta_min, reconstructs u from corrector
};

namespace detail {

// Neville extrapolation of (delta_k, lambda_k) to delta = 0.
inline double extrapolate_to_zero(const std::vector<std::pair<double, double>>& pts) {
   std::size_t k = pts.size();
   std::vector<double> f(k);
   for (std::size_t i = 0; i < k; ++i) f[i] = pts[i].second;
   for (std::size_t level = 1; level < k; ++level)
      for (std::size_t i = 0; i + level < k; ++i) {
         double xi = pts[i].first, xj = pts[i + level].first;
         f[i] = (xi * f[i + 1] - xj * f[i]) / (xi - xj);
      }
   return f[0];
}

}  // namespace detail

inline const std::vector<double>& default_discount_schedule() {
   static const std::vector<double> s{0.1, 0.05, 0.025};
   return s;
}

template <int D>
WeakKamSolution<D> ergodic_constant(const LagrangianSpec& spec, const VelocityGrid<D>& vg,
                                    const GridFunction<D>& W,
                                    const std::vector<double>& schedule = default_discount_schedule(),
                                    const DiscountedOptions& opt = {}) {
   if (schedule.empty()) throw ConfigError("empty discount schedule");
   WeakKamSolution<D> out;
   out.vgrid = vg;
   GridFunction<D> warm;
   bool have_warm = false;
   double prev_delta = 0.0, prev_lambda = 0.0;
   DiscountedSolve<D> solve;
   for (double delta : schedule) {
      if (have_warm) {
         // u_delta ~ lambda/delta + corrector: rescale the discounted mass.
         double shift = prev_lambda / delta - prev_lambda / prev_delta;
         GridFunction<D> guess = warm;
         guess.shift(shift);
         solve = solve_discounted<D>(spec, vg, W, delta, opt, &guess);
      } else {
         solve = solve_discounted<D>(spec, vg, W, delta, opt);
      }
      double lam = delta * solve.u.mean();
      out.discount_trace.emplace_back(delta, lam);
      warm = solve.u;
      have_warm = true;
      prev_delta = delta;
      prev_lambda = lam;
   }
   out.lambda = detail::extrapolate_to_zero(out.discount_trace);
   out.u_mean = solve.u.mean();
   out.corrector = solve.u;
   out.corrector.shift(-out.u_mean);
   out.policy = solve.policy;
   out.dt = solve.dt;
   out.delta_min = solve.delta;
   return out;
}

// c(H) = -inf over closed measures of the action; the discounted scheme
// computes the infimum side, so the critical value is its negative.
template <int D>
double critical_value(const LagrangianSpec& spec, const TorusGrid<D>& xg, const VelocityGrid<D>& vg,
                      const std::vector<double>& schedule = default_discount_schedule(),
                      const DiscountedOptions& opt = {}) {
   GridFunction<D> zero(xg);
   return -ergodic_constant<D>(spec, vg, zero, schedule, opt).lambda;
}

// Argmin velocity vectors per node.
template <int D>
std::vector<Vec<D>> feedback_policy(const WeakKamSolution<D>& sol) {
   std::vector<Vec<D>> v(sol.policy.size());
   for (std::size_t i = 0; i < v.size(); ++i) v[i] = sol.vgrid.node(sol.policy[i]);
   return v;
}

// True when the stored policy attains the Bellman minimum for the stored u.
template <int D>
bool policy_is_bellman_argmin(const WeakKamSolution<D>& sol, const LagrangianSpec& spec,
                              const GridFunction<D>& W) {
   GridFunction<D> u = sol.corrector;
   u.shift(sol.u_mean);
   std::vector<int> arg;
   bellman_apply<D>(spec, sol.vgrid, W, sol.delta_min, sol.dt, u, &arg);
   for (std::size_t i = 0; i < arg.size(); ++i)
      if (arg[i] != sol.policy[i]) return false;
   return true;
}

// Piecewise-multilinear velocity field from the policy, for feedback runs.
template <int D>
std::function<Vec<D>(const Vec<D>&)> policy_field(const TorusGrid<D>& xg,
                                                  const WeakKamSolution<D>& sol) {
   std::array<GridFunction<D>, D> comps;
   for (int k = 0; k < D; ++k) comps[k] = GridFunction<D>(xg);
   for (std::size_t i = 0; i < xg.size(); ++i) {
      Vec<D> v = sol.vgrid.node(sol.policy[i]);
      for (int k = 0; k < D; ++k) comps[k].values[i] = v[k];
   }
   return [comps](const Vec<D>& x) {
      Vec<D> v{};
      for (int k = 0; k < D; ++k) v[k] = comps[k].eval(x);
      return v;
   };
}

// Trajectory of xdot = field(x) by the explicit midpoint rule; velocities
// recorded along the path feed ergodic averages.
template <int D>
Trajectory<D> simulate_feedback(const std::function<Vec<D>(const Vec<D>&)>& field, const Vec<D>& x0,
                                double dt, double T) {
   std::size_t steps = static_cast<std::size_t>(std::llround(T / dt));
   Trajectory<D> out;
   out.dt = dt;
   out.x.reserve(steps + 1);
   out.v.reserve(steps + 1);
   Vec<D> x = wrap<D>(x0);
   out.x.push_back(x);
   out.v.push_back(field(x));
   for (std::size_t k = 0; k < steps; ++k) {
      Vec<D> vmid = field(wrap<D>(axpy<D>(0.5 * dt, field(x), x)));
      x = wrap<D>(axpy<D>(dt, vmid, x));
      out.x.push_back(x);
      out.v.push_back(field(x));
   }
   return out;
}

}  // namespace ergonash
