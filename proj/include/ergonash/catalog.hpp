#pragma once

// Model catalog: the closed family of Tonelli Lagrangians and coupling terms
// the solvers accept. Every kind is smooth, periodic in x, strictly convex and
// superlinear in v on the working box, with
//   (1/C0)(1+|v|^2) <= L(x,v) <= C0(1+|v|^2),  D^2_vv L >= (1/C0) Id
// on sampled nodes; verify_tonelli re-checks those bounds for a concrete grid.

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "ergonash/core.hpp"
#include "ergonash/grid.hpp"

namespace ergonash {

enum class LagrangianKind { quadratic_kinetic, anisotropic_quadratic, quartic_perturbed };

enum class CouplingKind { zero, separable, pairwise, mf_linear, mf_quadratic };

// Symmetric 2x2 block; d=1 models use only a11.
struct AnisoMatrix {
   double a11 = 1.0, a22 = 1.0, a12 = 0.0;
   bool operator==(const AnisoMatrix&) const = default;
};

struct LagrangianSpec {
   LagrangianKind kind = LagrangianKind::quadratic_kinetic;
   int d = 1;
   double C0 = 4.0;

   // potential a * sum_k (1 - cos(2*pi*freq*(x_k - phase))) + offset
   double pot_amp = 0.0;
   double pot_phase = 0.0;
   int pot_freq = 1;
   double pot_offset = 0.0;

   AnisoMatrix aniso;      // anisotropic_quadratic only
   double quartic = 0.0;   // quartic_perturbed only; coefficient q >= 0

   bool operator==(const LagrangianSpec&) const = default;
};

struct CouplingSpec {
   CouplingKind kind = CouplingKind::zero;
   double amp = 0.0;
   double phase = 0.0;
   int freq = 1;
   double offset = 0.0;

   bool operator==(const CouplingSpec&) const = default;
};

inline constexpr double two_pi = 2.0 * std::numbers::pi;

template <int D>
double potential(const LagrangianSpec& s, const Vec<D>& x) {
   double p = s.pot_offset;
   for (int k = 0; k < D; ++k)
      p += s.pot_amp * (1.0 - std::cos(two_pi * s.pot_freq * (x[k] - s.pot_phase)));
   return p;
}

template <int D>
Vec<D> potential_gradient(const LagrangianSpec& s, const Vec<D>& x) {
   Vec<D> g{};
   for (int k = 0; k < D; ++k)
      g[k] = s.pot_amp * two_pi * s.pot_freq * std::sin(two_pi * s.pot_freq * (x[k] - s.pot_phase));
   return g;
}

template <int D>
double kinetic(const LagrangianSpec& s, const Vec<D>& v) {
   switch (s.kind) {
      case LagrangianKind::quadratic_kinetic:
         return 0.5 * norm2<D>(v);
      case LagrangianKind::anisotropic_quadratic:
         if constexpr (D == 1) {
            return 0.5 * s.aniso.a11 * v[0] * v[0];
         } else {
            return 0.5 * (s.aniso.a11 * v[0] * v[0] + 2.0 * s.aniso.a12 * v[0] * v[1] +
                          s.aniso.a22 * v[1] * v[1]);
         }
      case LagrangianKind::quartic_perturbed: {
         double q2 = norm2<D>(v);
         return 0.5 * q2 + 0.25 * s.quartic * q2 * q2;
      }
   }
   return 0.0;
}

// L(x,v) = kinetic + 1 + potential. The +1 keeps the Tonelli lower bound
// (1/C0)(1+|v|^2) valid near v = 0 and shifts all ergodic values by +1.
template <int D>
double eval_lagrangian(const LagrangianSpec& s, const Vec<D>& x, const Vec<D>& v) {
   return kinetic<D>(s, v) + 1.0 + potential<D>(s, x);
}

template <int D>
Vec<D> momentum(const LagrangianSpec& s, const Vec<D>& v) {
   Vec<D> p{};
   switch (s.kind) {
      case LagrangianKind::quadratic_kinetic:
         p = v;
         break;
      case LagrangianKind::anisotropic_quadratic:
         if constexpr (D == 1) {
            p[0] = s.aniso.a11 * v[0];
         } else {
            p[0] = s.aniso.a11 * v[0] + s.aniso.a12 * v[1];
            p[1] = s.aniso.a12 * v[0] + s.aniso.a22 * v[1];
         }
         break;
      case LagrangianKind::quartic_perturbed: {
         double f = 1.0 + s.quartic * norm2<D>(v);
         for (int k = 0; k < D; ++k) p[k] = f * v[k];
         break;
      }
   }
   return p;
}

// Velocity Hessian as a symmetric matrix (a11, a22, a12); d=1 uses a11.
template <int D>
AnisoMatrix velocity_hessian(const LagrangianSpec& s, const Vec<D>& v) {
   AnisoMatrix h;
   switch (s.kind) {
      case LagrangianKind::quadratic_kinetic:
         break;
      case LagrangianKind::anisotropic_quadratic:
         h = s.aniso;
         break;
      case LagrangianKind::quartic_perturbed: {
         double q2 = norm2<D>(v);
         h.a11 = 1.0 + s.quartic * (q2 + 2.0 * v[0] * v[0]);
         if constexpr (D == 2) {
            h.a22 = 1.0 + s.quartic * (q2 + 2.0 * v[1] * v[1]);
            h.a12 = 2.0 * s.quartic * v[0] * v[1];
         }
         break;
      }
   }
   return h;
}

template <int D>
Vec<D> solve_spd(const AnisoMatrix& a, const Vec<D>& rhs) {
   Vec<D> out{};
   if constexpr (D == 1) {
      out[0] = rhs[0] / a.a11;
   } else {
      double det = a.a11 * a.a22 - a.a12 * a.a12;
      out[0] = (a.a22 * rhs[0] - a.a12 * rhs[1]) / det;
      out[1] = (a.a11 * rhs[1] - a.a12 * rhs[0]) / det;
   }
   return out;
}

// Invert p = D_v L(v). Quadratic kinds are a linear solve; the quartic kind
// reduces to the monotone scalar equation r(1 + q r^2) = |p| along p.
template <int D>
Vec<D> velocity_from_momentum(const LagrangianSpec& s, const Vec<D>& p) {
   switch (s.kind) {
      case LagrangianKind::quadratic_kinetic:
         return p;
      case LagrangianKind::anisotropic_quadratic:
         return solve_spd<D>(s.aniso, p);
      case LagrangianKind::quartic_perturbed: {
         double pn = std::sqrt(norm2<D>(p));
         if (pn == 0.0) return Vec<D>{};
         double r = pn;
         for (int it = 0; it < 50; ++it) {
            double f = r * (1.0 + s.quartic * r * r) - pn;
            double df = 1.0 + 3.0 * s.quartic * r * r;
            double step = f / df;
            r -= step;
            if (std::fabs(step) < 1e-15 * (1.0 + r)) break;
         }
         Vec<D> v{};
         for (int k = 0; k < D; ++k) v[k] = p[k] * (r / pn);
         return v;
      }
   }
   return Vec<D>{};
}

struct TonelliReport {
   bool pass = false;
   double ratio_min = 0.0;   // min over samples of L / (1+|v|^2)
   double ratio_max = 0.0;   // max over samples of the same ratio
   double hess_min = 0.0;    // smallest velocity-Hessian eigenvalue seen
   double C0 = 0.0;
};

template <int D>
TonelliReport verify_tonelli(const LagrangianSpec& s, const TorusGrid<D>& xg,
                             const VelocityGrid<D>& vg) {
   TonelliReport rep;
   rep.C0 = s.C0;
   rep.ratio_min = 1e300;
   rep.ratio_max = -1e300;
   rep.hess_min = 1e300;
   for (std::size_t ix = 0; ix < xg.size(); ++ix) {
      Vec<D> x = xg.node(ix);
      for (std::size_t iv = 0; iv < vg.size(); ++iv) {
         Vec<D> v = vg.node(iv);
         double ratio = eval_lagrangian<D>(s, x, v) / (1.0 + norm2<D>(v));
         rep.ratio_min = std::min(rep.ratio_min, ratio);
         rep.ratio_max = std::max(rep.ratio_max, ratio);
         AnisoMatrix h = velocity_hessian<D>(s, v);
         double eig;
         if constexpr (D == 1) {
            eig = h.a11;
         } else {
            double tr = h.a11 + h.a22;
            double det = h.a11 * h.a22 - h.a12 * h.a12;
            eig = 0.5 * (tr - std::sqrt(std::max(0.0, tr * tr - 4.0 * det)));
         }
         rep.hess_min = std::min(rep.hess_min, eig);
      }
   }
   double c0 = s.C0;
   rep.pass = (c0 >= 1.0) && (rep.ratio_min >= 1.0 / c0) && (rep.ratio_max <= c0) &&
              (rep.hess_min >= 1.0 / c0);
   return rep;
}

struct LegendrePoint {
   double value = 0.0;
   Vec<2> velocity{};  // first D components meaningful
};

// Lagrangian plus a cached velocity lattice, which is enough to evaluate the
// Legendre transform H(x,p) = sup_v <p,v> - L(x,v) at desk scale.
template <int D>
struct HamiltonianView {
   LagrangianSpec spec;
   VelocityGrid<D> vgrid;

   HamiltonianView(const LagrangianSpec& s, const VelocityGrid<D>& vg) : spec(s), vgrid(vg) {}

   // Grid search over velocity nodes, then Newton polish
   // v <- v + (D^2_vv L)^{-1} (p - D_v L(v)); one step is exact for the
   // quadratic kinds, the quartic kind iterates to machine residual.
   // A boundary maximizer means the box cannot certify the supremum.
   LegendrePoint legendre_transform(const Vec<D>& x, const Vec<D>& p) const {
      double best = -1e300;
      std::size_t best_idx = 0;
      for (std::size_t iv = 0; iv < vgrid.size(); ++iv) {
         Vec<D> v = vgrid.node(iv);
         double cand = dot<D>(p, v) - eval_lagrangian<D>(spec, x, v);
         if (cand > best) {
            best = cand;
            best_idx = iv;
         }
      }
      if (vgrid.on_boundary(best_idx))
         throw GridError("velocity grid too small: Legendre maximizer on the box boundary");
      Vec<D> polished = vgrid.node(best_idx);
      bool inside = true;
      for (int it = 0; it < 12 && inside; ++it) {
         Vec<D> dvl = momentum<D>(spec, polished);
         Vec<D> residual{};
         for (int k = 0; k < D; ++k) residual[k] = p[k] - dvl[k];
         Vec<D> step = solve_spd<D>(velocity_hessian<D>(spec, polished), residual);
         double step_norm = 0.0;
         for (int k = 0; k < D; ++k) {
            polished[k] += step[k];
            if (std::fabs(polished[k]) > vgrid.R) inside = false;
            step_norm = std::max(step_norm, std::fabs(step[k]));
         }
         if (step_norm < 1e-14) break;
      }
      LegendrePoint out;
      double pol_val =
          inside ? dot<D>(p, polished) - eval_lagrangian<D>(spec, x, polished) : -1e300;
      if (inside && pol_val >= best) {
         out.value = pol_val;
         for (int k = 0; k < D; ++k) out.velocity[k] = polished[k];
      } else {
         Vec<D> vg = vgrid.node(best_idx);
         out.value = best;
         for (int k = 0; k < D; ++k) out.velocity[k] = vg[k];
      }
      return out;
   }
};

inline const char* to_string(LagrangianKind k) {
   switch (k) {
      case LagrangianKind::quadratic_kinetic: return "quadratic-kinetic";
      case LagrangianKind::anisotropic_quadratic: return "anisotropic-quadratic";
      case LagrangianKind::quartic_perturbed: return "quartic-perturbed";
   }
   return "?";
}

inline const char* to_string(CouplingKind k) {
   switch (k) {
      case CouplingKind::zero: return "zero";
      case CouplingKind::separable: return "separable";
      case CouplingKind::pairwise: return "pairwise";
      case CouplingKind::mf_linear: return "mf-linear";
      case CouplingKind::mf_quadratic: return "mf-quadratic";
   }
   return "?";
}

// Pointwise coupling terms. The pairwise kernel acts per axis so that its
// mean against the uniform measure vanishes in any dimension.
template <int D>
double coupling_kernel(const CouplingSpec& c, const Vec<D>& x, const Vec<D>& y) {
   double s = 0.0;
   for (int k = 0; k < D; ++k)
      s += std::cos(two_pi * c.freq * (x[k] - y[k] - c.phase));
   return c.amp * s / D;
}

// Scalar moment used by the mean-field functional kinds.
template <int D>
double coupling_moment_fn(const CouplingSpec& c, const Vec<D>& y) {
   double s = 0.0;
   for (int k = 0; k < D; ++k) s += std::cos(two_pi * c.freq * (y[k] - c.phase));
   return s / D;
}

template <int D>
double coupling_separable(const CouplingSpec& c, const Vec<D>& x) {
   double s = 0.0;
   for (int k = 0; k < D; ++k)
      s += c.amp * (1.0 - std::cos(two_pi * c.freq * (x[k] - c.phase)));
   return s;
}

// F^i evaluated at a pure position tuple; mean-field kinds read the empirical
// measure of the other players.
template <int D>
double coupling_joint(const CouplingSpec& c, const std::vector<Vec<D>>& positions, int i) {
   int N = static_cast<int>(positions.size());
   switch (c.kind) {
      case CouplingKind::zero:
         return c.offset;
      case CouplingKind::separable:
         return c.offset + coupling_separable<D>(c, positions[i]);
      case CouplingKind::pairwise:
      case CouplingKind::mf_linear: {
         if (N < 2) throw ConfigError("interaction couplings need at least 2 players");
         double s = 0.0;
         for (int j = 0; j < N; ++j)
            if (j != i) s += coupling_kernel<D>(c, positions[i], positions[j]);
         return c.offset + s / (N - 1);
      }
      case CouplingKind::mf_quadratic: {
         if (N < 2) throw ConfigError("interaction couplings need at least 2 players");
         double s = 0.0;
         for (int j = 0; j < N; ++j)
            if (j != i) s += coupling_moment_fn<D>(c, positions[j]);
         s /= (N - 1);
         return c.offset + c.amp * s * s;
      }
   }
   return 0.0;
}

// Uniform bound |F| used by payoff estimates and validation.
inline double coupling_bound(const CouplingSpec& c) {
   switch (c.kind) {
      case CouplingKind::zero: return std::fabs(c.offset);
      case CouplingKind::separable: return std::fabs(c.offset) + 2.0 * std::fabs(c.amp) * 2;
      default: return std::fabs(c.offset) + std::fabs(c.amp);
   }
}

}  // namespace ergonash
