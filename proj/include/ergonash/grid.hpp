#pragma once

// Uniform grids: the periodic state grid on T^d, the bounded velocity lattice,
// grid functions with periodic multilinear interpolation, and a dense function
// type on small product tori T^(d*N) used by trajectory domination checks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "ergonash/core.hpp"

namespace ergonash {

template <int D>
struct TorusGrid {
   static_assert(D == 1 || D == 2);
   int n = 0;  // nodes per axis, spacing h = 1/n

   TorusGrid() = default;
   explicit TorusGrid(int n_) : n(n_) {
      if (n < 2) throw GridError("torus grid needs at least 2 nodes per axis");
   }

   double h() const { return 1.0 / n; }
   std::size_t size() const {
      std::size_t s = 1;
      for (int k = 0; k < D; ++k) s *= static_cast<std::size_t>(n);
      return s;
   }

   std::array<int, D> unpack(std::size_t idx) const {
      std::array<int, D> m{};
      for (int k = D - 1; k >= 0; --k) {
         m[k] = static_cast<int>(idx % n);
         idx /= n;
      }
      return m;
   }
   std::size_t pack(const std::array<int, D>& m) const {
      std::size_t idx = 0;
      for (int k = 0; k < D; ++k) idx = idx * n + static_cast<std::size_t>((m[k] % n + n) % n);
      return idx;
   }

   Vec<D> node(std::size_t idx) const {
      auto m = unpack(idx);
      Vec<D> x{};
      for (int k = 0; k < D; ++k) x[k] = m[k] * h();
      return x;
   }

   // Nearest node in the torus metric; exact half-cell ties resolve to the
   // lexicographically smaller node, axis by axis.
   std::size_t nearest(const Vec<D>& x) const {
      std::array<int, D> m{};
      for (int k = 0; k < D; ++k) {
         double r = wrap01(x[k]) * n;
         int j0 = static_cast<int>(std::floor(r));
         double frac = r - j0;
         int j = (frac > 0.5) ? j0 + 1 : j0;
         m[k] = j % n;
      }
      return pack(m);
   }
};

template <int D>
struct VelocityGrid {
   static_assert(D == 1 || D == 2);
   double R = 0.0;  // box [-R, R]^d
   int m = 0;       // nodes per axis, odd so that v = 0 is a node

   VelocityGrid() = default;
   VelocityGrid(double R_, int m_) : R(R_), m(m_) {
      if (R <= 0.0) throw GridError("velocity box radius must be positive");
      if (m < 3 || m % 2 == 0) throw GridError("velocity grid needs an odd node count >= 3");
   }

   double hv() const { return 2.0 * R / (m - 1); }
   int center() const { return (m - 1) / 2; }
   double axis_node(int j) const { return (j - center()) * hv(); }

   std::size_t size() const {
      std::size_t s = 1;
      for (int k = 0; k < D; ++k) s *= static_cast<std::size_t>(m);
      return s;
   }
   std::array<int, D> unpack(std::size_t idx) const {
      std::array<int, D> mi{};
      for (int k = D - 1; k >= 0; --k) {
         mi[k] = static_cast<int>(idx % m);
         idx /= m;
      }
      return mi;
   }
   std::size_t pack(const std::array<int, D>& mi) const {
      std::size_t idx = 0;
      for (int k = 0; k < D; ++k) idx = idx * m + static_cast<std::size_t>(mi[k]);
      return idx;
   }
   Vec<D> node(std::size_t idx) const {
      auto mi = unpack(idx);
      Vec<D> v{};
      for (int k = 0; k < D; ++k) v[k] = axis_node(mi[k]);
      return v;
   }
   bool on_boundary(std::size_t idx) const {
      auto mi = unpack(idx);
      for (int k = 0; k < D; ++k)
         if (mi[k] == 0 || mi[k] == m - 1) return true;
      return false;
   }
};

// Real-valued function sampled on a TorusGrid, with periodic multilinear
// interpolation between nodes.
template <int D>
struct GridFunction {
   TorusGrid<D> grid;
   std::vector<double> values;

   GridFunction() = default;
   explicit GridFunction(const TorusGrid<D>& g, double fill = 0.0)
       : grid(g), values(g.size(), fill) {}

   static GridFunction from_function(const TorusGrid<D>& g,
                                     const std::function<double(const Vec<D>&)>& f) {
      GridFunction out(g);
      for (std::size_t i = 0; i < g.size(); ++i) out.values[i] = f(g.node(i));
      return out;
   }

   double operator[](std::size_t i) const { return values[i]; }
   double& operator[](std::size_t i) { return values[i]; }

   double eval(const Vec<D>& x) const {
      if constexpr (D == 1) {
         double r = wrap01(x[0]) * grid.n;
         int i0 = static_cast<int>(std::floor(r));
         double w = r - i0;
         i0 %= grid.n;
         int i1 = (i0 + 1) % grid.n;
         return (1.0 - w) * values[i0] + w * values[i1];
      } else {
         double r0 = wrap01(x[0]) * grid.n, r1 = wrap01(x[1]) * grid.n;
         int a0 = static_cast<int>(std::floor(r0)) % grid.n;
         int b0 = static_cast<int>(std::floor(r1)) % grid.n;
         double wa = r0 - std::floor(r0), wb = r1 - std::floor(r1);
         int a1 = (a0 + 1) % grid.n, b1 = (b0 + 1) % grid.n;
         auto at = [&](int a, int b) { return values[static_cast<std::size_t>(a) * grid.n + b]; };
         return (1 - wa) * ((1 - wb) * at(a0, b0) + wb * at(a0, b1)) +
                wa * ((1 - wb) * at(a1, b0) + wb * at(a1, b1));
      }
   }

   double mean() const {
      double s = 0.0;
      for (double v : values) s += v;
      return s / values.size();
   }
   double min() const { return *std::min_element(values.begin(), values.end()); }
   double max() const { return *std::max_element(values.begin(), values.end()); }
   double sup_dist(const GridFunction& other) const {
      double s = 0.0;
      for (std::size_t i = 0; i < values.size(); ++i)
         s = std::max(s, std::fabs(values[i] - other.values[i]));
      return s;
   }
   void shift(double s) {
      for (double& v : values) v += s;
   }

   // Central-difference gradient at a node.
   Vec<D> gradient_cd(std::size_t idx) const {
      auto mi = grid.unpack(idx);
      Vec<D> g{};
      for (int k = 0; k < D; ++k) {
         auto up = mi, dn = mi;
         up[k] = (mi[k] + 1) % grid.n;
         dn[k] = (mi[k] - 1 + grid.n) % grid.n;
         g[k] = (values[grid.pack(up)] - values[grid.pack(dn)]) / (2.0 * grid.h());
      }
      return g;
   }
};

// Dense function on the product torus T^dims with dims = d*N <= 3; beyond that
// the node count is out of desk-scale reach and callers must refuse.
struct ProductGridFunction {
   int dims = 0;
   int n = 0;
   std::vector<double> values;

   static ProductGridFunction from_function(
       int dims, int n, const std::function<double(const std::array<double, 3>&)>& f) {
      if (dims < 1 || dims > 3) throw GridError("product torus functions support 1..3 axes");
      ProductGridFunction out;
      out.dims = dims;
      out.n = n;
      std::size_t total = 1;
      for (int k = 0; k < dims; ++k) total *= static_cast<std::size_t>(n);
      out.values.resize(total);
      std::array<double, 3> x{};
      for (std::size_t idx = 0; idx < total; ++idx) {
         std::size_t rest = idx;
         for (int k = dims - 1; k >= 0; --k) {
            x[k] = static_cast<double>(rest % n) / n;
            rest /= n;
         }
         out.values[idx] = f(x);
      }
      return out;
   }

   double eval(const std::array<double, 3>& x) const {
      int i0[3];
      double w[3];
      for (int k = 0; k < dims; ++k) {
         double r = wrap01(x[k]) * n;
         i0[k] = static_cast<int>(std::floor(r)) % n;
         w[k] = r - std::floor(r);
      }
      double acc = 0.0;
      for (int corner = 0; corner < (1 << dims); ++corner) {
         double cw = 1.0;
         std::size_t idx = 0;
         for (int k = 0; k < dims; ++k) {
            bool hi = corner & (1 << k);
            cw *= hi ? w[k] : (1.0 - w[k]);
            int j = hi ? (i0[k] + 1) % n : i0[k];
            idx = idx * n + static_cast<std::size_t>(j);
         }
         acc += cw * values[idx];
      }
      return acc;
   }
};

}  // namespace ergonash
