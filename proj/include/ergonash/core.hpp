#pragma once

// Shared primitives: points and velocities on the flat torus T^d (d = 1 or 2),
// error types thrown across the library, and a small index-range parallel_for.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace ergonash {

inline constexpr const char* version_string = "0.1.0";

// Bad user-facing input: unknown catalog tag, invalid grid sizes, malformed config.
struct ConfigError : std::runtime_error {
   using std::runtime_error::runtime_error;
};

// Discretization cannot represent the request (velocity box too small, product
// grid too large to enumerate).
struct GridError : std::runtime_error {
   using std::runtime_error::runtime_error;
};

// An iterative solver exceeded its cap or produced an inconsistent certificate.
struct SolverError : std::runtime_error {
   using std::runtime_error::runtime_error;
};

template <int D>
using Vec = std::array<double, D>;

// Representative in [0,1). Guard the x == 1.0 - eps case: x - floor(x) can
// round to exactly 1.0 for tiny negative x.
inline double wrap01(double x) {
   double y = x - std::floor(x);
   return (y >= 1.0) ? y - 1.0 : y;
}

template <int D>
Vec<D> wrap(Vec<D> x) {
   for (int k = 0; k < D; ++k) x[k] = wrap01(x[k]);
   return x;
}

// Geodesic distance on the unit circle.
inline double torus_dist1(double a, double b) {
   double d = std::fabs(wrap01(a) - wrap01(b));
   return std::min(d, 1.0 - d);
}

// l1 combination of per-axis circle distances; coincides with torus_dist1 for d=1.
template <int D>
double torus_dist(const Vec<D>& a, const Vec<D>& b) {
   double s = 0.0;
   for (int k = 0; k < D; ++k) s += torus_dist1(a[k], b[k]);
   return s;
}

template <int D>
double dot(const Vec<D>& a, const Vec<D>& b) {
   double s = 0.0;
   for (int k = 0; k < D; ++k) s += a[k] * b[k];
   return s;
}

template <int D>
double norm2(const Vec<D>& a) {
   return dot<D>(a, a);
}

template <int D>
Vec<D> axpy(double t, const Vec<D>& a, const Vec<D>& b) {
   Vec<D> r{};
   for (int k = 0; k < D; ++k) r[k] = t * a[k] + b[k];
   return r;
}

// Splits [0, count) into contiguous chunks. Work items must write to disjoint
// slots; results are then independent of the thread count.
inline void parallel_for(int threads, std::size_t count,
                         const std::function<void(std::size_t, std::size_t)>& body) {
   if (threads <= 1 || count < 2) {
      body(0, count);
      return;
   }
   std::size_t nchunk = std::min<std::size_t>(threads, count);
   std::size_t chunk = (count + nchunk - 1) / nchunk;
   std::vector<std::thread> pool;
   pool.reserve(nchunk);
   for (std::size_t c = 0; c < nchunk; ++c) {
      std::size_t lo = c * chunk;
      std::size_t hi = std::min(count, lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back([&body, lo, hi] { body(lo, hi); });
   }
   for (auto& t : pool) t.join();
}

}  // namespace ergonash
