#pragma once

// Deterministic random streams. All Monte Carlo paths derive their generator
// from (root seed, stream id) so that runs with the same config reproduce
// byte-identical artifacts; mt19937_64 and our own canonical-double mapping
// pin the sequence independently of the standard library vendor.

#include <cstdint>
#include <random>
#include <vector>

namespace ergonash {

class Rng {
  public:
   explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
       : engine_(mix(seed, stream)) {}

   // Uniform double in [0, 1) with 53 random bits.
   double uniform01() { return (engine_() >> 11) * 0x1.0p-53; }

   double uniform(double a, double b) { return a + (b - a) * uniform01(); }

   std::uint64_t bits() { return engine_(); }

   // Index draw by inverse CDF over nonnegative weights summing to ~1.
   std::size_t sample(const std::vector<double>& cdf) {
      double u = uniform01() * cdf.back();
      std::size_t lo = 0, hi = cdf.size() - 1;
      while (lo < hi) {
         std::size_t mid = (lo + hi) / 2;
         if (cdf[mid] <= u)
            lo = mid + 1;
         else
            hi = mid;
      }
      return lo;
   }

   static std::vector<double> cumulative(const std::vector<double>& weights) {
      std::vector<double> cdf(weights.size());
      double acc = 0.0;
      for (std::size_t i = 0; i < weights.size(); ++i) {
         acc += weights[i];
         cdf[i] = acc;
      }
      return cdf;
   }

  private:
   // splitmix64 finalizer applied to seed/stream keeps distinct streams
   // decorrelated even for adjacent ids.
   static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
      std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      return z ^ (z >> 31);
   }

   std::mt19937_64 engine_;
};

}  // namespace ergonash
