#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "ergonash/rng.hpp"
#include "ergonash/simplex.hpp"

using namespace ergonash;

namespace {

// random equality-form instance that is feasible by construction (b = A x0
// with x0 >= 0) and bounded (costs >= 0)
LpProblem random_instance(Rng& rng, int rows, int cols) {
   LpProblem p;
   p.rows = rows;
   p.rhs.assign(rows, 0.0);
   std::vector<std::vector<std::pair<int, double>>> entries(cols);
   for (int j = 0; j < cols; ++j) {
      int nz = 1 + static_cast<int>(rng.uniform01() * 3);
      for (int t = 0; t < nz; ++t) {
         int r = static_cast<int>(rng.uniform01() * rows) % rows;
         entries[j].push_back({r, rng.uniform(-1.0, 1.0)});
      }
   }
   // make sure every row is touched so no row is structurally empty
   for (int r = 0; r < rows; ++r) entries[r % cols].push_back({r, rng.uniform(0.5, 1.5)});
   for (int j = 0; j < cols; ++j) {
      double x0 = (rng.uniform01() < 0.6) ? rng.uniform(0.0, 2.0) : 0.0;
      for (auto& [r, v] : entries[j]) p.rhs[r] += v * x0;
      p.add_column(rng.uniform(0.0, 2.0), entries[j]);
   }
   return p;
}

double dual_objective(const LpProblem& p, const LpSolution& s) {
   double v = 0.0;
   for (int r = 0; r < p.rows; ++r) v += p.rhs[r] * s.y[r];
   return v;
}

}  // namespace

TEST_CASE("one constraint picks the cheaper column") {
   LpProblem p;
   p.rows = 1;
   p.rhs = {1.0};
   p.add_column(1.0, {{0, 1.0}});
   p.add_column(2.0, {{0, 1.0}});
   auto s = solve_lp(p);
   CHECK(s.optimal);
   CHECK_THAT(s.value, Catch::Matchers::WithinAbs(1.0, 1e-12));
   CHECK(s.x[0] == 1.0);
   CHECK(s.x[1] == 0.0);
   CHECK_THAT(s.y[0], Catch::Matchers::WithinAbs(1.0, 1e-12));
   CHECK(complementary_slackness_gap(p, s) <= 1e-9);
}

TEST_CASE("negative right-hand sides are handled by row flipping") {
   // x1 - x2 = -1, x1 + x2 = 3  ->  x = (1, 2)
   LpProblem p;
   p.rows = 2;
   p.rhs = {-1.0, 3.0};
   p.add_column(1.0, {{0, 1.0}, {1, 1.0}});
   p.add_column(1.0, {{0, -1.0}, {1, 1.0}});
   auto s = solve_lp(p);
   CHECK(s.optimal);
   CHECK_THAT(s.x[0], Catch::Matchers::WithinAbs(1.0, 1e-10));
   CHECK_THAT(s.x[1], Catch::Matchers::WithinAbs(2.0, 1e-10));
   CHECK_THAT(s.value, Catch::Matchers::WithinAbs(3.0, 1e-10));
   CHECK(s.max_primal_residual <= 1e-9);
}

TEST_CASE("assignment problem with a dependent row") {
   // 2x2 transport: supplies (1,1), demands (1,1); the four balance rows are
   // linearly dependent, so exactly one ends up redundant
   LpProblem p;
   p.rows = 4;
   p.rhs = {1.0, 1.0, 1.0, 1.0};
   double cost[2][2] = {{1.0, 2.0}, {3.0, 1.0}};
   for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) p.add_column(cost[i][j], {{i, 1.0}, {2 + j, 1.0}});
   auto s = solve_lp(p);
   CHECK(s.optimal);
   CHECK_THAT(s.value, Catch::Matchers::WithinAbs(2.0, 1e-10));
   CHECK_THAT(s.x[0], Catch::Matchers::WithinAbs(1.0, 1e-10));  // x11
   CHECK_THAT(s.x[3], Catch::Matchers::WithinAbs(1.0, 1e-10));  // x22
   int redundant = 0;
   for (char f : s.redundant) redundant += f;
   CHECK(redundant == 1);
   CHECK_THAT(dual_objective(p, s), Catch::Matchers::WithinAbs(s.value, 1e-9));
}

TEST_CASE("duplicated constraint is flagged redundant") {
   LpProblem p;
   p.rows = 2;
   p.rhs = {1.0, 1.0};
   p.add_column(1.0, {{0, 1.0}, {1, 1.0}});
   p.add_column(0.0, {{0, 1.0}, {1, 1.0}});
   auto s = solve_lp(p);
   CHECK(s.optimal);
   CHECK_THAT(s.value, Catch::Matchers::WithinAbs(0.0, 1e-12));
   CHECK(s.x[1] == 1.0);
   CHECK(s.redundant[0] + s.redundant[1] == 1);
}

TEST_CASE("degenerate instance with zero right-hand sides terminates") {
   // cycling-prone textbook instance (all basic ratios tie at zero); the
   // stall fallback to Bland pricing must still reach the optimum -0.05
   LpProblem p;
   p.rows = 3;
   p.rhs = {0.0, 0.0, 1.0};
   p.add_column(-0.75, {{0, 0.25}, {1, 0.5}});
   p.add_column(150.0, {{0, -60.0}, {1, -90.0}});
   p.add_column(-0.02, {{0, -0.04}, {1, -0.02}, {2, 1.0}});
   p.add_column(6.0, {{0, 9.0}, {1, 3.0}});
   p.add_column(0.0, {{0, 1.0}});  // slacks
   p.add_column(0.0, {{1, 1.0}});
   p.add_column(0.0, {{2, 1.0}});
   for (bool bland : {false, true}) {
      LpOptions opt;
      opt.pure_bland = bland;
      auto s = solve_lp(p, opt);
      CHECK(s.optimal);
      CHECK_THAT(s.value, Catch::Matchers::WithinAbs(-0.05, 1e-10));
      CHECK_THAT(s.x[0], Catch::Matchers::WithinAbs(0.04, 1e-10));
      CHECK_THAT(s.x[2], Catch::Matchers::WithinAbs(1.0, 1e-10));
   }
}

TEST_CASE("infeasible and unbounded problems are reported") {
   LpProblem bad;
   bad.rows = 2;
   bad.rhs = {1.0, 2.0};
   bad.add_column(1.0, {{0, 1.0}, {1, 1.0}});  // x = 1 and x = 2
   CHECK_THROWS_AS(solve_lp(bad), SolverError);

   LpProblem unb;
   unb.rows = 1;
   unb.rhs = {1.0};
   unb.add_column(0.0, {{0, 1.0}});
   unb.add_column(-1.0, {});  // free direction with negative cost
   CHECK_THROWS_AS(solve_lp(unb), SolverError);

   LpProblem empty;
   CHECK_THROWS_AS(solve_lp(empty), ConfigError);
}

TEST_CASE("iteration cap raises instead of spinning") {
   Rng rng(4, 0);
   LpProblem p = random_instance(rng, 6, 14);
   LpOptions opt;
   opt.max_iterations = 2;
   CHECK_THROWS_AS(solve_lp(p, opt), SolverError);
}

TEST_CASE("random instances satisfy the optimality certificates") {
   Rng rng(11, 2);
   for (int trial = 0; trial < 40; ++trial) {
      int rows = 3 + static_cast<int>(rng.uniform01() * 6);
      int cols = rows + 2 + static_cast<int>(rng.uniform01() * 9);
      LpProblem p = random_instance(rng, rows, cols);
      auto s = solve_lp(p);
      REQUIRE(s.optimal);
      double scale = 1.0 + std::fabs(s.value);
      CHECK(s.max_primal_residual <= 1e-8 * scale);
      CHECK(complementary_slackness_gap(p, s) <= 1e-6 * scale);
      CHECK_THAT(dual_objective(p, s), Catch::Matchers::WithinAbs(s.value, 1e-7 * scale));
      CHECK(s.value >= -1e-9);  // nonnegative costs bound the value below

      // pure Bland pricing reaches the same optimum, possibly another vertex
      LpOptions opt;
      opt.pure_bland = true;
      auto sb = solve_lp(p, opt);
      CHECK_THAT(sb.value, Catch::Matchers::WithinAbs(s.value, 1e-8 * scale));
   }
}

TEST_CASE("repeat solves are bitwise identical") {
   Rng rng(21, 7);
   LpProblem p = random_instance(rng, 7, 18);
   auto a = solve_lp(p);
   auto b = solve_lp(p);
   CHECK(a.value == b.value);
   CHECK(a.iterations == b.iterations);
   CHECK(a.x == b.x);
   CHECK(a.y == b.y);
   CHECK(a.basis == b.basis);
}

TEST_CASE("frequent refactorization does not change the answer") {
   Rng rng(5, 9);
   LpProblem p = random_instance(rng, 8, 20);
   LpOptions every;
   every.refactor_every = 1;
   auto a = solve_lp(p);
   auto b = solve_lp(p, every);
   CHECK_THAT(b.value, Catch::Matchers::WithinAbs(a.value, 1e-9 * (1.0 + std::fabs(a.value))));
}
