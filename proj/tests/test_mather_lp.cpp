#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "ergonash/euler_flow.hpp"
#include "ergonash/mather_lp.hpp"
#include "ergonash/weakkam.hpp"

using namespace ergonash;

namespace {

LagrangianSpec flat() { return LagrangianSpec{}; }

LagrangianSpec pendulum(double a) {
   LagrangianSpec s;
   s.pot_amp = a;
   return s;
}

GridFunction<1> well(const TorusGrid<1>& g, double amp, int freq, double phase = 0.0) {
   return GridFunction<1>::from_function(g, [=](const Vec<1>& x) {
      return amp * (1.0 - std::cos(two_pi * freq * (x[0] - phase)));
   });
}

// rest atoms are always feasible, so the LP value can never beat the best one
double rest_floor(const LagrangianSpec& s, const GridFunction<1>& W) {
   double best = 1e300;
   for (std::size_t i = 0; i < W.grid.size(); ++i)
      best = std::min(best, eval_lagrangian<1>(s, W.grid.node(i), {0.0}) + W.values[i]);
   return best;
}

}  // namespace

TEST_CASE("holonomy rows accept closed measures and reject drift") {
   TorusGrid<1> xg(16);
   VelocityGrid<1> vg(2.0, 9);
   auto hc = assemble_constraints<1>(xg, vg);
   CHECK(hc.lp.rows == 17);
   CHECK(hc.lp.cols() == 16 * 9);
   CHECK(hc.lp.rhs[16] == 1.0);
   for (int r = 0; r < 16; ++r) CHECK(hc.lp.rhs[r] == 0.0);

   // rest atom: no moving mass, rows exact
   auto rest = PhaseMeasure<1>::dirac(xg, vg, 5, static_cast<std::size_t>(vg.center()));
   CHECK(holonomy_residual<1>(rest) == 0.0);

   // uniform in x at constant velocity: central differences kill constants
   PhaseMeasure<1> circ(xg, vg);
   std::size_t iv = static_cast<std::size_t>(vg.center()) + 3;
   for (std::size_t ix = 0; ix < 16; ++ix) circ.w[circ.index(ix, iv)] = 1.0 / 16.0;
   CHECK(holonomy_residual<1>(circ) <= 1e-15);

   // a single moving atom pushes flux through the neighbor rows
   auto drift = PhaseMeasure<1>::dirac(xg, vg, 5, iv);
   double v = vg.node(iv)[0];
   CHECK_THAT(holonomy_residual<1>(drift),
              Catch::Matchers::WithinAbs(std::fabs(v) * 0.5 * 16.0, 1e-12));
}

TEST_CASE("flat entry rests anywhere at unit value") {
   TorusGrid<1> xg(32);
   VelocityGrid<1> vg(2.0, 17);
   GridFunction<1> zero(xg);
   auto res = solve_mather<1>(flat(), zero, vg);
   CHECK_THAT(res.value, Catch::Matchers::WithinAbs(1.0, 1e-9));
   res.measure.validate();
   // all support on rest nodes
   for (std::size_t idx : res.support) {
      std::size_t iv = idx % vg.size();
      CHECK(vg.node(iv)[0] == 0.0);
   }
   // the whole rest face is optimal, which the perturbed resolves must notice
   CHECK(res.multiple_optima);
   CHECK(res.constraint_residual <= 1e-9);
   CHECK(res.complementarity_gap <= 1e-6);
}

TEST_CASE("pendulum concentrates on the potential minimum") {
   TorusGrid<1> xg(32);
   VelocityGrid<1> vg(2.0, 17);
   auto W = well(xg, 1.0, 1);
   auto res = solve_mather<1>(flat(), W, vg);
   CHECK_THAT(res.value, Catch::Matchers::WithinAbs(1.0, 1e-9));
   REQUIRE(res.support.size() == 1);
   CHECK(res.support[0] == static_cast<std::size_t>(vg.center()));  // node (x=0, v=0)
   CHECK_FALSE(res.multiple_optima);

   auto nodes = mather_support<1>(res);
   REQUIRE(nodes.size() == 1);
   CHECK(nodes[0] == 0);

   // the minimizing atom is an equilibrium of the flow, hence invariant
   CHECK(invariance_residual<1>(res.measure, pendulum(1.0), nullptr, 0.05) <= 1e-12);
}

TEST_CASE("two-well tie is reported as a degenerate face") {
   TorusGrid<1> xg(32);
   VelocityGrid<1> vg(2.0, 17);
   auto W = well(xg, 0.5, 2);  // equal minima at x = 0 and x = 0.5
   auto res = solve_mather<1>(flat(), W, vg);
   CHECK_THAT(res.value, Catch::Matchers::WithinAbs(1.0, 1e-9));
   CHECK(res.multiple_optima);
   // the returned vertex is a single atom on one of the two minima
   auto nodes = mather_support<1>(res);
   REQUIRE(nodes.size() == 1);
   CHECK((nodes[0] == 0 || nodes[0] == 16));
}

TEST_CASE("objective shifts move the value exactly") {
   TorusGrid<1> xg(32);
   VelocityGrid<1> vg(2.0, 17);
   auto W = well(xg, 0.4, 1, 0.21);
   auto base = solve_mather<1>(pendulum(0.2), W, vg);
   auto Ws = W;
   Ws.shift(0.73);
   auto shifted = solve_mather<1>(pendulum(0.2), Ws, vg);
   CHECK_THAT(shifted.value - base.value, Catch::Matchers::WithinAbs(0.73, 1e-9));
   CHECK(shifted.support == base.support);
}

TEST_CASE("value agrees with the ergodic constant across the catalog") {
   TorusGrid<1> xg(32);
   VelocityGrid<1> vg(2.0, 17);
   struct Case {
      LagrangianSpec spec;
      GridFunction<1> W;
   };
   std::vector<Case> cases;
   cases.push_back({pendulum(0.3), GridFunction<1>(xg)});
   cases.push_back({flat(), well(xg, 0.5, 1)});
   {
      LagrangianSpec quart;
      quart.kind = LagrangianKind::quartic_perturbed;
      quart.quartic = 0.1;
      cases.push_back({quart, well(xg, 0.3, 1, 0.37)});
   }
   for (const auto& c : cases) {
      double lp = mather_value<1>(c.spec, c.W, vg);
      auto wk = ergodic_constant<1>(c.spec, vg, c.W);
      CHECK_THAT(lp, Catch::Matchers::WithinAbs(wk.lambda, 0.03));
      // both sides sit on the stationary floor for reversible entries
      CHECK_THAT(lp, Catch::Matchers::WithinAbs(rest_floor(c.spec, c.W), 1e-9));
   }
}

TEST_CASE("dual certificate closes the duality gap") {
   TorusGrid<1> xg(32);
   VelocityGrid<1> vg(2.0, 17);
   auto W = well(xg, 0.6, 1, 0.13);
   auto res = solve_mather<1>(pendulum(0.15), W, vg);
   // rhs is the unit mass row, so the dual objective is the mass multiplier
   REQUIRE(res.dual.size() == xg.size() + 1);
   CHECK_THAT(res.dual[xg.size()], Catch::Matchers::WithinAbs(res.value, 1e-9));
   CHECK(res.complementarity_gap <= 1e-6);
   CHECK(res.constraint_residual <= 1e-9);
   CHECK(holonomy_residual<1>(res.measure) <= 1e-9);
   res.measure.validate();
   // value recomputes from the measure
   double recomputed = res.measure.integrate([&](const Vec<1>& x, const Vec<1>& v) {
      return eval_lagrangian<1>(pendulum(0.15), x, v) + W.eval(x);
   });
   CHECK_THAT(recomputed, Catch::Matchers::WithinAbs(res.value, 1e-9));
}

TEST_CASE("off-grid minimum converges quadratically under refinement") {
   // the potential minimum sits at x = 1/3, a third of a cell off every
   // power-of-two grid, so the value error a(1 - cos(2 pi /(3n))) shrinks by
   // almost exactly 4 per refinement
   VelocityGrid<1> vg(2.0, 9);
   std::vector<double> err;
   for (int n : {16, 32, 64}) {
      TorusGrid<1> xg(n);
      auto W = well(xg, 0.5, 1, 1.0 / 3.0);
      err.push_back(mather_value<1>(flat(), W, vg) - 1.0);
   }
   CHECK(err[0] > err[1]);
   CHECK(err[1] > err[2]);
   CHECK(err[2] > 0.0);
   for (int k = 0; k < 2; ++k) {
      double ratio = err[k] / err[k + 1];
      CHECK(ratio >= 3.5);
      CHECK(ratio <= 4.5);
   }
}

TEST_CASE("bland mode reproduces the optimal value") {
   TorusGrid<1> xg(24);
   VelocityGrid<1> vg(2.0, 13);
   auto W = well(xg, 0.45, 1, 0.29);
   auto fast = solve_mather<1>(pendulum(0.1), W, vg);
   MatherOptions opt;
   opt.pure_bland = true;
   auto slow = solve_mather<1>(pendulum(0.1), W, vg, opt);
   CHECK_THAT(slow.value, Catch::Matchers::WithinAbs(fast.value, 1e-10));
   CHECK(slow.support == fast.support);
}
