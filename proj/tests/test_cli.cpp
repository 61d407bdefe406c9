#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ergonash/cli.hpp"
#include "ergonash/rng.hpp"

using namespace ergonash;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace fs = std::filesystem;

namespace {

// one scratch tree per test process, wiped on first use
const fs::path& workdir() {
   static fs::path dir = [] {
      fs::path d = fs::temp_directory_path() / "ergonash_cli_tests";
      fs::remove_all(d);
      fs::create_directories(d);
      return d;
   }();
   return dir;
}

std::string write_config(const std::string& name, const json& doc) {
   fs::path p = workdir() / name;
   write_json(p.string(), doc);
   return p.string();
}

int run_cli(std::vector<std::string> args) {
   args.insert(args.begin(), "ergonash");
   std::vector<char*> argv;
   for (auto& a : args) argv.push_back(a.data());
   return cli_main(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
   std::ifstream in(p, std::ios::binary);
   REQUIRE(in.good());
   std::ostringstream ss;
   ss << in.rdbuf();
   return ss.str();
}

json read_json_file(const fs::path& p) { return json::parse(slurp(p)); }

// small grid so end-to-end runs stay fast
json base_doc() {
   return json{{"dimension", 1},
               {"grid", {{"n", 32}, {"m", 17}, {"R", 2.0}}},
               {"model", {{"tag", "pendulum"}, {"params", {{"amp", 0.3}}}}},
               {"game",
                {{"players", 2},
                 {"symmetric", true},
                 {"coupling", {{"kind", "zero"}}}}},
               {"solver", {{"tol", 1e-3}, {"damping", 1.0}, {"max_iterations", 40}, {"seed", 7}}},
               {"output", {{"dir", (workdir() / "out").string()}}}};
}

}  // namespace

TEST_CASE("csv numbers survive a parse round trip") {
   for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 1.0, 0.0, 123456.789012345678}) {
      std::string s = csv_num(v);
      CHECK(std::strtod(s.c_str(), nullptr) == v);
   }
}

TEST_CASE("measures survive a json round trip bitwise") {
   TorusGrid<1> xg(16);
   VelocityGrid<1> vg(2.0, 9);
   Rng rng(99, 0);

   StateMeasure<1> m(xg);
   double total = 0.0;
   for (double& w : m.w) total += (w = rng.uniform01());
   for (double& w : m.w) w /= total;
   StateMeasure<1> back = state_measure_from_json<1>(to_json<1>(m));
   REQUIRE(back.w.size() == m.w.size());
   for (std::size_t i = 0; i < m.w.size(); ++i) CHECK(back.w[i] == m.w[i]);
   CHECK(back.grid.n == xg.n);

   PhaseMeasure<1> mu(xg, vg);
   total = 0.0;
   for (double& w : mu.w) total += (w = rng.uniform01());
   for (double& w : mu.w) w /= total;
   PhaseMeasure<1> mu_back = phase_measure_from_json<1>(to_json<1>(mu));
   REQUIRE(mu_back.w.size() == mu.w.size());
   for (std::size_t i = 0; i < mu.w.size(); ++i) CHECK(mu_back.w[i] == mu.w[i]);
   CHECK(mu_back.vgrid.m == vg.m);
   CHECK(mu_back.vgrid.R == vg.R);

   SECTION("dimension and size mismatches are rejected") {
      CHECK_THROWS_AS(torus_grid_from_json<2>(to_json<1>(xg)), ConfigError);
      json bad = to_json<1>(m);
      bad["weights"].get_ref<json::array_t&>().pop_back();
      CHECK_THROWS_AS(state_measure_from_json<1>(bad), ConfigError);
   }
}

TEST_CASE("config defaults and field validation") {
   SECTION("empty document keeps the defaults") {
      ExperimentConfig cfg = parse_config(json::object());
      CHECK(cfg.dimension == 1);
      CHECK(cfg.n == 64);
      CHECK(cfg.m == 33);
      CHECK(cfg.R == 3.0);
      CHECK(cfg.model_tag == "pendulum");
      CHECK(cfg.players == 2);
      CHECK(cfg.coupling.kind == CouplingKind::zero);
      CHECK(cfg.damping == 0.5);
      CHECK(cfg.seed == 12345);
   }
   SECTION("sections override the defaults") {
      json doc = base_doc();
      doc["game"]["coupling"] = {{"kind", "pairwise"}, {"amp", -0.5}};
      ExperimentConfig cfg = parse_config(doc);
      CHECK(cfg.n == 32);
      CHECK(cfg.lagrangian.pot_amp == 0.3);
      CHECK(cfg.coupling.kind == CouplingKind::pairwise);
      CHECK(cfg.coupling.amp == -0.5);
      CHECK(cfg.damping == 1.0);
   }
   SECTION("violations name the offending field") {
      auto expect = [](json doc, const char* needle) {
         CHECK_THROWS_WITH(parse_config(doc), ContainsSubstring(needle));
      };
      expect(json{{"grid", {{"m", 16}}}}, "grid.m");
      expect(json{{"grid", {{"m", 7}}}}, "grid.m");
      expect(json{{"grid", {{"n", 4}}}}, "grid.n");
      expect(json{{"grid", {{"R", -1.0}}}}, "grid.R");
      expect(json{{"grid", {{"n", "many"}}}}, "grid.n: wrong type");
      expect(json{{"solver", {{"damping", 0.0}}}}, "solver.damping");
      expect(json{{"solver", {{"damping", 1.5}}}}, "solver.damping");
      expect(json{{"solver", {{"tol", 0.0}}}}, "solver.tol");
      expect(json{{"solver", {{"mc_samples", 10}}}}, "solver.mc_samples");
      expect(json{{"solver", {{"Ns", json::array()}}}}, "solver.Ns");
      expect(json{{"solver", {{"Ns", {2, 1}}}}}, "solver.Ns");
      expect(json{{"solver", {{"sim_dt", 0.5}}}}, "solver.sim_dt");
      expect(json{{"solver", {{"starts", {{0.1, 0.2}}}}}}, "solver.starts");
      expect(json{{"game", {{"players", 1}}}}, "game.players");
      expect(json{{"game", {{"players", 6}}}}, "game.players");
      expect(json{{"game", {{"symmetric", false}}}}, "game.symmetric");
      expect(json{{"dimension", 3}}, "dimension");
      expect(json{{"output", {{"dir", ""}}}}, "output.dir");
   }
}

TEST_CASE("model tags map to the catalog") {
   json none = json::object();
   CHECK(lagrangian_from_tag("flat", none, 1).pot_amp == 0.0);
   CHECK(lagrangian_from_tag("pendulum", none, 1).pot_amp == 0.3);
   CHECK(lagrangian_from_tag("two-well", none, 1).pot_freq == 2);
   CHECK(lagrangian_from_tag("anisotropic", none, 2).kind ==
         LagrangianKind::anisotropic_quadratic);
   CHECK(lagrangian_from_tag("quartic", none, 1).kind == LagrangianKind::quartic_perturbed);

   LagrangianSpec tuned = lagrangian_from_tag("pendulum", json{{"amp", 0.7}, {"offset", 0.2}}, 1);
   CHECK(tuned.pot_amp == 0.7);
   CHECK(tuned.pot_offset == 0.2);

   CHECK_THROWS_WITH(lagrangian_from_tag("wavelet", none, 1), ContainsSubstring("pendulum"));
   CHECK_THROWS_WITH(parse_config(json{{"game", {{"coupling", {{"kind", "spooky"}}}}}}),
                     ContainsSubstring("coupling"));
}

TEST_CASE("dotted overrides edit the raw document") {
   json doc = base_doc();
   apply_override(doc, "grid.m=21");
   CHECK(doc["grid"]["m"] == 21);

   apply_override(doc, "model.params.amp=0.7");
   CHECK(doc["model"]["params"]["amp"] == 0.7);

   // values that do not parse as json stay strings
   apply_override(doc, "model.tag=flat");
   CHECK(doc["model"]["tag"] == "flat");

   apply_override(doc, "solver.Ns=[2,4,8]");
   CHECK(doc["solver"]["Ns"] == json({2, 4, 8}));

   // intermediate objects are created on demand
   json empty = json::object();
   apply_override(empty, "output.dir=scratch");
   CHECK(empty["output"]["dir"] == "scratch");

   CHECK_THROWS_AS(apply_override(doc, "no-equals-here"), ConfigError);
   CHECK_THROWS_AS(apply_override(doc, "grid..m=9"), ConfigError);
   CHECK_THROWS_AS(apply_override(doc, "=5"), ConfigError);
}

TEST_CASE("nash subcommand runs the decoupled game to certification") {
   json doc = base_doc();
   fs::path out = workdir() / "nash_run";
   doc["output"]["dir"] = out.string();
   std::string cfg = write_config("nash.json", doc);

   REQUIRE(run_cli({"nash", cfg}) == 0);

   json res = read_json_file(out / "nash.json");
   CHECK(res["converged"] == true);
   for (double g : res["deviation_gaps"].get<std::vector<double>>()) CHECK(g <= 1e-3);
   for (double v : res["values"].get<std::vector<double>>()) CHECK_THAT(v, WithinAbs(1.0, 0.05));

   json man = read_json_file(out / "manifest.json");
   CHECK(man["subcommand"] == "nash");
   CHECK(man["status"] == 0);
   CHECK(man["seed"] == 7);
   CHECK(man["config_hash"].get<std::string>().size() == 16);
   CHECK(man["wall_time_s"].get<double>() >= 0.0);
   CHECK(man["version"].get<std::string>() == version_string);
   auto artifacts = man["artifacts"].get<std::vector<std::string>>();
   CHECK(std::find(artifacts.begin(), artifacts.end(), "nash.json") != artifacts.end());
   CHECK(std::find(artifacts.begin(), artifacts.end(), "nash_trace.csv") != artifacts.end());

   std::string trace = slurp(out / "nash_trace.csv");
   CHECK(trace.rfind("iteration,gap,movement\n", 0) == 0);
}

TEST_CASE("identical config and seed reproduce artifacts byte for byte") {
   json doc = base_doc();
   fs::path out1 = workdir() / "rep1";
   fs::path out2 = workdir() / "rep2";
   std::string cfg = write_config("rep.json", doc);

   REQUIRE(run_cli({"nash", cfg, "--out", out1.string()}) == 0);
   REQUIRE(run_cli({"nash", cfg, "--out", out2.string()}) == 0);

   CHECK(slurp(out1 / "nash.json") == slurp(out2 / "nash.json"));
   CHECK(slurp(out1 / "nash_trace.csv") == slurp(out2 / "nash_trace.csv"));

   // the hash covers the resolved config, so it tracks the output dir; a
   // repeated identical invocation must reproduce it exactly
   json m1 = read_json_file(out1 / "manifest.json");
   REQUIRE(run_cli({"nash", cfg, "--out", out1.string()}) == 0);
   json m1again = read_json_file(out1 / "manifest.json");
   CHECK(m1again["config_hash"] == m1["config_hash"]);

   // manifests across dirs agree except for the wall clock and the dir itself
   json m2 = read_json_file(out2 / "manifest.json");
   for (auto* m : {&m1, &m2}) {
      m->erase("wall_time_s");
      m->erase("config_hash");
      (*m)["config"]["output"].erase("dir");
   }
   CHECK(m1.dump() == m2.dump());
}

TEST_CASE("non-convergence exits 3 and still writes artifacts") {
   json doc = base_doc();
   // one damped sweep from uniform cannot close a 0.3-deep gap
   doc["solver"]["damping"] = 0.5;
   doc["solver"]["max_iterations"] = 1;
   fs::path out = workdir() / "nash_short";
   doc["output"]["dir"] = out.string();
   std::string cfg = write_config("nash_short.json", doc);

   CHECK(run_cli({"nash", cfg}) == 3);
   json res = read_json_file(out / "nash.json");
   CHECK(res["converged"] == false);
   json man = read_json_file(out / "manifest.json");
   CHECK(man["status"] == 3);
}

TEST_CASE("validate exits cleanly or names the broken field") {
   std::string good = write_config("ok.json", base_doc());
   CHECK(run_cli({"validate", good}) == 0);
   CHECK(run_cli({"validate", good, "--set", "grid.m=16"}) == 2);
   CHECK(run_cli({"validate", good, "--set", "model.tag=wavelet"}) == 2);

   fs::path broken = workdir() / "broken.json";
   write_text(broken.string(), "this is { not json\n");
   CHECK(run_cli({"validate", broken.string()}) == 2);
}

TEST_CASE("weakkam subcommand reports the shifted ergodic constant exactly") {
   json doc = base_doc();
   doc["model"] = {{"tag", "flat"}};
   std::string cfg = write_config("wk.json", doc);
   fs::path out1 = workdir() / "wk0";
   fs::path out2 = workdir() / "wk25";

   REQUIRE(run_cli({"weakkam", cfg, "--out", out1.string()}) == 0);
   REQUIRE(run_cli({"weakkam", cfg, "--out", out2.string(), "--set",
                    "model.params.offset=0.25"}) == 0);

   double l0 = read_json_file(out1 / "weakkam.json")["lambda"].get<double>();
   double l25 = read_json_file(out2 / "weakkam.json")["lambda"].get<double>();
   CHECK_THAT(l0, WithinAbs(1.0, 1e-6));
   CHECK_THAT(l25 - l0, WithinAbs(0.25, 1e-9));
}

TEST_CASE("mather subcommand prices the rest floor") {
   std::string cfg = write_config("ma.json", base_doc());
   fs::path out = workdir() / "ma";
   REQUIRE(run_cli({"mather", cfg, "--out", out.string()}) == 0);

   json res = read_json_file(out / "mather.json");
   CHECK_THAT(res["value"].get<double>(), WithinAbs(1.0, 1e-9));
   double total = 0.0;
   for (double w : res["measure"]["weights"].get<std::vector<double>>()) total += w;
   CHECK_THAT(total, WithinAbs(1.0, 1e-9));

   // measure-coupled games have no standalone potential to minimize
   std::string bad = write_config("ma_bad.json", [] {
      json d = base_doc();
      d["game"]["coupling"] = {{"kind", "mf_linear"}, {"amp", -0.4}};
      return d;
   }());
   CHECK(run_cli({"mather", bad, "--out", (workdir() / "ma_bad").string()}) == 2);
}

TEST_CASE("pure subcommand certifies floor starts and exports trajectories") {
   json doc = base_doc();
   doc["solver"]["T"] = 12.0;
   doc["solver"]["sim_dt"] = 0.01;
   doc["solver"]["starts"] = {{0.0}, {0.0}};
   fs::path out = workdir() / "pure";
   doc["output"]["dir"] = out.string();
   std::string cfg = write_config("pure.json", doc);

   REQUIRE(run_cli({"pure", cfg}) == 0);
   json res = read_json_file(out / "pure.json");
   CHECK(res["certified"] == true);
   CHECK(res["runs"].size() == 2);

   std::string traj = slurp(out / "pure_run_0_0.csv");
   CHECK(traj.rfind("t,x,v\n", 0) == 0);
}

TEST_CASE("mfg subcommand solves the uncoupled limit") {
   std::string cfg = write_config("mfg.json", base_doc());
   fs::path out = workdir() / "mfg";
   REQUIRE(run_cli({"mfg", cfg, "--out", out.string()}) == 0);

   json res = read_json_file(out / "mfg.json");
   CHECK(res["converged"] == true);
   CHECK_THAT(res["lambda_bar"].get<double>(), WithinAbs(1.0, 0.05));
   CHECK(res["stationarity_residual"].get<double>() <= 1e-6);
}

TEST_CASE("nsweep with linear coupling reports vanishing distances") {
   json doc = base_doc();
   doc["game"]["coupling"] = {{"kind", "mf_linear"}, {"amp", -0.4}};
   doc["solver"]["Ns"] = {2, 3, 5};
   fs::path out = workdir() / "nsweep";
   doc["output"]["dir"] = out.string();
   std::string cfg = write_config("nsweep.json", doc);

   REQUIRE(run_cli({"nsweep", cfg}) == 0);

   std::istringstream csv(slurp(out / "nsweep.csv"));
   std::string line;
   REQUIRE(std::getline(csv, line));
   CHECK(line == "N,lambda_N,dist_lambda,dist_v_sup,dist_m_W1,stderr");
   int rows = 0;
   while (std::getline(csv, line)) {
      std::istringstream fields(line);
      std::string cell;
      std::vector<double> vals;
      while (std::getline(fields, cell, ',')) vals.push_back(std::strtod(cell.c_str(), nullptr));
      REQUIRE(vals.size() == 6);
      CHECK(vals[2] <= 1e-6);  // dist_lambda
      CHECK(vals[3] <= 1e-6);  // dist_v_sup
      CHECK(vals[4] <= 1e-6);  // dist_m_W1
      ++rows;
   }
   CHECK(rows == 3);
}

TEST_CASE("hewitt-savage subcommand tabulates empirical moments") {
   json doc = base_doc();
   doc["game"]["coupling"] = {{"kind", "mf_quadratic"}, {"amp", 0.4}};
   doc["solver"]["Ns"] = {4, 8};
   doc["solver"]["mc_samples"] = 20000;
   fs::path out = workdir() / "hs";
   doc["output"]["dir"] = out.string();
   std::string cfg = write_config("hs.json", doc);

   REQUIRE(run_cli({"hewitt-savage", cfg}) == 0);

   std::string csv = slurp(out / "hewitt_savage.csv");
   CHECK(csv.rfind("N,estimate,se,exact,abs_err\n", 0) == 0);

   json rows = read_json_file(out / "hewitt_savage.json");
   REQUIRE(rows.size() == 2);
   CHECK(rows[0]["N"] == 4);
   // uniform marginal: the bias of the squared mean is amp/(2N)
   double est = rows[0]["estimate"].get<double>();
   double se = rows[0]["se"].get<double>();
   CHECK_THAT(est, WithinAbs(0.05, 5.0 * se + 1e-12));
   CHECK(rows[1]["estimate"].get<double>() < est);
}
