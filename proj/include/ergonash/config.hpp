#pragma once

// Experiment configuration: one JSON document with flat sections (grid, model,
// game, solver, output) resolved into concrete solver inputs. Validation
// errors name the offending field so `validate` runs read like a lint pass.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "ergonash/catalog.hpp"
#include "ergonash/core.hpp"
#include "ergonash/game.hpp"
#include "ergonash/meanfield.hpp"
#include "ergonash/weakkam.hpp"

namespace ergonash {

struct ExperimentConfig {
   int dimension = 1;

   // grid
   std::size_t n = 64;
   int m = 33;
   double R = 3.0;  // velocity box radius

   // model
   std::string model_tag = "pendulum";
   LagrangianSpec lagrangian;

   // game
   int players = 2;
   CouplingSpec coupling;
   bool symmetric = true;

   // solver
   std::vector<double> schedule;                          // empty -> solver default
   std::vector<double> pure_schedule = {0.02, 0.01, 0.005};
   double damping = 0.5;
   double tol = 1e-3;
   int max_iterations = 120;
   std::uint64_t seed = 12345;
   long mc_samples = 100000;
   std::vector<int> Ns = {2, 4, 8, 16, 32};
   double horizon = 40.0;
   double sim_dt = 0.01;
   double pure_tol = 0.05;  // certificate tolerance for pure-strategy play
   std::vector<std::vector<double>> starts = {{0.3}, {0.0}};
   bool detect_multiplicity = true;
   double discount_tol = 1e-6;
   int threads = 1;

   // output
   std::string outdir = "out";

   nlohmann::json resolved;  // the exact document the run is a function of
};

namespace detail {

inline const nlohmann::json* maybe_section(const nlohmann::json& j, const char* key) {
   auto it = j.find(key);
   return it == j.end() ? nullptr : &*it;
}

template <class T>
void read_field(const nlohmann::json& j, const char* section, const char* key, T& out) {
   auto it = j.find(key);
   if (it == j.end()) return;
   try {
      out = it->get<T>();
   } catch (const nlohmann::json::exception&) {
      throw ConfigError(std::string(section) + "." + key + ": wrong type");
   }
}

inline CouplingKind coupling_kind_from_tag(const std::string& tag) {
   if (tag == "zero") return CouplingKind::zero;
   if (tag == "separable") return CouplingKind::separable;
   if (tag == "pairwise") return CouplingKind::pairwise;
   if (tag == "mf_linear") return CouplingKind::mf_linear;
   if (tag == "mf_quadratic") return CouplingKind::mf_quadratic;
   throw ConfigError("game.coupling.kind: unknown tag '" + tag +
                     "' (zero, separable, pairwise, mf_linear, mf_quadratic)");
}

inline const char* coupling_tag(CouplingKind k) {
   switch (k) {
      case CouplingKind::zero: return "zero";
      case CouplingKind::separable: return "separable";
      case CouplingKind::pairwise: return "pairwise";
      case CouplingKind::mf_linear: return "mf_linear";
      case CouplingKind::mf_quadratic: return "mf_quadratic";
   }
   return "zero";
}

}  // namespace detail

// Catalog presets addressable from configs. Params may override amplitude,
// phase, frequency, offset, and the kind-specific coefficients.
inline LagrangianSpec lagrangian_from_tag(const std::string& tag, const nlohmann::json& params,
                                          int dimension) {
   LagrangianSpec s;
   s.d = dimension;
   if (tag == "flat") {
      s.pot_amp = 0.0;
   } else if (tag == "pendulum") {
      s.pot_amp = 0.3;
   } else if (tag == "two-well") {
      s.pot_amp = 0.3;
      s.pot_freq = 2;
   } else if (tag == "anisotropic") {
      s.kind = LagrangianKind::anisotropic_quadratic;
      s.pot_amp = 0.3;
      s.aniso.a11 = 2.0;
      s.aniso.a22 = 0.5;
   } else if (tag == "quartic") {
      s.kind = LagrangianKind::quartic_perturbed;
      s.pot_amp = 0.3;
      s.quartic = 0.5;
   } else {
      throw ConfigError("model.tag: unknown catalog tag '" + tag +
                        "' (flat, pendulum, two-well, anisotropic, quartic)");
   }
   detail::read_field(params, "model.params", "amp", s.pot_amp);
   detail::read_field(params, "model.params", "phase", s.pot_phase);
   detail::read_field(params, "model.params", "freq", s.pot_freq);
   detail::read_field(params, "model.params", "offset", s.pot_offset);
   detail::read_field(params, "model.params", "C0", s.C0);
   detail::read_field(params, "model.params", "a11", s.aniso.a11);
   detail::read_field(params, "model.params", "a22", s.aniso.a22);
   detail::read_field(params, "model.params", "a12", s.aniso.a12);
   detail::read_field(params, "model.params", "quartic", s.quartic);
   return s;
}

inline ExperimentConfig parse_config(const nlohmann::json& doc) {
   ExperimentConfig cfg;
   cfg.resolved = doc;
   detail::read_field(doc, "config", "dimension", cfg.dimension);
   if (cfg.dimension != 1 && cfg.dimension != 2)
      throw ConfigError("dimension: must be 1 or 2");

   if (const auto* grid = detail::maybe_section(doc, "grid")) {
      detail::read_field(*grid, "grid", "n", cfg.n);
      detail::read_field(*grid, "grid", "m", cfg.m);
      detail::read_field(*grid, "grid", "R", cfg.R);
   }
   if (cfg.n < 8) throw ConfigError("grid.n: need at least 8 nodes per axis");
   if (cfg.m < 9 || cfg.m % 2 == 0) throw ConfigError("grid.m: need an odd node count >= 9");
   if (cfg.R <= 0.0) throw ConfigError("grid.R: velocity box radius must be positive");

   nlohmann::json params = nlohmann::json::object();
   if (const auto* model = detail::maybe_section(doc, "model")) {
      detail::read_field(*model, "model", "tag", cfg.model_tag);
      if (const auto* p = detail::maybe_section(*model, "params")) params = *p;
   }
   cfg.lagrangian = lagrangian_from_tag(cfg.model_tag, params, cfg.dimension);

   if (const auto* game = detail::maybe_section(doc, "game")) {
      detail::read_field(*game, "game", "players", cfg.players);
      detail::read_field(*game, "game", "symmetric", cfg.symmetric);
      if (const auto* c = detail::maybe_section(*game, "coupling")) {
         std::string kind = detail::coupling_tag(cfg.coupling.kind);
         detail::read_field(*c, "game.coupling", "kind", kind);
         cfg.coupling.kind = detail::coupling_kind_from_tag(kind);
         detail::read_field(*c, "game.coupling", "amp", cfg.coupling.amp);
         detail::read_field(*c, "game.coupling", "phase", cfg.coupling.phase);
         detail::read_field(*c, "game.coupling", "freq", cfg.coupling.freq);
         detail::read_field(*c, "game.coupling", "offset", cfg.coupling.offset);
      }
   }
   if (cfg.players < 2 || cfg.players > 5)
      throw ConfigError("game.players: exact couplings support 2 to 5 players");
   if (!cfg.symmetric)
      throw ConfigError("game.symmetric: config-driven games are symmetric; "
                        "asymmetric specs need the library interface");

   if (const auto* solver = detail::maybe_section(doc, "solver")) {
      detail::read_field(*solver, "solver", "schedule", cfg.schedule);
      detail::read_field(*solver, "solver", "pure_schedule", cfg.pure_schedule);
      detail::read_field(*solver, "solver", "damping", cfg.damping);
      detail::read_field(*solver, "solver", "tol", cfg.tol);
      detail::read_field(*solver, "solver", "max_iterations", cfg.max_iterations);
      detail::read_field(*solver, "solver", "seed", cfg.seed);
      detail::read_field(*solver, "solver", "mc_samples", cfg.mc_samples);
      detail::read_field(*solver, "solver", "Ns", cfg.Ns);
      detail::read_field(*solver, "solver", "T", cfg.horizon);
      detail::read_field(*solver, "solver", "sim_dt", cfg.sim_dt);
      detail::read_field(*solver, "solver", "pure_tol", cfg.pure_tol);
      detail::read_field(*solver, "solver", "starts", cfg.starts);
      detail::read_field(*solver, "solver", "detect_multiplicity", cfg.detect_multiplicity);
      detail::read_field(*solver, "solver", "discount_tol", cfg.discount_tol);
      detail::read_field(*solver, "solver", "threads", cfg.threads);
   }
   if (!(cfg.damping > 0.0 && cfg.damping <= 1.0))
      throw ConfigError("solver.damping: step size must lie in (0, 1]");
   if (cfg.tol <= 0.0) throw ConfigError("solver.tol: must be positive");
   if (cfg.max_iterations < 1) throw ConfigError("solver.max_iterations: must be at least 1");
   for (double delta : cfg.schedule)
      if (delta <= 0.0) throw ConfigError("solver.schedule: discounts must be positive");
   if (cfg.mc_samples < 1000)
      throw ConfigError("solver.mc_samples: sampled couplings need at least 1000 draws");
   if (cfg.Ns.empty()) throw ConfigError("solver.Ns: need at least one population size");
   for (int N : cfg.Ns)
      if (N < 2) throw ConfigError("solver.Ns: population sizes start at 2");
   if (cfg.horizon < 10.0) throw ConfigError("solver.T: ergodic averages need T >= 10");
   if (!(cfg.sim_dt > 0.0 && cfg.sim_dt <= 0.1))
      throw ConfigError("solver.sim_dt: step must lie in (0, 0.1]");
   if (cfg.pure_tol <= 0.0) throw ConfigError("solver.pure_tol: must be positive");
   if (cfg.starts.empty()) throw ConfigError("solver.starts: need at least one initial state");
   for (const auto& s : cfg.starts)
      if (static_cast<int>(s.size()) != cfg.dimension)
         throw ConfigError("solver.starts: each start needs one coordinate per dimension");
   if (cfg.threads < 1) throw ConfigError("solver.threads: must be at least 1");

   if (const auto* output = detail::maybe_section(doc, "output"))
      detail::read_field(*output, "output", "dir", cfg.outdir);
   if (cfg.outdir.empty()) throw ConfigError("output.dir: must not be empty");
   return cfg;
}

// Dotted-path key=value override applied to the raw document before parsing.
// The value is parsed as JSON when possible and kept as a string otherwise,
// so --set solver.tol=1e-6 and --set model.tag=pendulum both read naturally.
inline void apply_override(nlohmann::json& doc, const std::string& assignment) {
   auto eq = assignment.find('=');
   if (eq == std::string::npos || eq == 0)
      throw ConfigError("override '" + assignment + "' is not of the form path.key=value");
   std::string path = assignment.substr(0, eq);
   std::string raw = assignment.substr(eq + 1);
   nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
   if (value.is_discarded()) value = raw;

   nlohmann::json* node = &doc;
   std::size_t begin = 0;
   while (true) {
      std::size_t dot = path.find('.', begin);
      std::string key = path.substr(begin, dot == std::string::npos ? dot : dot - begin);
      if (key.empty()) throw ConfigError("override '" + assignment + "' has an empty path step");
      if (dot == std::string::npos) {
         (*node)[key] = std::move(value);
         return;
      }
      node = &(*node)[key];
      if (!node->is_object()) *node = nlohmann::json::object();
      begin = dot + 1;
   }
}

}  // namespace ergonash
