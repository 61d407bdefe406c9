#pragma once

// JSON and CSV export of solver results, plus measure round-tripping. JSON
// uses shortest-round-trip double formatting, so identical inputs produce
// byte-identical artifacts and weights survive a save/load cycle bit for bit.
// CSV doubles are printed with %.17g for the same reason.

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ergonash/core.hpp"
#include "ergonash/euler_flow.hpp"
#include "ergonash/game.hpp"
#include "ergonash/grid.hpp"
#include "ergonash/mather_lp.hpp"
#include "ergonash/meanfield.hpp"
#include "ergonash/measures.hpp"
#include "ergonash/weakkam.hpp"

namespace ergonash {

using json = nlohmann::json;

inline std::string csv_num(double v) {
   char buf[32];
   std::snprintf(buf, sizeof buf, "%.17g", v);
   return buf;
}

template <int D>
json to_json(const TorusGrid<D>& g) {
   return json{{"d", D}, {"n", static_cast<int>(g.n)}};
}

template <int D>
json to_json(const VelocityGrid<D>& g) {
   return json{{"d", D}, {"R", g.R}, {"m", g.m}};
}

template <int D>
json to_json(const StateMeasure<D>& m) {
   return json{{"grid", to_json<D>(m.grid)}, {"weights", m.w}};
}

template <int D>
json to_json(const PhaseMeasure<D>& mu) {
   return json{{"xgrid", to_json<D>(mu.xgrid)},
               {"vgrid", to_json<D>(mu.vgrid)},
               {"weights", mu.w}};
}

template <int D>
json to_json(const GridFunction<D>& f) {
   return json{{"grid", to_json<D>(f.grid)}, {"values", f.values}};
}

template <int D>
TorusGrid<D> torus_grid_from_json(const json& j) {
   if (j.at("d").get<int>() != D) throw ConfigError("grid dimension mismatch");
   return TorusGrid<D>(j.at("n").get<std::size_t>());
}

template <int D>
VelocityGrid<D> velocity_grid_from_json(const json& j) {
   if (j.at("d").get<int>() != D) throw ConfigError("grid dimension mismatch");
   return VelocityGrid<D>(j.at("R").get<double>(), j.at("m").get<int>());
}

template <int D>
StateMeasure<D> state_measure_from_json(const json& j) {
   StateMeasure<D> m(torus_grid_from_json<D>(j.at("grid")));
   m.w = j.at("weights").get<std::vector<double>>();
   if (m.w.size() != m.grid.size()) throw ConfigError("weight count does not match the grid");
   m.validate();
   return m;
}

template <int D>
PhaseMeasure<D> phase_measure_from_json(const json& j) {
   PhaseMeasure<D> mu(torus_grid_from_json<D>(j.at("xgrid")),
                      velocity_grid_from_json<D>(j.at("vgrid")));
   mu.w = j.at("weights").get<std::vector<double>>();
   if (mu.w.size() != mu.xgrid.size() * mu.vgrid.size())
      throw ConfigError("weight count does not match the phase grid");
   mu.validate();
   return mu;
}

template <int D>
json to_json(const WeakKamSolution<D>& s) {
   json trace = json::array();
   for (const auto& [delta, lambda] : s.discount_trace)
      trace.push_back(json{{"delta", delta}, {"lambda", lambda}});
   return json{{"lambda", s.lambda},
               {"delta_min", s.delta_min},
               {"dt", s.dt},
               {"u_mean", s.u_mean},
               {"discount_trace", trace},
               {"corrector", to_json<D>(s.corrector)},
               {"policy", s.policy}};
}

template <int D>
json to_json(const MatherResult<D>& r) {
   return json{{"value", r.value},
               {"support", r.support},
               {"complementarity_gap", r.complementarity_gap},
               {"constraint_residual", r.constraint_residual},
               {"multiple_optima", r.multiple_optima},
               {"lp_iterations", r.lp_iterations},
               {"dual", r.dual},
               {"measure", to_json<D>(r.measure)}};
}

template <int D>
json to_json(const NashResult<D>& r) {
   json measures = json::array();
   json marginals = json::array();
   for (const auto& mu : r.measures) measures.push_back(to_json<D>(mu));
   for (const auto& m : r.state_marginals) marginals.push_back(to_json<D>(m));
   return json{{"converged", r.converged},
               {"iterations", r.iterations},
               {"values", r.values},
               {"lambdas", r.lambdas},
               {"deviation_gaps", r.deviation_gaps},
               {"gap_trace", r.gap_trace},
               {"movement_trace", r.movement_trace},
               {"measures", measures},
               {"state_marginals", marginals}};
}

template <int D>
json to_json(const PureStrategyReport<D>& rep) {
   json solutions = json::array();
   for (const auto& s : rep.solutions) solutions.push_back(to_json<D>(s));
   json runs = json::array();
   for (const auto& player_runs : rep.runs) {
      json arr = json::array();
      for (const auto& run : player_runs)
         arr.push_back(json{{"start", run.start},
                            {"average", run.average},
                            {"tail_average", run.tail_average},
                            {"lambda_gap", run.lambda_gap},
                            {"calibration_slack", run.calibration_slack},
                            {"calibrated", run.calibrated}});
      runs.push_back(arr);
   }
   json trials = json::array();
   for (const auto& player_trials : rep.trials) {
      json arr = json::array();
      for (const auto& t : player_trials)
         arr.push_back(json{{"label", t.label}, {"average", t.average}, {"margin", t.margin}});
      trials.push_back(arr);
   }
   return json{{"tol", rep.tol},
               {"certified", rep.certified},
               {"solutions", solutions},
               {"runs", runs},
               {"trials", trials}};
}

template <int D>
json to_json(const SymmetricNashResult<D>& r) {
   return json{{"lambda", r.lambda},
               {"lambda_lp", r.lambda_lp},
               {"gap", r.gap},
               {"coupling_se", r.coupling_se},
               {"converged", r.converged},
               {"iterations", r.iterations},
               {"gap_trace", r.gap_trace},
               {"movement_trace", r.movement_trace},
               {"v", to_json<D>(r.v)},
               {"mu", to_json<D>(r.mu)},
               {"m", to_json<D>(r.m)}};
}

template <int D>
json to_json(const MfgSolution<D>& s) {
   return json{{"lambda_bar", s.lambda_bar},
               {"lambda_pde", s.lambda_pde},
               {"gap", s.gap},
               {"variational_gap", s.variational_gap},
               {"stationarity_residual", s.stationarity_residual},
               {"converged", s.converged},
               {"iterations", s.iterations},
               {"gap_trace", s.gap_trace},
               {"movement_trace", s.movement_trace},
               {"v_bar", to_json<D>(s.v_bar)},
               {"mu_bar", to_json<D>(s.mu_bar)},
               {"m_bar", to_json<D>(s.m_bar)}};
}

template <int D>
json to_json(const NSweepRecord<D>& rec) {
   json rows = json::array();
   for (const auto& r : rec.rows)
      rows.push_back(json{{"N", r.N},
                          {"lambda_N", r.lambda_N},
                          {"dist_lambda", r.dist_lambda},
                          {"dist_v", r.dist_v},
                          {"dist_m", r.dist_m},
                          {"se", r.se},
                          {"ok", r.ok},
                          {"note", r.note}});
   return json{{"rows", rows}, {"limit", to_json<D>(rec.limit)}};
}

inline void write_text(const std::string& path, const std::string& text) {
   std::ofstream out(path, std::ios::binary);
   if (!out) throw ConfigError("cannot open for writing: " + path);
   out << text;
   if (!out) throw ConfigError("write failed: " + path);
}

inline void write_json(const std::string& path, const json& j) {
   write_text(path, j.dump(2) + "\n");
}

template <int D>
void write_trajectory_csv(const std::string& path, const Trajectory<D>& traj) {
   std::string text = "t";
   for (int k = 0; k < D; ++k) text += D == 1 ? ",x" : ",x" + std::to_string(k);
   for (int k = 0; k < D; ++k) text += D == 1 ? ",v" : ",v" + std::to_string(k);
   text += "\n";
   for (std::size_t i = 0; i < traj.x.size(); ++i) {
      text += csv_num(traj.dt * static_cast<double>(i));
      for (int k = 0; k < D; ++k) text += "," + csv_num(traj.x[i][k]);
      for (int k = 0; k < D; ++k) text += "," + csv_num(traj.v[i][k]);
      text += "\n";
   }
   write_text(path, text);
}

// fixed-point iteration trace shared by the nash and mfg subcommands
inline void write_trace_csv(const std::string& path, const std::vector<double>& gaps,
                            const std::vector<double>& movements) {
   std::string text = "iteration,gap,movement\n";
   for (std::size_t i = 0; i < gaps.size(); ++i) {
      text += std::to_string(i) + "," + csv_num(gaps[i]) + ",";
      text += (i < movements.size() ? csv_num(movements[i]) : "") + "\n";
   }
   write_text(path, text);
}

template <int D>
void write_nsweep_csv(const std::string& path, const NSweepRecord<D>& rec) {
   std::string text = "N,lambda_N,dist_lambda,dist_v_sup,dist_m_W1,stderr\n";
   for (const auto& r : rec.rows) {
      text += std::to_string(r.N) + "," + csv_num(r.lambda_N) + "," + csv_num(r.dist_lambda) +
              "," + csv_num(r.dist_v) + "," + csv_num(r.dist_m) + "," + csv_num(r.se) + "\n";
   }
   write_text(path, text);
}

inline void write_hewitt_savage_csv(const std::string& path,
                                    const std::vector<HewittSavageRow>& table) {
   std::string text = "N,estimate,se,exact,abs_err\n";
   for (const auto& r : table)
      text += std::to_string(r.N) + "," + csv_num(r.estimate) + "," + csv_num(r.se) + "," +
              csv_num(r.exact) + "," + csv_num(r.abs_err) + "\n";
   write_text(path, text);
}

inline json hewitt_savage_to_json(const std::vector<HewittSavageRow>& table) {
   json rows = json::array();
   for (const auto& r : table)
      rows.push_back(json{{"N", r.N},
                          {"estimate", r.estimate},
                          {"se", r.se},
                          {"exact", r.exact},
                          {"abs_err", r.abs_err}});
   return rows;
}

}  // namespace ergonash
