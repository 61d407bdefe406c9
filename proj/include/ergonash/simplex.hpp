#pragma once

// Small dense-basis revised simplex for equality-form problems
//     minimize c.w   subject to   A w = b,  w >= 0.
// Columns are sparse; the basis inverse is kept densely and refactorized
// periodically. Two phases with explicit artificials; redundant rows keep
// their artificial frozen at level zero. Pivoting is deterministic: Dantzig
// pricing with smallest-index ties, falling back to Bland's rule whenever the
// objective stalls, which preserves the anti-cycling guarantee. A pure-Bland
// mode is available for cross-checks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "ergonash/core.hpp"

namespace ergonash {

struct LpProblem {
   int rows = 0;
   std::vector<double> cost;                  // per structural column
   std::vector<double> rhs;                   // length rows
   std::vector<int> col_ptr{0};               // CSC layout
   std::vector<int> row_idx;
   std::vector<double> col_val;

   int cols() const { return static_cast<int>(cost.size()); }

   void add_column(double c, std::initializer_list<std::pair<int, double>> entries) {
      cost.push_back(c);
      for (auto& [r, v] : entries) {
         row_idx.push_back(r);
         col_val.push_back(v);
      }
      col_ptr.push_back(static_cast<int>(row_idx.size()));
   }
   void add_column(double c, const std::vector<std::pair<int, double>>& entries) {
      cost.push_back(c);
      for (auto& [r, v] : entries) {
         row_idx.push_back(r);
         col_val.push_back(v);
      }
      col_ptr.push_back(static_cast<int>(row_idx.size()));
   }
};

struct LpOptions {
   double tol = 1e-9;
   long max_iterations = 2000000;
   bool pure_bland = false;
   int refactor_every = 512;
   int stall_limit = 64;  // degenerate pivots before switching to Bland
};

struct LpSolution {
   bool optimal = false;
   double value = 0.0;
   std::vector<double> x;        // structural primal
   std::vector<double> y;        // row duals
   std::vector<int> basis;       // structural column per row, -1 where redundant
   std::vector<char> redundant;  // per-row flag
   long iterations = 0;
   double max_primal_residual = 0.0;
};

namespace detail {

class SimplexTableau {
  public:
   SimplexTableau(const LpProblem& p, const LpOptions& opt) : p_(p), opt_(opt), m_(p.rows) {
      nstruct_ = p.cols();
      // Flip rows so rhs >= 0, then append one artificial per row.
      row_sign_.assign(m_, 1.0);
      b_.resize(m_);
      for (int r = 0; r < m_; ++r) {
         row_sign_[r] = (p.rhs[r] < 0.0) ? -1.0 : 1.0;
         b_[r] = p.rhs[r] * row_sign_[r];
      }
      basis_.resize(m_);
      for (int r = 0; r < m_; ++r) basis_[r] = nstruct_ + r;
      binv_.assign(static_cast<std::size_t>(m_) * m_, 0.0);
      for (int r = 0; r < m_; ++r) binv_[idx(r, r)] = 1.0;
      xb_ = b_;
   }

   void run_phase1(LpSolution& out) {
      phase_ = 1;
      iterate();
      double infeas = 0.0;
      for (int r = 0; r < m_; ++r)
         if (basis_[r] >= nstruct_) infeas += xb_[r];
      if (infeas > 1e-7 * (1.0 + max_abs_rhs()))
         throw SolverError("linear program infeasible (phase-1 level " + std::to_string(infeas) + ")");
      drive_out_artificials();
   }

   void run_phase2(LpSolution& out) {
      phase_ = 2;
      iterate();
      extract(out);
   }

   long iterations() const { return iters_; }

  private:
   std::size_t idx(int r, int c) const { return static_cast<std::size_t>(r) * m_ + c; }

   double max_abs_rhs() const {
      double s = 0.0;
      for (double v : b_) s = std::max(s, std::fabs(v));
      return s;
   }

   double col_cost(int j) const {
      if (phase_ == 1) return (j >= nstruct_) ? 1.0 : 0.0;
      return (j >= nstruct_) ? 0.0 : p_.cost[j];
   }

   // column j of the row-flipped constraint matrix applied to a dense vector
   double dot_col(int j, const double* vec) const {
      if (j >= nstruct_) return vec[j - nstruct_];
      double s = 0.0;
      for (int t = p_.col_ptr[j]; t < p_.col_ptr[j + 1]; ++t)
         s += vec[p_.row_idx[t]] * row_sign_[p_.row_idx[t]] * p_.col_val[t];
      return s;
   }

   void ftran(int j, std::vector<double>& u) const {
      u.assign(m_, 0.0);
      if (j >= nstruct_) {
         int r = j - nstruct_;
         for (int i = 0; i < m_; ++i) u[i] = binv_[idx(i, r)];
         return;
      }
      for (int t = p_.col_ptr[j]; t < p_.col_ptr[j + 1]; ++t) {
         int r = p_.row_idx[t];
         double v = row_sign_[r] * p_.col_val[t];
         for (int i = 0; i < m_; ++i) u[i] += binv_[idx(i, r)] * v;
      }
   }

   void compute_duals(std::vector<double>& y) const {
      y.assign(m_, 0.0);
      for (int r = 0; r < m_; ++r) {
         double cb = col_cost(basis_[r]);
         if (cb == 0.0) continue;
         for (int c = 0; c < m_; ++c) y[c] += cb * binv_[idx(r, c)];
      }
   }

   // Entering column or -1 at optimality. Artificials never re-enter; they
   // start basic and only leave, which keeps Bland's termination argument.
   int price(const std::vector<double>& y, bool bland) const {
      int best = -1;
      double best_red = -opt_.tol;
      for (int j = 0; j < nstruct_; ++j) {
         if (in_basis_[j]) continue;
         double red = col_cost(j) - dot_col(j, y.data());
         if (red < best_red) {
            if (bland) return j;
            best_red = red;
            best = j;
         }
      }
      return best;
   }

   // Leaving row by ratio test; Bland tie-break on the basic variable index.
   int ratio_test(const std::vector<double>& u) const {
      int leave = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (int r = 0; r < m_; ++r) {
         if (u[r] > opt_.tol) {
            double ratio = xb_[r] / u[r];
            if (ratio < best_ratio - 1e-12 ||
                (ratio < best_ratio + 1e-12 && (leave == -1 || basis_[r] < basis_[leave]))) {
               best_ratio = ratio;
               leave = r;
            }
         }
      }
      return leave;
   }

   void pivot(int enter, int leave, const std::vector<double>& u) {
      double piv = u[leave];
      double* brow = &binv_[idx(leave, 0)];
      for (int c = 0; c < m_; ++c) brow[c] /= piv;
      xb_[leave] /= piv;
      for (int r = 0; r < m_; ++r) {
         if (r == leave) continue;
         double f = u[r];
         if (f == 0.0) continue;
         double* row = &binv_[idx(r, 0)];
         for (int c = 0; c < m_; ++c) row[c] -= f * brow[c];
         xb_[r] -= f * xb_[leave];
         if (xb_[r] < 0.0 && xb_[r] > -1e-11) xb_[r] = 0.0;
      }
      in_basis_[basis_[leave]] = 0;
      in_basis_[enter] = 1;
      basis_[leave] = enter;
   }

   void refactor() {
      // Rebuild binv_ from scratch by Gauss-Jordan on the basis columns.
      std::vector<double> m(static_cast<std::size_t>(m_) * 2 * m_, 0.0);
      auto at = [&](int r, int c) -> double& { return m[static_cast<std::size_t>(r) * 2 * m_ + c]; };
      for (int r = 0; r < m_; ++r) {
         int j = basis_[r];
         if (j >= nstruct_) {
            at(j - nstruct_, r) = 1.0;
         } else {
            // += so columns carrying duplicate row entries stay consistent
            // with ftran/dot_col, which sum them
            for (int t = p_.col_ptr[j]; t < p_.col_ptr[j + 1]; ++t)
               at(p_.row_idx[t], r) += row_sign_[p_.row_idx[t]] * p_.col_val[t];
         }
      }
      for (int r = 0; r < m_; ++r) at(r, m_ + r) = 1.0;
      for (int col = 0; col < m_; ++col) {
         int piv = col;
         double best = std::fabs(at(col, col));
         for (int r = col + 1; r < m_; ++r)
            if (std::fabs(at(r, col)) > best) {
               best = std::fabs(at(r, col));
               piv = r;
            }
         if (best < 1e-13) throw SolverError("singular basis during refactorization");
         if (piv != col)
            for (int c = 0; c < 2 * m_; ++c) std::swap(at(piv, c), at(col, c));
         double d = at(col, col);
         for (int c = 0; c < 2 * m_; ++c) at(col, c) /= d;
         for (int r = 0; r < m_; ++r) {
            if (r == col) continue;
            double f = at(r, col);
            if (f == 0.0) continue;
            for (int c = 0; c < 2 * m_; ++c) at(r, c) -= f * at(col, c);
         }
      }
      for (int r = 0; r < m_; ++r)
         for (int c = 0; c < m_; ++c) binv_[idx(r, c)] = at(r, m_ + c);
      // Recompute basic values.
      for (int r = 0; r < m_; ++r) {
         double s = 0.0;
         for (int c = 0; c < m_; ++c) s += binv_[idx(r, c)] * b_[c];
         xb_[r] = (s < 0.0 && s > -1e-11) ? 0.0 : s;
      }
   }

   double objective() const {
      double s = 0.0;
      for (int r = 0; r < m_; ++r) s += col_cost(basis_[r]) * xb_[r];
      return s;
   }

   void iterate() {
      in_basis_.assign(nstruct_ + m_, 0);
      for (int r = 0; r < m_; ++r) in_basis_[basis_[r]] = 1;
      std::vector<double> y, u;
      bool bland = opt_.pure_bland;
      int stall = 0;
      double last_obj = objective();
      int since_refactor = 0;
      while (true) {
         if (iters_ >= opt_.max_iterations)
            throw SolverError("simplex iteration cap exceeded");
         compute_duals(y);
         int enter = price(y, bland);
         if (enter < 0) break;
         ftran(enter, u);
         int leave = ratio_test(u);
         if (leave < 0) throw SolverError("linear program unbounded");
         pivot(enter, leave, u);
         ++iters_;
         if (++since_refactor >= opt_.refactor_every) {
            refactor();
            since_refactor = 0;
         }
         double obj = objective();
         if (!opt_.pure_bland) {
            if (obj < last_obj - 1e-13 * (1.0 + std::fabs(last_obj))) {
               bland = false;
               stall = 0;
            } else if (++stall >= opt_.stall_limit) {
               bland = true;  // anti-cycling fallback
            }
         }
         last_obj = obj;
      }
      refactor();
   }

   void drive_out_artificials() {
      std::vector<double> u;
      for (int r = 0; r < m_; ++r) {
         if (basis_[r] < nstruct_) continue;
         bool replaced = false;
         for (int j = 0; j < nstruct_ && !replaced; ++j) {
            if (in_basis_[j]) continue;
            ftran(j, u);
            if (std::fabs(u[r]) > 1e-7) {
               pivot(j, r, u);
               replaced = true;
            }
         }
         if (!replaced) redundant_rows_.push_back(r);  // artificial stays frozen at 0
      }
   }

   void extract(LpSolution& out) {
      out.x.assign(nstruct_, 0.0);
      out.basis.assign(m_, -1);
      out.redundant.assign(m_, 0);
      for (int r : redundant_rows_) out.redundant[r] = 1;
      for (int r = 0; r < m_; ++r) {
         if (basis_[r] < nstruct_) {
            out.x[basis_[r]] = std::max(0.0, xb_[r]);
            out.basis[r] = basis_[r];
         }
      }
      std::vector<double> y;
      compute_duals(y);
      out.y.assign(m_, 0.0);
      for (int r = 0; r < m_; ++r) out.y[r] = y[r] * row_sign_[r];
      out.value = 0.0;
      for (int j = 0; j < nstruct_; ++j) out.value += p_.cost[j] * out.x[j];
      out.iterations = iters_;
      // Equality residual on the original (unflipped) system.
      std::vector<double> res(p_.rhs);
      for (int j = 0; j < nstruct_; ++j) {
         if (out.x[j] == 0.0) continue;
         for (int t = p_.col_ptr[j]; t < p_.col_ptr[j + 1]; ++t)
            res[p_.row_idx[t]] -= p_.col_val[t] * out.x[j];
      }
      out.max_primal_residual = 0.0;
      for (int r = 0; r < m_; ++r)
         if (!out.redundant[r])
            out.max_primal_residual = std::max(out.max_primal_residual, std::fabs(res[r]));
      out.optimal = true;
   }

   const LpProblem& p_;
   const LpOptions& opt_;
   int m_ = 0;
   int nstruct_ = 0;
   int phase_ = 1;
   long iters_ = 0;
   std::vector<double> row_sign_, b_, xb_, binv_;
   std::vector<int> basis_;
   std::vector<char> in_basis_;
   std::vector<int> redundant_rows_;
};

}  // namespace detail

inline LpSolution solve_lp(const LpProblem& p, const LpOptions& opt = {}) {
   if (p.rows <= 0 || p.cols() <= 0) throw ConfigError("empty linear program");
   detail::SimplexTableau t(p, opt);
   LpSolution out;
   t.run_phase1(out);
   t.run_phase2(out);
   return out;
}

// Largest complementary-slackness violation: basic reduced costs should vanish
// and x_j * reduced_cost_j should be ~0 for all structural columns.
inline double complementary_slackness_gap(const LpProblem& p, const LpSolution& s) {
   double worst = 0.0;
   for (int j = 0; j < p.cols(); ++j) {
      double red = p.cost[j];
      for (int t = p.col_ptr[j]; t < p.col_ptr[j + 1]; ++t)
         red -= s.y[p.row_idx[t]] * p.col_val[t];
      worst = std::max(worst, std::fabs(red * s.x[j]));
      if (red < -1e-7) worst = std::max(worst, -red);  // dual infeasibility
   }
   return worst;
}

}  // namespace ergonash
