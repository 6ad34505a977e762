#include "ostb/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ostb {

namespace {

class RevisedSimplex {
 public:
  RevisedSimplex(const LpProblem& lp, const LpOptions& opt)
      : lp_(lp), opt_(opt), m_(lp.num_rows), n_(static_cast<int>(lp.cols.size())) {
    if (static_cast<int>(lp.objective.size()) != n_)
      throw std::invalid_argument("lp: objective size mismatch");
    if (static_cast<int>(lp.rhs.size()) != m_)
      throw std::invalid_argument("lp: rhs size mismatch");
    for (double b : lp.rhs)
      if (b < 0) throw std::invalid_argument("lp: rhs must be non-negative");
    for (const auto& col : lp.cols)
      for (int i : col.idx)
        if (i < 0 || i >= m_) throw std::invalid_argument("lp: bad row index");
    cost_.assign(n_ + m_, 0.0);
    binv_.assign(static_cast<size_t>(m_) * m_, 0.0);
    xb_.assign(m_, 0.0);
    basis_.assign(m_, 0);
    in_basis_.assign(n_ + m_, 0);
  }

  LpResult run(const std::vector<int>& crash_basis) {
    LpResult out;
    bool have_basis = false;
    if (static_cast<int>(crash_basis.size()) == m_)
      have_basis = try_crash(crash_basis);
    if (!have_basis) {
      start_artificial();
      const LpStatus st = phase(true, out);
      if (st != LpStatus::optimal) {
        out.status = st;
        return out;
      }
      double infeas = 0;
      for (int i = 0; i < m_; ++i)
        if (basis_[i] >= n_) infeas += std::max(0.0, xb_[i]);
      if (infeas > opt_.feas_tol) {
        out.status = LpStatus::infeasible;
        out.message = "phase-1 objective " + std::to_string(infeas);
        return out;
      }
      drive_out_artificials();
    }
    const LpStatus st = phase(false, out);
    out.status = st;
    if (st != LpStatus::optimal) return out;
    out.x.assign(n_, 0.0);
    double obj = 0;
    for (int i = 0; i < m_; ++i) {
      if (basis_[i] < n_) {
        const double v = std::max(0.0, xb_[i]);
        out.x[basis_[i]] = v;
        obj += lp_.objective[basis_[i]] * v;
      }
    }
    out.objective = obj;
    return out;
  }

 private:
  const LpProblem& lp_;
  const LpOptions& opt_;
  int m_, n_;
  std::vector<double> cost_;   // minimization costs for real + artificial
  std::vector<double> binv_;   // row-major m x m basis inverse
  std::vector<double> xb_;
  std::vector<int> basis_;
  std::vector<char> in_basis_;
  long total_iters_ = 0;

  double* binv_row(int i) { return &binv_[static_cast<size_t>(i) * m_]; }

  void start_artificial() {
    std::fill(binv_.begin(), binv_.end(), 0.0);
    for (int i = 0; i < m_; ++i) {
      binv_row(i)[i] = 1.0;
      basis_[i] = n_ + i;
      xb_[i] = lp_.rhs[i];
    }
    std::fill(in_basis_.begin(), in_basis_.end(), 0);
    for (int i = 0; i < m_; ++i) in_basis_[n_ + i] = 1;
  }

  bool try_crash(const std::vector<int>& cols) {
    for (int j : cols)
      if (j < 0 || j >= n_) return false;
    basis_ = cols;
    if (!refactor()) return false;
    for (int i = 0; i < m_; ++i)
      if (xb_[i] < -opt_.feas_tol) return false;
    for (double& v : xb_) v = std::max(v, 0.0);
    std::fill(in_basis_.begin(), in_basis_.end(), 0);
    for (int j : basis_) in_basis_[j] = 1;
    return true;
  }

  /// Rebuilds binv_ and xb_ from basis_ by LU factorization. Returns false on
  /// a singular basis.
  bool refactor() {
    std::vector<double> b(static_cast<size_t>(m_) * m_, 0.0);
    for (int col = 0; col < m_; ++col) {
      const int j = basis_[col];
      if (j < n_) {
        const auto& c = lp_.cols[j];
        for (size_t k = 0; k < c.idx.size(); ++k)
          b[static_cast<size_t>(c.idx[k]) * m_ + col] = c.val[k];
      } else {
        b[static_cast<size_t>(j - n_) * m_ + col] = 1.0;
      }
    }
    // Invert via Gauss-Jordan with partial pivoting, applied to [B | I].
    std::vector<double> inv(static_cast<size_t>(m_) * m_, 0.0);
    for (int i = 0; i < m_; ++i) inv[static_cast<size_t>(i) * m_ + i] = 1.0;
    for (int col = 0; col < m_; ++col) {
      int piv = -1;
      double best = 1e-12;
      for (int r = col; r < m_; ++r) {
        const double v = std::abs(b[static_cast<size_t>(r) * m_ + col]);
        if (v > best) {
          best = v;
          piv = r;
        }
      }
      if (piv < 0) return false;
      if (piv != col) {
        for (int k = 0; k < m_; ++k) {
          std::swap(b[static_cast<size_t>(piv) * m_ + k],
                    b[static_cast<size_t>(col) * m_ + k]);
          std::swap(inv[static_cast<size_t>(piv) * m_ + k],
                    inv[static_cast<size_t>(col) * m_ + k]);
        }
      }
      const double d = b[static_cast<size_t>(col) * m_ + col];
      for (int k = 0; k < m_; ++k) {
        b[static_cast<size_t>(col) * m_ + k] /= d;
        inv[static_cast<size_t>(col) * m_ + k] /= d;
      }
      for (int r = 0; r < m_; ++r) {
        if (r == col) continue;
        const double f = b[static_cast<size_t>(r) * m_ + col];
        if (f == 0) continue;
        for (int k = 0; k < m_; ++k) {
          b[static_cast<size_t>(r) * m_ + k] -=
              f * b[static_cast<size_t>(col) * m_ + k];
          inv[static_cast<size_t>(r) * m_ + k] -=
              f * inv[static_cast<size_t>(col) * m_ + k];
        }
      }
    }
    binv_.swap(inv);
    // xb = B^{-1} b
    for (int i = 0; i < m_; ++i) {
      double acc = 0;
      const double* row = binv_row(i);
      for (int k = 0; k < m_; ++k) acc += row[k] * lp_.rhs[k];
      xb_[i] = acc;
    }
    return true;
  }

  void set_costs(bool phase1) {
    for (int j = 0; j < n_; ++j) cost_[j] = phase1 ? 0.0 : -lp_.objective[j];
    for (int j = n_; j < n_ + m_; ++j) cost_[j] = phase1 ? 1.0 : 0.0;
  }

  double column_dot(int j, const std::vector<double>& y) const {
    const auto& c = lp_.cols[j];
    double acc = 0;
    for (size_t k = 0; k < c.idx.size(); ++k) acc += y[c.idx[k]] * c.val[k];
    return acc;
  }

  LpStatus phase(bool phase1, LpResult& out) {
    set_costs(phase1);
    std::vector<double> y(m_), w(m_);
    int since_refactor = 0;
    int stall = 0;
    double prev_obj = current_cost();
    bool bland = opt_.blands_rule;

    while (true) {
      if (total_iters_++ > opt_.max_iterations) return LpStatus::iteration_limit;
      out.iterations = total_iters_;

      // y = cB' B^{-1}
      std::fill(y.begin(), y.end(), 0.0);
      for (int i = 0; i < m_; ++i) {
        const double cb = cost_[basis_[i]];
        if (cb == 0) continue;
        const double* row = binv_row(i);
        for (int k = 0; k < m_; ++k) y[k] += cb * row[k];
      }

      // Pricing over real columns (artificials never re-enter).
      int enter = -1;
      double best = -opt_.cost_tol;
      for (int j = 0; j < n_; ++j) {
        if (in_basis_[j]) continue;
        const double d = cost_[j] - column_dot(j, y);
        if (bland) {
          if (d < -opt_.cost_tol) {
            enter = j;
            break;
          }
        } else if (d < best) {
          best = d;
          enter = j;
        }
      }
      if (enter < 0) return LpStatus::optimal;

      // w = B^{-1} A_enter
      std::fill(w.begin(), w.end(), 0.0);
      const auto& c = lp_.cols[enter];
      for (int i = 0; i < m_; ++i) {
        const double* row = binv_row(i);
        double acc = 0;
        for (size_t k = 0; k < c.idx.size(); ++k)
          acc += row[c.idx[k]] * c.val[k];
        w[i] = acc;
      }

      // Ratio test; ties prefer kicking artificials, then lowest variable.
      int leave = -1;
      double ratio = 0;
      for (int i = 0; i < m_; ++i) {
        if (w[i] <= opt_.pivot_tol) continue;
        const double r = std::max(xb_[i], 0.0) / w[i];
        if (leave < 0 || r < ratio - 1e-12) {
          leave = i;
          ratio = r;
        } else if (r <= ratio + 1e-12) {
          const bool cand_art = basis_[i] >= n_;
          const bool cur_art = basis_[leave] >= n_;
          if ((cand_art && !cur_art) ||
              (cand_art == cur_art && basis_[i] < basis_[leave]))
            leave = i;
        }
      }
      if (leave < 0) return LpStatus::unbounded;

      pivot(enter, leave, w, ratio);

      if (++since_refactor >= opt_.refactor_every) {
        refactor();
        since_refactor = 0;
      }
      const double obj = current_cost();
      if (obj < prev_obj - 1e-13) {
        stall = 0;
        bland = opt_.blands_rule;
      } else if (++stall >= opt_.stall_limit) {
        bland = true;
      }
      prev_obj = obj;
    }
  }

  double current_cost() const {
    double acc = 0;
    for (int i = 0; i < m_; ++i) acc += cost_[basis_[i]] * xb_[i];
    return acc;
  }

  void pivot(int enter, int leave, const std::vector<double>& w, double ratio) {
    const double piv = w[leave];
    double* prow = binv_row(leave);
    for (int k = 0; k < m_; ++k) prow[k] /= piv;
    for (int i = 0; i < m_; ++i) {
      if (i == leave) continue;
      const double f = w[i];
      if (f == 0) continue;
      double* row = binv_row(i);
      for (int k = 0; k < m_; ++k) row[k] -= f * prow[k];
      xb_[i] -= f * ratio;
      if (xb_[i] < 0 && xb_[i] > -1e-12) xb_[i] = 0;
    }
    xb_[leave] = ratio;
    in_basis_[basis_[leave]] = 0;
    in_basis_[enter] = 1;
    basis_[leave] = enter;
  }

  /// After phase 1, replace basic artificials at zero level with any real
  /// column that has a usable pivot in that row. Rows with no usable column
  /// are redundant constraints; their artificial stays basic at zero.
  void drive_out_artificials() {
    std::vector<double> w(m_);
    for (int i = 0; i < m_; ++i) {
      if (basis_[i] < n_) continue;
      for (int j = 0; j < n_; ++j) {
        if (in_basis_[j]) continue;
        const auto& c = lp_.cols[j];
        double acc = 0;
        const double* row = binv_row(i);
        for (size_t k = 0; k < c.idx.size(); ++k)
          acc += row[c.idx[k]] * c.val[k];
        if (std::abs(acc) > 1e-7) {
          std::fill(w.begin(), w.end(), 0.0);
          for (int r = 0; r < m_; ++r) {
            const double* br = binv_row(r);
            double a = 0;
            for (size_t k = 0; k < c.idx.size(); ++k)
              a += br[c.idx[k]] * c.val[k];
            w[r] = a;
          }
          pivot(j, i, w, std::max(xb_[i], 0.0) / acc);
          break;
        }
      }
    }
  }
};

}  // namespace

LpResult lp_maximize(const LpProblem& lp, const LpOptions& opt,
                     const std::vector<int>& crash_basis) {
  RevisedSimplex solver(lp, opt);
  return solver.run(crash_basis);
}

}  // namespace ostb
