#pragma once

#include <string>
#include <vector>

namespace ostb {

struct SparseVec {
  std::vector<int> idx;
  std::vector<double> val;

  void add(int i, double v) {
    idx.push_back(i);
    val.push_back(v);
  }
};

/// maximize c'x subject to A x = b, x >= 0, with b >= 0.
struct LpProblem {
  int num_rows = 0;
  std::vector<SparseVec> cols;
  std::vector<double> objective;
  std::vector<double> rhs;
};

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

struct LpOptions {
  double cost_tol = 1e-9;      // reduced-cost optimality tolerance
  double pivot_tol = 1e-11;    // smallest acceptable pivot magnitude
  double feas_tol = 1e-9;      // phase-1 residual treated as feasible
  long max_iterations = 2000000;
  int refactor_every = 2000;   // rebuild the basis inverse this often
  int stall_limit = 500;       // degenerate pivots before Bland's rule kicks in
  bool blands_rule = false;    // use Bland's rule from the start
};

/// Two-phase revised simplex with an explicitly maintained basis inverse.
/// Entering variable: most negative reduced cost, lowest index on ties
/// (Dantzig); after `stall_limit` non-improving pivots the solver switches to
/// Bland's rule until the objective moves again, which guarantees
/// termination. Leaving variable: lowest ratio, ties broken toward artificial
/// variables and then the lowest variable index. Fully deterministic.
struct LpResult {
  LpStatus status = LpStatus::iteration_limit;
  double objective = 0;
  std::vector<double> x;
  long iterations = 0;
  std::string message;
};

/// `crash_basis`, when given, must list num_rows column indices forming a
/// feasible basis; the solver then skips phase 1. An unusable crash basis
/// falls back to the artificial start.
LpResult lp_maximize(const LpProblem& lp, const LpOptions& opt = {},
                     const std::vector<int>& crash_basis = {});

}  // namespace ostb
