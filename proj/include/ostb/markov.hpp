#pragma once

#include <utility>
#include <vector>

namespace ostb {

struct Matrix {
  int rows = 0, cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}

  double& at(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }

  static Matrix identity(int n);
  Matrix multiply(const Matrix& rhs) const;
};

/// Sparse probability row: parallel index/value arrays.
struct SparseRow {
  std::vector<int> idx;
  std::vector<double> val;

  void add(int i, double v) {
    idx.push_back(i);
    val.push_back(v);
  }
  double sum() const;
};

/// Strongly connected components of a directed graph (Tarjan, iterative).
/// Returns component ids in [0, count); components are numbered in reverse
/// topological order of the condensation (sources last).
std::vector<int> strongly_connected_components(
    const std::vector<std::vector<int>>& adjacency, int& count);

struct ChainClasses {
  int num_components = 0;
  std::vector<int> component_of;     // per state
  std::vector<char> component_closed;  // per component: no edge leaves it
  int num_closed = 0;
  std::vector<char> state_recurrent;   // member of some closed component
};

ChainClasses classify_chain(const std::vector<SparseRow>& transition);

/// Stationary distribution of an irreducible chain given by the rows of the
/// closed class `members` (indices into `transition`). Solved densely by
/// replacing one balance equation with the normalization. Returns per-member
/// probabilities aligned with `members`.
std::vector<double> stationary_distribution(
    const std::vector<SparseRow>& transition, const std::vector<int>& members);

/// Solves A x = b in place by Gaussian elimination with partial pivoting.
/// Throws std::runtime_error on a numerically singular system.
std::vector<double> solve_dense(Matrix a, std::vector<double> b);

}  // namespace ostb
