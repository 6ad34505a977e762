#include "ostb/markov.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ostb {

Matrix Matrix::identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

Matrix Matrix::multiply(const Matrix& rhs) const {
  if (cols != rhs.rows) throw std::invalid_argument("matrix shape mismatch");
  Matrix out(rows, rhs.cols);
  for (int i = 0; i < rows; ++i) {
    for (int k = 0; k < cols; ++k) {
      const double aik = at(i, k);
      if (aik == 0) continue;
      const double* rrow = &rhs.a[static_cast<size_t>(k) * rhs.cols];
      double* orow = &out.a[static_cast<size_t>(i) * rhs.cols];
      for (int j = 0; j < rhs.cols; ++j) orow[j] += aik * rrow[j];
    }
  }
  return out;
}

double SparseRow::sum() const {
  double s = 0;
  for (double v : val) s += v;
  return s;
}

std::vector<int> strongly_connected_components(
    const std::vector<std::vector<int>>& adjacency, int& count) {
  const int n = static_cast<int>(adjacency.size());
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<char> on_stack(n, 0);
  std::vector<int> stack;
  stack.reserve(n);
  count = 0;
  int next_index = 0;

  // Explicit DFS stack: (vertex, next child position).
  std::vector<std::pair<int, size_t>> dfs;
  for (int root = 0; root < n; ++root) {
    if (index[root] != -1) continue;
    dfs.emplace_back(root, 0);
    index[root] = low[root] = next_index++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!dfs.empty()) {
      auto& [v, child] = dfs.back();
      if (child < adjacency[v].size()) {
        const int w = adjacency[v][child++];
        if (index[w] == -1) {
          index[w] = low[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = 1;
          dfs.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
      } else {
        if (low[v] == index[v]) {
          while (true) {
            const int w = stack.back();
            stack.pop_back();
            on_stack[w] = 0;
            comp[w] = count;
            if (w == v) break;
          }
          ++count;
        }
        const int finished = v;
        dfs.pop_back();
        if (!dfs.empty())
          low[dfs.back().first] =
              std::min(low[dfs.back().first], low[finished]);
      }
    }
  }
  return comp;
}

ChainClasses classify_chain(const std::vector<SparseRow>& transition) {
  const int n = static_cast<int>(transition.size());
  std::vector<std::vector<int>> adj(n);
  for (int s = 0; s < n; ++s) {
    adj[s].reserve(transition[s].idx.size());
    for (size_t k = 0; k < transition[s].idx.size(); ++k)
      if (transition[s].val[k] > 0) adj[s].push_back(transition[s].idx[k]);
  }
  ChainClasses out;
  out.component_of = strongly_connected_components(adj, out.num_components);
  out.component_closed.assign(out.num_components, 1);
  for (int s = 0; s < n; ++s)
    for (int t : adj[s])
      if (out.component_of[t] != out.component_of[s])
        out.component_closed[out.component_of[s]] = 0;
  out.state_recurrent.assign(n, 0);
  for (int s = 0; s < n; ++s)
    if (out.component_closed[out.component_of[s]]) out.state_recurrent[s] = 1;
  for (char c : out.component_closed) out.num_closed += c;
  return out;
}

std::vector<double> solve_dense(Matrix a, std::vector<double> b) {
  const int n = a.rows;
  if (a.cols != n || static_cast<int>(b.size()) != n)
    throw std::invalid_argument("solve_dense: shape mismatch");
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  for (int col = 0; col < n; ++col) {
    int piv = col;
    double best = std::abs(a.at(col, col));
    for (int r = col + 1; r < n; ++r) {
      const double cand = std::abs(a.at(r, col));
      if (cand > best) {
        best = cand;
        piv = r;
      }
    }
    if (best < 1e-14) throw std::runtime_error("solve_dense: singular matrix");
    if (piv != col) {
      for (int j = 0; j < n; ++j) std::swap(a.at(piv, j), a.at(col, j));
      std::swap(b[piv], b[col]);
    }
    const double d = a.at(col, col);
    for (int r = col + 1; r < n; ++r) {
      const double f = a.at(r, col) / d;
      if (f == 0) continue;
      a.at(r, col) = 0;
      for (int j = col + 1; j < n; ++j) a.at(r, j) -= f * a.at(col, j);
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n, 0.0);
  for (int r = n - 1; r >= 0; --r) {
    double acc = b[r];
    for (int j = r + 1; j < n; ++j) acc -= a.at(r, j) * x[j];
    x[r] = acc / a.at(r, r);
  }
  return x;
}

std::vector<double> stationary_distribution(
    const std::vector<SparseRow>& transition, const std::vector<int>& members) {
  const int m = static_cast<int>(members.size());
  if (m == 0) throw std::invalid_argument("stationary_distribution: empty class");
  std::vector<int> pos(transition.size(), -1);
  for (int i = 0; i < m; ++i) pos[members[i]] = i;
  // Balance equations mu^T (I - P) = 0 restricted to the class, with the
  // first equation replaced by sum(mu) = 1.
  Matrix a(m, m);
  for (int i = 0; i < m; ++i) {
    a.at(i, i) += 1.0;
    const SparseRow& row = transition[members[i]];
    for (size_t k = 0; k < row.idx.size(); ++k) {
      const int j = pos[row.idx[k]];
      if (j < 0) {
        if (row.val[k] > 1e-15)
          throw std::invalid_argument(
              "stationary_distribution: class is not closed");
        continue;
      }
      a.at(j, i) -= row.val[k];
    }
  }
  std::vector<double> b(m, 0.0);
  for (int j = 0; j < m; ++j) a.at(0, j) = 1.0;
  b[0] = 1.0;
  auto mu = solve_dense(std::move(a), std::move(b));
  double total = 0;
  for (double& v : mu) {
    if (v < 0 && v > -1e-12) v = 0;
    total += v;
  }
  for (double& v : mu) v /= total;
  return mu;
}

}  // namespace ostb
