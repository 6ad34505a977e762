#include <doctest.h>

#include <stdexcept>
#include "ostb/simplex.hpp"

using namespace ostb;

namespace {

LpProblem make_problem(int rows, std::vector<std::vector<double>> dense_cols,
                       std::vector<double> c, std::vector<double> b) {
  LpProblem lp;
  lp.num_rows = rows;
  lp.rhs = std::move(b);
  lp.objective = std::move(c);
  for (const auto& col : dense_cols) {
    SparseVec v;
    for (int i = 0; i < rows; ++i)
      if (col[i] != 0) v.add(i, col[i]);
    lp.cols.push_back(v);
  }
  return lp;
}

}  // namespace

TEST_CASE("simplex: simple bounded maximization") {
  // max x0 + 2 x1 s.t. x0 + x1 + s = 1 -> optimum 2 at x1 = 1.
  const auto lp =
      make_problem(1, {{1.0}, {1.0}, {1.0}}, {1.0, 2.0, 0.0}, {1.0});
  const auto res = lp_maximize(lp);
  REQUIRE(res.status == LpStatus::optimal);
  CHECK(res.objective == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(res.x[1] == doctest::Approx(1.0));
}

TEST_CASE("simplex: equality system with two constraints") {
  // max 3x0 + x1  s.t.  x0 + x1 = 1, x0 - x1 + x2 = 0.
  // Optimum: x0 = 1 requires x2 = ... x0=1, x1=0, x2=-1 infeasible, so the
  // binding solution is x0 = x1 = 0.5, objective 2.
  const auto lp = make_problem(2, {{1.0, 1.0}, {1.0, -1.0}, {0.0, 1.0}},
                               {3.0, 1.0, 0.0}, {1.0, 0.0});
  const auto res = lp_maximize(lp);
  REQUIRE(res.status == LpStatus::optimal);
  CHECK(res.objective == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(res.x[0] == doctest::Approx(0.5));
  CHECK(res.x[1] == doctest::Approx(0.5));
}

TEST_CASE("simplex: detects infeasibility") {
  // x0 + x1 = 1 and x0 + x1 = 2 cannot both hold (encoded via two rows with
  // no slack).
  const auto lp =
      make_problem(2, {{1.0, 1.0}, {1.0, 1.0}}, {1.0, 1.0}, {1.0, 2.0});
  const auto res = lp_maximize(lp);
  CHECK(res.status == LpStatus::infeasible);
}

TEST_CASE("simplex: detects unboundedness") {
  // max x0 with x0 - x1 = 0: both can grow forever.
  const auto lp = make_problem(1, {{1.0}, {-1.0}}, {1.0, 0.0}, {0.0});
  const auto res = lp_maximize(lp);
  CHECK(res.status == LpStatus::unbounded);
}

TEST_CASE("simplex: degenerate problem still terminates at the optimum") {
  // Multiple zero-rhs rows force degenerate pivots.
  const auto lp = make_problem(
      3, {{1.0, 1.0, 0.0}, {1.0, 0.0, 1.0}, {1.0, 1.0, 1.0}, {1.0, 0.0, 0.0}},
      {1.0, 2.0, 3.0, 0.1}, {1.0, 0.0, 0.0});
  const auto res = lp_maximize(lp);
  REQUIRE(res.status == LpStatus::optimal);
  CHECK(res.objective >= 0.1 - 1e-9);
}

TEST_CASE("simplex: crash basis matches cold start") {
  const auto lp = make_problem(2, {{1.0, 1.0}, {1.0, -1.0}, {0.0, 1.0}},
                               {3.0, 1.0, 0.0}, {1.0, 0.0});
  const auto cold = lp_maximize(lp);
  const auto warm = lp_maximize(lp, {}, {0, 2});
  REQUIRE(cold.status == LpStatus::optimal);
  REQUIRE(warm.status == LpStatus::optimal);
  CHECK(cold.objective == doctest::Approx(warm.objective).epsilon(1e-10));
}

TEST_CASE("simplex is deterministic") {
  const auto lp = make_problem(
      3, {{1.0, 1.0, 0.0}, {1.0, 0.0, 1.0}, {1.0, 1.0, 1.0}, {1.0, 0.0, 0.0}},
      {1.0, 2.0, 3.0, 0.1}, {1.0, 0.0, 0.0});
  const auto a = lp_maximize(lp);
  const auto b = lp_maximize(lp);
  CHECK(a.iterations == b.iterations);
  CHECK(a.objective == b.objective);
  CHECK(a.x == b.x);
}
