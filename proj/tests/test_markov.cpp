#include <doctest.h>

#include <stdexcept>
#include <cmath>

#include "ostb/markov.hpp"

using namespace ostb;

TEST_CASE("tarjan finds the right components") {
  // 0 <-> 1 form one SCC, 2 hangs off it, 3 <-> 4 closed.
  std::vector<std::vector<int>> adj = {{1}, {0, 2}, {3}, {4}, {3}};
  int count = 0;
  const auto comp = strongly_connected_components(adj, count);
  CHECK(count == 3);
  CHECK(comp[0] == comp[1]);
  CHECK(comp[0] != comp[2]);
  CHECK(comp[3] == comp[4]);
}

TEST_CASE("chain classification: closed classes and transients") {
  std::vector<SparseRow> chain(4);
  chain[0].add(1, 1.0);            // 0 -> 1 (transient)
  chain[1].add(2, 0.5);            // 1 -> {2,3}
  chain[1].add(3, 0.5);
  chain[2].add(3, 1.0);            // 2 <-> 3 closed
  chain[3].add(2, 1.0);
  const auto cls = classify_chain(chain);
  CHECK(cls.num_closed == 1);
  CHECK(cls.state_recurrent[0] == 0);
  CHECK(cls.state_recurrent[1] == 0);
  CHECK(cls.state_recurrent[2] == 1);
  CHECK(cls.state_recurrent[3] == 1);
}

TEST_CASE("stationary distribution of a two-state chain") {
  // P = [[0.9, 0.1], [0.3, 0.7]] has stationary (0.75, 0.25).
  std::vector<SparseRow> chain(2);
  chain[0].add(0, 0.9);
  chain[0].add(1, 0.1);
  chain[1].add(0, 0.3);
  chain[1].add(1, 0.7);
  const auto mu = stationary_distribution(chain, {0, 1});
  CHECK(mu[0] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(mu[1] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("stationary distribution of a cyclic chain is uniform") {
  std::vector<SparseRow> chain(5);
  for (int i = 0; i < 5; ++i) chain[i].add((i + 1) % 5, 1.0);
  const auto mu = stationary_distribution(chain, {0, 1, 2, 3, 4});
  for (double v : mu) CHECK(v == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("dense solve rejects singular systems") {
  Matrix a(2, 2);
  a.at(0, 0) = 1;
  a.at(0, 1) = 2;
  a.at(1, 0) = 2;
  a.at(1, 1) = 4;
  CHECK_THROWS_AS(solve_dense(a, {1.0, 2.0}), std::runtime_error);
}

TEST_CASE("matrix multiply") {
  Matrix a(2, 2), b(2, 2);
  a.at(0, 0) = 1;
  a.at(0, 1) = 2;
  a.at(1, 0) = 3;
  a.at(1, 1) = 4;
  b.at(0, 0) = 5;
  b.at(0, 1) = 6;
  b.at(1, 0) = 7;
  b.at(1, 1) = 8;
  const Matrix c = a.multiply(b);
  CHECK(c.at(0, 0) == 19);
  CHECK(c.at(0, 1) == 22);
  CHECK(c.at(1, 0) == 43);
  CHECK(c.at(1, 1) == 50);
}
