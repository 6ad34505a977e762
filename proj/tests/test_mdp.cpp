#include <doctest.h>

#include <stdexcept>
#include <cmath>
#include <random>

#include "ostb/mdp.hpp"
#include "test_util.hpp"

using namespace ostb;

TEST_CASE("state space size for the reference parameters") {
  const DeviceParams p = test::reference_params();  // n_t = 20
  const auto sp = build_state_space(p);
  // N_v * (M + (M - n_s) + (M - n_s - n_t)) = 30 * (50 + 45 + 25)
  CHECK(sp.num_states() == 3600);
  CHECK(sp.num_superstates() == 50 + 45 + 25);
  // Canonical order: flag-major, then tau, then level.
  CHECK(sp.states[0].flag == 0);
  CHECK(sp.states[0].tau == 0);
  CHECK(sp.states[0].level == 0);
  const State last = sp.states[sp.num_states() - 1];
  CHECK(last.flag == 2);
  CHECK(last.tau == p.subintervals - 1);
  CHECK(last.level == p.grid_levels - 1);
  // Index round-trip.
  const int idx = sp.state_index(7, 12, 1);
  CHECK(sp.states[idx].level == 7);
  CHECK(sp.states[idx].tau == 12);
  CHECK(sp.states[idx].flag == 1);
}

TEST_CASE("state space of the sensing-only example geometry") {
  // M=8, N_v=3, d_s=3, n_s=3, no transmit task: 3 * (8 + 5) = 39 states.
  DeviceParams p = test::fat_params();
  const auto sp = build_state_space(p);
  CHECK(sp.num_states() == 39);
  CHECK(sp.num_superstates() == 13);
}

TEST_CASE("degenerate window M = n_s + n_t has no f=2 states") {
  DeviceParams p = test::reference_params();
  p.subintervals = 25;
  p.sensing_steps = 5;
  p.transmit_steps = 20;
  p.sensing_deadline = 0;
  const auto sp = build_state_space(p);
  // f=2 clocks would start at 25 = M, i.e. none exist.
  for (const auto& s : sp.states) CHECK(s.flag < 2);
  CHECK(sp.num_states() == 30 * (25 + 20));
  // And the kernel assembles without crashing: the single transmit slot wraps.
  const auto grid = VoltageGrid::make(p);
  const auto h = HarvestModel::uniform_range(0, 3e-3);
  const auto micro = build_micro_matrices(p, h, grid, 32,
                                          LevelRounding::nearest, 1024);
  CHECK_NOTHROW(assemble_transition_kernel(sp, micro.matrices));
}

TEST_CASE("allowed actions per window") {
  const DeviceParams p = test::reference_params();
  auto acts = allowed_actions(p, {0, p.sensing_deadline, 0});
  REQUIRE(acts.size() == 2);
  CHECK(acts[1] == Action::sense);

  acts = allowed_actions(p, {0, p.sensing_deadline + 1, 0});
  CHECK(acts.size() == 1);  // deadline passed

  acts = allowed_actions(p, {0, p.subintervals - p.transmit_steps, 1});
  REQUIRE(acts.size() == 2);
  CHECK(acts[1] == Action::transmit);

  acts = allowed_actions(p, {0, p.subintervals - p.transmit_steps + 1, 1});
  CHECK(acts.size() == 1);  // window closed

  acts = allowed_actions(p, {0, p.sensing_steps + p.transmit_steps, 2});
  CHECK(acts.size() == 1);  // nothing left to do
}

TEST_CASE("micro matrix rows are distributions") {
  const DeviceParams p = test::reference_params();
  const auto grid = VoltageGrid::make(p);
  const auto h = HarvestModel::uniform_range(0, 3e-3);
  const auto micro =
      build_micro_matrices(p, h, grid, 64, LevelRounding::interpolate, 2048);
  for (const Matrix* m :
       {&micro.matrices.sleep, &micro.matrices.sense, &micro.matrices.transmit}) {
    for (int i = 0; i < m->rows; ++i) {
      double total = 0;
      for (int j = 0; j < m->cols; ++j) {
        CHECK(m->at(i, j) >= 0.0);
        total += m->at(i, j);
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("sleep matrix under zero harvest is a deterministic decay") {
  const DeviceParams p = test::reference_params();
  const auto grid = VoltageGrid::make(p);
  const auto h = HarvestModel::discrete_atoms({0.0}, {1.0});
  const auto micro =
      build_micro_matrices(p, h, grid, 2, LevelRounding::nearest, 1024);
  for (int i = 0; i < grid.size(); ++i) {
    const int expect =
        grid.nearest_level(grid.levels[i] * p.decay_per_step(Mode::sleep));
    for (int j = 0; j < grid.size(); ++j)
      CHECK(micro.matrices.sleep.at(i, j) == (j == expect ? 1.0 : 0.0));
  }
}

TEST_CASE("sensing matrix matches Monte-Carlo transition frequencies") {
  const DeviceParams p = test::reference_params();
  const auto grid = VoltageGrid::make(p);
  const auto h = HarvestModel::uniform_range(0, 3e-3);
  const auto micro =
      build_micro_matrices(p, h, grid, 256, LevelRounding::nearest, 4096);
  std::mt19937_64 rng(99);
  std::vector<double> draws(p.sensing_steps);
  const int samples = 200000;
  for (int i = 0; i < grid.size(); i += 7) {  // a spread of start levels
    std::vector<double> freq(grid.size(), 0.0);
    for (int s = 0; s < samples; ++s) {
      for (double& d : draws) d = 3e-3 * test::uniform01(rng);
      freq[grid.nearest_level(
          voltage_after(Mode::sense, grid.levels[i], draws, p))] += 1.0;
    }
    for (int j = 0; j < grid.size(); ++j)
      CHECK(std::abs(micro.matrices.sense.at(i, j) - freq[j] / samples) <
            5e-3);
  }
}

TEST_CASE("kernel structure: landings, resets, no inadmissible mass") {
  const DeviceParams p = test::reference_params();
  const auto model = build_mdp(p, HarvestModel::uniform_range(0, 3e-3),
                               RewardSpec{}, {64, 1024,
                                              LevelRounding::interpolate, 0.0});
  const auto& sp = model.space;

  for (int s = 0; s < model.num_states(); ++s) {
    const State st = sp.states[s];
    for (const auto& e : model.kernel[s]) {
      double total = 0;
      for (size_t k = 0; k < e.next.idx.size(); ++k) {
        total += e.next.val[k];
        const State to = sp.states[e.next.idx[k]];
        switch (e.action) {
          case Action::sleep:
            if (st.tau == p.subintervals - 1) {
              CHECK(to.tau == 0);
              CHECK(to.flag == 0);
            } else {
              CHECK(to.tau == st.tau + 1);
              CHECK(to.flag == st.flag);
            }
            break;
          case Action::sense:
            CHECK(to.tau == st.tau + p.sensing_steps);
            CHECK(to.flag == 1);
            break;
          case Action::transmit:
            if (st.tau == p.subintervals - p.transmit_steps) {
              CHECK(to.tau == 0);
              CHECK(to.flag == 0);
            } else {
              CHECK(to.tau == st.tau + p.transmit_steps);
              CHECK(to.flag == 2);
            }
            break;
        }
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("superstate block pattern of the sensing-only example") {
  // In the small example geometry, only the first four superstates
  // (tau 0..3, f=0) offer a choice; every other superstate row of the macro
  // matrix carries just the sleeping block.
  const DeviceParams p = test::fat_params();
  const auto model = build_mdp(p, HarvestModel::uniform_range(0, 2e-3),
                               RewardSpec{}, {64, 1024,
                                              LevelRounding::nearest, 0.0});
  for (int s = 0; s < model.num_states(); ++s) {
    const State st = model.space.states[s];
    const bool decidable = st.flag == 0 && st.tau <= 3;
    CHECK(model.kernel[s].size() == (decidable ? 2u : 1u));
    if (decidable) {
      CHECK(model.kernel[s][0].action == Action::sleep);
      CHECK(model.kernel[s][1].action == Action::sense);
      // Sensing from tau lands only in superstate (tau + 3, 1).
      for (size_t k = 0; k < model.kernel[s][1].next.idx.size(); ++k) {
        const State to = model.space.states[model.kernel[s][1].next.idx[k]];
        CHECK(to.tau == st.tau + 3);
        CHECK(to.flag == 1);
      }
    }
  }
}

TEST_CASE("iterated sleeping reaches the reset superstate within M steps") {
  const DeviceParams p = test::reference_params();
  const auto sp = build_state_space(p);
  for (int g = 0; g < sp.num_superstates(); ++g) {
    int tau = sp.superstates[g].tau;
    int flag = sp.superstates[g].flag;
    int steps = 0;
    while (!(tau == 0 && flag == 0)) {
      if (tau == p.subintervals - 1) {
        tau = 0;
        flag = 0;
      } else {
        ++tau;
      }
      ++steps;
      REQUIRE(steps <= p.subintervals);
    }
    CHECK(steps <= p.subintervals);
  }
}

TEST_CASE("rewards: sleeping earns zero, tasks earn safety-shaped values") {
  const DeviceParams p = test::reference_params();
  const auto h = HarvestModel::uniform_range(0, 3e-3);

  const auto basic = build_mdp(p, h, RewardSpec{RewardSpec::Kind::basic, 0, 0},
                               {128, 2048, LevelRounding::interpolate, 0.0});
  RewardSpec sig;
  sig.kind = RewardSpec::Kind::sigmoid;
  sig.beta = 15;
  sig.theta = 0.95;
  const auto sigm =
      build_mdp(p, h, sig, {128, 2048, LevelRounding::interpolate, 0.0});

  const int nv = p.grid_levels;
  for (const MdpModel* model : {&basic, &sigm}) {
    for (int s = 0; s < model->num_states(); ++s)
      CHECK(model->reward_value(s, Action::sleep) == 0.0);
  }

  // Basic rewards equal the safety probabilities and are monotone in level.
  for (int tau = 0; tau <= p.sensing_deadline; ++tau) {
    double prev = -1;
    for (int lv = 0; lv < nv; ++lv) {
      const int s = basic.space.state_index(lv, tau, 0);
      const double r = basic.reward_value(s, Action::sense);
      CHECK(r == doctest::Approx(basic.safe_sense[lv]).epsilon(1e-12));
      CHECK(r >= prev - 1e-12);
      prev = r;
    }
  }

  // Sigmoid rewards: 1 at the top level, bounded in (0, 1], monotone.
  for (int tau = p.sensing_steps; tau <= p.subintervals - p.transmit_steps;
       ++tau) {
    double prev = -1;
    for (int lv = 0; lv < nv; ++lv) {
      const int s = sigm.space.state_index(lv, tau, 1);
      const double r = sigm.reward_value(s, Action::transmit);
      CHECK(r > 0.0);
      CHECK(r <= 1.0 + 1e-12);
      CHECK(r >= prev - 1e-12);
      prev = r;
    }
    const int top = sigm.space.state_index(nv - 1, tau, 1);
    CHECK(sigm.reward_value(top, Action::transmit) ==
          doctest::Approx(1.0).epsilon(1e-12));
  }

  // Asking for a disallowed action is an error.
  const int s_late = basic.space.state_index(0, p.sensing_deadline + 1, 0);
  CHECK_THROWS_AS(basic.reward_value(s_late, Action::sense),
                  std::invalid_argument);
}

TEST_CASE("smoothing keeps rows stochastic and strictly positive") {
  const DeviceParams p = test::reference_params();
  const auto grid = VoltageGrid::make(p);
  const auto h = HarvestModel::uniform_range(0, 3e-3);
  const auto micro = build_micro_matrices(p, h, grid, 32,
                                          LevelRounding::nearest, 1024, 1e-12);
  for (int i = 0; i < grid.size(); ++i) {
    double total = 0;
    for (int j = 0; j < grid.size(); ++j) {
      CHECK(micro.matrices.sleep.at(i, j) > 0.0);
      total += micro.matrices.sleep.at(i, j);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
}
