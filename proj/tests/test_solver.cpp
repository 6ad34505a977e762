#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "ostb/pipeline.hpp"
#include "ostb/solver.hpp"
#include "test_util.hpp"

using namespace ostb;

namespace {

MdpModel fat_model(double harvest_hi = 2e-3,
                   RewardSpec reward = RewardSpec{}) {
  return build_mdp(test::fat_params(),
                   HarvestModel::uniform_range(0, harvest_hi), reward,
                   {64, 2048, LevelRounding::nearest, 0.0});
}

/// Exhaustive oracle: evaluates a deterministic policy exactly through the
/// stationary distribution of its induced chain.
double policy_gain(const MdpModel& model, const std::vector<Action>& policy) {
  const auto chain = induced_chain(model, policy);
  const auto cls = classify_chain(chain);
  REQUIRE(cls.num_closed == 1);
  std::vector<int> members;
  for (int s = 0; s < model.num_states(); ++s)
    if (cls.state_recurrent[s]) members.push_back(s);
  const auto mu = stationary_distribution(chain, members);
  double gain = 0;
  for (size_t i = 0; i < members.size(); ++i)
    gain += mu[i] * model.reward_value(members[i], policy[members[i]]);
  return gain;
}

std::vector<int> decidable_states(const MdpModel& model) {
  std::vector<int> out;
  for (int s = 0; s < model.num_states(); ++s)
    if (model.decidable(s)) out.push_back(s);
  return out;
}

std::vector<Action> all_sleep_policy(const MdpModel& model) {
  std::vector<Action> policy(model.num_states(), Action::sleep);
  for (int s = 0; s < model.num_states(); ++s)
    policy[s] = model.kernel[s][0].action;
  return policy;
}

}  // namespace

TEST_CASE("two-state self-looping toy: all mass lands on the rewarded pair") {
  // One sub-interval per cycle; both sleeping and sensing wrap straight back
  // to the (0,0) superstate, so each state-action pair self-loops at the
  // superstate level. Sensing is everywhere safe, reward 1.
  DeviceParams p;
  p.capacitance = 1e-3;
  p.v_out = 0.1;
  p.v_min = 1.8;
  p.v_max = 3.3;
  p.delta_t = 0.02;
  p.subintervals = 1;
  p.sensing_deadline = 0;
  p.sensing_steps = 1;
  p.transmit_steps = 0;
  p.grid_levels = 2;
  const auto model = build_mdp(p, HarvestModel::uniform_range(0, 1e-3),
                               RewardSpec{}, {16, 1024,
                                              LevelRounding::nearest, 0.0});
  REQUIRE(model.num_states() == 2);
  for (int s = 0; s < 2; ++s)
    REQUIRE(model.reward_value(s, Action::sense) == 1.0);

  const auto occ = solve_occupation_lp(model);
  CHECK(occ.objective == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(occ.total_mass == doctest::Approx(1.0).epsilon(1e-8));
  double sense_mass = 0;
  for (int s = 0; s < 2; ++s) sense_mass += occ.x[s][1];
  CHECK(sense_mass == doctest::Approx(1.0).epsilon(1e-8));

  const auto rvi = relative_value_iteration(model);
  CHECK(rvi.gain == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("small sensing-only instance: LP equals RVI equals brute force") {
  const auto model = fat_model();
  // The structural theorems assume strictly positive kernels; the fat
  // configuration is built to satisfy that, so every policy is unichain.
  for (const Matrix* m : {&model.micro.sleep, &model.micro.sense})
    for (double v : m->a) REQUIRE(v > 0.0);

  const auto dec = decidable_states(model);
  REQUIRE(dec.size() == 12);  // 4 superstates x 3 levels

  std::vector<Action> policy = all_sleep_policy(model);
  double brute_best = -1;
  for (unsigned mask = 0; mask < (1u << 12); ++mask) {
    for (size_t i = 0; i < dec.size(); ++i)
      policy[dec[i]] = (mask >> i) & 1u ? Action::sense : Action::sleep;
    brute_best = std::max(brute_best, policy_gain(model, policy));
  }

  const auto occ = solve_occupation_lp(model);
  const auto rvi = relative_value_iteration(model);
  CHECK(std::abs(occ.objective - brute_best) < 1e-8);
  CHECK(std::abs(rvi.gain - brute_best) < 1e-8);

  // Occupation-measure invariants.
  CHECK(std::abs(occ.total_mass - 1.0) < 1e-8);
  CHECK(occ.max_flow_residual < 1e-8);

  // Gain recomputed from the extracted policy's own chain agrees too.
  const auto pol = extract_policy(model, occ, rvi);
  CHECK(std::abs(policy_gain(model, pol) - brute_best) < 1e-8);
}

TEST_CASE("two-task configuration: LP and RVI agree, extraction is sound") {
  DeviceParams p = test::fat_params();
  p.subintervals = 10;
  p.sensing_deadline = 2;
  p.sensing_steps = 2;
  p.transmit_steps = 3;
  const auto model = build_mdp(p, HarvestModel::uniform_range(0, 2e-3),
                               RewardSpec{}, {64, 2048,
                                              LevelRounding::nearest, 0.0});
  const auto occ = solve_occupation_lp(model);
  const auto rvi = relative_value_iteration(model);
  CHECK(std::abs(occ.objective - rvi.gain) <
        1e-6 * std::max(1.0, std::abs(rvi.gain)));
  const auto pol = extract_policy(model, occ, rvi);
  for (int s = 0; s < model.num_states(); ++s)
    CHECK(model.entry(s, pol[s]) != nullptr);
  const auto rep = verify_unichain(model, pol);
  CHECK(rep.closed_classes == 1);
  CHECK(rep.reset_superstate_recurrent);
  const auto gain_rep = make_gain_report(model, pol);
  CHECK(std::abs(gain_rep.gain_per_epoch - occ.objective) <
        1e-6 * std::max(1.0, std::abs(occ.objective)));
}

TEST_CASE("policy extraction honors mass, tie-break and the greedy fallback") {
  const auto model = fat_model();
  const auto occ = solve_occupation_lp(model);
  const auto rvi = relative_value_iteration(model);

  OccupationMeasure fake = occ;
  const auto dec = decidable_states(model);
  const int s0 = dec[0];
  SUBCASE("mass on sleeping only") {
    fake.x[s0][0] = 0.3;
    fake.x[s0][1] = 0.0;
    CHECK(extract_policy(model, fake, rvi)[s0] == Action::sleep);
  }
  SUBCASE("mass on both: task preferred") {
    fake.x[s0][0] = 0.3;
    fake.x[s0][1] = 1e-6;
    CHECK(extract_policy(model, fake, rvi)[s0] == Action::sense);
  }
  SUBCASE("no mass: greedy advantage decides") {
    fake.x[s0][0] = 0.0;
    fake.x[s0][1] = 0.0;
    const Action expect =
        advantage(model, rvi.bias, s0) >= 0 ? Action::sense : Action::sleep;
    CHECK(extract_policy(model, fake, rvi)[s0] == expect);
  }
}

TEST_CASE("threshold extraction: step policies, sentinels, violations") {
  const auto model = fat_model();
  const DeviceParams& p = model.params;
  auto policy = all_sleep_policy(model);

  SUBCASE("sensing at every level gives threshold level 1") {
    for (int tau = 0; tau <= p.sensing_deadline; ++tau)
      for (int lv = 0; lv < p.grid_levels; ++lv)
        policy[model.space.state_index(lv, tau, 0)] = Action::sense;
    const auto t = extract_thresholds(model, policy);
    for (const auto& th : t.sense) {
      REQUIRE(th.has_value());
      CHECK(*th == 0);
    }
  }
  SUBCASE("never sensing gives the sentinel") {
    const auto t = extract_thresholds(model, policy);
    for (const auto& th : t.sense) CHECK(!th.has_value());
  }
  SUBCASE("non-step pattern is reported with its superstate") {
    policy[model.space.state_index(0, 1, 0)] = Action::sense;  // low level only
    try {
      extract_thresholds(model, policy);
      FAIL("expected ThresholdStructureError");
    } catch (const ThresholdStructureError& e) {
      CHECK(e.tau == 1);
      CHECK(e.flag == 0);
      CHECK(e.pattern == "x..");
    }
  }
}

TEST_CASE("unichain verification on the strictly positive instance") {
  const auto model = fat_model();

  SUBCASE("always sleeping: one class spanning the f=0 cycle") {
    const auto rep = verify_unichain(model, all_sleep_policy(model));
    CHECK(rep.closed_classes == 1);
    CHECK(rep.reset_superstate_recurrent);
    // All f=0 states recur, everything else is transient.
    CHECK(rep.recurrent_states ==
          model.params.grid_levels * model.params.subintervals);
    for (int s = 0; s < model.num_states(); ++s) {
      const bool f0 = model.space.states[s].flag == 0;
      CHECK(static_cast<bool>(rep.state_recurrent[s]) == f0);
    }
  }

  SUBCASE("sensing everywhere at tau=0 disconnects the tail, still unichain") {
    auto policy = all_sleep_policy(model);
    for (int lv = 0; lv < model.params.grid_levels; ++lv)
      policy[model.space.state_index(lv, 0, 0)] = Action::sense;
    const auto rep = verify_unichain(model, policy);
    CHECK(rep.closed_classes == 1);
    CHECK(rep.reset_superstate_recurrent);
    // Superstates (tau > 0, f = 0) are cut off and must be transient.
    for (int tau = 1; tau < model.params.subintervals; ++tau)
      for (int lv = 0; lv < model.params.grid_levels; ++lv)
        CHECK(!rep.state_recurrent[model.space.state_index(lv, tau, 0)]);
  }

  SUBCASE("100 random deterministic policies are all unichain") {
    std::mt19937_64 rng(4242);
    const auto dec = decidable_states(model);
    auto policy = all_sleep_policy(model);
    for (int trial = 0; trial < 100; ++trial) {
      for (int s : dec)
        policy[s] = (rng() & 1) ? Action::sense : Action::sleep;
      const auto rep = verify_unichain(model, policy);
      CHECK(rep.closed_classes == 1);
      CHECK(rep.reset_superstate_recurrent);
    }
  }
}

TEST_CASE("relative value iteration on degenerate rewards") {
  SUBCASE("identically zero rewards give zero gain") {
    const auto model = build_mdp(test::fat_params(),
                                 HarvestModel::discrete_atoms({0.0}, {1.0}),
                                 RewardSpec{},
                                 {16, 1024, LevelRounding::nearest, 0.0});
    for (int s = 0; s < model.num_states(); ++s)
      for (const auto& e : model.kernel[s]) REQUIRE(e.reward == 0.0);
    const auto rvi = relative_value_iteration(model);
    CHECK(rvi.gain == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("iteration budget is enforced and reported") {
    const auto model = fat_model();
    CHECK_THROWS_AS(relative_value_iteration(model, 1e-14, 2),
                    std::runtime_error);
  }
}

TEST_CASE("advantage: formula structure and agreement with the solution") {
  const auto model = fat_model();
  const auto occ = solve_occupation_lp(model);
  const auto rvi = relative_value_iteration(model);

  // With a constant bias both branch values collapse to the reward.
  const std::vector<double> flat(model.num_states(), 3.25);
  for (int s : decidable_states(model))
    CHECK(advantage(model, flat, s) ==
          doctest::Approx(model.kernel[s][1].reward).epsilon(1e-12));

  // Singleton-action states are rejected.
  const int forced = model.space.state_index(0, 4, 0);
  REQUIRE(model.kernel[forced].size() == 1);
  CHECK_THROWS_AS(advantage(model, rvi.bias, forced), std::invalid_argument);

  // The advantage is non-decreasing in the voltage level within each
  // decidable superstate, so its sign flips at most once.
  const DeviceParams& p = model.params;
  for (int tau = 0; tau <= p.sensing_deadline; ++tau) {
    double prev = -1e100;
    for (int lv = 0; lv < p.grid_levels; ++lv) {
      const double d =
          advantage(model, rvi.bias, model.space.state_index(lv, tau, 0));
      CHECK(d >= prev - 1e-9);
      prev = d;
    }
  }

  // Greedy-on-advantage matches the extracted policy on recurrent states.
  const auto pol = extract_policy(model, occ, rvi);
  const auto rep = verify_unichain(model, pol);
  for (int s : decidable_states(model)) {
    if (!rep.state_recurrent[s]) continue;
    const Action greedy =
        advantage(model, rvi.bias, s) >= 0 ? Action::sense : Action::sleep;
    CHECK(pol[s] == greedy);
  }
}
