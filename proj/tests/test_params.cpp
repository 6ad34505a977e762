#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "ostb/params.hpp"
#include "test_util.hpp"

using namespace ostb;

TEST_CASE("device params validation") {
  DeviceParams p = test::reference_params();
  CHECK_NOTHROW(p.validate());

  SUBCASE("sensing window must fit") {
    p.sensing_deadline = 46;  // 46 + 5 > 50
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  }
  SUBCASE("transmit window must fit") {
    p.transmit_steps = 46;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  }
  SUBCASE("v_out above v_max rejected") {
    p.v_out = 3.4;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  }
  SUBCASE("zero mode current rejected") {
    p.sleep_current = 0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  }
}

TEST_CASE("mode resistances") {
  const DeviceParams p = test::reference_params();
  CHECK(p.resistance(Mode::sleep) == doctest::Approx(33000.0));
  CHECK(p.resistance(Mode::sense) == doctest::Approx(3.3 / 1.7e-3));
  CHECK(p.resistance(Mode::transmit) == doctest::Approx(3.3 / 4.36e-3));
}

TEST_CASE("harvest model validation") {
  CHECK_NOTHROW(HarvestModel::uniform_range(0, 3e-3));
  CHECK_THROWS(HarvestModel::uniform_range(3e-3, 3e-3));
  CHECK_THROWS(HarvestModel::uniform_range(-1e-3, 3e-3));
  CHECK_THROWS(HarvestModel::discrete_atoms({1e-3}, {0.5}));
  CHECK_THROWS(HarvestModel::discrete_atoms({-1e-3}, {1.0}));
  CHECK_NOTHROW(HarvestModel::discrete_atoms({0.0, 2e-3}, {0.25, 0.75}));
}

TEST_CASE("uniform harvest atoms are equiprobable bin midpoints") {
  const auto h = HarvestModel::uniform_range(0, 4e-3);
  std::vector<double> v, p;
  h.atoms(4, v, p);
  REQUIRE(v.size() == 4);
  CHECK(v[0] == doctest::Approx(0.5e-3));
  CHECK(v[3] == doctest::Approx(3.5e-3));
  for (double w : p) CHECK(w == doctest::Approx(0.25));
}

TEST_CASE("voltage grid endpoints and spacing") {
  const DeviceParams p = test::reference_params();
  const VoltageGrid g = VoltageGrid::make(p);
  REQUIRE(g.size() == 30);
  CHECK(g.levels.front() == 1.8);
  CHECK(g.levels.back() == 3.3);
  for (int i = 1; i < g.size(); ++i) CHECK(g.levels[i] > g.levels[i - 1]);
  CHECK(g.spacing() == doctest::Approx(1.5 / 29));
}

TEST_CASE("quantize: endpoints, clamping, midpoint rounds up") {
  const DeviceParams p = test::reference_params();
  const VoltageGrid g = VoltageGrid::make(p);
  // 1-based levels in the spec of the artifact are index+1 here.
  CHECK(g.nearest_level(1.8) == 0);     // level 1
  CHECK(g.nearest_level(3.3) == 29);    // level 30
  CHECK(g.nearest_level(0.2) == 0);     // below range clamps
  CHECK(g.nearest_level(9.9) == 29);    // above range clamps

  // 2.55 V: the nearest level under the computed spacing 1.5/29 wins.
  const int k = g.nearest_level(2.55);
  int best = 0;
  for (int i = 1; i < g.size(); ++i)  // scan oracle, ties to the higher level
    if (std::abs(2.55 - g.levels[i]) <= std::abs(2.55 - g.levels[best]))
      best = i;
  CHECK(k == best);

  // Exact midpoint between two interior levels.
  const double mid = 0.5 * (g.levels[4] + g.levels[5]);
  CHECK(g.nearest_level(mid) == 5);
}
