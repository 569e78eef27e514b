#include <cmath>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "micsnet/scenario.hpp"

using namespace micsnet;

TEST_SUITE("scenario") {
  TEST_CASE("dbm mw conversions") {
    CHECK(mw_from_dbm(0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(mw_from_dbm(10.0) == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(mw_from_dbm(-30.0) == doctest::Approx(1e-3).epsilon(1e-12));
    CHECK(dbm_from_mw(100.0) == doctest::Approx(20.0).epsilon(1e-12));
    for (double dbm = -90.0; dbm <= 30.0; dbm += 7.3)
      CHECK(dbm_from_mw(mw_from_dbm(dbm)) == doctest::Approx(dbm).epsilon(1e-9));
  }

  TEST_CASE("power law field from positions") {
    RadioParams radio = RadioParams::defaults();
    std::vector<Point> pos{{0.0, 0.0}, {1.0, 0.0}, {2.0, 0.0}, {0.0, 3.0}};
    SignalField f = compute_signal_field(pos, radio);
    CHECK(f.at(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(f.at(0, 2) == doctest::Approx(1.0 / 16.0).epsilon(1e-12));
    CHECK(f.at(0, 3) == doctest::Approx(1.0 / 81.0).epsilon(1e-12));
    CHECK(f.at(1, 2) == f.at(2, 1));
    CHECK(f.at(0, 0) == 0.0);

    RadioParams strong = radio;
    strong.tx_power_mw = 4.0;
    SignalField g = compute_signal_field(pos, strong);
    CHECK(g.at(0, 2) == doctest::Approx(4.0 / 16.0).epsilon(1e-12));
  }

  TEST_CASE("default radio ranges") {
    RadioParams radio = RadioParams::defaults();
    CHECK(radio.tx_power_mw == 1.0);
    CHECK(radio.path_loss_exponent == 4.0);
    CHECK(radio.sinr_threshold == 10.0);
    CHECK(radio.cs_threshold_mw() ==
          doctest::Approx(radio.rx_sensitivity_mw - radio.noise_floor_mw).epsilon(1e-15));

    auto field_at = [&](double d) {
      std::vector<Point> pos{{0.0, 0.0}, {d, 0.0}};
      return compute_signal_field(pos, radio);
    };
    CHECK(link_feasible(field_at(249.0), radio, 0, 1));
    CHECK_FALSE(link_feasible(field_at(251.0), radio, 0, 1));
    CHECK(field_at(549.0).at(0, 1) >= radio.cs_threshold_mw());
    CHECK(field_at(551.0).at(0, 1) < radio.cs_threshold_mw());
  }

  TEST_CASE("link feasibility thresholds") {
    RadioParams radio = testfix::unit_radio();
    SignalField f(2);

    f.at(0, 1) = 5.0;
    CHECK(link_feasible(f, radio, 0, 1));

    f.at(0, 1) = 0.5;  // below sensitivity
    CHECK_FALSE(link_feasible(f, radio, 0, 1));

    f.at(0, 1) = 1.0;  // at sensitivity, SINR 1/0.1 = 10 exactly
    CHECK(link_feasible(f, radio, 0, 1));

    RadioParams noisy = radio;
    noisy.noise_floor_mw = 0.2;  // SINR 5 < 10
    f.at(0, 1) = 1.0;
    CHECK_FALSE(link_feasible(f, noisy, 0, 1));
  }

  TEST_CASE("signal field validation") {
    SignalField f(3);
    f.at(0, 1) = 1.0;
    CHECK_NOTHROW(f.validate());
    f.at(1, 2) = -0.5;
    CHECK_THROWS_AS(f.validate(), std::invalid_argument);
  }

  TEST_CASE("radio validation") {
    RadioParams r = RadioParams::defaults();
    CHECK_NOTHROW(r.validate());
    r.tx_power_mw = 0.0;
    CHECK_THROWS_AS(r.validate(), std::invalid_argument);
    r = RadioParams::defaults();
    r.noise_floor_mw = r.rx_sensitivity_mw;  // leaves no carrier sense margin
    CHECK_THROWS_AS(r.validate(), std::invalid_argument);
  }

  TEST_CASE("random topology is seeded and in bounds") {
    Rect area{1600.0, 1200.0};
    Topology a = generate_random_topology(40, area, 7);
    Topology b = generate_random_topology(40, area, 7);
    Topology c = generate_random_topology(40, area, 8);
    REQUIRE(a.positions.size() == 40);
    CHECK(testfix::same_points(a.positions, b.positions));
    CHECK_FALSE(testfix::same_points(a.positions, c.positions));
    for (const Point& p : a.positions) {
      CHECK(p.x >= 0.0);
      CHECK(p.x <= area.width);
      CHECK(p.y >= 0.0);
      CHECK(p.y <= area.height);
    }
  }

  TEST_CASE("generated scenario has distinct feasible single hop connections") {
    Scenario sc = generate_scenario(144, Rect{1600.0, 1600.0}, 25, 1, RadioParams::defaults(), 0.0);
    CHECK_NOTHROW(sc.validate());
    REQUIRE(sc.connections.size() == 25);
    std::vector<NodeId> ends;
    for (const Connection& c : sc.connections) {
      CHECK(link_feasible(sc.field, sc.radio, c.src, c.dst));
      CHECK(c.rate_bps == 0.0);
      ends.push_back(c.src);
      ends.push_back(c.dst);
    }
    std::sort(ends.begin(), ends.end());
    CHECK(std::adjacent_find(ends.begin(), ends.end()) == ends.end());

    Scenario again = generate_scenario(144, Rect{1600.0, 1600.0}, 25, 1, RadioParams::defaults(), 0.0);
    CHECK(testfix::same_points(sc.positions, again.positions));
    CHECK(sc.connections == again.connections);
  }

  TEST_CASE("scenario file round trip") {
    Scenario sc = generate_scenario(60, Rect{900.0, 900.0}, 8, 11, RadioParams::defaults(), 25000.0);
    std::ostringstream out;
    save_scenario(out, sc, "# example header");
    std::istringstream in(out.str());
    Scenario back = load_scenario(in);

    CHECK(testfix::same_points(back.positions, sc.positions));
    CHECK(back.connections == sc.connections);
    CHECK(back.seed == sc.seed);
    CHECK(back.area.width == sc.area.width);
    CHECK(back.area.height == sc.area.height);
    CHECK(back.radio.tx_power_mw == sc.radio.tx_power_mw);
    CHECK(back.radio.rx_sensitivity_mw == sc.radio.rx_sensitivity_mw);
    REQUIRE(back.field.size() == sc.field.size());
    for (NodeId i = 0; i < NodeId(sc.field.size()); ++i)
      for (NodeId j = 0; j < NodeId(sc.field.size()); ++j)
        CHECK(back.field.at(i, j) == sc.field.at(i, j));

    std::ostringstream out2;
    save_scenario(out2, back, "# example header");
    CHECK(out2.str() == out.str());
  }

  TEST_CASE("scenario load rejects malformed input") {
    std::istringstream in("nodes banana\n");
    CHECK_THROWS_AS(load_scenario(in), ScenarioError);
  }

  TEST_CASE("active link ordering") {
    ActiveLink a{1, 2}, b{1, 3}, c{2, 0};
    CHECK(a < b);
    CHECK(b < c);
    CHECK(a == ActiveLink{1, 2});
    CHECK_FALSE(a == b);
  }
}
