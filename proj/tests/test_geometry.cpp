#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ubf/error.hpp"
#include "ubf/geometry.hpp"

using namespace ubf;

namespace {
constexpr double kDeg = std::numbers::pi / 180.0;
}

TEST_CASE("element positions") {
  SUBCASE("single element at the center") {
    const auto x = element_positions(Probe{1, 0.3e-3, 7.6e6});
    REQUIRE(x.size() == 1);
    CHECK(x[0] == 0.0);
  }
  SUBCASE("two elements") {
    const double p = 0.25e-3;
    const auto x = element_positions(Probe{2, p, 5e6});
    CHECK(x[0] == -p / 2);
    CHECK(x[1] == p / 2);
  }
  SUBCASE("default probe") {
    const auto x = element_positions(Probe{});
    REQUIRE(x.size() == 128);
    CHECK(x.front() == doctest::Approx(-19.05e-3).epsilon(1e-12));
    double mean = 0.0;
    for (double v : x) mean += v;
    CHECK(std::abs(mean / 128.0) <= 1e-15);
  }
  SUBCASE("antisymmetric for odd and even counts") {
    for (std::size_t n : {3u, 16u, 17u, 128u}) {
      const auto x = element_positions(Probe{n, 0.3e-3, 7.6e6});
      for (std::size_t e = 0; e < n; ++e) CHECK(x[e] == -x[n - 1 - e]);
    }
  }
}

TEST_CASE("transmit delay") {
  const double c = 1540.0;
  CHECK(tx_delay({0.0, 10e-3}, 0.0, c) == doctest::Approx(6.49351e-6).epsilon(1e-5));
  CHECK(tx_delay({-4e-3, 10e-3}, 0.0, c) == tx_delay({7e-3, 10e-3}, 0.0, c));
  // Independent evaluation of (z cos + x sin)/c at 10 degrees, x = 5 mm, z = 20 mm.
  const double expected = (20e-3 * std::cos(10 * kDeg) + 5e-3 * std::sin(10 * kDeg)) / c;
  CHECK(tx_delay({5e-3, 20e-3}, 10 * kDeg, c) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(tx_delay({5e-3, 20e-3}, 10 * kDeg, c) == doctest::Approx(1.33535e-5).epsilon(1e-5));

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ux(-10e-3, 10e-3), uz(0.0, 40e-3), ua(-1.2, 1.2);
  for (int k = 0; k < 1000; ++k) {
    const double x = ux(rng), z = uz(rng), a = ua(rng);
    const double d1 = tx_delay({-x, z}, -a, c);
    const double d2 = tx_delay({x, z}, a, c);
    CHECK(std::abs(d1 - d2) <= 1e-15 * std::abs(d2) + 1e-30);
  }
}

TEST_CASE("receive delay") {
  const double c = 1540.0;
  CHECK(rx_delay({0.0, 12e-3}, 0.0, c) == doctest::Approx(12e-3 / c).epsilon(1e-15));
  CHECK(rx_delay({3e-3, 0.0}, 3e-3, c) == 0.0);
  CHECK(rx_delay({3e-3, 4e-3}, 0.0, c) == doctest::Approx(3.24675e-6).epsilon(1e-5));
  CHECK(rx_delay({3e-3, 4e-3}, 0.0, c) == doctest::Approx(5e-3 / c).epsilon(1e-15));

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ux(-20e-3, 20e-3), uz(0.0, 50e-3);
  for (int k = 0; k < 1000; ++k) {
    const double z = uz(rng);
    CHECK(rx_delay({ux(rng), z}, ux(rng), c) >= z / c);
  }
}

TEST_CASE("angle fan") {
  const auto fan = make_angle_fan(75, 16 * kDeg);
  REQUIRE(fan.angles.size() == 75);
  CHECK(fan.angles[37] == 0.0);
  CHECK(fan.angles.front() == doctest::Approx(-16 * kDeg));
  CHECK(fan.angles[38] / kDeg == doctest::Approx(32.0 / 74.0));
  for (std::size_t i = 0; i < 75; ++i) CHECK(fan.angles[i] == -fan.angles[74 - i]);
  CHECK(make_angle_fan(1, 16 * kDeg).angles == std::vector<double>{0.0});
}

TEST_CASE("grid construction and validation") {
  const Probe probe;
  const auto g = make_default_grid(probe, 1540.0);
  CHECK(g.nx() == 96);
  CHECK(g.ny() == 64);
  const double half_lambda = 1540.0 / 7.6e6 / 2;
  CHECK(g.axial_spacing() == doctest::Approx(half_lambda));
  CHECK(g.lateral_spacing() == doctest::Approx(half_lambda));
  CHECK(g.lateral.front() == -g.lateral.back());
  CHECK(g.axial[48] == doctest::Approx(20e-3).epsilon(1e-12));
  CHECK_NOTHROW(g.validate());

  ImagingGrid bad = g;
  bad.axial[5] += 1e-6;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = g;
  std::swap(bad.lateral[0], bad.lateral[1]);
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_THROWS_AS(make_uniform_grid(0, 4, 1e-4, 1e-4, 0.01), ConfigError);
}

TEST_CASE("type invariants") {
  CHECK_THROWS_AS((Probe{0, 0.3e-3, 7.6e6}.validate()), ConfigError);
  CHECK_THROWS_AS((Probe{4, 0.0, 7.6e6}.validate()), ConfigError);
  CHECK_THROWS_AS((Probe{4, 0.3e-3, -1.0}.validate()), ConfigError);
  AcquisitionParams acq;
  CHECK(acq.satisfies_nyquist(Probe{}));
  acq.sampling_frequency = 10e6;
  CHECK_FALSE(acq.satisfies_nyquist(Probe{}));
  acq.num_samples = 0;
  CHECK_THROWS_AS(acq.validate(), ConfigError);
  CHECK_THROWS_AS(PlaneWaveTx{}.validate(), ConfigError);
  CHECK_THROWS_AS((PlaneWaveTx{{0.0, std::numbers::pi / 2}}.validate()), ConfigError);
}
