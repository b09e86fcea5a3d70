#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "ubf/error.hpp"
#include "ubf/tofc.hpp"

using namespace ubf;

namespace {

struct Setup {
  Probe probe{16, 0.3e-3, 7.6e6};
  AcquisitionParams acq;
  ImagingGrid grid;
  PulseSpec pulse;

  explicit Setup(double fs = 31.25e6) {
    acq.sampling_frequency = fs;
    grid = make_default_grid(probe, acq.sound_speed, 20e-3, 32, 24);
    Phantom deep = make_point_phantom({grid.axial.back()});
    deep.scatterers[0].x_lat = grid.lateral.back();
    acq.num_samples = required_samples(deep, probe, acq, make_angle_fan(3, 0.3), pulse);
  }
};

}  // namespace

TEST_CASE("sample interpolation") {
  const std::vector<double> v{1.0, 3.0, -2.0, 5.0};
  CHECK(sample_at(v, 0.0) == 1.0);
  CHECK(sample_at(v, 3.0) == 5.0);
  CHECK(sample_at(v, 0.5) == 2.0);
  CHECK(sample_at(v, 1.5) == 0.5);
  CHECK(sample_at(v, 2.25) == doctest::Approx(-0.25));
  CHECK(sample_at(v, -1e-9) == 0.0);
  CHECK(sample_at(v, 3.0 + 1e-9) == 0.0);
  CHECK(sample_at(v, std::nan("")) == 0.0);
}

TEST_CASE("scatterer on a pixel aligns across channels") {
  const Setup s;
  const std::size_t i0 = 16, j0 = 12;
  Phantom ph;
  ph.scatterers.push_back({s.grid.lateral[j0], s.grid.axial[i0], 1.0});
  const auto frame = simulate_frame(ph, s.probe, s.acq, 0.0);
  const auto cube = tof_correct(frame, s.grid, s.probe);

  // Oracle: per-channel peak search along the axial column through the scatterer.
  std::vector<double> offsets;
  for (std::size_t e = 0; e < s.probe.num_elements; ++e) {
    std::size_t best = 0;
    for (std::size_t i = 0; i < s.grid.nx(); ++i) {
      if (std::abs(cube.data(i, j0, e)) > std::abs(cube.data(best, j0, e))) best = i;
    }
    offsets.push_back(static_cast<double>(best) - static_cast<double>(i0));
  }
  double mean = 0.0;
  for (double o : offsets) mean += o;
  mean /= static_cast<double>(offsets.size());
  double var = 0.0;
  for (double o : offsets) var += (o - mean) * (o - mean);
  CHECK(var == 0.0);
  CHECK(mean == 0.0);
}

TEST_CASE("scatterer on a pixel reproduces the pulse peak") {
  // Oversampled acquisition so that linear interpolation of the carrier stays within 2%.
  const Setup s(250e6);
  const std::size_t i0 = 10, j0 = 7;
  Phantom ph;
  ph.scatterers.push_back({s.grid.lateral[j0], s.grid.axial[i0], 1.0});
  const auto cube = tof_correct(simulate_frame(ph, s.probe, s.acq, 0.0), s.grid, s.probe);
  for (std::size_t e = 0; e < s.probe.num_elements; ++e) CHECK(std::abs(cube.data(i0, j0, e) - 1.0) <= 0.02);
}

TEST_CASE("out of record pixels are zero") {
  Setup s;
  Phantom ph = make_point_phantom({20e-3});
  const auto full = simulate_frame(ph, s.probe, s.acq, 0.0);
  RfFrame frame = full;
  frame.acq.num_samples = 50;
  frame.data = Array2<double>(50, s.probe.num_elements, 1.0);
  const auto cube = tof_correct(frame, s.grid, s.probe);
  for (double v : cube.data.values()) CHECK(v == 0.0);
}

TEST_CASE("midpoint interpolation inside tof_correct") {
  // One element at x = 0, one pixel: round-trip index chosen to land exactly on k + 0.5.
  const Probe probe{1, 0.3e-3, 7.6e6};
  AcquisitionParams acq;
  acq.sampling_frequency = 1.0;
  acq.sound_speed = 2.0;
  acq.num_samples = 8;
  ImagingGrid grid{{2.5}, {0.0}};
  RfFrame frame{0.0, Array2<double>(8, 1), acq};
  for (std::size_t n = 0; n < 8; ++n) frame.data(n, 0) = static_cast<double>(n * n);
  const auto cube = tof_correct(frame, grid, probe);
  CHECK(cube.data(0, 0, 0) == (4.0 + 9.0) / 2.0);
}

TEST_CASE("linearity and finiteness") {
  Setup s;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  RfFrame a{0.12, Array2<double>(s.acq.num_samples, s.probe.num_elements), s.acq};
  RfFrame b = a;
  for (double& v : a.data.values()) v = g(rng);
  for (double& v : b.data.values()) v = g(rng);
  const double alpha = 0.7, beta = -1.9;
  RfFrame mix = a;
  for (std::size_t k = 0; k < mix.data.size(); ++k) {
    mix.data.values()[k] = alpha * a.data.values()[k] + beta * b.data.values()[k];
  }
  const auto ca = tof_correct(a, s.grid, s.probe);
  const auto cb = tof_correct(b, s.grid, s.probe);
  const auto cm = tof_correct(mix, s.grid, s.probe);
  double scale = 0.0, worst = 0.0;
  for (std::size_t k = 0; k < cm.data.size(); ++k) {
    const double ref = alpha * ca.data.values()[k] + beta * cb.data.values()[k];
    scale = std::max(scale, std::abs(ref));
    worst = std::max(worst, std::abs(cm.data.values()[k] - ref));
    REQUIRE(std::isfinite(cm.data.values()[k]));
  }
  CHECK(worst <= 1e-12 * scale);

  RfFrame zero{0.0, Array2<double>(s.acq.num_samples, s.probe.num_elements), s.acq};
  for (const auto out = tof_correct(zero, s.grid, s.probe); double v : out.data.values()) REQUIRE(v == 0.0);
}

TEST_CASE("shape errors") {
  Setup s;
  RfFrame frame{0.0, Array2<double>(s.acq.num_samples, 8), s.acq};
  CHECK_THROWS_AS(tof_correct(frame, s.grid, s.probe), ShapeError);
  RfFrame short_frame{0.0, Array2<double>(10, 16), s.acq};
  CHECK_THROWS_AS(tof_correct(short_frame, s.grid, s.probe), ShapeError);
}

TEST_CASE("f-number mask and nearest interpolation") {
  Setup s;
  const auto frame = simulate_frame(make_point_phantom({20e-3}), s.probe, s.acq, 0.0);
  TofcOptions opts;
  opts.f_number = 4.0;
  const auto masked = tof_correct(frame, s.grid, s.probe, opts);
  const auto full = tof_correct(frame, s.grid, s.probe);
  const auto x = element_positions(s.probe);
  for (std::size_t i = 0; i < s.grid.nx(); i += 7) {
    for (std::size_t j = 0; j < s.grid.ny(); j += 5) {
      for (std::size_t e = 0; e < s.probe.num_elements; ++e) {
        const bool inside = std::abs(s.grid.lateral[j] - x[e]) <= s.grid.axial[i] / 8.0;
        CHECK(masked.data(i, j, e) == (inside ? full.data(i, j, e) : 0.0));
      }
    }
  }
  opts = {};
  opts.interpolation = Interpolation::Nearest;
  const auto nearest = tof_correct(frame, s.grid, s.probe, opts);
  CHECK(nearest.data.same_shape(full.data));
}
