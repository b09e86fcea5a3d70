#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "ubf/error.hpp"
#include "ubf/phantom.hpp"

using namespace ubf;

namespace {

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

std::size_t argmax_abs(const Array2<double>& data, std::size_t channel) {
  std::size_t best = 0;
  for (std::size_t n = 0; n < data.rows(); ++n) {
    if (std::abs(data(n, channel)) > std::abs(data(best, channel))) best = n;
  }
  return best;
}

struct Quiet {
  Quiet() { set_warning_handler([](const std::string&) {}); }
  ~Quiet() { set_warning_handler(nullptr); }
};

}  // namespace

TEST_CASE("pulse shape") {
  PulseSpec spec;
  CHECK(pulse(0.0, spec) == 1.0);
  for (double t : {1e-8, 3.3e-8, 1.1e-7, 2.5e-7}) CHECK(pulse(t, spec) == pulse(-t, spec));

  PulseSpec five{5e6, 0.67, 3.0};
  const double t = 0.1e-6;
  const double sigma = 2.0 * std::sqrt(2.0 * std::log(2.0)) / (2.0 * std::numbers::pi * 5e6 * 0.67);
  const double expected = std::exp(-t * t / (2 * sigma * sigma)) * std::cos(2 * std::numbers::pi * 5e6 * t);
  CHECK(pulse(t, five) == doctest::Approx(expected).epsilon(1e-14));

  CHECK(pulse(3.01 / 5e6, five) == 0.0);
  CHECK(pulse(-3.01 / 5e6, five) == 0.0);
  CHECK_THROWS_AS((PulseSpec{5e6, 1.5, 3.0}.validate()), ConfigError);
  CHECK_THROWS_AS((PulseSpec{5e6, 0.0, 3.0}.validate()), ConfigError);
}

TEST_CASE("pulse spectral width") {
  // -6 dB (half amplitude) full width of the Gaussian spectrum equals fb*f0.
  PulseSpec spec{5e6, 0.5, 100.0};
  const double s = spec.sigma();
  const double half_width = std::sqrt(2.0 * std::log(2.0)) / (2.0 * std::numbers::pi * s);
  CHECK(2 * half_width == doctest::Approx(0.5 * 5e6).epsilon(1e-12));
}

TEST_CASE("simulation basics") {
  Probe one{1, 0.3e-3, 7.6e6};
  AcquisitionParams acq;
  acq.num_samples = 600;

  SUBCASE("empty phantom gives a zero frame") {
    const auto f = simulate_frame(Phantom{}, Probe{}, acq, 0.1);
    CHECK(f.data.rows() == 600);
    CHECK(f.data.cols() == 128);
    CHECK(max_abs(f.data.values()) == 0.0);
  }
  SUBCASE("echo peak index") {
    const auto f = simulate_frame(make_point_phantom({10e-3}), one, acq, 0.0);
    CHECK(argmax_abs(f.data, 0) == 406);
    CHECK(std::lround(31.25e6 * 2 * 10e-3 / 1540.0) == 406);
  }
  SUBCASE("linearity in amplitude") {
    Phantom a = make_point_phantom({12e-3, 15e-3});
    a.scatterers[1].x_lat = 1e-3;
    a.scatterers[1].amplitude = -0.3;
    Phantom b = a;
    for (auto& s : b.scatterers) s.amplitude *= 2.0;
    const auto fa = simulate_frame(a, Probe{8, 0.3e-3, 7.6e6}, acq, 0.05);
    const auto fb = simulate_frame(b, Probe{8, 0.3e-3, 7.6e6}, acq, 0.05);
    for (std::size_t k = 0; k < fa.data.size(); ++k) CHECK(fb.data.values()[k] == 2.0 * fa.data.values()[k]);
  }
  SUBCASE("channel data per angle") {
    const auto frames = simulate_channel_data(make_point_phantom({10e-3}), one, acq, make_angle_fan(3, 0.1));
    REQUIRE(frames.size() == 3);
    CHECK(frames[0].angle == doctest::Approx(-0.1));
  }
}

TEST_CASE("superposition and bounds") {
  const Probe probe{16, 0.3e-3, 7.6e6};
  AcquisitionParams acq;
  acq.num_samples = 900;
  CystOptions opts;
  opts.density_per_mm2 = 0.5;
  const Phantom a = make_cyst_phantom(opts, 1);
  const Phantom b = make_cyst_phantom(opts, 2);
  Phantom ab = a;
  ab.scatterers.insert(ab.scatterers.end(), b.scatterers.begin(), b.scatterers.end());
  for (double angle : {0.0, -0.2, 0.17}) {
    const auto fa = simulate_frame(a, probe, acq, angle);
    const auto fb = simulate_frame(b, probe, acq, angle);
    const auto fab = simulate_frame(ab, probe, acq, angle);
    const double scale = max_abs(fab.data.values());
    double worst = 0.0;
    for (std::size_t k = 0; k < fab.data.size(); ++k) {
      worst = std::max(worst, std::abs(fab.data.values()[k] - fa.data.values()[k] - fb.data.values()[k]));
    }
    CHECK(worst <= 1e-12 * scale);

    double bound = 0.0;
    for (const auto& s : ab.scatterers) bound += std::abs(s.amplitude);
    for (double v : fab.data.values()) REQUIRE(std::isfinite(v));
    CHECK(scale <= bound);
  }
}

TEST_CASE("depth shift moves the echo") {
  const Probe one{1, 0.3e-3, 7.6e6};
  AcquisitionParams acq;
  acq.num_samples = 1200;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> uz(5e-3, 15e-3), ud(0.1e-3, 8e-3);
  for (int k = 0; k < 20; ++k) {
    const double z = uz(rng), dz = ud(rng);
    const auto n0 = argmax_abs(simulate_frame(make_point_phantom({z}), one, acq, 0.0).data, 0);
    const auto n1 = argmax_abs(simulate_frame(make_point_phantom({z + dz}), one, acq, 0.0).data, 0);
    const long expected = std::lround(31.25e6 * 2 * dz / 1540.0);
    CHECK(std::abs(static_cast<long>(n1) - static_cast<long>(n0) - expected) <= 1);
  }
}

TEST_CASE("truncation warns") {
  std::vector<std::string> messages;
  set_warning_handler([&](const std::string& m) { messages.push_back(m); });
  AcquisitionParams acq;
  acq.num_samples = 100;
  const auto f = simulate_frame(make_point_phantom({20e-3}), Probe{4, 0.3e-3, 7.6e6}, acq, 0.0);
  set_warning_handler(nullptr);
  CHECK(messages.size() == 1);
  CHECK(max_abs(f.data.values()) == 0.0);
}

TEST_CASE("required samples covers the deepest echo") {
  Quiet quiet;
  const Probe probe{16, 0.3e-3, 7.6e6};
  AcquisitionParams acq;
  const auto tx = make_angle_fan(5, 0.28);
  Phantom ph = make_point_phantom({25e-3});
  ph.scatterers[0].x_lat = 4e-3;
  acq.num_samples = required_samples(ph, probe, acq, tx, PulseSpec{});
  std::vector<std::string> messages;
  set_warning_handler([&](const std::string& m) { messages.push_back(m); });
  simulate_channel_data(ph, probe, acq, tx);
  CHECK(messages.empty());
}

TEST_CASE("noise option") {
  const Probe probe{4, 0.3e-3, 7.6e6};
  AcquisitionParams acq;
  acq.num_samples = 500;
  SimulationOptions opts;
  opts.noise_snr_db = 20.0;
  opts.noise_seed = 9;
  const auto ph = make_point_phantom({8e-3});
  const auto a = simulate_frame(ph, probe, acq, 0.0, opts);
  const auto b = simulate_frame(ph, probe, acq, 0.0, opts);
  const auto clean = simulate_frame(ph, probe, acq, 0.0);
  CHECK(a.data == b.data);
  CHECK_FALSE(a.data == clean.data);
}

TEST_CASE("phantoms") {
  const auto p = make_point_phantom({20e-3});
  REQUIRE(p.scatterers.size() == 1);
  CHECK(p.scatterers[0].x_lat == 0.0);
  CHECK(p.scatterers[0].z_ax == 0.02);
  CHECK(p.scatterers[0].amplitude == 1.0);
  CHECK_THROWS_AS(make_point_phantom({-1e-3}), ConfigError);

  CystOptions opts;
  const auto c1 = make_cyst_phantom(opts, 42);
  const auto c2 = make_cyst_phantom(opts, 42);
  const auto c3 = make_cyst_phantom(opts, 43);
  REQUIRE(c1.scatterers.size() == c2.scatterers.size());
  for (std::size_t k = 0; k < c1.scatterers.size(); ++k) {
    CHECK(c1.scatterers[k].x_lat == c2.scatterers[k].x_lat);
    CHECK(c1.scatterers[k].z_ax == c2.scatterers[k].z_ax);
    CHECK(c1.scatterers[k].amplitude == c2.scatterers[k].amplitude);
  }
  CHECK(c1.scatterers[0].x_lat != c3.scatterers[0].x_lat);
  const double r2 = opts.radius * opts.radius;
  std::size_t near = 0;
  for (const auto& s : c1.scatterers) {
    const double dx = s.x_lat - opts.center.x_lat, dz = s.z_ax - opts.center.z_ax;
    CHECK(dx * dx + dz * dz >= r2);
    if (dx * dx + dz * dz < 4 * r2) ++near;
  }
  CHECK(near > 0);
  // 12 mm x 12 mm at 20 per mm^2, minus the 2 mm disk.
  CHECK(c1.scatterers.size() == doctest::Approx(144 * 20 - std::numbers::pi * 4 * 20).epsilon(0.05));

  opts.density_per_mm2 = 1e6;
  CHECK_THROWS_AS(make_cyst_phantom(opts, 1), ConfigError);
  opts.density_per_mm2 = 20;
  opts.radius = 0.0;
  CHECK_THROWS_AS(make_cyst_phantom(opts, 1), ConfigError);
}
