#include "ubf/geometry.hpp"

#include <cmath>
#include <numbers>

#include "ubf/error.hpp"

namespace ubf {

void Probe::validate() const {
  if (num_elements < 1) throw ConfigError("probe: num_elements must be >= 1");
  if (!(pitch > 0.0)) throw ConfigError("probe: pitch must be > 0");
  if (!(center_frequency > 0.0)) throw ConfigError("probe: center_frequency must be > 0");
}

void AcquisitionParams::validate() const {
  if (!(sampling_frequency > 0.0)) throw ConfigError("acq: sampling_frequency must be > 0");
  if (!(sound_speed > 0.0)) throw ConfigError("acq: sound_speed must be > 0");
  if (num_samples < 1) throw ConfigError("acq: num_samples must be >= 1");
  if (!std::isfinite(start_time)) throw ConfigError("acq: start_time must be finite");
}

void PlaneWaveTx::validate() const {
  if (angles.empty()) throw ConfigError("tx: at least one angle required");
  for (double a : angles) {
    if (!(std::abs(a) < std::numbers::pi / 2)) throw ConfigError("tx: |angle| must be < pi/2");
  }
}

PlaneWaveTx make_angle_fan(std::size_t n, double half_span_rad) {
  PlaneWaveTx tx;
  if (n == 0) return tx;
  tx.angles.resize(n);
  if (n == 1) {
    tx.angles[0] = 0.0;
    return tx;
  }
  const double step = 2.0 * half_span_rad / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    // Symmetric construction so angle[i] == -angle[n-1-i] exactly.
    const double k = static_cast<double>(i) - static_cast<double>(n - 1) / 2.0;
    tx.angles[i] = k * step;
  }
  return tx;
}

namespace {

void check_axis(const std::vector<double>& v, const char* name) {
  if (v.empty()) throw ConfigError(std::string("grid: ") + name + " axis is empty");
  if (v.size() < 2) return;
  const double step = v[1] - v[0];
  if (!(step > 0.0)) throw ConfigError(std::string("grid: ") + name + " axis must be strictly increasing");
  for (std::size_t i = 1; i < v.size(); ++i) {
    const double d = v[i] - v[i - 1];
    if (!(d > 0.0)) throw ConfigError(std::string("grid: ") + name + " axis must be strictly increasing");
    // Spacing error relative to the axis extent; absolute coordinates carry rounding of order eps*|x|.
    const double scale = std::max(std::abs(step), std::max(std::abs(v.front()), std::abs(v.back())));
    if (std::abs(d - step) > 1e-12 * scale * 16) {
      throw ConfigError(std::string("grid: ") + name + " axis must be uniformly spaced");
    }
  }
}

}  // namespace

void ImagingGrid::validate() const {
  check_axis(axial, "axial");
  check_axis(lateral, "lateral");
}

ImagingGrid make_uniform_grid(std::size_t nx, std::size_t ny, double dz, double dx, double z0) {
  if (nx == 0 || ny == 0) throw ConfigError("grid: dimensions must be positive");
  if (!(dz > 0.0) || !(dx > 0.0)) throw ConfigError("grid: spacing must be positive");
  ImagingGrid g;
  g.axial.resize(nx);
  g.lateral.resize(ny);
  for (std::size_t i = 0; i < nx; ++i) g.axial[i] = z0 + static_cast<double>(i) * dz;
  const double mid = static_cast<double>(ny - 1) / 2.0;
  for (std::size_t j = 0; j < ny; ++j) g.lateral[j] = (static_cast<double>(j) - mid) * dx;
  return g;
}

ImagingGrid make_default_grid(const Probe& probe, double sound_speed, double center_depth, std::size_t nx,
                              std::size_t ny) {
  const double half_lambda = probe.wavelength(sound_speed) / 2.0;
  const double z0 = center_depth - static_cast<double>(nx / 2) * half_lambda;
  return make_uniform_grid(nx, ny, half_lambda, half_lambda, z0);
}

std::vector<double> element_positions(const Probe& probe) {
  probe.validate();
  const std::size_t n = probe.num_elements;
  std::vector<double> x(n);
  // Fill from both ends with negated magnitudes so the layout is exactly antisymmetric.
  for (std::size_t e = 0; e < (n + 1) / 2; ++e) {
    const double k = static_cast<double>(n - 1) / 2.0 - static_cast<double>(e);
    x[e] = -k * probe.pitch;
    x[n - 1 - e] = k * probe.pitch;
  }
  return x;
}

double tx_delay(Point pixel, double angle, double sound_speed) {
  return tx_delay(pixel, std::cos(angle), std::sin(angle), sound_speed);
}

double rx_delay(Point pixel, double element_x, double sound_speed) {
  return std::hypot(pixel.x_lat - element_x, pixel.z_ax) / sound_speed;
}

}  // namespace ubf
