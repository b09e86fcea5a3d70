#pragma once

#include <cstddef>
#include <vector>

namespace ubf {

inline constexpr double kDefaultCenterFrequency = 7.6e6;    // Hz
inline constexpr double kDefaultSamplingFrequency = 31.25e6;  // Hz
inline constexpr double kDefaultSoundSpeed = 1540.0;        // m/s
inline constexpr double kDefaultPitch = 0.3e-3;             // m
inline constexpr std::size_t kDefaultElements = 128;

/// Linear array transducer.
struct Probe {
  std::size_t num_elements = kDefaultElements;
  double pitch = kDefaultPitch;
  double center_frequency = kDefaultCenterFrequency;

  void validate() const;
  double wavelength(double sound_speed) const { return sound_speed / center_frequency; }
};

struct AcquisitionParams {
  double sampling_frequency = kDefaultSamplingFrequency;
  double sound_speed = kDefaultSoundSpeed;
  std::size_t num_samples = 1152;
  double start_time = 0.0;

  void validate() const;
  /// True when fs > 2·f0; callers may warn otherwise.
  bool satisfies_nyquist(const Probe& probe) const { return sampling_frequency > 2.0 * probe.center_frequency; }
};

struct PlaneWaveTx {
  std::vector<double> angles;  // radians

  void validate() const;
};

/// Evenly spaced steering angles over [-half_span, +half_span]; n=1 yields {0}.
PlaneWaveTx make_angle_fan(std::size_t n, double half_span_rad);

/// Pixel grid. Both axes strictly increasing and uniformly spaced.
struct ImagingGrid {
  std::vector<double> axial;    // z, meters
  std::vector<double> lateral;  // x, meters

  std::size_t nx() const noexcept { return axial.size(); }
  std::size_t ny() const noexcept { return lateral.size(); }
  double axial_spacing() const { return axial.size() > 1 ? axial[1] - axial[0] : 0.0; }
  double lateral_spacing() const { return lateral.size() > 1 ? lateral[1] - lateral[0] : 0.0; }

  void validate() const;
};

/// Uniform grid with nx axial samples starting at z0 and ny lateral samples centered on x=0.
ImagingGrid make_uniform_grid(std::size_t nx, std::size_t ny, double dz, double dx, double z0);

/// Desk-scale default: 96 x 64 pixels at lambda/2 spacing, axially centered on center_depth.
ImagingGrid make_default_grid(const Probe& probe, double sound_speed, double center_depth = 20e-3,
                              std::size_t nx = 96, std::size_t ny = 64);

struct Point {
  double x_lat = 0.0;
  double z_ax = 0.0;
};

std::vector<double> element_positions(const Probe& probe);

/// Plane-wave transmit delay from the wavefront crossing the origin to the pixel.
inline double tx_delay(Point pixel, double cos_angle, double sin_angle, double sound_speed) {
  return (pixel.z_ax * cos_angle + pixel.x_lat * sin_angle) / sound_speed;
}
double tx_delay(Point pixel, double angle, double sound_speed);

double rx_delay(Point pixel, double element_x, double sound_speed);

}  // namespace ubf
