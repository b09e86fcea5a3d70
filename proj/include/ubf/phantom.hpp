#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ubf/array.hpp"
#include "ubf/geometry.hpp"

namespace ubf {

struct Scatterer {
  double x_lat = 0.0;
  double z_ax = 0.0;
  double amplitude = 1.0;
};

struct Phantom {
  std::vector<Scatterer> scatterers;
  std::string label;
};

/// Gaussian-modulated cosine transmit pulse.
struct PulseSpec {
  double center_frequency = kDefaultCenterFrequency;
  double fractional_bandwidth = 0.67;
  double cycles_cutoff = 3.0;

  void validate() const;
  /// Envelope standard deviation (s) giving a -6 dB spectral width of fb*f0.
  double sigma() const;
  /// Half-length of the nonzero support (s).
  double half_support() const { return cycles_cutoff / center_frequency; }
};

double pulse(double t, const PulseSpec& spec);

/// Received channel data for one plane-wave transmit: samples x channels.
struct RfFrame {
  double angle = 0.0;
  Array2<double> data;
  AcquisitionParams acq;
};

struct SimulationOptions {
  PulseSpec pulse;
  /// Additive white Gaussian noise at this SNR (dB, relative to the frame RMS); disabled when empty.
  std::optional<double> noise_snr_db;
  std::uint64_t noise_seed = 0;
};

/// Called with a diagnostic when the simulation has to truncate echoes; defaults to stderr.
void set_warning_handler(std::function<void(const std::string&)> handler);
void warn(const std::string& message);

RfFrame simulate_frame(const Phantom& phantom, const Probe& probe, const AcquisitionParams& acq, double angle,
                       const SimulationOptions& opts = {});

std::vector<RfFrame> simulate_channel_data(const Phantom& phantom, const Probe& probe,
                                           const AcquisitionParams& acq, const PlaneWaveTx& tx,
                                           const SimulationOptions& opts = {});

/// Smallest record length (samples) that holds every echo of the phantom for all angles.
std::size_t required_samples(const Phantom& phantom, const Probe& probe, const AcquisitionParams& acq,
                             const PlaneWaveTx& tx, const PulseSpec& pulse);

Phantom make_point_phantom(const std::vector<double>& depths);

struct ScatterRegion {
  double x_min = -6e-3;
  double x_max = 6e-3;
  double z_min = 14e-3;
  double z_max = 26e-3;
};

struct CystOptions {
  Point center{0.0, 20e-3};
  double radius = 2e-3;
  double density_per_mm2 = 20.0;
  ScatterRegion region;
  std::size_t max_scatterers = 200000;
};

/// Speckle background with standard-normal amplitudes and an anechoic disk.
Phantom make_cyst_phantom(const CystOptions& opts, std::uint64_t seed);

}  // namespace ubf
