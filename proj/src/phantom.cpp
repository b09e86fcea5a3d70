#include "ubf/phantom.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <iostream>
#include <numbers>

#include "ubf/error.hpp"
#include "ubf/rng.hpp"

namespace ubf {

namespace {

std::function<void(const std::string&)>& warning_handler() {
  static std::function<void(const std::string&)> handler = [](const std::string& msg) {
    std::cerr << "warning: " << msg << '\n';
  };
  return handler;
}

}  // namespace

void set_warning_handler(std::function<void(const std::string&)> handler) {
  warning_handler() = std::move(handler);
}

void warn(const std::string& message) {
  if (warning_handler()) warning_handler()(message);
}

void PulseSpec::validate() const {
  if (!(center_frequency > 0.0)) throw ConfigError("pulse: center_frequency must be > 0");
  if (!(fractional_bandwidth > 0.0 && fractional_bandwidth <= 1.0)) {
    throw ConfigError("pulse: fractional_bandwidth must lie in (0, 1]");
  }
  if (!(cycles_cutoff > 0.0)) throw ConfigError("pulse: cycles_cutoff must be > 0");
}

double PulseSpec::sigma() const {
  const double spectral_sigma = fractional_bandwidth * center_frequency / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
  return 1.0 / (2.0 * std::numbers::pi * spectral_sigma);
}

double pulse(double t, const PulseSpec& spec) {
  if (std::abs(t) > spec.half_support()) return 0.0;
  const double s = spec.sigma();
  return std::exp(-t * t / (2.0 * s * s)) * std::cos(2.0 * std::numbers::pi * spec.center_frequency * t);
}

RfFrame simulate_frame(const Phantom& phantom, const Probe& probe, const AcquisitionParams& acq, double angle,
                       const SimulationOptions& opts) {
  probe.validate();
  acq.validate();
  opts.pulse.validate();

  const auto elem_x = element_positions(probe);
  const std::size_t ns = acq.num_samples;
  const double fs = acq.sampling_frequency;
  const double c = acq.sound_speed;
  const double half = opts.pulse.half_support();
  const double ca = std::cos(angle);
  const double sa = std::sin(angle);

  RfFrame frame{angle, Array2<double>(ns, probe.num_elements), acq};
  bool truncated = false;

  for (std::size_t e = 0; e < probe.num_elements; ++e) {
    for (const Scatterer& s : phantom.scatterers) {
      const Point p{s.x_lat, s.z_ax};
      const double tau = tx_delay(p, ca, sa, c) + rx_delay(p, elem_x[e], c);
      // t_n = start_time + n/fs; the pulse is nonzero only for |t_n - tau| <= half.
      const double n_lo = std::ceil((tau - half - acq.start_time) * fs);
      const double n_hi = std::floor((tau + half - acq.start_time) * fs);
      if (n_hi > static_cast<double>(ns) - 1.0) truncated = true;
      const auto first = static_cast<std::ptrdiff_t>(std::max(0.0, n_lo));
      const auto last = static_cast<std::ptrdiff_t>(std::min(static_cast<double>(ns) - 1.0, n_hi));
      for (std::ptrdiff_t n = first; n <= last; ++n) {
        const double t = acq.start_time + static_cast<double>(n) / fs;
        frame.data(static_cast<std::size_t>(n), e) += s.amplitude * pulse(t - tau, opts.pulse);
      }
    }
  }
  if (truncated) warn("record length too short for the deepest echo; channel data truncated");

  if (opts.noise_snr_db) {
    double energy = 0.0;
    for (double v : frame.data.values()) energy += v * v;
    const double rms = std::sqrt(energy / static_cast<double>(frame.data.size()));
    const double sd = rms * std::pow(10.0, -*opts.noise_snr_db / 20.0);
    if (sd > 0.0) {
      // One noise stream per transmit angle.
      auto rng = make_rng(opts.noise_seed, "awgn", std::bit_cast<std::uint64_t>(angle));
      std::normal_distribution<double> gauss(0.0, sd);
      for (double& v : frame.data.values()) v += gauss(rng);
    }
  }
  return frame;
}

std::vector<RfFrame> simulate_channel_data(const Phantom& phantom, const Probe& probe,
                                           const AcquisitionParams& acq, const PlaneWaveTx& tx,
                                           const SimulationOptions& opts) {
  tx.validate();
  std::vector<RfFrame> frames;
  frames.reserve(tx.angles.size());
  for (double a : tx.angles) frames.push_back(simulate_frame(phantom, probe, acq, a, opts));
  return frames;
}

std::size_t required_samples(const Phantom& phantom, const Probe& probe, const AcquisitionParams& acq,
                             const PlaneWaveTx& tx, const PulseSpec& pulse_spec) {
  const auto elem_x = element_positions(probe);
  double latest = 0.0;
  for (double a : tx.angles) {
    for (const Scatterer& s : phantom.scatterers) {
      const Point p{s.x_lat, s.z_ax};
      const double t_tx = tx_delay(p, a, acq.sound_speed);
      for (double ex : {elem_x.front(), elem_x.back()}) {
        latest = std::max(latest, t_tx + rx_delay(p, ex, acq.sound_speed));
      }
    }
  }
  const double t_end = latest + pulse_spec.half_support() - acq.start_time;
  return static_cast<std::size_t>(std::ceil(std::max(0.0, t_end) * acq.sampling_frequency)) + 1;
}

Phantom make_point_phantom(const std::vector<double>& depths) {
  Phantom ph;
  ph.label = "point";
  for (double z : depths) {
    if (!(z > 0.0)) throw ConfigError("point phantom: depths must be positive");
    ph.scatterers.push_back({0.0, z, 1.0});
  }
  return ph;
}

Phantom make_cyst_phantom(const CystOptions& opts, std::uint64_t seed) {
  if (!(opts.radius > 0.0)) throw ConfigError("cyst phantom: radius must be positive");
  if (!(opts.density_per_mm2 > 0.0)) throw ConfigError("cyst phantom: density must be positive");
  const ScatterRegion& r = opts.region;
  if (!(r.x_max > r.x_min) || !(r.z_max > r.z_min) || !(r.z_min > 0.0)) {
    throw ConfigError("cyst phantom: invalid scatter region");
  }
  const double area_mm2 = (r.x_max - r.x_min) * (r.z_max - r.z_min) * 1e6;
  const double expected = area_mm2 * opts.density_per_mm2;
  if (expected > static_cast<double>(opts.max_scatterers)) {
    throw ConfigError("cyst phantom: scatterer count " + std::to_string(static_cast<long long>(expected)) +
                      " exceeds cap " + std::to_string(opts.max_scatterers));
  }
  const auto count = static_cast<std::size_t>(std::llround(expected));

  auto rng = make_rng(seed, "cyst-phantom");
  std::uniform_real_distribution<double> ux(r.x_min, r.x_max);
  std::uniform_real_distribution<double> uz(r.z_min, r.z_max);
  std::normal_distribution<double> amp(0.0, 1.0);

  Phantom ph;
  ph.label = "cyst";
  ph.scatterers.reserve(count);
  const double r2 = opts.radius * opts.radius;
  for (std::size_t k = 0; k < count; ++k) {
    const double x = ux(rng);
    const double z = uz(rng);
    const double a = amp(rng);
    const double dx = x - opts.center.x_lat;
    const double dz = z - opts.center.z_ax;
    if (dx * dx + dz * dz < r2) continue;
    ph.scatterers.push_back({x, z, a});
  }
  return ph;
}

}  // namespace ubf
