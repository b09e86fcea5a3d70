#include "ubf/tofc.hpp"

#include <cmath>

#include "ubf/error.hpp"

namespace ubf {

double sample_at(std::span<const double> signal, double index) {
  const double last = static_cast<double>(signal.size()) - 1.0;
  if (!(index >= 0.0) || index > last) return 0.0;
  const double base = std::floor(index);
  const auto k = static_cast<std::size_t>(base);
  const double frac = index - base;
  if (frac == 0.0) return signal[k];
  return signal[k] + frac * (signal[k + 1] - signal[k]);
}

TofcCube tof_correct(const RfFrame& frame, const ImagingGrid& grid, const Probe& probe, const TofcOptions& opts) {
  probe.validate();
  grid.validate();
  const std::size_t nc = probe.num_elements;
  if (frame.data.cols() != nc) {
    throw ShapeError("tof_correct: frame has " + std::to_string(frame.data.cols()) + " channels, probe has " +
                     std::to_string(nc));
  }
  if (frame.data.rows() != frame.acq.num_samples) {
    throw ShapeError("tof_correct: frame sample count does not match acquisition parameters");
  }

  const AcquisitionParams& acq = frame.acq;
  const double fs = acq.sampling_frequency;
  const double c = acq.sound_speed;
  const double ca = std::cos(frame.angle);
  const double sa = std::sin(frame.angle);
  const auto elem_x = element_positions(probe);

  // Channel-major copy so each interpolation reads a contiguous trace.
  const std::size_t ns = frame.data.rows();
  std::vector<double> traces(ns * nc);
  for (std::size_t n = 0; n < ns; ++n) {
    for (std::size_t e = 0; e < nc; ++e) traces[e * ns + n] = frame.data(n, e);
  }

  TofcCube cube{Array3<double>(grid.nx(), grid.ny(), nc), grid, frame.angle};
  for (std::size_t i = 0; i < grid.nx(); ++i) {
    for (std::size_t j = 0; j < grid.ny(); ++j) {
      const Point px{grid.lateral[j], grid.axial[i]};
      const double t_tx = tx_delay(px, ca, sa, c);
      const double half_aperture = opts.f_number ? px.z_ax / (2.0 * *opts.f_number) : 0.0;
      for (std::size_t e = 0; e < nc; ++e) {
        if (opts.f_number && std::abs(px.x_lat - elem_x[e]) > half_aperture) continue;
        const double idx = fs * (t_tx + rx_delay(px, elem_x[e], c) - acq.start_time);
        const std::span<const double> trace(traces.data() + e * ns, ns);
        double v = 0.0;
        if (opts.interpolation == Interpolation::Linear) {
          v = sample_at(trace, idx);
        } else {
          const double r = std::round(idx);
          if (r >= 0.0 && r <= static_cast<double>(ns) - 1.0) v = trace[static_cast<std::size_t>(r)];
        }
        cube.data(i, j, e) = v;
      }
    }
  }
  return cube;
}

}  // namespace ubf
