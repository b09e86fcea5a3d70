#pragma once

#include <optional>

#include "ubf/array.hpp"
#include "ubf/geometry.hpp"
#include "ubf/phantom.hpp"

namespace ubf {

/// Time-of-flight corrected data: axial x lateral x channel.
struct TofcCube {
  Array3<double> data;
  ImagingGrid grid;
  double angle = 0.0;
};

enum class Interpolation { Linear, Nearest };

struct TofcOptions {
  Interpolation interpolation = Interpolation::Linear;
  /// Receive f-number; when set, channels outside the aperture z/(2F) are zeroed.
  std::optional<double> f_number;
};

/// Linear interpolation of a sampled signal at a fractional index; 0 outside [0, size-1].
double sample_at(std::span<const double> signal, double index);

TofcCube tof_correct(const RfFrame& frame, const ImagingGrid& grid, const Probe& probe,
                     const TofcOptions& opts = {});

}  // namespace ubf
