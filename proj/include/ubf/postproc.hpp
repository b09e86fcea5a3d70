#pragma once

#include <complex>
#include <span>
#include <vector>

#include "ubf/array.hpp"
#include "ubf/beamform.hpp"

namespace ubf {

inline constexpr double kDefaultDynamicRange = 60.0;  // dB

/// Log-compressed envelope in dB, max 0, clipped at -dynamic_range.
struct BmodeImage {
  Array2<double> data;
  double dynamic_range = kDefaultDynamicRange;
};

/// Analytic signal via the frequency domain; the transform is zero padded to the next power of two.
std::vector<std::complex<double>> hilbert_analytic(std::span<const double> signal);

/// Magnitude of the analytic signal along each axial column.
Array2<double> envelope(const RfImage& image);

BmodeImage log_compress(const Array2<double>& env, double dynamic_range_db = kDefaultDynamicRange);

inline BmodeImage to_bmode(const RfImage& image, double dynamic_range_db = kDefaultDynamicRange) {
  return log_compress(envelope(image), dynamic_range_db);
}

}  // namespace ubf
