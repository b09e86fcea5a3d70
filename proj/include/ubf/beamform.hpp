#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "ubf/array.hpp"
#include "ubf/tofc.hpp"

namespace ubf {

/// Beamformed image before envelope detection, axial x lateral.
using RfImage = Array2<double>;
/// Per-pixel per-channel apodization weights, axial x lateral x channel.
using ApodizationMap = Array3<double>;
using CovarianceMatrix = Eigen::MatrixXd;

RfImage apodized_sum(const TofcCube& cube, const ApodizationMap& weights);
RfImage das_beamform(const TofcCube& cube);

/// Coherent compounding: pixel-wise mean of pre-envelope images.
RfImage compound(std::span<const RfImage> images);

enum class MvdrFailurePolicy { FailFast, SubstituteDas };

struct MvdrConfig {
  std::size_t subaperture_length = 1;
  double loading_factor = 0.0;
  MvdrFailurePolicy on_failure = MvdrFailurePolicy::FailFast;

  /// L = floor(channels/2), loading 1/(100 L).
  static MvdrConfig defaults_for(std::size_t channels);
  void validate(std::size_t channels) const;
};

/// Spatially smoothed covariance over all length-L subapertures of one pixel's channel vector.
CovarianceMatrix subaperture_covariance(std::span<const double> channels, std::size_t subaperture_length);

/// Adds (loading * trace(R) / L) to the diagonal.
CovarianceMatrix diagonal_load(const CovarianceMatrix& r, double loading_factor);

/// Distortionless minimum-variance weights w = R^-1 a / (a^T R^-1 a) with a = ones.
/// Throws NumericError when R is not positive definite or its condition number exceeds 1e12.
Eigen::VectorXd mvdr_weights(const CovarianceMatrix& r);

/// MVDR output of one pixel: mean over subapertures of w^T x_l.
double mvdr_pixel(std::span<const double> channels, const MvdrConfig& cfg);

RfImage mvdr_beamform(const TofcCube& cube, const MvdrConfig& cfg);

}  // namespace ubf
