#include "ubf/beamform.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <string>

#include "ubf/error.hpp"

namespace ubf {

RfImage apodized_sum(const TofcCube& cube, const ApodizationMap& weights) {
  if (!cube.data.same_shape(weights)) throw ShapeError("apodized_sum: weight map shape does not match cube");
  const std::size_t nc = cube.data.nc();
  RfImage out(cube.data.nx(), cube.data.ny());
  auto out_v = out.values();
  for (std::size_t p = 0; p < cube.data.pixels(); ++p) {
    const auto x = cube.data.pixel(p);
    const auto w = weights.pixel(p);
    double acc = 0.0;
    for (std::size_t e = 0; e < nc; ++e) acc += w[e] * x[e];
    out_v[p] = acc;
  }
  return out;
}

RfImage das_beamform(const TofcCube& cube) {
  const std::size_t nc = cube.data.nc();
  if (nc == 0) throw ShapeError("das_beamform: cube has no channels");
  const ApodizationMap uniform(cube.data.nx(), cube.data.ny(), nc, 1.0 / static_cast<double>(nc));
  return apodized_sum(cube, uniform);
}

RfImage compound(std::span<const RfImage> images) {
  if (images.empty()) throw ShapeError("compound: no images");
  RfImage out(images.front().rows(), images.front().cols());
  for (const RfImage& im : images) {
    if (!im.same_shape(out)) throw ShapeError("compound: image shapes differ");
  }
  // Per-pixel summation in input order, then one division; the mean of identical inputs is exact.
  auto o = out.values();
  for (const RfImage& im : images) {
    const auto v = im.values();
    for (std::size_t p = 0; p < o.size(); ++p) o[p] += v[p];
  }
  const auto n = static_cast<double>(images.size());
  for (double& v : o) v /= n;
  return out;
}

MvdrConfig MvdrConfig::defaults_for(std::size_t channels) {
  MvdrConfig cfg;
  cfg.subaperture_length = std::max<std::size_t>(1, channels / 2);
  cfg.loading_factor = 1.0 / (100.0 * static_cast<double>(cfg.subaperture_length));
  return cfg;
}

void MvdrConfig::validate(std::size_t channels) const {
  if (subaperture_length < 1 || subaperture_length > channels) {
    throw ConfigError("mvdr: subaperture length " + std::to_string(subaperture_length) + " outside [1, " +
                      std::to_string(channels) + "]");
  }
  if (!(loading_factor >= 0.0)) throw ConfigError("mvdr: loading factor must be >= 0");
}

CovarianceMatrix subaperture_covariance(std::span<const double> channels, std::size_t subaperture_length) {
  const std::size_t n = channels.size();
  const std::size_t len = subaperture_length;
  if (len < 1 || len > n) {
    throw ConfigError("subaperture_covariance: L=" + std::to_string(len) + " outside [1, " + std::to_string(n) + "]");
  }
  const std::size_t count = n - len + 1;
  CovarianceMatrix r = CovarianceMatrix::Zero(static_cast<Eigen::Index>(len), static_cast<Eigen::Index>(len));
  for (std::size_t l = 0; l < count; ++l) {
    const Eigen::Map<const Eigen::VectorXd> x(channels.data() + l, static_cast<Eigen::Index>(len));
    r.selfadjointView<Eigen::Lower>().rankUpdate(x);
  }
  r = r.selfadjointView<Eigen::Lower>();
  r /= static_cast<double>(count);
  return r;
}

CovarianceMatrix diagonal_load(const CovarianceMatrix& r, double loading_factor) {
  if (!(loading_factor >= 0.0)) throw ConfigError("diagonal_load: loading factor must be >= 0");
  CovarianceMatrix out = r;
  const double load = loading_factor * r.trace() / static_cast<double>(r.rows());
  out.diagonal().array() += load;
  return out;
}

Eigen::VectorXd mvdr_weights(const CovarianceMatrix& r) {
  constexpr double kMaxCondition = 1e12;
  const Eigen::LLT<CovarianceMatrix> llt(r);
  if (llt.info() != Eigen::Success || !(llt.rcond() >= 1.0 / kMaxCondition)) {
    throw NumericError("mvdr_weights: covariance is singular or ill-conditioned; increase the loading factor");
  }
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(r.rows());
  const Eigen::VectorXd rinv_a = llt.solve(ones);
  const double denom = rinv_a.sum();
  if (!(std::abs(denom) > 0.0) || !std::isfinite(denom)) {
    throw NumericError("mvdr_weights: degenerate normalization; increase the loading factor");
  }
  return rinv_a / denom;
}

double mvdr_pixel(std::span<const double> channels, const MvdrConfig& cfg) {
  const std::size_t n = channels.size();
  const std::size_t len = cfg.subaperture_length;
  const std::size_t count = n - len + 1;
  if (len == 1) {
    // Scalar covariance: w = 1 whenever R is nonzero, and the output is the channel mean.
    const double u = 1.0 / static_cast<double>(n);
    double acc = 0.0;
    for (double v : channels) acc += u * v;
    return acc;
  }
  const CovarianceMatrix r = subaperture_covariance(channels, len);
  if (r.trace() == 0.0) return 0.0;  // all-zero pixel: every weight vector yields 0
  const Eigen::VectorXd w = mvdr_weights(diagonal_load(r, cfg.loading_factor));
  Eigen::VectorXd mean_sub = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(len));
  for (std::size_t l = 0; l < count; ++l) {
    mean_sub += Eigen::Map<const Eigen::VectorXd>(channels.data() + l, static_cast<Eigen::Index>(len));
  }
  mean_sub /= static_cast<double>(count);
  return w.dot(mean_sub);
}

RfImage mvdr_beamform(const TofcCube& cube, const MvdrConfig& cfg) {
  const std::size_t nc = cube.data.nc();
  cfg.validate(nc);
  RfImage out(cube.data.nx(), cube.data.ny());
  auto o = out.values();
  for (std::size_t p = 0; p < cube.data.pixels(); ++p) {
    const auto x = cube.data.pixel(p);
    try {
      o[p] = mvdr_pixel(x, cfg);
    } catch (const NumericError& e) {
      if (cfg.on_failure == MvdrFailurePolicy::FailFast) {
        throw NumericError(std::string(e.what()) + " (pixel " + std::to_string(p / cube.data.ny()) + "," +
                           std::to_string(p % cube.data.ny()) + ")");
      }
      const double u = 1.0 / static_cast<double>(nc);
      double acc = 0.0;
      for (double v : x) acc += u * v;
      o[p] = acc;
    }
  }
  return out;
}

}  // namespace ubf
