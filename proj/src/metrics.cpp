#include "ubf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "ubf/error.hpp"

namespace ubf {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::vector<double> sorted_angles(const PlaneWaveTx& tx) {
  auto a = tx.angles;
  std::sort(a.begin(), a.end());
  return a;
}

}  // namespace

PlaneWaveTx evaluation_angle_fan() { return make_angle_fan(75, 16.0 * kDeg); }

PlaneWaveTx select_case_angles(int eval_case, const PlaneWaveTx& available) {
  const auto angles = sorted_angles(available);
  // Angles are matched to the nominal values within 0.01 degree.
  constexpr double tol = 0.01 * kDeg;
  const auto zero = std::find_if(angles.begin(), angles.end(), [&](double a) { return std::abs(a) <= tol; });
  switch (eval_case) {
    case 1:
      if (zero == angles.end()) throw ConfigError("case 1: no 0 degree transmit available");
      return PlaneWaveTx{{*zero}};
    case 2: {
      if (zero == angles.end() || zero == angles.begin() || std::next(zero) == angles.end()) {
        throw ConfigError("case 2: 0 degree transmit and both neighbours required");
      }
      const double lo = *std::prev(zero);
      const double hi = *std::next(zero);
      if (std::abs(lo + 0.43 * kDeg) > tol || std::abs(hi - 0.43 * kDeg) > tol) {
        throw ConfigError("case 2: neighbours of 0 degrees are not at -0.43 and +0.43 degrees");
      }
      return PlaneWaveTx{{lo, *zero, hi}};
    }
    case 3:
      if (angles.empty()) throw ConfigError("case 3: no angles available");
      return PlaneWaveTx{angles};
    default:
      throw ConfigError("evaluation case must be 1, 2 or 3, got " + std::to_string(eval_case));
  }
}

bool RegionSpec::contains(Point p) const {
  const double dx = p.x_lat - center.x_lat;
  const double dz = p.z_ax - center.z_ax;
  const double r2 = dx * dx + dz * dz;
  switch (kind) {
    case Kind::Disk:
      return r2 <= radius * radius;
    case Kind::Annulus:
      return r2 >= inner_radius * inner_radius && r2 <= radius * radius;
    case Kind::Rectangle:
      return std::abs(dx) <= half_width && std::abs(dz) <= half_height;
  }
  return false;
}

std::vector<std::size_t> resolve_region(const RegionSpec& region, const ImagingGrid& grid) {
  const bool valid = region.kind == RegionSpec::Kind::Rectangle
                         ? region.half_width > 0.0 && region.half_height > 0.0
                         : region.radius > 0.0 && region.inner_radius >= 0.0 && region.inner_radius < region.radius;
  if (!valid) throw ConfigError("region: dimensions must be positive");
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < grid.nx(); ++i) {
    for (std::size_t j = 0; j < grid.ny(); ++j) {
      if (region.contains({grid.lateral[j], grid.axial[i]})) idx.push_back(i * grid.ny() + j);
    }
  }
  if (idx.size() < kMinRegionPixels) {
    throw ConfigError("region covers " + std::to_string(idx.size()) + " pixels; at least " +
                      std::to_string(kMinRegionPixels) + " required");
  }
  return idx;
}

std::pair<RegionSpec, RegionSpec> default_cyst_regions(Point center, double radius) {
  return {RegionSpec::disk(center, 0.8 * radius), RegionSpec::annulus(center, 1.2 * radius, 1.6 * radius)};
}

double cnr(const Array2<double>& envelope, std::span<const std::size_t> inside, std::span<const std::size_t> outside) {
  if (inside.size() < kMinRegionPixels || outside.size() < kMinRegionPixels) {
    throw ConfigError("cnr: each region needs at least 16 pixels");
  }
  const auto v = envelope.values();
  const auto stats = [&](std::span<const std::size_t> idx) {
    double mean = 0.0;
    for (auto p : idx) mean += v[p];
    mean /= static_cast<double>(idx.size());
    double var = 0.0;
    for (auto p : idx) var += (v[p] - mean) * (v[p] - mean);
    return std::pair{mean, var / static_cast<double>(idx.size())};
  };
  const auto [mu_in, var_in] = stats(inside);
  const auto [mu_out, var_out] = stats(outside);
  const double diff = std::abs(mu_in - mu_out);
  const double pooled = std::sqrt((var_in + var_out) / 2.0);
  if (diff == 0.0) return -std::numeric_limits<double>::infinity();
  if (!(pooled > 0.0)) throw NumericError("cnr: pooled standard deviation is zero");
  return 20.0 * std::log10(diff / pooled);
}

double cnr(const Array2<double>& envelope, const ImagingGrid& grid, const RegionSpec& inside, const RegionSpec& outside) {
  if (envelope.rows() != grid.nx() || envelope.cols() != grid.ny()) throw ShapeError("cnr: image does not match grid");
  const auto in = resolve_region(inside, grid);
  const auto out = resolve_region(outside, grid);
  return cnr(envelope, in, out);
}

double fwhm(std::span<const double> profile, double spacing) {
  if (profile.size() < 3) throw NumericError("fwhm: profile too short");
  const auto peak_it = std::max_element(profile.begin(), profile.end());
  const auto peak = static_cast<std::size_t>(peak_it - profile.begin());
  const double half = *peak_it / 2.0;
  if (!(*peak_it > 0.0)) throw NumericError("fwhm: profile has no positive peak");

  std::size_t l = peak;
  while (l > 0 && profile[l] >= half) --l;
  if (profile[l] >= half) throw NumericError("fwhm: no half-maximum crossing left of the peak");
  std::size_t r = peak;
  while (r + 1 < profile.size() && profile[r] >= half) ++r;
  if (profile[r] >= half) throw NumericError("fwhm: no half-maximum crossing right of the peak");

  const double xl = static_cast<double>(l) + (half - profile[l]) / (profile[l + 1] - profile[l]);
  const double xr = static_cast<double>(r) - (half - profile[r]) / (profile[r - 1] - profile[r]);
  return (xr - xl) * spacing;
}

PointSpread measure_point_spread(const Array2<double>& envelope, const ImagingGrid& grid) {
  if (envelope.rows() != grid.nx() || envelope.cols() != grid.ny()) {
    throw ShapeError("measure_point_spread: image does not match grid");
  }
  const auto v = envelope.values();
  const auto p = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
  PointSpread ps;
  ps.peak_axial = p / grid.ny();
  ps.peak_lateral = p % grid.ny();
  std::vector<double> axial(grid.nx());
  std::vector<double> lateral(grid.ny());
  for (std::size_t i = 0; i < grid.nx(); ++i) axial[i] = envelope(i, ps.peak_lateral);
  for (std::size_t j = 0; j < grid.ny(); ++j) lateral[j] = envelope(ps.peak_axial, j);
  ps.fwhm_axial_mm = fwhm(axial, grid.axial_spacing() * 1e3);
  ps.fwhm_lateral_mm = fwhm(lateral, grid.lateral_spacing() * 1e3);
  return ps;
}

double mse(const Array2<double>& a, const Array2<double>& b) {
  if (!a.same_shape(b)) throw ShapeError("mse: image shapes differ");
  const auto va = a.values();
  const auto vb = b.values();
  double acc = 0.0;
  for (std::size_t p = 0; p < va.size(); ++p) {
    const double d = va[p] - vb[p];
    acc += d * d;
  }
  return va.empty() ? 0.0 : acc / static_cast<double>(va.size());
}

std::uint64_t conv_flops_estimate(std::uint64_t in_channels, std::span<const std::size_t> hidden_filters,
                                  std::uint64_t out_channels, std::uint64_t kernel) {
  std::vector<std::uint64_t> chain{in_channels};
  chain.insert(chain.end(), hidden_filters.begin(), hidden_filters.end());
  chain.push_back(out_channels);
  std::uint64_t total = 0;
  for (std::size_t i = 0; i + 1 < chain.size(); ++i) total += kernel * kernel * chain[i] * chain[i + 1];
  return total;
}

std::uint64_t mvdr_flops_estimate(std::uint64_t subaperture_length) {
  return subaperture_length * subaperture_length * subaperture_length;
}

std::uint64_t exact_cnn_flops(const cnn::CnnConfig& config) {
  const auto ins = config.conv_inputs();
  const auto outs = config.conv_outputs();
  const std::uint64_t k2 = config.kernel_size * config.kernel_size;
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < ins.size(); ++i) total += k2 * ins[i] * outs[i];
  return total;
}

std::string metrics_csv(std::span<const MetricsReport> rows) {
  std::string out(kMetricsCsvHeader);
  out += '\n';
  const auto num = [](double v) {
    if (std::isnan(v)) return std::string("nan");
    if (std::isinf(v)) return std::string(v < 0 ? "-inf" : "inf");
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return std::string(buf);
  };
  for (const auto& r : rows) {
    out += r.case_label + ',' + r.beamformer + ',' + num(r.cnr_db) + ',' + num(r.fwhm_axial_mm) + ',' +
           num(r.fwhm_lateral_mm) + ',' + num(r.mse) + '\n';
  }
  return out;
}

}  // namespace ubf
