#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ubf/array.hpp"
#include "ubf/cnn/model.hpp"
#include "ubf/geometry.hpp"

namespace ubf {

// ---------------------------------------------------------------------------
// Evaluation cases
// ---------------------------------------------------------------------------

/// Case 1: the 0 degree transmit. Case 2: 0 degrees and its two neighbours (about +-0.43 deg
/// on the 75-angle fan over +-16 deg). Case 3: every available angle. Result is ascending.
PlaneWaveTx select_case_angles(int eval_case, const PlaneWaveTx& available);

/// The 75-angle fan over [-16, +16] degrees.
PlaneWaveTx evaluation_angle_fan();

// ---------------------------------------------------------------------------
// Regions and image metrics
// ---------------------------------------------------------------------------

struct RegionSpec {
  enum class Kind { Disk, Annulus, Rectangle };
  Kind kind = Kind::Disk;
  Point center;
  double inner_radius = 0.0;  // annulus only
  double radius = 0.0;        // disk and annulus outer radius
  double half_width = 0.0;    // rectangle, lateral
  double half_height = 0.0;   // rectangle, axial

  static RegionSpec disk(Point c, double r) { return {Kind::Disk, c, 0.0, r, 0.0, 0.0}; }
  static RegionSpec annulus(Point c, double r_in, double r_out) { return {Kind::Annulus, c, r_in, r_out, 0.0, 0.0}; }
  static RegionSpec rectangle(Point c, double hw, double hh) { return {Kind::Rectangle, c, 0.0, 0.0, hw, hh}; }

  bool contains(Point p) const;
};

inline constexpr std::size_t kMinRegionPixels = 16;

/// Flat pixel indices (i*ny + j) of grid pixels inside the region; throws when fewer than 16.
std::vector<std::size_t> resolve_region(const RegionSpec& region, const ImagingGrid& grid);

/// Default cyst regions: inside = disk of 0.8 r, outside = annulus 1.2 r .. 1.6 r.
std::pair<RegionSpec, RegionSpec> default_cyst_regions(Point center, double radius);

/// 20 log10(|mu_in - mu_out| / sqrt((var_in + var_out) / 2)) on the pre-log envelope with population
/// variances. Equal means give -infinity.
double cnr(const Array2<double>& envelope, std::span<const std::size_t> inside, std::span<const std::size_t> outside);
double cnr(const Array2<double>& envelope, const ImagingGrid& grid, const RegionSpec& inside, const RegionSpec& outside);

/// Width at half the peak amplitude, crossings linearly interpolated. Units follow `spacing`.
double fwhm(std::span<const double> profile, double spacing);

struct PointSpread {
  std::size_t peak_axial = 0;
  std::size_t peak_lateral = 0;
  double fwhm_axial_mm = 0.0;
  double fwhm_lateral_mm = 0.0;
};

/// FWHM of the axial and lateral envelope profiles through the global maximum.
PointSpread measure_point_spread(const Array2<double>& envelope, const ImagingGrid& grid);

double mse(const Array2<double>& a, const Array2<double>& b);

// ---------------------------------------------------------------------------
// Per-pixel operation counts
// ---------------------------------------------------------------------------

/// sum K^2 * C_i * C_{i+1} over [in, hidden..., out]; ignores the antirectifier doubling.
std::uint64_t conv_flops_estimate(std::uint64_t in_channels, std::span<const std::size_t> hidden_filters,
                                   std::uint64_t out_channels, std::uint64_t kernel);

/// L^3, dominated by the covariance inversion.
std::uint64_t mvdr_flops_estimate(std::uint64_t subaperture_length);

/// Multiply-accumulates per pixel through the actual layer chain (doubled conv inputs).
std::uint64_t exact_cnn_flops(const cnn::CnnConfig& config);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct MetricsReport {
  std::string case_label;
  std::string beamformer;
  double cnr_db = 0.0;
  double fwhm_axial_mm = 0.0;
  double fwhm_lateral_mm = 0.0;
  double mse = 0.0;
};

inline constexpr std::string_view kMetricsCsvHeader = "case,beamformer,cnr_dB,fwhm_axial_mm,fwhm_lateral_mm,mse";

std::string metrics_csv(std::span<const MetricsReport> rows);

/// Published metrics for the in-vivo-trained models on the challenge data, kept for report
/// annotation only.
struct PublishedReferenceRow {
  int eval_case;
  std::string_view beamformer;
  double fwhm_axial_mm;
  double fwhm_lateral_mm;
  double cnr_db;
};

inline constexpr std::array<PublishedReferenceRow, 12> kPublishedReferenceTable{{
    {1, "DAS", 0.388, 0.946, 6.882},
    {1, "MVDR", 0.378, 0.966, 9.105},
    {1, "FCNN", 0.407, 1.001, 2.555},
    {1, "CNN", 0.417, 0.926, 8.418},
    {2, "DAS", 0.404, 0.966, 7.037},
    {2, "MVDR", 0.397, 0.956, 8.925},
    {2, "FCNN", 0.417, 1.005, 4.431},
    {2, "CNN", 0.400, 0.926, 8.844},
    {3, "DAS", 0.455, 0.887, 8.112},
    {3, "MVDR", 0.352, 0.906, 8.522},
    {3, "FCNN", 0.401, 0.966, 9.536},
    {3, "CNN", 0.420, 0.852, 8.624},
}};

}  // namespace ubf
