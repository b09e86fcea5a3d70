#include "ubf/postproc.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <memory>

#include "ubf/error.hpp"

namespace ubf {

namespace {

struct FftwFree {
  void operator()(fftw_complex* p) const { fftw_free(p); }
};

/// Forward/backward in-place complex transform pair of a fixed length.
class AnalyticTransform {
 public:
  explicit AnalyticTransform(std::size_t n)
      : n_(n), buf_(fftw_alloc_complex(n)) {
    const int len = static_cast<int>(n);
    fwd_ = fftw_plan_dft_1d(len, buf_.get(), buf_.get(), FFTW_FORWARD, FFTW_ESTIMATE);
    inv_ = fftw_plan_dft_1d(len, buf_.get(), buf_.get(), FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~AnalyticTransform() {
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(inv_);
  }
  AnalyticTransform(const AnalyticTransform&) = delete;
  AnalyticTransform& operator=(const AnalyticTransform&) = delete;

  /// Writes the analytic signal of `signal` (length m <= n) into out[0..m).
  void run(std::span<const double> signal, std::span<std::complex<double>> out) {
    fftw_complex* b = buf_.get();
    const std::size_t m = signal.size();
    for (std::size_t k = 0; k < n_; ++k) {
      b[k][0] = k < m ? signal[k] : 0.0;
      b[k][1] = 0.0;
    }
    fftw_execute(fwd_);
    // Keep DC and Nyquist, double positive frequencies, drop negative ones.
    const std::size_t half = n_ / 2;
    for (std::size_t k = 1; k < half; ++k) {
      b[k][0] *= 2.0;
      b[k][1] *= 2.0;
    }
    for (std::size_t k = half + 1; k < n_; ++k) {
      b[k][0] = 0.0;
      b[k][1] = 0.0;
    }
    fftw_execute(inv_);
    const double scale = 1.0 / static_cast<double>(n_);
    for (std::size_t k = 0; k < m; ++k) out[k] = {b[k][0] * scale, b[k][1] * scale};
  }

 private:
  std::size_t n_;
  std::unique_ptr<fftw_complex[], FftwFree> buf_;
  fftw_plan fwd_ = nullptr;
  fftw_plan inv_ = nullptr;
};

}  // namespace

std::vector<std::complex<double>> hilbert_analytic(std::span<const double> signal) {
  if (signal.size() < 2) throw ShapeError("hilbert_analytic: signal needs at least 2 samples");
  AnalyticTransform t(std::bit_ceil(signal.size()));
  std::vector<std::complex<double>> out(signal.size());
  t.run(signal, out);
  return out;
}

Array2<double> envelope(const RfImage& image) {
  const std::size_t nx = image.rows();
  const std::size_t ny = image.cols();
  Array2<double> env(nx, ny);
  if (nx < 2) throw ShapeError("envelope: image needs at least 2 axial samples");
  AnalyticTransform t(std::bit_ceil(nx));
  std::vector<double> column(nx);
  std::vector<std::complex<double>> analytic(nx);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) column[i] = image(i, j);
    t.run(column, analytic);
    for (std::size_t i = 0; i < nx; ++i) env(i, j) = std::abs(analytic[i]);
  }
  return env;
}

BmodeImage log_compress(const Array2<double>& env, double dynamic_range_db) {
  if (!(dynamic_range_db > 0.0)) throw ConfigError("log_compress: dynamic range must be positive");
  const auto v = env.values();
  const double peak = v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
  if (!(peak > 0.0)) throw NumericError("log_compress: envelope has no positive maximum");
  BmodeImage out{Array2<double>(env.rows(), env.cols()), dynamic_range_db};
  auto o = out.data.values();
  for (std::size_t p = 0; p < v.size(); ++p) {
    const double db = v[p] > 0.0 ? 20.0 * std::log10(v[p] / peak) : -dynamic_range_db;
    o[p] = std::max(db, -dynamic_range_db);
  }
  return out;
}

}  // namespace ubf
