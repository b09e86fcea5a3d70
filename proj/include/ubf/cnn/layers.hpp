#pragma once

// Forward and backward kernels for the apodization network. Every function is templated on the
// scalar type so training runs in float while gradient checks run the same code in double.
//
// Feature maps are (H*W) x C row-major matrices: one row per pixel, channels contiguous.

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "ubf/error.hpp"

namespace ubf::cnn {

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

struct Extent {
  std::size_t height = 0;  // axial
  std::size_t width = 0;   // lateral
  std::size_t pixels() const noexcept { return height * width; }
  friend bool operator==(Extent, Extent) = default;
};

/// Same-padded 2-D convolution (cross-correlation). Weight rows are ordered [dy][dx][cin].
template <class T>
struct ConvLayer {
  std::size_t kernel = 1;
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  Mat<T> weight;  // (K*K*Cin) x Cout
  Vec<T> bias;    // Cout

  ConvLayer() = default;
  ConvLayer(std::size_t k, std::size_t cin, std::size_t cout)
      : kernel(k), in_channels(cin), out_channels(cout),
        weight(Mat<T>::Zero(static_cast<Eigen::Index>(k * k * cin), static_cast<Eigen::Index>(cout))),
        bias(Vec<T>::Zero(static_cast<Eigen::Index>(cout))) {}
};

/// Unrolls K x K neighbourhoods (zero padded) into rows: (H*W) x (K*K*C).
template <class T>
Mat<T> im2col(const Mat<T>& in, Extent ext, std::size_t k) {
  const auto c = static_cast<std::size_t>(in.cols());
  const auto pad = static_cast<std::ptrdiff_t>(k / 2);
  const auto h = static_cast<std::ptrdiff_t>(ext.height);
  const auto w = static_cast<std::ptrdiff_t>(ext.width);
  Mat<T> cols = Mat<T>::Zero(in.rows(), static_cast<Eigen::Index>(k * k * c));
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      T* dst = cols.data() + (y * w + x) * cols.cols();
      for (std::size_t dy = 0; dy < k; ++dy) {
        const std::ptrdiff_t sy = y + static_cast<std::ptrdiff_t>(dy) - pad;
        if (sy < 0 || sy >= h) continue;
        for (std::size_t dx = 0; dx < k; ++dx) {
          const std::ptrdiff_t sx = x + static_cast<std::ptrdiff_t>(dx) - pad;
          if (sx < 0 || sx >= w) continue;
          const T* src = in.data() + (sy * w + sx) * static_cast<std::ptrdiff_t>(c);
          std::copy(src, src + c, dst + (dy * k + dx) * c);
        }
      }
    }
  }
  return cols;
}

/// Adjoint of im2col: scatters column gradients back onto the input map.
template <class T>
Mat<T> col2im(const Mat<T>& cols, Extent ext, std::size_t k, std::size_t c) {
  const auto pad = static_cast<std::ptrdiff_t>(k / 2);
  const auto h = static_cast<std::ptrdiff_t>(ext.height);
  const auto w = static_cast<std::ptrdiff_t>(ext.width);
  Mat<T> out = Mat<T>::Zero(static_cast<Eigen::Index>(ext.pixels()), static_cast<Eigen::Index>(c));
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      const T* src = cols.data() + (y * w + x) * cols.cols();
      for (std::size_t dy = 0; dy < k; ++dy) {
        const std::ptrdiff_t sy = y + static_cast<std::ptrdiff_t>(dy) - pad;
        if (sy < 0 || sy >= h) continue;
        for (std::size_t dx = 0; dx < k; ++dx) {
          const std::ptrdiff_t sx = x + static_cast<std::ptrdiff_t>(dx) - pad;
          if (sx < 0 || sx >= w) continue;
          T* dst = out.data() + (sy * w + sx) * static_cast<std::ptrdiff_t>(c);
          const T* s = src + (dy * k + dx) * c;
          for (std::size_t ch = 0; ch < c; ++ch) dst[ch] += s[ch];
        }
      }
    }
  }
  return out;
}

template <class T>
Mat<T> conv2d_forward(const Mat<T>& in, Extent ext, const ConvLayer<T>& layer) {
  if (static_cast<std::size_t>(in.cols()) != layer.in_channels ||
      static_cast<std::size_t>(in.rows()) != ext.pixels()) {
    throw ShapeError("conv2d_forward: input has " + std::to_string(in.cols()) + " channels, layer expects " +
                     std::to_string(layer.in_channels));
  }
  Mat<T> out;
  if (layer.kernel == 1) {
    out.noalias() = in * layer.weight;
  } else {
    out.noalias() = im2col(in, ext, layer.kernel) * layer.weight;
  }
  out.rowwise() += layer.bias.transpose();
  return out;
}

template <class T>
struct ConvGrads {
  Mat<T> weight;
  Vec<T> bias;
};

/// Accumulates parameter gradients into `grads` and returns the input gradient when requested.
template <class T>
Mat<T> conv2d_backward(const Mat<T>& in, Extent ext, const ConvLayer<T>& layer, const Mat<T>& dout,
                       ConvGrads<T>& grads, bool need_input_grad = true) {
  grads.bias += dout.colwise().sum().transpose();
  if (layer.kernel == 1) {
    grads.weight.noalias() += in.transpose() * dout;
    if (!need_input_grad) return {};
    Mat<T> din;
    din.noalias() = dout * layer.weight.transpose();
    return din;
  }
  const Mat<T> cols = im2col(in, ext, layer.kernel);
  grads.weight.noalias() += cols.transpose() * dout;
  if (!need_input_grad) return {};
  Mat<T> dcols;
  dcols.noalias() = dout * layer.weight.transpose();
  return col2im(dcols, ext, layer.kernel, layer.in_channels);
}

/// Per-feature batch normalization.
template <class T>
struct BatchNorm {
  Vec<T> gamma;
  Vec<T> beta;
  Vec<T> running_mean;
  Vec<T> running_var;
  T epsilon = T(1e-5);
  T momentum = T(0.1);

  BatchNorm() = default;
  BatchNorm(std::size_t features, T eps, T mom)
      : gamma(Vec<T>::Ones(static_cast<Eigen::Index>(features))),
        beta(Vec<T>::Zero(static_cast<Eigen::Index>(features))),
        running_mean(Vec<T>::Zero(static_cast<Eigen::Index>(features))),
        running_var(Vec<T>::Ones(static_cast<Eigen::Index>(features))),
        epsilon(eps), momentum(mom) {}
  std::size_t features() const { return static_cast<std::size_t>(gamma.size()); }
};

template <class T>
struct BatchNormCache {
  std::vector<Mat<T>> normalized;  // x-hat per batch item
  Vec<T> inv_std;
};

enum class Mode { Training, Inference };

/// Training mode normalizes with statistics over (batch, H, W) and updates running statistics:
/// running <- (1 - momentum) * running + momentum * batch (population variance).
template <class T>
std::vector<Mat<T>> batchnorm_forward(const std::vector<Mat<T>>& batch, BatchNorm<T>& bn, Mode mode,
                                      BatchNormCache<T>* cache = nullptr) {
  const auto c = static_cast<Eigen::Index>(bn.features());
  Vec<T> mean, var;
  if (mode == Mode::Training) {
    if (batch.empty()) throw ShapeError("batchnorm_forward: empty batch");
    mean = Vec<T>::Zero(c);
    var = Vec<T>::Zero(c);
    double count = 0;
    for (const auto& x : batch) {
      mean += x.colwise().sum().transpose();
      count += static_cast<double>(x.rows());
    }
    mean /= static_cast<T>(count);
    for (const auto& x : batch) var += (x.rowwise() - mean.transpose()).array().square().matrix().colwise().sum().transpose();
    var /= static_cast<T>(count);
    bn.running_mean = (T(1) - bn.momentum) * bn.running_mean + bn.momentum * mean;
    bn.running_var = (T(1) - bn.momentum) * bn.running_var + bn.momentum * var;
  } else {
    mean = bn.running_mean;
    var = bn.running_var;
  }
  const Vec<T> inv_std = (var.array() + bn.epsilon).rsqrt().matrix();
  std::vector<Mat<T>> out;
  out.reserve(batch.size());
  if (cache) {
    cache->normalized.clear();
    cache->inv_std = inv_std;
  }
  for (const auto& x : batch) {
    Mat<T> xhat = ((x.rowwise() - mean.transpose()).array().rowwise() * inv_std.transpose().array()).matrix();
    Mat<T> y = ((xhat.array().rowwise() * bn.gamma.transpose().array()).rowwise() + bn.beta.transpose().array())
                   .matrix();
    if (cache) cache->normalized.push_back(std::move(xhat));
    out.push_back(std::move(y));
  }
  return out;
}

template <class T>
struct BatchNormGrads {
  Vec<T> gamma;
  Vec<T> beta;
};

/// Backward pass of training-mode batch normalization.
template <class T>
std::vector<Mat<T>> batchnorm_backward(const std::vector<Mat<T>>& dout, const BatchNorm<T>& bn,
                                       const BatchNormCache<T>& cache, BatchNormGrads<T>& grads) {
  const auto c = static_cast<Eigen::Index>(bn.features());
  Vec<T> sum_dy = Vec<T>::Zero(c);
  Vec<T> sum_dy_xhat = Vec<T>::Zero(c);
  double count = 0;
  for (std::size_t b = 0; b < dout.size(); ++b) {
    sum_dy += dout[b].colwise().sum().transpose();
    sum_dy_xhat += dout[b].cwiseProduct(cache.normalized[b]).colwise().sum().transpose();
    count += static_cast<double>(dout[b].rows());
  }
  grads.beta += sum_dy;
  grads.gamma += sum_dy_xhat;
  const T n = static_cast<T>(count);
  const Vec<T> mean_dy = sum_dy / n;
  const Vec<T> mean_dy_xhat = sum_dy_xhat / n;
  const Vec<T> scale = bn.gamma.cwiseProduct(cache.inv_std);
  std::vector<Mat<T>> din;
  din.reserve(dout.size());
  for (std::size_t b = 0; b < dout.size(); ++b) {
    Mat<T> g = dout[b].rowwise() - mean_dy.transpose();
    g -= (cache.normalized[b].array().rowwise() * mean_dy_xhat.transpose().array()).matrix();
    din.push_back((g.array().rowwise() * scale.transpose().array()).matrix());
  }
  return din;
}

template <class T>
struct AntirectifierCache {
  Mat<T> z;      // mean-centred, normalized features
  Vec<T> norms;  // per-pixel norm before the epsilon guard
};

inline constexpr double kNormEpsilon = 1e-12;

/// Per pixel: z = (v - mean v) / max(|v - mean v|, eps); output [relu(z), relu(-z)] (2C channels).
template <class T>
Mat<T> antirectifier_forward(const Mat<T>& in, AntirectifierCache<T>* cache = nullptr) {
  const Eigen::Index c = in.cols();
  Mat<T> z = in.colwise() - in.rowwise().mean();
  Vec<T> norms = z.rowwise().norm();
  for (Eigen::Index p = 0; p < z.rows(); ++p) {
    z.row(p) /= std::max(norms(p), static_cast<T>(kNormEpsilon));
  }
  Mat<T> out(in.rows(), 2 * c);
  out.leftCols(c) = z.cwiseMax(T(0));
  out.rightCols(c) = (-z).cwiseMax(T(0));
  if (cache) {
    cache->z = std::move(z);
    cache->norms = std::move(norms);
  }
  return out;
}

template <class T>
Mat<T> antirectifier_backward(const Mat<T>& dout, const AntirectifierCache<T>& cache) {
  const Eigen::Index c = cache.z.cols();
  const auto& z = cache.z;
  Mat<T> dz = (z.array() > T(0)).select(dout.leftCols(c), T(0)) - (z.array() < T(0)).select(dout.rightCols(c), T(0));
  for (Eigen::Index p = 0; p < z.rows(); ++p) {
    const T n = cache.norms(p);
    if (n > static_cast<T>(kNormEpsilon)) {
      const T proj = z.row(p).dot(dz.row(p));
      dz.row(p) = (dz.row(p) - proj * z.row(p)) / n;
    } else {
      dz.row(p) /= static_cast<T>(kNormEpsilon);
    }
  }
  // Mean subtraction is its own adjoint.
  return dz.colwise() - dz.rowwise().mean();
}

/// Per-pixel L2 normalization with the same epsilon guard; zero rows stay zero.
template <class T>
Mat<T> l2_normalize_rows(const Mat<T>& in) {
  Mat<T> out = in;
  for (Eigen::Index p = 0; p < out.rows(); ++p) {
    const T n = out.row(p).norm();
    out.row(p) /= std::max(n, static_cast<T>(kNormEpsilon));
  }
  return out;
}

/// Channel softmax per pixel, stabilized by subtracting the per-pixel maximum.
template <class T>
Mat<T> softmax_forward(const Mat<T>& logits) {
  Mat<T> out = logits.colwise() - logits.rowwise().maxCoeff();
  out = out.array().exp().matrix();
  const Vec<T> sums = out.rowwise().sum();
  for (Eigen::Index p = 0; p < out.rows(); ++p) out.row(p) /= sums(p);
  return out;
}

template <class T>
Mat<T> softmax_backward(const Mat<T>& weights, const Mat<T>& dweights) {
  const Vec<T> inner = weights.cwiseProduct(dweights).rowwise().sum();
  return weights.cwiseProduct(dweights.colwise() - inner);
}

/// out[p] = sum_e weights[p,e] * data[p,e]
template <class T>
Vec<T> apodize_forward(const Mat<T>& weights, const Mat<T>& data) {
  return weights.cwiseProduct(data).rowwise().sum();
}

/// Gradient with respect to the weights only; the channel data are not trainable.
template <class T>
Mat<T> apodize_backward_weights(const Mat<T>& data, const Vec<T>& dout) {
  return data.array().colwise() * dout.array();
}

template <class T>
T mse_forward(const Vec<T>& prediction, const Vec<T>& target) {
  return (prediction - target).squaredNorm() / static_cast<T>(prediction.size());
}

/// d(mse)/d(prediction), scaled by `weight` (e.g. 1/batch for a batch mean).
template <class T>
Vec<T> mse_backward(const Vec<T>& prediction, const Vec<T>& target, T weight = T(1)) {
  return (prediction - target) * (T(2) * weight / static_cast<T>(prediction.size()));
}

}  // namespace ubf::cnn
