#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <string>

#include "ubf/cnn/layers.hpp"
#include "ubf/cnn/model.hpp"

namespace gradcheck {

using ubf::cnn::Extent;
using M = ubf::cnn::Mat<double>;
using V = ubf::cnn::Vec<double>;

inline M random_mat(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double sd = 1.0) {
  std::normal_distribution<double> g(0.0, sd);
  M m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

inline V random_vec(std::mt19937_64& rng, Eigen::Index n, double sd = 1.0) {
  std::normal_distribution<double> g(0.0, sd);
  V v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = g(rng);
  return v;
}

/// Largest element-wise relative disagreement between an analytic gradient and central finite
/// differences of `loss` with respect to `param` (perturbed in place).
inline double worst_relative_error(std::span<double> param, std::span<const double> analytic,
                                   const std::function<double()>& loss, double step = 1e-5,
                                   double floor = 1e-5) {
  double worst = 0.0;
  for (std::size_t k = 0; k < param.size(); ++k) {
    const double saved = param[k];
    param[k] = saved + step;
    const double up = loss();
    param[k] = saved - step;
    const double down = loss();
    param[k] = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double scale = std::max({std::abs(numeric), std::abs(analytic[k]), floor});
    worst = std::max(worst, std::abs(numeric - analytic[k]) / scale);
  }
  return worst;
}

inline std::span<double> span_of(M& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
inline std::span<double> span_of(V& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
inline std::span<const double> cspan_of(const M& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
inline std::span<const double> cspan_of(const V& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

struct LayerReport {
  std::string name;
  double error = 0.0;
};

/// Gradient checks of every layer on randomized 4x4 instances with 2 channels.
inline std::vector<LayerReport> check_all_layers(std::uint64_t seed) {
  using namespace ubf::cnn;
  std::mt19937_64 rng(seed);
  const Extent ext{4, 4};
  const Eigen::Index px = 16;
  std::vector<LayerReport> out;

  {
    ConvLayer<double> layer(3, 2, 2);
    layer.weight = random_mat(rng, 18, 2);
    layer.bias = random_vec(rng, 2);
    M in = random_mat(rng, px, 2);
    const M r = random_mat(rng, px, 2);
    const auto loss = [&] { return conv2d_forward(in, ext, layer).cwiseProduct(r).sum(); };
    ConvGrads<double> g{M::Zero(18, 2), V::Zero(2)};
    const M din = conv2d_backward(in, ext, layer, r, g);
    double e = worst_relative_error(span_of(in), cspan_of(din), loss);
    e = std::max(e, worst_relative_error(span_of(layer.weight), cspan_of(g.weight), loss));
    e = std::max(e, worst_relative_error(span_of(layer.bias), cspan_of(g.bias), loss));
    out.push_back({"conv", e});
  }
  {
    BatchNorm<double> bn(2, 1e-5, 0.1);
    bn.gamma = random_vec(rng, 2);
    bn.beta = random_vec(rng, 2);
    std::vector<M> batch{random_mat(rng, px, 2, 2.0), random_mat(rng, px, 2, 2.0)};
    const std::vector<M> r{random_mat(rng, px, 2), random_mat(rng, px, 2)};
    const auto loss = [&] {
      BatchNorm<double> copy = bn;
      const auto y = batchnorm_forward(batch, copy, Mode::Training);
      return y[0].cwiseProduct(r[0]).sum() + y[1].cwiseProduct(r[1]).sum();
    };
    BatchNorm<double> copy = bn;
    BatchNormCache<double> cache;
    batchnorm_forward(batch, copy, Mode::Training, &cache);
    BatchNormGrads<double> g{V::Zero(2), V::Zero(2)};
    const auto din = batchnorm_backward(r, bn, cache, g);
    double e = 0.0;
    for (std::size_t b = 0; b < 2; ++b) e = std::max(e, worst_relative_error(span_of(batch[b]), cspan_of(din[b]), loss));
    e = std::max(e, worst_relative_error(span_of(bn.gamma), cspan_of(g.gamma), loss));
    e = std::max(e, worst_relative_error(span_of(bn.beta), cspan_of(g.beta), loss));
    out.push_back({"batchnorm", e});
  }
  {
    M in = random_mat(rng, px, 2);
    const M r = random_mat(rng, px, 4);
    const auto loss = [&] { return antirectifier_forward(in).cwiseProduct(r).sum(); };
    AntirectifierCache<double> cache;
    antirectifier_forward(in, &cache);
    const M din = antirectifier_backward(r, cache);
    out.push_back({"antirectifier", worst_relative_error(span_of(in), cspan_of(din), loss)});
  }
  {
    // A 3-channel antirectifier instance: with 2 channels z is always +-(1,-1)/sqrt(2) and the
    // gradient vanishes identically.
    M in = random_mat(rng, px, 3);
    const M r = random_mat(rng, px, 6);
    const auto loss = [&] { return antirectifier_forward(in).cwiseProduct(r).sum(); };
    AntirectifierCache<double> cache;
    antirectifier_forward(in, &cache);
    const M din = antirectifier_backward(r, cache);
    out.push_back({"antirectifier-3ch", worst_relative_error(span_of(in), cspan_of(din), loss)});
  }
  {
    M in = random_mat(rng, px, 2);
    const M r = random_mat(rng, px, 2);
    const auto loss = [&] { return softmax_forward(in).cwiseProduct(r).sum(); };
    const M din = softmax_backward(softmax_forward(in), r);
    out.push_back({"softmax", worst_relative_error(span_of(in), cspan_of(din), loss)});
  }
  {
    M w = random_mat(rng, px, 2);
    const M data = random_mat(rng, px, 2);
    const V r = random_vec(rng, px);
    const auto loss = [&] { return apodize_forward(w, data).dot(r); };
    const M dw = apodize_backward_weights(data, r);
    out.push_back({"apodized-sum", worst_relative_error(span_of(w), cspan_of(dw), loss)});
  }
  {
    V pred = random_vec(rng, px);
    const V target = random_vec(rng, px);
    const auto loss = [&] { return mse_forward(pred, target); };
    const V d = mse_backward(pred, target);
    out.push_back({"mse", worst_relative_error(span_of(pred), cspan_of(d), loss)});
  }
  {
    // Whole network: 2 channels, 4x4 frames, two hidden layers, batch of two.
    CnnConfig cfg;
    cfg.kernel_size = 3;
    cfg.hidden_filters = {2, 3};
    cfg.output_channels = 2;
    auto model = CnnModel<double>::initialized(cfg, seed);
    for (auto p : model.parameters()) {
      std::normal_distribution<double> g(0.0, 0.5);
      for (double& v : p) v += g(rng);
    }
    std::vector<Sample<double>> batch;
    for (int b = 0; b < 2; ++b) batch.push_back({ext, random_mat(rng, px, 2), random_vec(rng, px)});
    auto lg = loss_and_gradients<double>(model, batch);
    const auto grads = gradient_spans(lg.grads);
    auto params = model.parameters();
    const auto loss = [&] { return loss_and_gradients<double>(model, batch).loss; };
    double e = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
      e = std::max(e, worst_relative_error(params[i], grads[i], loss));
    }
    out.push_back({"network", e});
  }
  return out;
}

}  // namespace gradcheck
