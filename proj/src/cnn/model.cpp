#include "ubf/cnn/model.hpp"

#include <cmath>
#include <random>

#include "ubf/error.hpp"
#include "ubf/rng.hpp"

namespace ubf::cnn {

void CnnConfig::validate() const {
  if (kernel_size < 1 || kernel_size % 2 == 0) throw ConfigError("cnn: kernel size must be odd");
  if (output_channels < 1) throw ConfigError("cnn: output_channels must be >= 1");
  for (std::size_t i = 0; i < hidden_filters.size(); ++i) {
    if (hidden_filters[i] < 1) throw ConfigError("cnn: hidden filter counts must be >= 1");
    if (i > 0 && hidden_filters[i] < hidden_filters[i - 1]) {
      throw ConfigError("cnn: hidden filter counts must be non-decreasing");
    }
  }
  if (!(batchnorm_epsilon > 0.0)) throw ConfigError("cnn: batch-norm epsilon must be positive");
  if (!(batchnorm_momentum > 0.0 && batchnorm_momentum < 1.0)) {
    throw ConfigError("cnn: batch-norm momentum must lie in (0, 1)");
  }
}

std::vector<std::size_t> CnnConfig::conv_inputs() const {
  std::vector<std::size_t> in;
  in.push_back(output_channels);
  // The antirectifier doubles every hidden layer's channel count.
  for (std::size_t f : hidden_filters) in.push_back(2 * f);
  return in;
}

std::vector<std::size_t> CnnConfig::conv_outputs() const {
  std::vector<std::size_t> out(hidden_filters);
  out.push_back(output_channels);
  return out;
}

template <class T>
CnnModel<T>::CnnModel(const CnnConfig& config) : config_(config) {
  config_.validate();
  const auto ins = config_.conv_inputs();
  const auto outs = config_.conv_outputs();
  for (std::size_t i = 0; i < ins.size(); ++i) convs.emplace_back(config_.kernel_size, ins[i], outs[i]);
  for (std::size_t f : config_.hidden_filters) {
    norms.emplace_back(f, static_cast<T>(config_.batchnorm_epsilon), static_cast<T>(config_.batchnorm_momentum));
  }
}

template <class T>
CnnModel<T> CnnModel<T>::initialized(const CnnConfig& config, std::uint64_t seed) {
  CnnModel<T> m(config);
  for (std::size_t i = 0; i < m.convs.size(); ++i) {
    auto& layer = m.convs[i];
    auto rng = make_rng(seed, "cnn-init", i);
    const double fan = static_cast<double>(layer.kernel * layer.kernel * layer.in_channels);
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = static_cast<T>(dist(rng));
    }
  }
  return m;
}

template <class T>
std::vector<std::span<T>> CnnModel<T>::parameters() {
  std::vector<std::span<T>> p;
  for (std::size_t i = 0; i < convs.size(); ++i) {
    p.emplace_back(convs[i].weight.data(), static_cast<std::size_t>(convs[i].weight.size()));
    p.emplace_back(convs[i].bias.data(), static_cast<std::size_t>(convs[i].bias.size()));
    if (i < norms.size()) {
      p.emplace_back(norms[i].gamma.data(), static_cast<std::size_t>(norms[i].gamma.size()));
      p.emplace_back(norms[i].beta.data(), static_cast<std::size_t>(norms[i].beta.size()));
    }
  }
  return p;
}

template <class T>
std::vector<std::string> CnnModel<T>::parameter_names() const {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < convs.size(); ++i) {
    const std::string conv = i + 1 == convs.size() ? "output" : "conv" + std::to_string(i);
    names.push_back(conv + ".weight");
    names.push_back(conv + ".bias");
    if (i < norms.size()) {
      names.push_back("bn" + std::to_string(i) + ".gamma");
      names.push_back("bn" + std::to_string(i) + ".beta");
    }
  }
  return names;
}

template <class T>
Gradients<T> CnnModel<T>::zero_gradients() const {
  Gradients<T> g;
  for (const auto& c : convs) g.convs.push_back({Mat<T>::Zero(c.weight.rows(), c.weight.cols()), Vec<T>::Zero(c.bias.size())});
  for (const auto& n : norms) g.norms.push_back({Vec<T>::Zero(n.gamma.size()), Vec<T>::Zero(n.beta.size())});
  return g;
}

template <class T>
std::vector<std::span<T>> gradient_spans(Gradients<T>& g) {
  std::vector<std::span<T>> p;
  for (std::size_t i = 0; i < g.convs.size(); ++i) {
    p.emplace_back(g.convs[i].weight.data(), static_cast<std::size_t>(g.convs[i].weight.size()));
    p.emplace_back(g.convs[i].bias.data(), static_cast<std::size_t>(g.convs[i].bias.size()));
    if (i < g.norms.size()) {
      p.emplace_back(g.norms[i].gamma.data(), static_cast<std::size_t>(g.norms[i].gamma.size()));
      p.emplace_back(g.norms[i].beta.data(), static_cast<std::size_t>(g.norms[i].beta.size()));
    }
  }
  return p;
}

namespace {

template <class T>
void check_input(const CnnModel<T>& model, const Mat<T>& data, Extent ext) {
  if (static_cast<std::size_t>(data.cols()) != model.config().output_channels) {
    throw ShapeError("cnn: input has " + std::to_string(data.cols()) + " channels, model expects " +
                     std::to_string(model.config().output_channels));
  }
  if (static_cast<std::size_t>(data.rows()) != ext.pixels()) throw ShapeError("cnn: input rows do not match extent");
}

}  // namespace

template <class T>
Mat<T> forward_weights(const CnnModel<T>& model, const Mat<T>& data, Extent ext) {
  check_input(model, data, ext);
  Mat<T> h = l2_normalize_rows(data);
  for (std::size_t i = 0; i < model.hidden_layers(); ++i) {
    std::vector<Mat<T>> pre;
    pre.push_back(conv2d_forward(h, ext, model.convs[i]));
    auto bn = model.norms[i];  // inference mode leaves the statistics untouched
    auto normed = batchnorm_forward(pre, bn, Mode::Inference);
    h = antirectifier_forward(normed.front());
  }
  return softmax_forward(conv2d_forward(h, ext, model.output_layer()));
}

template <class T>
Vec<T> forward_image(const CnnModel<T>& model, const Mat<T>& data, Extent ext) {
  const Mat<T> w = forward_weights(model, data, ext);
  if (model.config().apodize_normalized_input) return apodize_forward(w, l2_normalize_rows(data));
  return apodize_forward(w, data);
}

template <class T>
LossAndGradients<T> loss_and_gradients(CnnModel<T>& model, std::span<const Sample<T>> batch) {
  if (batch.empty()) throw ShapeError("loss_and_gradients: empty batch");
  const std::size_t nb = batch.size();
  const std::size_t nh = model.hidden_layers();
  for (const auto& s : batch) {
    check_input(model, s.data, s.extent);
    if (static_cast<std::size_t>(s.target.size()) != s.extent.pixels()) {
      throw ShapeError("loss_and_gradients: target size does not match extent");
    }
  }

  // Forward, keeping what the backward pass needs.
  std::vector<std::vector<Mat<T>>> conv_in(nh + 1, std::vector<Mat<T>>(nb));
  std::vector<BatchNormCache<T>> bn_cache(nh);
  std::vector<std::vector<AntirectifierCache<T>>> ar_cache(nh, std::vector<AntirectifierCache<T>>(nb));
  std::vector<Mat<T>> normalized_input(nb);

  for (std::size_t b = 0; b < nb; ++b) {
    normalized_input[b] = l2_normalize_rows(batch[b].data);
  }
  std::vector<Mat<T>> h = normalized_input;
  for (std::size_t i = 0; i < nh; ++i) {
    std::vector<Mat<T>> pre(nb);
    for (std::size_t b = 0; b < nb; ++b) pre[b] = conv2d_forward(h[b], batch[b].extent, model.convs[i]);
    for (std::size_t b = 0; b < nb; ++b) conv_in[i][b] = std::move(h[b]);
    auto normed = batchnorm_forward(pre, model.norms[i], Mode::Training, &bn_cache[i]);
    for (std::size_t b = 0; b < nb; ++b) h[b] = antirectifier_forward(normed[b], &ar_cache[i][b]);
  }

  LossAndGradients<T> result;
  result.grads = model.zero_gradients();
  const T inv_batch = T(1) / static_cast<T>(nb);
  std::vector<Mat<T>> dh(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    const auto& s = batch[b];
    const Mat<T> logits = conv2d_forward(h[b], s.extent, model.output_layer());
    const Mat<T> w = softmax_forward(logits);
    const Mat<T>& apod_data = model.config().apodize_normalized_input ? normalized_input[b] : s.data;
    const Vec<T> y = apodize_forward(w, apod_data);
    result.loss += mse_forward(y, s.target) * inv_batch;

    const Vec<T> dy = mse_backward(y, s.target, inv_batch);
    const Mat<T> dlogits = softmax_backward(w, apodize_backward_weights(apod_data, dy));
    dh[b] = conv2d_backward(h[b], s.extent, model.output_layer(), dlogits, result.grads.convs.back(), nh > 0);
  }

  for (std::size_t i = nh; i-- > 0;) {
    std::vector<Mat<T>> dnormed(nb);
    for (std::size_t b = 0; b < nb; ++b) dnormed[b] = antirectifier_backward(dh[b], ar_cache[i][b]);
    const auto dpre = batchnorm_backward(dnormed, model.norms[i], bn_cache[i], result.grads.norms[i]);
    for (std::size_t b = 0; b < nb; ++b) {
      dh[b] = conv2d_backward(conv_in[i][b], batch[b].extent, model.convs[i], dpre[b], result.grads.convs[i], i > 0);
    }
  }
  return result;
}

template class CnnModel<float>;
template class CnnModel<double>;

template std::vector<std::span<float>> gradient_spans(Gradients<float>&);
template std::vector<std::span<double>> gradient_spans(Gradients<double>&);
template Mat<float> forward_weights(const CnnModel<float>&, const Mat<float>&, Extent);
template Mat<double> forward_weights(const CnnModel<double>&, const Mat<double>&, Extent);
template Vec<float> forward_image(const CnnModel<float>&, const Mat<float>&, Extent);
template Vec<double> forward_image(const CnnModel<double>&, const Mat<double>&, Extent);
template LossAndGradients<float> loss_and_gradients(CnnModel<float>&, std::span<const Sample<float>>);
template LossAndGradients<double> loss_and_gradients(CnnModel<double>&, std::span<const Sample<double>>);

}  // namespace ubf::cnn
