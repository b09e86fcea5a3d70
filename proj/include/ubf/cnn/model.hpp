#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ubf/cnn/layers.hpp"

namespace ubf::cnn {

struct CnnConfig {
  std::size_t kernel_size = 3;
  std::vector<std::size_t> hidden_filters{32, 64, 64, 128};
  std::size_t output_channels = 128;
  double batchnorm_epsilon = 1e-5;
  double batchnorm_momentum = 0.1;
  /// Apodize the per-pixel L2-normalized input instead of the raw (frame-normalized) data.
  bool apodize_normalized_input = false;

  void validate() const;
  /// Input channel count of each conv layer, hidden layers first, output layer last.
  std::vector<std::size_t> conv_inputs() const;
  std::vector<std::size_t> conv_outputs() const;
  friend bool operator==(const CnnConfig&, const CnnConfig&) = default;
};

template <class T>
struct Gradients {
  std::vector<ConvGrads<T>> convs;
  std::vector<BatchNormGrads<T>> norms;
};

/// One frame in network layout: (H*W) x channels data and its target image (H*W).
template <class T>
struct Sample {
  Extent extent;
  Mat<T> data;
  Vec<T> target;
};

template <class T>
class CnnModel {
 public:
  CnnModel() = default;
  /// All kernels and biases zero, gamma one, beta zero.
  explicit CnnModel(const CnnConfig& config);
  /// He-normal kernels with variance 2/(K^2 * fan_in), zero biases.
  static CnnModel initialized(const CnnConfig& config, std::uint64_t seed);

  const CnnConfig& config() const noexcept { return config_; }
  std::size_t hidden_layers() const noexcept { return norms.size(); }

  ConvLayer<T>& output_layer() { return convs.back(); }
  const ConvLayer<T>& output_layer() const { return convs.back(); }

  /// Trainable parameters in a fixed order, with stable names.
  std::vector<std::span<T>> parameters();
  std::vector<std::string> parameter_names() const;

  Gradients<T> zero_gradients() const;

  template <class U>
  CnnModel<U> cast() const {
    CnnModel<U> out(config_);
    for (std::size_t i = 0; i < convs.size(); ++i) {
      out.convs[i].weight = convs[i].weight.template cast<U>();
      out.convs[i].bias = convs[i].bias.template cast<U>();
    }
    for (std::size_t i = 0; i < norms.size(); ++i) {
      out.norms[i].gamma = norms[i].gamma.template cast<U>();
      out.norms[i].beta = norms[i].beta.template cast<U>();
      out.norms[i].running_mean = norms[i].running_mean.template cast<U>();
      out.norms[i].running_var = norms[i].running_var.template cast<U>();
    }
    return out;
  }

  std::vector<ConvLayer<T>> convs;  // hidden layers then the output layer
  std::vector<BatchNorm<T>> norms;  // one per hidden layer

 private:
  CnnConfig config_;
};

template <class T>
std::vector<std::span<T>> gradient_spans(Gradients<T>& g);

/// Per-pixel apodization weights for one frame (inference-mode batch norm).
template <class T>
Mat<T> forward_weights(const CnnModel<T>& model, const Mat<T>& data, Extent ext);

/// Beamformed output for one frame in inference mode.
template <class T>
Vec<T> forward_image(const CnnModel<T>& model, const Mat<T>& data, Extent ext);

template <class T>
struct LossAndGradients {
  T loss = T(0);
  Gradients<T> grads;
};

/// Training-mode forward over the batch (batch-norm statistics over all items), mean-squared
/// error against the targets averaged over the batch, and full backpropagation.
/// Running batch-norm statistics are updated.
template <class T>
LossAndGradients<T> loss_and_gradients(CnnModel<T>& model, std::span<const Sample<T>> batch);

extern template class CnnModel<float>;
extern template class CnnModel<double>;

}  // namespace ubf::cnn
