#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "ubf/beamform.hpp"
#include "ubf/cnn/model.hpp"
#include "ubf/tofc.hpp"

namespace ubf::cnn {

struct AdamState {
  std::vector<std::vector<float>> first_moment;
  std::vector<std::vector<float>> second_moment;
  std::uint64_t step_count = 0;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  /// Zero moments shaped like the model's parameters.
  static AdamState for_model(CnnModel<float>& model, double learning_rate = 1e-4);
};

/// One bias-corrected Adam update of every parameter.
void adam_update(CnnModel<float>& model, Gradients<float>& grads, AdamState& state);

Mat<float> to_network_layout(const TofcCube& cube);
inline Extent extent_of(const TofcCube& cube) { return {cube.data.nx(), cube.data.ny()}; }

/// Per-pixel per-channel weights predicted for a cube (softmax output, inference mode).
ApodizationMap model_forward(const TofcCube& cube, const CnnModel<float>& model);

/// Apodized channel sum of the cube with the predicted weights.
RfImage cnn_beamform(const TofcCube& cube, const CnnModel<float>& model);

/// Root-mean-square of all cube entries; the frame normalization scale.
double frame_scale(const TofcCube& cube);

/// Cube and target divided jointly by the cube's RMS.
Sample<float> make_training_sample(const TofcCube& cube, const RfImage& target);

/// Forward + backward over the batch and one Adam step; returns the pre-update loss.
float train_step(std::span<const Sample<float>> batch, CnnModel<float>& model, AdamState& adam);

struct HoldoutError {
  double mse = 0.0;
  double max_abs = 0.0;
};

/// Inference-mode error of the model against each sample's target, pooled over samples.
HoldoutError evaluate_samples(const CnnModel<float>& model, std::span<const Sample<float>> samples);

struct TrainOptions {
  std::size_t batch_size = 6;
  std::size_t max_steps = 2000;
  std::uint64_t seed = 0;
  /// Stop once the holdout error is below both thresholds; checked every eval_every steps.
  double target_mse = 0.0;
  double target_max_error = 0.0;
  std::size_t eval_every = 50;
};

struct TrainProgress {
  std::size_t step = 0;
  float loss = 0.0f;
  std::optional<HoldoutError> holdout;
};

struct TrainReport {
  std::size_t steps = 0;
  float first_loss = 0.0f;
  float last_loss = 0.0f;
  HoldoutError holdout;
  bool reached_target = false;
};

TrainReport train(CnnModel<float>& model, AdamState& adam, std::span<const Sample<float>> train_set,
                  std::span<const Sample<float>> holdout, const TrainOptions& opts,
                  const std::function<void(const TrainProgress&)>& progress = {});

}  // namespace ubf::cnn
