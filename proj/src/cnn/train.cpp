#include "ubf/cnn/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "ubf/error.hpp"
#include "ubf/rng.hpp"

namespace ubf::cnn {

AdamState AdamState::for_model(CnnModel<float>& model, double learning_rate) {
  AdamState s;
  s.learning_rate = learning_rate;
  for (auto p : model.parameters()) {
    s.first_moment.emplace_back(p.size(), 0.0f);
    s.second_moment.emplace_back(p.size(), 0.0f);
  }
  return s;
}

void adam_update(CnnModel<float>& model, Gradients<float>& grads, AdamState& state) {
  auto params = model.parameters();
  auto gs = gradient_spans(grads);
  if (state.first_moment.size() != params.size()) throw ShapeError("adam_update: optimizer state does not match model");
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  const auto b1 = static_cast<float>(state.beta1);
  const auto b2 = static_cast<float>(state.beta2);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    if (m.size() != params[k].size()) throw ShapeError("adam_update: optimizer state does not match model");
    for (std::size_t i = 0; i < m.size(); ++i) {
      const float g = gs[k][i];
      m[i] = b1 * m[i] + (1.0f - b1) * g;
      v[i] = b2 * v[i] + (1.0f - b2) * g * g;
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      params[k][i] -= static_cast<float>(state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon));
    }
  }
}

Mat<float> to_network_layout(const TofcCube& cube) {
  Mat<float> m(static_cast<Eigen::Index>(cube.data.pixels()), static_cast<Eigen::Index>(cube.data.nc()));
  const auto v = cube.data.values();
  std::transform(v.begin(), v.end(), m.data(), [](double x) { return static_cast<float>(x); });
  return m;
}

ApodizationMap model_forward(const TofcCube& cube, const CnnModel<float>& model) {
  const Mat<float> w = forward_weights(model, to_network_layout(cube), extent_of(cube));
  ApodizationMap out(cube.data.nx(), cube.data.ny(), cube.data.nc());
  std::transform(w.data(), w.data() + w.size(), out.values().begin(), [](float x) { return static_cast<double>(x); });
  return out;
}

RfImage cnn_beamform(const TofcCube& cube, const CnnModel<float>& model) {
  const ApodizationMap w = model_forward(cube, model);
  if (!model.config().apodize_normalized_input) return apodized_sum(cube, w);
  TofcCube normalized = cube;
  for (std::size_t p = 0; p < normalized.data.pixels(); ++p) {
    auto px = normalized.data.pixel(p);
    double n = 0.0;
    for (double v : px) n += v * v;
    n = std::max(std::sqrt(n), kNormEpsilon);
    for (double& v : px) v /= n;
  }
  return apodized_sum(normalized, w);
}

double frame_scale(const TofcCube& cube) {
  const auto v = cube.data.values();
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return v.empty() ? 0.0 : std::sqrt(acc / static_cast<double>(v.size()));
}

Sample<float> make_training_sample(const TofcCube& cube, const RfImage& target) {
  if (target.rows() != cube.data.nx() || target.cols() != cube.data.ny()) {
    throw ShapeError("make_training_sample: target shape does not match cube");
  }
  const double scale = frame_scale(cube);
  if (!(scale > 0.0)) throw NumericError("make_training_sample: cube is all zero");
  Sample<float> s;
  s.extent = extent_of(cube);
  s.data = to_network_layout(cube);
  s.data *= static_cast<float>(1.0 / scale);
  s.target.resize(static_cast<Eigen::Index>(target.size()));
  const auto t = target.values();
  for (std::size_t p = 0; p < t.size(); ++p) s.target(static_cast<Eigen::Index>(p)) = static_cast<float>(t[p] / scale);
  return s;
}

float train_step(std::span<const Sample<float>> batch, CnnModel<float>& model, AdamState& adam) {
  auto lg = loss_and_gradients(model, batch);
  if (!std::isfinite(lg.loss)) {
    throw NumericError("train_step: loss is not finite at optimizer step " + std::to_string(adam.step_count + 1));
  }
  adam_update(model, lg.grads, adam);
  return lg.loss;
}

HoldoutError evaluate_samples(const CnnModel<float>& model, std::span<const Sample<float>> samples) {
  HoldoutError err;
  double count = 0.0;
  for (const auto& s : samples) {
    const Vec<float> y = forward_image(model, s.data, s.extent);
    for (Eigen::Index p = 0; p < y.size(); ++p) {
      const double d = static_cast<double>(y(p)) - static_cast<double>(s.target(p));
      err.mse += d * d;
      err.max_abs = std::max(err.max_abs, std::abs(d));
    }
    count += static_cast<double>(y.size());
  }
  if (count > 0) err.mse /= count;
  return err;
}

TrainReport train(CnnModel<float>& model, AdamState& adam, std::span<const Sample<float>> train_set,
                  std::span<const Sample<float>> holdout, const TrainOptions& opts,
                  const std::function<void(const TrainProgress&)>& progress) {
  if (train_set.empty()) throw ConfigError("train: empty training set");
  if (opts.batch_size < 1) throw ConfigError("train: batch size must be >= 1");
  const std::size_t batch = std::min(opts.batch_size, train_set.size());

  auto rng = make_rng(opts.seed, "train-batches");
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();

  TrainReport report;
  std::vector<Sample<float>> picked;
  for (std::size_t step = 1; step <= opts.max_steps; ++step) {
    // Batches are drawn without replacement; reshuffle after each pass over the set.
    picked.clear();
    while (picked.size() < batch) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      picked.push_back(train_set[order[cursor++]]);
    }
    const float loss = train_step(picked, model, adam);
    if (step == 1) report.first_loss = loss;
    report.last_loss = loss;
    report.steps = step;

    TrainProgress p{step, loss, std::nullopt};
    const bool eval_now = !holdout.empty() && opts.eval_every > 0 && (step % opts.eval_every == 0 || step == opts.max_steps);
    if (eval_now) {
      report.holdout = evaluate_samples(model, holdout);
      p.holdout = report.holdout;
    }
    if (progress) progress(p);
    if (eval_now && report.holdout.mse <= opts.target_mse && report.holdout.max_abs <= opts.target_max_error) {
      report.reached_target = true;
      break;
    }
  }
  return report;
}

}  // namespace ubf::cnn
