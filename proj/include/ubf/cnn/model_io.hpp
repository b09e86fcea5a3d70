#pragma once

#include <filesystem>
#include <optional>

#include "ubf/cnn/model.hpp"
#include "ubf/cnn/train.hpp"
#include "ubf/io/tensor_file.hpp"

namespace ubf::cnn {

inline constexpr int kModelFormatVersion = 1;

/// Parameters, running batch-norm statistics and the configuration (encoded in the name of a
/// zero-length "config:" record). Adam moments are included when given.
io::TensorFile model_to_tensors(const CnnModel<float>& model, const AdamState* adam = nullptr);

struct LoadedModel {
  CnnModel<float> model;
  std::optional<AdamState> adam;
};

/// Throws IoError on version mismatch or when a record's shape disagrees with the configuration.
LoadedModel model_from_tensors(const io::TensorFile& file);

void save_model(const std::filesystem::path& path, const CnnModel<float>& model, const AdamState* adam = nullptr);
LoadedModel load_model(const std::filesystem::path& path);
/// As load_model, also rejecting a model built for a different channel count.
LoadedModel load_model(const std::filesystem::path& path, std::size_t expected_channels);

}  // namespace ubf::cnn
