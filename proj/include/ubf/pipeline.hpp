#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ubf/beamform.hpp"
#include "ubf/cnn/model.hpp"
#include "ubf/cnn/train.hpp"
#include "ubf/geometry.hpp"
#include "ubf/io/config.hpp"
#include "ubf/phantom.hpp"
#include "ubf/tofc.hpp"

namespace ubf {

/// Everything about the imaging setup that a configuration fixes.
struct Scenario {
  Probe probe;
  AcquisitionParams acq;  // num_samples may be recomputed per phantom when not fixed
  bool fixed_samples = false;
  ImagingGrid grid;
  PulseSpec pulse;
  PlaneWaveTx fan;
  std::optional<double> noise_snr_db;
  MvdrConfig mvdr;
  double scatter_margin = 1e-3;
};

Scenario scenario_from(const io::PipelineConfig& cfg);
cnn::CnnConfig cnn_config_from(const io::PipelineConfig& cfg);
cnn::TrainOptions train_options_from(const io::PipelineConfig& cfg);

/// Region covered by the grid plus the scatter margin.
ScatterRegion scatter_region(const Scenario& s);

/// Phantom described by the configuration (phantom.* keys).
Phantom phantom_from(const io::PipelineConfig& cfg, const Scenario& s, std::uint64_t seed);

/// Record length that covers every echo of the phantom and every grid pixel at every fan angle.
std::size_t record_length(const Scenario& s, const Phantom& phantom);

/// Simulation followed by time-of-flight correction for each angle.
std::vector<TofcCube> simulate_cubes(const Scenario& s, const Phantom& phantom, std::span<const double> angles,
                                     std::uint64_t noise_seed = 0);

enum class Method { Das, Mvdr, Cnn };
Method parse_method(std::string_view name);
std::string_view method_name(Method m);

/// Per-angle beamforming followed by coherent compounding.
RfImage beamform_compound(std::span<const TofcCube> cubes, Method method, const MvdrConfig& mvdr,
                          const cnn::CnnModel<float>* model = nullptr);

/// Cubes whose angles match the requested set (within 1e-9 rad), in the requested order.
std::vector<TofcCube> select_cubes(std::span<const TofcCube> cubes, const PlaneWaveTx& angles);

struct TrainingData {
  std::vector<cnn::Sample<float>> train;
  std::vector<cnn::Sample<float>> holdout;
};

/// Simulated frames alternating point targets and cysts at random fan angles, each paired with
/// its MVDR image.
TrainingData make_training_data(const Scenario& s, std::size_t train_frames, std::size_t holdout_frames,
                                std::uint64_t seed);

struct PipelineOptions {
  std::string method;
  std::optional<int> eval_case;
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitOther = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitNumeric = 4;

inline constexpr std::string_view kSubcommands[] = {"simulate", "tofc", "beamform", "train", "evaluate", "flops", "render"};

/// Runs one CLI stage. Artifacts are written atomically; failures print a single diagnostic line on
/// `err` and return the exit code of their class.
int run_pipeline(std::string_view subcommand, io::PipelineConfig cfg, const PipelineOptions& opts, std::ostream& out,
                 std::ostream& err);

}  // namespace ubf
