#include "ubf/io/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "ubf/error.hpp"
#include "ubf/io/tensor_file.hpp"

namespace ubf::io {

const std::vector<ConfigKey>& config_schema() {
  static const std::vector<ConfigKey> schema = {
      {"seed", "0", "global seed for phantoms, noise and training data"},
      {"probe.elements", "128", "number of array elements"},
      {"probe.pitch", "0.0003", "element pitch (m)"},
      {"probe.f0", "7.6e6", "center frequency (Hz)"},
      {"pulse.bandwidth", "0.67", "fractional -6 dB bandwidth"},
      {"pulse.cycles", "3", "pulse truncation (cycles each side)"},
      {"acq.fs", "31.25e6", "sampling frequency (Hz)"},
      {"acq.c", "1540", "sound speed (m/s)"},
      {"acq.samples", "auto", "record length in samples; auto covers the deepest echo"},
      {"acq.t0", "0", "time of the first sample (s)"},
      {"sim.snr_db", "auto", "additive white noise SNR (dB); auto = noiseless"},
      {"grid.nx", "96", "axial pixels"},
      {"grid.ny", "64", "lateral pixels"},
      {"grid.dz", "auto", "axial spacing (m); auto = lambda/2"},
      {"grid.dx", "auto", "lateral spacing (m); auto = lambda/2"},
      {"grid.center_depth", "0.02", "depth of the grid centre (m)"},
      {"tx.count", "75", "number of plane-wave angles"},
      {"tx.span_deg", "16", "angles cover [-span, +span] degrees"},
      {"phantom.kind", "cyst", "point | cyst"},
      {"phantom.depths", "0.02", "point phantom depths (m), comma separated"},
      {"phantom.cyst_x", "0", "cyst centre, lateral (m)"},
      {"phantom.cyst_z", "0.02", "cyst centre, depth (m)"},
      {"phantom.cyst_r", "0.002", "cyst radius (m)"},
      {"phantom.density", "20", "background scatterers per mm^2"},
      {"phantom.margin", "0.001", "scatterers extend this far beyond the grid (m)"},
      {"mvdr.L", "auto", "subaperture length; auto = channels/2"},
      {"mvdr.delta", "auto", "diagonal loading factor; auto = 1/(100 L)"},
      {"cnn.kernel", "3", "convolution kernel size (odd)"},
      {"cnn.filters", "32,64,64,128", "hidden filter counts"},
      {"cnn.lr", "1e-4", "Adam learning rate"},
      {"cnn.batch", "6", "frames per optimizer step"},
      {"cnn.steps", "2000", "maximum optimizer steps"},
      {"cnn.seed", "1", "weight initialization and batch order seed"},
      {"cnn.frames", "60", "simulated training frames"},
      {"cnn.holdout", "6", "simulated held-out frames"},
      {"cnn.target_mse", "1e-4", "stop when held-out MSE is at most this"},
      {"cnn.target_max_error", "1e-2", "and the held-out max pixel error at most this"},
      {"eval.case", "1", "1 = 0 deg, 2 = three central angles, 3 = all angles"},
      {"eval.dynamic_range", "60", "B-mode dynamic range (dB)"},
      {"paths.rf", "rf.ubf", "channel data tensor file"},
      {"paths.tofc", "tofc.ubf", "time-of-flight corrected cubes"},
      {"paths.image", "image.ubf", "beamformed image"},
      {"paths.model", "model.ubf", "network parameters"},
      {"paths.metrics", "metrics.csv", "metrics table"},
      {"paths.pgm", "bmode.pgm", "rendered B-mode image"},
  };
  return schema;
}

namespace {

const ConfigKey* lookup(std::string_view key) {
  for (const auto& k : config_schema()) {
    if (k.name == key) return &k;
  }
  return nullptr;
}

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  while (true) {
    const auto pos = s.find(',');
    out.push_back(trim(s.substr(0, pos)));
    if (pos == std::string_view::npos) break;
    s.remove_prefix(pos + 1);
  }
  return out;
}

double parse_double(std::string_view key, std::string_view text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end || !std::isfinite(v)) {
    throw ConfigError("config: '" + std::string(key) + "' expects a number, got '" + std::string(text) + "'");
  }
  return v;
}

std::uint64_t parse_u64(std::string_view key, std::string_view text) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end) {
    throw ConfigError("config: '" + std::string(key) + "' expects a non-negative integer, got '" + std::string(text) +
                      "'");
  }
  return v;
}

}  // namespace

PipelineConfig PipelineConfig::parse(std::string_view text) {
  PipelineConfig cfg;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (cfg.has_explicit(key)) {
      throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" + std::string(key) + "'");
    }
    cfg.set(key, std::string(value));
  }
  return cfg;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  try {
    return parse(read_file(path));
  } catch (const IoError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

std::string PipelineConfig::serialize() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

void PipelineConfig::set(std::string_view key, std::string value) {
  if (!lookup(key)) throw ConfigError("config: unknown key '" + std::string(key) + "'");
  if (value.empty()) throw ConfigError("config: empty value for '" + std::string(key) + "'");
  values_[std::string(key)] = std::move(value);
}

bool PipelineConfig::has_explicit(std::string_view key) const { return values_.contains(std::string(key)); }

std::string PipelineConfig::get(std::string_view key) const {
  const auto* k = lookup(key);
  if (!k) throw ConfigError("config: unknown key '" + std::string(key) + "'");
  if (auto it = values_.find(std::string(key)); it != values_.end()) return it->second;
  return std::string(k->default_value);
}

double PipelineConfig::get_double(std::string_view key) const { return parse_double(key, get(key)); }

std::size_t PipelineConfig::get_size(std::string_view key) const {
  return static_cast<std::size_t>(parse_u64(key, get(key)));
}

std::uint64_t PipelineConfig::get_u64(std::string_view key) const { return parse_u64(key, get(key)); }

bool PipelineConfig::get_bool(std::string_view key) const {
  const auto v = get(key);
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw ConfigError("config: '" + std::string(key) + "' expects true/false, got '" + v + "'");
}

std::vector<double> PipelineConfig::get_doubles(std::string_view key) const {
  const auto text = get(key);
  std::vector<double> out;
  for (auto item : split_list(text)) out.push_back(parse_double(key, item));
  return out;
}

std::vector<std::size_t> PipelineConfig::get_sizes(std::string_view key) const {
  const auto text = get(key);
  std::vector<std::size_t> out;
  if (trim(text) == "none") return out;
  for (auto item : split_list(text)) out.push_back(static_cast<std::size_t>(parse_u64(key, item)));
  return out;
}

std::optional<double> PipelineConfig::get_optional_double(std::string_view key) const {
  if (get(key) == "auto") return std::nullopt;
  return get_double(key);
}

std::optional<std::size_t> PipelineConfig::get_optional_size(std::string_view key) const {
  if (get(key) == "auto") return std::nullopt;
  return get_size(key);
}

}  // namespace ubf::io
