#include "ubf/cnn/model_io.hpp"

#include <charconv>
#include <map>

#include "ubf/error.hpp"

namespace ubf::cnn {

namespace {

constexpr std::string_view kConfigPrefix = "config:";
constexpr std::string_view kAdamPrefix = "adam:";

std::string fmt_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::map<std::string, std::string> parse_fields(std::string_view s) {
  std::map<std::string, std::string> out;
  while (!s.empty()) {
    const auto semi = s.find(';');
    const auto field = s.substr(0, semi);
    const auto eq = field.find('=');
    if (eq == std::string_view::npos) throw IoError("model file: malformed header field '" + std::string(field) + "'");
    out[std::string(field.substr(0, eq))] = std::string(field.substr(eq + 1));
    if (semi == std::string_view::npos) break;
    s.remove_prefix(semi + 1);
  }
  return out;
}

const std::string& field(const std::map<std::string, std::string>& f, const std::string& key) {
  auto it = f.find(key);
  if (it == f.end()) throw IoError("model file: header lacks '" + key + "'");
  return it->second;
}

double to_double(const std::string& s) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw IoError("model file: bad number '" + s + "'");
  return v;
}

std::uint64_t to_u64(const std::string& s) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw IoError("model file: bad integer '" + s + "'");
  return v;
}

std::string encode_config(const CnnConfig& c) {
  std::string filters;
  for (std::size_t i = 0; i < c.hidden_filters.size(); ++i) {
    if (i) filters += ',';
    filters += std::to_string(c.hidden_filters[i]);
  }
  return std::string(kConfigPrefix) + "version=" + std::to_string(kModelFormatVersion) +
         ";kernel=" + std::to_string(c.kernel_size) + ";filters=" + (filters.empty() ? "none" : filters) +
         ";channels=" + std::to_string(c.output_channels) + ";bn_eps=" + fmt_double(c.batchnorm_epsilon) +
         ";bn_momentum=" + fmt_double(c.batchnorm_momentum) +
         ";normalized_apodization=" + (c.apodize_normalized_input ? "1" : "0");
}

CnnConfig decode_config(std::string_view name) {
  const auto f = parse_fields(name.substr(kConfigPrefix.size()));
  const auto version = to_u64(field(f, "version"));
  if (version != kModelFormatVersion) throw IoError("model file: unsupported format version " + std::to_string(version));
  CnnConfig c;
  c.kernel_size = to_u64(field(f, "kernel"));
  c.hidden_filters.clear();
  const auto& filters = field(f, "filters");
  if (filters != "none") {
    std::string_view s = filters;
    while (true) {
      const auto comma = s.find(',');
      c.hidden_filters.push_back(to_u64(std::string(s.substr(0, comma))));
      if (comma == std::string_view::npos) break;
      s.remove_prefix(comma + 1);
    }
  }
  c.output_channels = to_u64(field(f, "channels"));
  c.batchnorm_epsilon = to_double(field(f, "bn_eps"));
  c.batchnorm_momentum = to_double(field(f, "bn_momentum"));
  c.apodize_normalized_input = field(f, "normalized_apodization") == "1";
  return c;
}

template <class Derived>
std::vector<float> flat(const Eigen::MatrixBase<Derived>& m) {
  // Row-major flattening regardless of the Eigen storage order.
  std::vector<float> out;
  out.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  }
  return out;
}

void expect_dims(const io::TensorRecord& r, const std::vector<std::uint64_t>& dims) {
  if (r.dims != dims) throw IoError("model file: record '" + r.name + "' has dimensions inconsistent with the config");
}

template <class Derived>
void fill(Eigen::MatrixBase<Derived>& m, const io::TensorRecord& r) {
  std::size_t k = 0;
  for (Eigen::Index row = 0; row < m.rows(); ++row) {
    for (Eigen::Index col = 0; col < m.cols(); ++col) m(row, col) = r.values[k++];
  }
}

}  // namespace

io::TensorFile model_to_tensors(const CnnModel<float>& model, const AdamState* adam) {
  io::TensorFile f;
  f.add(encode_config(model.config()), {0}, {});
  for (std::size_t i = 0; i < model.convs.size(); ++i) {
    const auto& c = model.convs[i];
    const std::string base = i + 1 == model.convs.size() ? "output" : "conv" + std::to_string(i);
    f.add(base + ".weight", {c.kernel, c.kernel, c.in_channels, c.out_channels}, flat(c.weight));
    f.add(base + ".bias", {c.out_channels}, flat(c.bias));
  }
  for (std::size_t i = 0; i < model.norms.size(); ++i) {
    const auto& n = model.norms[i];
    const std::string base = "bn" + std::to_string(i);
    const std::uint64_t nf = n.features();
    f.add(base + ".gamma", {nf}, flat(n.gamma));
    f.add(base + ".beta", {nf}, flat(n.beta));
    f.add(base + ".running_mean", {nf}, flat(n.running_mean));
    f.add(base + ".running_var", {nf}, flat(n.running_var));
  }
  if (adam) {
    f.add(std::string(kAdamPrefix) + "step=" + std::to_string(adam->step_count) + ";lr=" +
              fmt_double(adam->learning_rate) + ";beta1=" + fmt_double(adam->beta1) + ";beta2=" +
              fmt_double(adam->beta2) + ";eps=" + fmt_double(adam->epsilon),
          {0}, {});
    const auto names = model.parameter_names();
    if (adam->first_moment.size() != names.size()) throw ShapeError("save_model: optimizer state does not match model");
    for (std::size_t k = 0; k < names.size(); ++k) {
      f.add("adam.m/" + names[k], {adam->first_moment[k].size()}, adam->first_moment[k]);
      f.add("adam.v/" + names[k], {adam->second_moment[k].size()}, adam->second_moment[k]);
    }
  }
  return f;
}

LoadedModel model_from_tensors(const io::TensorFile& file) {
  const io::TensorRecord* header = nullptr;
  const io::TensorRecord* adam_header = nullptr;
  for (const auto& r : file.records()) {
    if (r.name.starts_with(kConfigPrefix)) header = &r;
    if (r.name.starts_with(kAdamPrefix)) adam_header = &r;
  }
  if (!header) throw IoError("model file: missing config header");
  CnnConfig cfg = decode_config(header->name);
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw IoError(std::string("model file: ") + e.what());
  }

  LoadedModel out{CnnModel<float>(cfg), std::nullopt};
  auto& m = out.model;
  for (std::size_t i = 0; i < m.convs.size(); ++i) {
    auto& c = m.convs[i];
    const std::string base = i + 1 == m.convs.size() ? "output" : "conv" + std::to_string(i);
    const auto& w = file.get(base + ".weight");
    expect_dims(w, {c.kernel, c.kernel, c.in_channels, c.out_channels});
    fill(c.weight, w);
    const auto& b = file.get(base + ".bias");
    expect_dims(b, {c.out_channels});
    fill(c.bias, b);
  }
  for (std::size_t i = 0; i < m.norms.size(); ++i) {
    auto& n = m.norms[i];
    const std::string base = "bn" + std::to_string(i);
    const std::vector<std::uint64_t> dims{n.features()};
    for (auto [suffix, dst] : {std::pair{".gamma", &n.gamma}, std::pair{".beta", &n.beta},
                               std::pair{".running_mean", &n.running_mean}, std::pair{".running_var", &n.running_var}}) {
      const auto& r = file.get(base + suffix);
      expect_dims(r, dims);
      fill(*dst, r);
    }
  }
  if (adam_header) {
    const auto f = parse_fields(std::string_view(adam_header->name).substr(kAdamPrefix.size()));
    AdamState s;
    s.step_count = to_u64(field(f, "step"));
    s.learning_rate = to_double(field(f, "lr"));
    s.beta1 = to_double(field(f, "beta1"));
    s.beta2 = to_double(field(f, "beta2"));
    s.epsilon = to_double(field(f, "eps"));
    const auto names = m.parameter_names();
    const auto params = m.parameters();
    for (std::size_t k = 0; k < names.size(); ++k) {
      const auto& mr = file.get("adam.m/" + names[k]);
      const auto& vr = file.get("adam.v/" + names[k]);
      expect_dims(mr, {params[k].size()});
      expect_dims(vr, {params[k].size()});
      s.first_moment.push_back(mr.values);
      s.second_moment.push_back(vr.values);
    }
    out.adam = std::move(s);
  }
  return out;
}

void save_model(const std::filesystem::path& path, const CnnModel<float>& model, const AdamState* adam) {
  model_to_tensors(model, adam).save(path);
}

LoadedModel load_model(const std::filesystem::path& path) { return model_from_tensors(io::TensorFile::load(path)); }

LoadedModel load_model(const std::filesystem::path& path, std::size_t expected_channels) {
  auto loaded = load_model(path);
  if (loaded.model.config().output_channels != expected_channels) {
    throw IoError("model file: built for " + std::to_string(loaded.model.config().output_channels) +
                  " channels, expected " + std::to_string(expected_channels));
  }
  return loaded;
}

}  // namespace ubf::cnn
