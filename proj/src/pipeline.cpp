#include "ubf/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>

#include "ubf/cnn/model_io.hpp"
#include "ubf/error.hpp"
#include "ubf/io/pgm.hpp"
#include "ubf/io/tensor_file.hpp"
#include "ubf/metrics.hpp"
#include "ubf/postproc.hpp"
#include "ubf/rng.hpp"

namespace ubf {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::string angle_key(std::string_view prefix, std::size_t k) { return std::string(prefix) + std::to_string(k); }

std::vector<float> to_floats(std::span<const double> v) { return {v.begin(), v.end()}; }
std::vector<double> to_doubles(std::span<const float> v) { return {v.begin(), v.end()}; }

}  // namespace

Scenario scenario_from(const io::PipelineConfig& cfg) {
  Scenario s;
  s.probe.num_elements = cfg.get_size("probe.elements");
  s.probe.pitch = cfg.get_double("probe.pitch");
  s.probe.center_frequency = cfg.get_double("probe.f0");
  s.probe.validate();

  s.acq.sampling_frequency = cfg.get_double("acq.fs");
  s.acq.sound_speed = cfg.get_double("acq.c");
  s.acq.start_time = cfg.get_double("acq.t0");
  if (auto n = cfg.get_optional_size("acq.samples")) {
    s.acq.num_samples = *n;
    s.fixed_samples = true;
  }
  s.acq.validate();
  if (!s.acq.satisfies_nyquist(s.probe)) warn("sampling frequency is below twice the center frequency");

  s.pulse.center_frequency = s.probe.center_frequency;
  s.pulse.fractional_bandwidth = cfg.get_double("pulse.bandwidth");
  s.pulse.cycles_cutoff = cfg.get_double("pulse.cycles");
  s.pulse.validate();

  const double half_lambda = s.probe.wavelength(s.acq.sound_speed) / 2.0;
  const double dz = cfg.get_optional_double("grid.dz").value_or(half_lambda);
  const double dx = cfg.get_optional_double("grid.dx").value_or(half_lambda);
  const std::size_t nx = cfg.get_size("grid.nx");
  const std::size_t ny = cfg.get_size("grid.ny");
  const double center = cfg.get_double("grid.center_depth");
  s.grid = make_uniform_grid(nx, ny, dz, dx, center - static_cast<double>(nx / 2) * dz);
  if (!(s.grid.axial.front() > 0.0)) throw ConfigError("grid: the shallowest row must lie below the probe");
  s.grid.validate();

  s.fan = make_angle_fan(cfg.get_size("tx.count"), cfg.get_double("tx.span_deg") * kDeg);
  s.fan.validate();
  s.noise_snr_db = cfg.get_optional_double("sim.snr_db");

  s.mvdr = MvdrConfig::defaults_for(s.probe.num_elements);
  if (auto l = cfg.get_optional_size("mvdr.L")) {
    s.mvdr.subaperture_length = *l;
    s.mvdr.loading_factor = 1.0 / (100.0 * static_cast<double>(*l));
  }
  if (auto d = cfg.get_optional_double("mvdr.delta")) s.mvdr.loading_factor = *d;
  s.mvdr.validate(s.probe.num_elements);
  s.scatter_margin = cfg.get_double("phantom.margin");
  return s;
}

cnn::CnnConfig cnn_config_from(const io::PipelineConfig& cfg) {
  cnn::CnnConfig c;
  c.kernel_size = cfg.get_size("cnn.kernel");
  c.hidden_filters = cfg.get_sizes("cnn.filters");
  c.output_channels = cfg.get_size("probe.elements");
  c.validate();
  return c;
}

cnn::TrainOptions train_options_from(const io::PipelineConfig& cfg) {
  cnn::TrainOptions t;
  t.batch_size = cfg.get_size("cnn.batch");
  t.max_steps = cfg.get_size("cnn.steps");
  t.seed = cfg.get_u64("cnn.seed");
  t.target_mse = cfg.get_double("cnn.target_mse");
  t.target_max_error = cfg.get_double("cnn.target_max_error");
  if (t.batch_size < 1) throw ConfigError("cnn.batch must be >= 1");
  return t;
}

ScatterRegion scatter_region(const Scenario& s) {
  ScatterRegion r;
  r.x_min = s.grid.lateral.front() - s.scatter_margin;
  r.x_max = s.grid.lateral.back() + s.scatter_margin;
  r.z_min = std::max(s.grid.axial.front() - s.scatter_margin, 1e-4);
  r.z_max = s.grid.axial.back() + s.scatter_margin;
  return r;
}

Phantom phantom_from(const io::PipelineConfig& cfg, const Scenario& s, std::uint64_t seed) {
  const auto kind = cfg.get("phantom.kind");
  if (kind == "point") return make_point_phantom(cfg.get_doubles("phantom.depths"));
  if (kind == "cyst") {
    CystOptions o;
    o.center = {cfg.get_double("phantom.cyst_x"), cfg.get_double("phantom.cyst_z")};
    o.radius = cfg.get_double("phantom.cyst_r");
    o.density_per_mm2 = cfg.get_double("phantom.density");
    o.region = scatter_region(s);
    return make_cyst_phantom(o, seed);
  }
  throw ConfigError("phantom.kind must be 'point' or 'cyst', got '" + kind + "'");
}

std::size_t record_length(const Scenario& s, const Phantom& phantom) {
  std::size_t n = required_samples(phantom, s.probe, s.acq, s.fan, s.pulse);
  // Also cover every grid pixel so time-of-flight correction never reads past the record.
  Phantom corners;
  for (double z : {s.grid.axial.front(), s.grid.axial.back()}) {
    for (double x : {s.grid.lateral.front(), s.grid.lateral.back()}) corners.scatterers.push_back({x, z, 1.0});
  }
  n = std::max(n, required_samples(corners, s.probe, s.acq, s.fan, s.pulse));
  return n;
}

std::vector<TofcCube> simulate_cubes(const Scenario& s, const Phantom& phantom, std::span<const double> angles,
                                     std::uint64_t noise_seed) {
  AcquisitionParams acq = s.acq;
  if (!s.fixed_samples) acq.num_samples = record_length(s, phantom);
  SimulationOptions opts{s.pulse, s.noise_snr_db, noise_seed};
  std::vector<TofcCube> cubes;
  cubes.reserve(angles.size());
  for (double a : angles) cubes.push_back(tof_correct(simulate_frame(phantom, s.probe, acq, a, opts), s.grid, s.probe));
  return cubes;
}

Method parse_method(std::string_view name) {
  if (name == "das") return Method::Das;
  if (name == "mvdr") return Method::Mvdr;
  if (name == "cnn") return Method::Cnn;
  throw ConfigError("unknown method '" + std::string(name) + "' (expected das, mvdr or cnn)");
}

std::string_view method_name(Method m) {
  switch (m) {
    case Method::Das:
      return "das";
    case Method::Mvdr:
      return "mvdr";
    case Method::Cnn:
      return "cnn";
  }
  return "?";
}

RfImage beamform_compound(std::span<const TofcCube> cubes, Method method, const MvdrConfig& mvdr,
                          const cnn::CnnModel<float>* model) {
  if (method == Method::Cnn && !model) throw ConfigError("cnn beamforming requires a model");
  std::vector<RfImage> images;
  images.reserve(cubes.size());
  for (const auto& c : cubes) {
    switch (method) {
      case Method::Das:
        images.push_back(das_beamform(c));
        break;
      case Method::Mvdr:
        images.push_back(mvdr_beamform(c, mvdr));
        break;
      case Method::Cnn:
        images.push_back(cnn::cnn_beamform(c, *model));
        break;
    }
  }
  return compound(images);
}

std::vector<TofcCube> select_cubes(std::span<const TofcCube> cubes, const PlaneWaveTx& angles) {
  std::vector<TofcCube> out;
  for (double a : angles.angles) {
    const auto it = std::find_if(cubes.begin(), cubes.end(), [&](const TofcCube& c) { return std::abs(c.angle - a) < 1e-9; });
    if (it == cubes.end()) throw ConfigError("no data for transmit angle " + std::to_string(a / kDeg) + " deg");
    out.push_back(*it);
  }
  return out;
}

TrainingData make_training_data(const Scenario& s, std::size_t train_frames, std::size_t holdout_frames,
                                std::uint64_t seed) {
  const ScatterRegion region = scatter_region(s);
  const double z_lo = s.grid.axial.front();
  const double z_hi = s.grid.axial.back();
  const double x_lo = s.grid.lateral.front();
  const double x_hi = s.grid.lateral.back();

  const auto make_frame = [&](std::string_view stream, std::size_t k) {
    auto rng = make_rng(seed, stream, k);
    std::uniform_int_distribution<std::size_t> pick_angle(0, s.fan.angles.size() - 1);
    const double angle = s.fan.angles[pick_angle(rng)];
    Phantom ph;
    if (k % 2 == 0) {
      std::uniform_int_distribution<int> count(1, 3);
      std::uniform_real_distribution<double> ux(x_lo, x_hi);
      std::uniform_real_distribution<double> uz(z_lo, z_hi);
      std::uniform_real_distribution<double> amp(0.5, 1.0);
      const int n = count(rng);
      for (int i = 0; i < n; ++i) {
        const double x = ux(rng);
        const double z = uz(rng);
        ph.scatterers.push_back({x, z, amp(rng)});
      }
    } else {
      CystOptions o;
      std::uniform_real_distribution<double> radius(1e-3, 2.5e-3);
      o.radius = std::min(radius(rng), 0.45 * std::min(z_hi - z_lo, x_hi - x_lo));
      std::uniform_real_distribution<double> ux(x_lo + o.radius, x_hi - o.radius);
      std::uniform_real_distribution<double> uz(z_lo + o.radius, z_hi - o.radius);
      const double cx = ux(rng);
      const double cz = uz(rng);
      o.center = {cx, cz};
      o.region = region;
      ph = make_cyst_phantom(o, rng());
    }
    const double angles[] = {angle};
    auto cubes = simulate_cubes(s, ph, angles, rng());
    const RfImage target = mvdr_beamform(cubes.front(), s.mvdr);
    return cnn::make_training_sample(cubes.front(), target);
  };

  TrainingData data;
  data.train.reserve(train_frames);
  for (std::size_t k = 0; k < train_frames; ++k) data.train.push_back(make_frame("train-frame", k));
  for (std::size_t k = 0; k < holdout_frames; ++k) data.holdout.push_back(make_frame("holdout-frame", k));
  return data;
}

// ---------------------------------------------------------------------------
// CLI stages
// ---------------------------------------------------------------------------

namespace {

struct Context {
  io::PipelineConfig cfg;
  PipelineOptions opts;
  std::ostream& out;
  std::ostream& err;

  std::filesystem::path path(std::string_view key) const { return cfg.get(key); }
  std::filesystem::path output(std::string_view default_key) const { return opts.out ? *opts.out : path(default_key); }
  std::uint64_t seed() const { return cfg.get_u64("seed"); }
  int eval_case() const {
    if (opts.eval_case) return *opts.eval_case;
    return static_cast<int>(cfg.get_size("eval.case"));
  }
};

void add_grid(io::TensorFile& f, const ImagingGrid& g) {
  f.add("grid/axial", {g.nx()}, to_floats(g.axial));
  f.add("grid/lateral", {g.ny()}, to_floats(g.lateral));
}

std::vector<double> read_angles(const io::TensorFile& f) { return to_doubles(f.get("angles").values); }

int cmd_simulate(Context& ctx) {
  const Scenario s = scenario_from(ctx.cfg);
  const Phantom ph = phantom_from(ctx.cfg, s, derive_seed(ctx.seed(), "phantom"));
  AcquisitionParams acq = s.acq;
  if (!s.fixed_samples) acq.num_samples = record_length(s, ph);
  const SimulationOptions opts{s.pulse, s.noise_snr_db, derive_seed(ctx.seed(), "noise")};
  io::TensorFile f;
  f.add("angles", {s.fan.angles.size()}, to_floats(s.fan.angles));
  for (std::size_t k = 0; k < s.fan.angles.size(); ++k) {
    const RfFrame frame = simulate_frame(ph, s.probe, acq, s.fan.angles[k], opts);
    f.add(angle_key("rf/", k), {frame.data.rows(), frame.data.cols()}, to_floats(frame.data.values()));
  }
  const auto dest = ctx.output("paths.rf");
  f.save(dest);
  ctx.out << "simulate: " << ph.scatterers.size() << " scatterers, " << s.fan.angles.size() << " angles, "
          << acq.num_samples << " samples -> " << dest.string() << '\n';
  return kExitOk;
}

std::vector<TofcCube> load_cubes(const std::filesystem::path& path) {
  const auto f = io::TensorFile::load(path);
  ImagingGrid grid{to_doubles(f.get("grid/axial").values), to_doubles(f.get("grid/lateral").values)};
  const auto angles = read_angles(f);
  std::vector<TofcCube> cubes;
  for (std::size_t k = 0; k < angles.size(); ++k) {
    const auto& r = f.get(angle_key("tofc/", k));
    if (r.dims.size() != 3 || r.dims[0] != grid.nx() || r.dims[1] != grid.ny()) {
      throw IoError("tofc file: cube " + std::to_string(k) + " does not match the stored grid");
    }
    TofcCube c{Array3<double>(r.dims[0], r.dims[1], r.dims[2]), grid, angles[k]};
    std::copy(r.values.begin(), r.values.end(), c.data.values().begin());
    cubes.push_back(std::move(c));
  }
  return cubes;
}

int cmd_tofc(Context& ctx) {
  const Scenario s = scenario_from(ctx.cfg);
  const auto in = io::TensorFile::load(ctx.path("paths.rf"));
  const auto angles = read_angles(in);
  io::TensorFile f;
  f.add("angles", {angles.size()}, to_floats(angles));
  add_grid(f, s.grid);
  for (std::size_t k = 0; k < angles.size(); ++k) {
    const auto& r = in.get(angle_key("rf/", k));
    if (r.dims.size() != 2) throw IoError("rf file: record " + r.name + " is not 2-D");
    RfFrame frame{angles[k], Array2<double>(r.dims[0], r.dims[1]), s.acq};
    frame.acq.num_samples = r.dims[0];
    std::copy(r.values.begin(), r.values.end(), frame.data.values().begin());
    const TofcCube cube = tof_correct(frame, s.grid, s.probe);
    f.add(angle_key("tofc/", k), {cube.data.nx(), cube.data.ny(), cube.data.nc()}, to_floats(cube.data.values()));
  }
  const auto dest = ctx.output("paths.tofc");
  f.save(dest);
  ctx.out << "tofc: " << angles.size() << " cubes " << s.grid.nx() << "x" << s.grid.ny() << "x"
          << s.probe.num_elements << " -> " << dest.string() << '\n';
  return kExitOk;
}

std::optional<cnn::CnnModel<float>> model_for(const Context& ctx, Method m, std::size_t channels) {
  if (m != Method::Cnn) return std::nullopt;
  return cnn::load_model(ctx.path("paths.model"), channels).model;
}

std::vector<Method> methods_of(const std::string& list) {
  std::vector<Method> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_method(item));
  if (out.empty()) throw ConfigError("no beamforming method given");
  return out;
}

int cmd_beamform(Context& ctx) {
  const Scenario s = scenario_from(ctx.cfg);
  if (ctx.opts.method.empty()) throw ConfigError("beamform requires --method das|mvdr|cnn");
  const Method m = parse_method(ctx.opts.method);
  const auto cubes = load_cubes(ctx.path("paths.tofc"));
  PlaneWaveTx stored;
  for (const auto& c : cubes) stored.angles.push_back(c.angle);
  const auto chosen = select_cubes(cubes, select_case_angles(ctx.eval_case(), stored));
  const auto model = model_for(ctx, m, s.probe.num_elements);
  const RfImage image = beamform_compound(chosen, m, s.mvdr, model ? &*model : nullptr);
  io::TensorFile f;
  f.add("image", {image.rows(), image.cols()}, to_floats(image.values()));
  add_grid(f, chosen.front().grid);
  const auto dest = ctx.output("paths.image");
  f.save(dest);
  ctx.out << "beamform: " << method_name(m) << " case " << ctx.eval_case() << " (" << chosen.size()
          << " angles) -> " << dest.string() << '\n';
  return kExitOk;
}

int cmd_train(Context& ctx) {
  const Scenario s = scenario_from(ctx.cfg);
  const auto cnn_cfg = cnn_config_from(ctx.cfg);
  auto topts = train_options_from(ctx.cfg);
  const double lr = ctx.cfg.get_double("cnn.lr");
  const auto data = make_training_data(s, ctx.cfg.get_size("cnn.frames"), ctx.cfg.get_size("cnn.holdout"),
                                       derive_seed(ctx.seed(), "training-data"));
  auto model = cnn::CnnModel<float>::initialized(cnn_cfg, topts.seed);
  auto adam = cnn::AdamState::for_model(model, lr);
  const auto report = cnn::train(model, adam, data.train, data.holdout, topts, [&](const cnn::TrainProgress& p) {
    if (p.holdout) {
      ctx.out << "step " << p.step << " loss " << p.loss << " holdout_mse " << p.holdout->mse << " holdout_max "
              << p.holdout->max_abs << '\n';
    }
  });
  const auto dest = ctx.output("paths.model");
  cnn::save_model(dest, model, &adam);
  ctx.out << "train: " << report.steps << " steps, holdout mse " << report.holdout.mse << ", max error "
          << report.holdout.max_abs << (report.reached_target ? " (target reached)" : "") << " -> " << dest.string()
          << '\n';
  return kExitOk;
}

int cmd_evaluate(Context& ctx) {
  const Scenario s = scenario_from(ctx.cfg);
  const auto methods = methods_of(ctx.opts.method.empty() ? "das,mvdr" : ctx.opts.method);
  const auto cubes = load_cubes(ctx.path("paths.tofc"));
  PlaneWaveTx stored;
  for (const auto& c : cubes) stored.angles.push_back(c.angle);
  const int eval_case = ctx.eval_case();
  const auto chosen = select_cubes(cubes, select_case_angles(eval_case, stored));
  const ImagingGrid& grid = chosen.front().grid;
  const RfImage reference = beamform_compound(chosen, Method::Mvdr, s.mvdr);
  const auto kind = ctx.cfg.get("phantom.kind");

  std::vector<MetricsReport> rows;
  for (Method m : methods) {
    const auto model = model_for(ctx, m, s.probe.num_elements);
    const RfImage image = m == Method::Mvdr ? reference : beamform_compound(chosen, m, s.mvdr, model ? &*model : nullptr);
    const auto env = envelope(image);
    MetricsReport r{std::to_string(eval_case), std::string(method_name(m)), std::nan(""), std::nan(""), std::nan(""),
                    mse(image, reference)};
    if (kind == "cyst") {
      const auto [inside, outside] = default_cyst_regions(
          {ctx.cfg.get_double("phantom.cyst_x"), ctx.cfg.get_double("phantom.cyst_z")}, ctx.cfg.get_double("phantom.cyst_r"));
      r.cnr_db = cnr(env, grid, inside, outside);
    } else {
      const auto ps = measure_point_spread(env, grid);
      r.fwhm_axial_mm = ps.fwhm_axial_mm;
      r.fwhm_lateral_mm = ps.fwhm_lateral_mm;
    }
    rows.push_back(std::move(r));
  }
  const std::string csv = metrics_csv(rows);
  const auto dest = ctx.output("paths.metrics");
  io::write_file_atomic(dest, csv);
  ctx.out << csv;
  return kExitOk;
}

int cmd_flops(Context& ctx) {
  const auto cnn_cfg = cnn_config_from(ctx.cfg);
  const Scenario s = scenario_from(ctx.cfg);
  const std::size_t channels = s.probe.num_elements;
  ctx.out << "cnn_estimate_per_pixel " << conv_flops_estimate(channels, cnn_cfg.hidden_filters, channels, cnn_cfg.kernel_size)
          << '\n';
  ctx.out << "mvdr_estimate_per_pixel " << mvdr_flops_estimate(channels) << '\n';
  ctx.out << "cnn_exact_macs_per_pixel " << exact_cnn_flops(cnn_cfg) << '\n';
  ctx.out << "mvdr_subaperture_estimate_per_pixel " << mvdr_flops_estimate(s.mvdr.subaperture_length) << '\n';
  return kExitOk;
}

int cmd_render(Context& ctx) {
  const auto f = io::TensorFile::load(ctx.path("paths.image"));
  const auto& r = f.get("image");
  if (r.dims.size() != 2) throw IoError("image file: 'image' is not 2-D");
  RfImage image(r.dims[0], r.dims[1]);
  std::copy(r.values.begin(), r.values.end(), image.values().begin());
  const auto bmode = to_bmode(image, ctx.cfg.get_double("eval.dynamic_range"));
  const auto dest = ctx.output("paths.pgm");
  io::write_pgm(bmode, dest);
  ctx.out << "render: " << image.cols() << "x" << image.rows() << " -> " << dest.string() << '\n';
  return kExitOk;
}

}  // namespace

int run_pipeline(std::string_view subcommand, io::PipelineConfig cfg, const PipelineOptions& opts, std::ostream& out,
                 std::ostream& err) {
  try {
    if (opts.seed) cfg.set("seed", std::to_string(*opts.seed));
    Context ctx{std::move(cfg), opts, out, err};
    if (subcommand == "simulate") return cmd_simulate(ctx);
    if (subcommand == "tofc") return cmd_tofc(ctx);
    if (subcommand == "beamform") return cmd_beamform(ctx);
    if (subcommand == "train") return cmd_train(ctx);
    if (subcommand == "evaluate") return cmd_evaluate(ctx);
    if (subcommand == "flops") return cmd_flops(ctx);
    if (subcommand == "render") return cmd_render(ctx);
    throw ConfigError("unknown subcommand '" + std::string(subcommand) + "'");
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    switch (e.kind()) {
      case ErrorKind::Config:
      case ErrorKind::Shape:
        return kExitConfig;
      case ErrorKind::Io:
        return kExitIo;
      case ErrorKind::Numeric:
        return kExitNumeric;
    }
    return kExitOther;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitOther;
  }
}

}  // namespace ubf
