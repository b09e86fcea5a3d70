#include <CLI11.hpp>

#include <iostream>

#include "ubf/error.hpp"
#include "ubf/io/config.hpp"
#include "ubf/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Plane-wave ultrasound beamforming: simulate, tofc, beamform, train, evaluate, flops, render"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::string method;
  int eval_case = 0;
  std::string out_path;
  std::uint64_t seed = 0;

  app.add_option("--config", config_path, "key = value configuration file");
  app.add_option("--seed", seed, "override the configuration seed");
  app.add_option("--out", out_path, "output path (defaults to the matching paths.* key)");

  for (auto name : ubf::kSubcommands) {
    auto* sub = app.add_subcommand(std::string(name));
    if (name == "beamform" || name == "evaluate") {
      sub->add_option("--method", method, name == "beamform" ? "das | mvdr | cnn" : "comma-separated methods");
      sub->add_option("--case", eval_case, "evaluation case 1, 2 or 3")->check(CLI::Range(1, 3));
    }
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ubf::kExitConfig;
  }

  ubf::io::PipelineConfig cfg;
  try {
    if (!config_path.empty()) cfg = ubf::io::PipelineConfig::load(config_path);
  } catch (const ubf::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ubf::kExitConfig;
  }

  ubf::PipelineOptions opts;
  opts.method = method;
  if (eval_case != 0) opts.eval_case = eval_case;
  if (!out_path.empty()) opts.out = out_path;
  if (app.count("--seed") > 0) opts.seed = seed;

  const auto* sub = app.get_subcommands().front();
  return ubf::run_pipeline(sub->get_name(), std::move(cfg), opts, std::cout, std::cerr);
}
