// gamerge: run merge benchmarks, frame-count sweeps and GA-map dumps.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "gamerge/bench.hpp"
#include "gamerge/error.hpp"
#include "gamerge/gamap.hpp"
#include "gamerge/image_io.hpp"
#include "gamerge/partition.hpp"

namespace fs = std::filesystem;
using namespace gamerge;

namespace {

void print_summary(const std::vector<RunMetrics>& rows) {
  std::printf("%-16s %6s %4s %8s %8s %7s %16s %6s %10s %10s %12s\n", "mode", "frames", "R",
              "kept", "total", "keep", "global_flops", "plans", "plan_ms", "total_ms",
              "dev_max");
  for (const RunMetrics& m : rows) {
    std::printf("%-16s %6d %4d %8d %8d %7.4f %16llu %6d %10.2f %10.2f %12.4g\n", m.mode.c_str(),
                m.frames, m.cache_interval, m.tokens.kept, m.tokens.total, m.keep_ratio,
                static_cast<unsigned long long>(m.global_attention_flops), m.plan_computations,
                m.times.plan_ms, m.total_ms, m.deviation_max_abs.value_or(0.0));
  }
}

// A sweep up to 64 frames must stay within desk budgets, so the default
// scene is small and shifted by one pixel per frame.
RunConfig default_sweep_config() {
  RunConfig cfg;
  cfg.scene.synthetic.height = 112;
  cfg.scene.synthetic.width = 112;
  cfg.scene.synthetic.overlap_shift_px = 1;
  cfg.scene.synthetic.texture = Texture::Mixed;
  cfg.scene.seed = 7;
  return cfg;
}

int dump_maps(const fs::path& dir, const fs::path& out_dir, const GaMapParams& params,
              double fraction, int patch_size, int dim, std::uint64_t seed) {
  const auto files = list_image_files(dir);
  if (files.empty()) throw IoError("no images in " + dir.string());
  fs::create_directories(out_dir);

  std::vector<ImageFrame> frames;
  for (const auto& file : files) {
    ImageFrame f = expand_to_rgb(load_image(file, patch_size));
    f.frame_index = static_cast<int>(frames.size());
    if (!frames.empty() && (f.height != frames[0].height || f.width != frames[0].width)) {
      throw DimensionError(file.string() + " differs in resolution from the first image");
    }
    frames.push_back(std::move(f));
  }

  const TokenizerParams tokenizer = TokenizerParams::make(patch_size, dim, 3, seed);
  std::vector<GaMap> maps;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const ImageFrame& frame = frames[i];
    const TokenGrid grid = tokenize(frame, tokenizer);
    const SobelGradients g = sobel_gradients(to_grayscale(frame));
    const GradMap grad = downsample_to_tokens(gradient_magnitude(g.gx, g.gy), patch_size);
    const VarMap var = token_variance(grid, params.projection);
    GaMap ga = fuse_ga_map(grad, var, params.alpha, params.beta);

    char stem[32];
    std::snprintf(stem, sizeof stem, "frame%03zu", i);
    write_unit_map_pgm(out_dir / (std::string(stem) + "_grad.pgm"), minmax_normalize(grad.values));
    write_unit_map_pgm(out_dir / (std::string(stem) + "_var.pgm"), minmax_normalize(var.values));
    write_unit_map_pgm(out_dir / (std::string(stem) + "_ga.pgm"), ga.values);
    maps.push_back(std::move(ga));
  }

  const PartitionLabels labels = build_partition(maps, fraction);
  for (int f = 0; f < labels.frame_count(); ++f) {
    char name[32];
    std::snprintf(name, sizeof name, "frame%03d_labels.pgm", f);
    write_unit_map_pgm(out_dir / name, label_raster(labels, f));
    const FrameCounts& c = labels.per_frame[static_cast<std::size_t>(f)];
    std::printf("frame %3d  salient %5d  dst %5d  src %5d\n", f, c.salient, c.dst, c.src);
  }
  std::printf("wrote %zu frames of maps to %s\n", frames.size(), out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Geometry-aware cached token merging benchmarks"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run the benchmark described by a key=value config file");
  std::string run_config_path;
  std::string run_output;
  std::string run_format;
  run->add_option("config", run_config_path, "Config file")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--output", run_output, "Report path (overrides run.output)");
  run->add_option("-f,--format", run_format, "Report format: json or csv")
      ->check(CLI::IsMember({"json", "csv"}));

  auto* sweep = app.add_subcommand("sweep", "Sweep frame counts across merge modes");
  std::string sweep_frames = "4,8,16,32,64";
  std::string sweep_modes = "baseline,ga_merge,ga_merge_cached";
  std::string sweep_intervals;
  std::string sweep_config;
  std::string sweep_output;
  std::string sweep_format = "json";
  int sweep_reps = 1;
  sweep->add_option("--frames", sweep_frames, "Comma-separated frame counts")->capture_default_str();
  sweep->add_option("--modes", sweep_modes, "Comma-separated modes")->capture_default_str();
  sweep->add_option("--intervals", sweep_intervals, "Cache intervals for ga_merge_cached");
  sweep->add_option("--config", sweep_config, "Base config file")->check(CLI::ExistingFile);
  sweep->add_option("--reps", sweep_reps, "Repetitions per point")->capture_default_str();
  sweep->add_option("-o,--output", sweep_output, "Report path");
  sweep->add_option("-f,--format", sweep_format, "Report format: json or csv")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();

  auto* dump = app.add_subcommand("dump-maps", "Write grad/var/GA/label maps as PGM images");
  std::string dump_dir;
  std::string dump_out = "maps";
  GaMapParams dump_params;
  double dump_fraction = 0.10;
  int dump_patch = 14;
  int dump_dim = 64;
  std::uint64_t dump_seed = 0;
  dump->add_option("images", dump_dir, "Directory of PNG/PGM/PPM frames")
      ->required()
      ->check(CLI::ExistingDirectory);
  dump->add_option("--out", dump_out, "Output directory")->capture_default_str();
  dump->add_option("--alpha", dump_params.alpha, "Gradient weight")->capture_default_str();
  dump->add_option("--beta", dump_params.beta, "Variance weight")->capture_default_str();
  dump->add_option("--fraction", dump_fraction, "Salient fraction")->capture_default_str();
  dump->add_option("--patch-size", dump_patch, "Patch size in pixels")->capture_default_str();
  dump->add_option("--dim", dump_dim, "Token width")->capture_default_str();
  dump->add_option("--seed", dump_seed, "Tokenizer seed")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      RunConfig cfg = load_run_config(run_config_path);
      if (!run_output.empty()) cfg.output = run_output;
      if (!run_format.empty()) cfg.format = parse_report_format(run_format);
      print_summary(run_benchmark(cfg));
      if (!cfg.output.empty()) std::printf("report written to %s\n", cfg.output.c_str());
    } else if (*sweep) {
      RunConfig cfg = sweep_config.empty() ? default_sweep_config() : load_run_config(sweep_config);
      cfg.frame_counts = parse_int_list(sweep_frames);
      cfg.modes = parse_mode_list(sweep_modes);
      if (!sweep_intervals.empty()) cfg.cache_intervals = parse_int_list(sweep_intervals);
      cfg.repetitions = sweep_reps;
      cfg.format = parse_report_format(sweep_format);
      if (!sweep_output.empty()) cfg.output = sweep_output;
      print_summary(run_benchmark(cfg));
      if (!cfg.output.empty()) std::printf("report written to %s\n", cfg.output.c_str());
    } else if (*dump) {
      return dump_maps(dump_dir, dump_out, dump_params, dump_fraction, dump_patch, dump_dim,
                       dump_seed);
    }
  } catch (const Error& e) {
    std::cerr << "gamerge: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
