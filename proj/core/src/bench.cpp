#include "gamerge/bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "gamerge/error.hpp"
#include "gamerge/image_io.hpp"

namespace gamerge {
namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

StageTimes median_times(const std::vector<StageTimes>& runs) {
  auto pick = [&](double StageTimes::*field) {
    std::vector<double> v;
    v.reserve(runs.size());
    for (const StageTimes& t : runs) v.push_back(t.*field);
    return median(std::move(v));
  };
  StageTimes out;
  out.tokenize_ms = pick(&StageTimes::tokenize_ms);
  out.gamap_ms = pick(&StageTimes::gamap_ms);
  out.partition_ms = pick(&StageTimes::partition_ms);
  out.plan_ms = pick(&StageTimes::plan_ms);
  out.attention_ms = pick(&StageTimes::attention_ms);
  return out;
}

}  // namespace

RunMode parse_run_mode(std::string_view name) {
  if (name == "baseline") return RunMode::Baseline;
  if (name == "ga_merge") return RunMode::GaMerge;
  if (name == "ga_merge_cached") return RunMode::GaMergeCached;
  throw ConfigError("unknown mode '" + std::string(name) + "'");
}

std::string_view to_string(RunMode mode) {
  switch (mode) {
    case RunMode::Baseline: return "baseline";
    case RunMode::GaMerge: return "ga_merge";
    case RunMode::GaMergeCached: return "ga_merge_cached";
  }
  return "unknown";
}

ReportFormat parse_report_format(std::string_view name) {
  if (name == "json") return ReportFormat::Json;
  if (name == "csv") return ReportFormat::Csv;
  throw ConfigError("unknown report format '" + std::string(name) + "'");
}

void RunConfig::validate() const {
  model.validate();
  if (modes.empty()) throw ConfigError("at least one mode is required");
  if (repetitions < 1) throw ConfigError("repetitions must be at least 1");
  for (int r : cache_intervals) {
    if (r < 1) throw ConfigError("cache intervals must be at least 1");
  }
  if (std::find(modes.begin(), modes.end(), RunMode::GaMergeCached) != modes.end() &&
      cache_intervals.empty()) {
    throw ConfigError("ga_merge_cached needs at least one cache interval");
  }
  for (int n : frame_counts) {
    if (n < 1) throw ConfigError("frame counts must be positive");
  }
  if (!(merge.salient_fraction >= 0.0 && merge.salient_fraction < 1.0)) {
    throw ConfigError("salient fraction must lie in [0, 1)");
  }
  if (scene.kind == SceneSource::Kind::Directory && scene.directory.empty()) {
    throw ConfigError("directory scene needs scene.directory");
  }
}

DeviationStats compare_outputs(const ForwardOutput& a, const ForwardOutput& b) {
  if (a.dense.size() != b.dense.size()) throw ShapeError("outputs differ in frame count");
  DeviationStats stats;
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t f = 0; f < a.dense.size(); ++f) {
    const Matrix& x = a.dense[f];
    const Matrix& y = b.dense[f];
    if (x.rows() != y.rows() || x.cols() != y.cols()) {
      throw ShapeError("outputs differ in shape at frame " + std::to_string(f));
    }
    const Eigen::ArrayXXd diff = (x - y).array().abs();
    const double frame_max = diff.size() ? diff.maxCoeff() : 0.0;
    const double frame_sum = diff.sum();
    stats.per_frame_max_abs.push_back(frame_max);
    stats.per_frame_mean_abs.push_back(diff.size() ? frame_sum / diff.size() : 0.0);
    stats.max_abs = std::max(stats.max_abs, frame_max);
    sum += frame_sum;
    count += static_cast<std::size_t>(diff.size());
  }
  stats.mean_abs = count ? sum / static_cast<double>(count) : 0.0;
  return stats;
}

std::vector<ImageFrame> load_scene(const SceneSource& scene, int n_frames, int patch_size) {
  if (scene.kind == SceneSource::Kind::Synthetic) {
    SceneSpec spec = scene.synthetic;
    spec.n_frames = n_frames;
    return synth_scene(spec, scene.seed);
  }
  const auto files = list_image_files(scene.directory);
  if (static_cast<int>(files.size()) < n_frames) {
    throw ConfigError("directory " + scene.directory.string() + " holds " +
                      std::to_string(files.size()) + " images, " + std::to_string(n_frames) +
                      " requested");
  }
  std::vector<ImageFrame> frames;
  for (int i = 0; i < n_frames; ++i) {
    ImageFrame f = load_image(files[static_cast<std::size_t>(i)], patch_size);
    f.frame_index = i;
    frames.push_back(std::move(f));
  }
  return frames;
}

std::vector<RunMetrics> run_benchmark(const RunConfig& config) {
  config.validate();
  const Model model = build_model(config.model);

  std::vector<int> frame_counts = config.frame_counts;
  if (frame_counts.empty()) {
    frame_counts.push_back(config.scene.kind == SceneSource::Kind::Synthetic
                               ? config.scene.synthetic.n_frames
                               : static_cast<int>(list_image_files(config.scene.directory).size()));
  }

  // Baseline runs first so later modes can report their deviation from it.
  std::vector<RunMode> order;
  if (std::find(config.modes.begin(), config.modes.end(), RunMode::Baseline) !=
      config.modes.end()) {
    order.push_back(RunMode::Baseline);
  }
  for (RunMode m : config.modes) {
    if (m != RunMode::Baseline) order.push_back(m);
  }

  std::vector<RunMetrics> report;
  bool plan_dumped = config.plan_dump.empty();
  for (int n_frames : frame_counts) {
    const std::vector<ImageFrame> frames =
        load_scene(config.scene, n_frames, config.model.patch_size);
    std::optional<ForwardOutput> baseline;

    for (RunMode mode : order) {
      std::vector<int> intervals;
      switch (mode) {
        case RunMode::Baseline: intervals = {0}; break;
        case RunMode::GaMerge: intervals = {1}; break;
        case RunMode::GaMergeCached: intervals = config.cache_intervals; break;
      }
      for (int interval : intervals) {
        MergeSettings settings = config.merge;
        settings.mode = mode == RunMode::Baseline ? MergeMode::Off : MergeMode::GaMerge;
        settings.cache_interval = std::max(interval, 1);

        std::optional<ForwardOutput> first;
        std::vector<StageTimes> times;
        std::vector<double> totals;
        for (int rep = 0; rep < config.repetitions; ++rep) {
          ForwardOutput out = forward(model, frames, settings);
          times.push_back(out.stats.times);
          totals.push_back(out.stats.times.total_ms());
          if (!first) first = std::move(out);
        }

        const ForwardStats& s = first->stats;
        RunMetrics m;
        m.mode = std::string(to_string(mode));
        m.frames = n_frames;
        m.cache_interval = interval;
        m.lattice_rows = first->rows;
        m.lattice_cols = first->cols;
        m.tokens = s.counts;
        m.keep_ratio = static_cast<double>(s.counts.kept) / s.counts.total;
        m.global_attention_flops = s.global_attention_flops;
        m.global_quadratic_flops = s.global_quadratic_flops;
        m.plan_computations = s.plan_computations;
        m.plan_cache_hits = s.plan_cache_hits;
        m.times = median_times(times);
        m.total_ms = median(totals);
        m.match_similarity_min = s.match_similarity_min;
        m.match_similarity_mean = s.match_similarity_mean;
        m.repetitions = config.repetitions;

        if (mode == RunMode::Baseline) {
          m.deviation_max_abs = 0.0;
          m.deviation_mean_abs = 0.0;
          baseline = std::move(first);
        } else {
          if (baseline) {
            const DeviationStats dev = compare_outputs(*first, *baseline);
            m.deviation_max_abs = dev.max_abs;
            m.deviation_mean_abs = dev.mean_abs;
          }
          if (!plan_dumped && first->first_plan) {
            std::ofstream out(config.plan_dump);
            if (!out) throw IoError("cannot write " + config.plan_dump.string());
            out << plan_to_json(*first->first_plan) << "\n";
            plan_dumped = true;
          }
        }
        report.push_back(std::move(m));
      }
    }
  }

  if (!config.output.empty()) emit_report(report, config.format, config.output);
  return report;
}

}  // namespace gamerge
