#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gamerge/attention.hpp"
#include "gamerge/ingest.hpp"

namespace gamerge {

enum class RunMode { Baseline, GaMerge, GaMergeCached };

RunMode parse_run_mode(std::string_view name);
std::string_view to_string(RunMode mode);

enum class ReportFormat { Json, Csv };

ReportFormat parse_report_format(std::string_view name);

struct SceneSource {
  enum class Kind { Synthetic, Directory };
  Kind kind = Kind::Synthetic;
  SceneSpec synthetic;
  std::uint64_t seed = 0;
  std::filesystem::path directory;
};

struct RunConfig {
  SceneSource scene;
  ModelConfig model;
  MergeSettings merge;                 // alpha, beta, salient fraction, min_sim
  std::vector<RunMode> modes = {RunMode::Baseline, RunMode::GaMerge, RunMode::GaMergeCached};
  std::vector<int> cache_intervals = {6};  // swept for ga_merge_cached
  std::vector<int> frame_counts;           // empty: the scene's own frame count
  int repetitions = 1;
  std::filesystem::path output;        // empty: no file written
  ReportFormat format = ReportFormat::Json;
  std::filesystem::path plan_dump;     // optional merge-plan JSON

  void validate() const;
};

/// One row of the report: one (mode, frame count, cache interval) point.
struct RunMetrics {
  std::string mode;
  int frames = 0;
  int cache_interval = 0;  // 0 for baseline
  int lattice_rows = 0;
  int lattice_cols = 0;
  TokenCounts tokens;
  double keep_ratio = 1.0;
  std::uint64_t global_attention_flops = 0;
  std::uint64_t global_quadratic_flops = 0;
  int plan_computations = 0;
  int plan_cache_hits = 0;
  StageTimes times;  // medians over repetitions
  double total_ms = 0;
  std::optional<double> deviation_max_abs;   // vs baseline, when baseline ran
  std::optional<double> deviation_mean_abs;
  std::optional<double> match_similarity_min;
  std::optional<double> match_similarity_mean;
  int repetitions = 1;
};

struct DeviationStats {
  double max_abs = 0;
  double mean_abs = 0;
  std::vector<double> per_frame_max_abs;
  std::vector<double> per_frame_mean_abs;
};

/// Dense-output deviation; throws ShapeError if shapes differ.
DeviationStats compare_outputs(const ForwardOutput& a, const ForwardOutput& b);

/// Frames for `n_frames` according to the scene source.
std::vector<ImageFrame> load_scene(const SceneSource& scene, int n_frames, int patch_size);

std::vector<RunMetrics> run_benchmark(const RunConfig& config);

/// Stable CSV column order, first column is the schema tag.
std::span<const std::string_view> report_columns();

std::string render_json(std::span<const RunMetrics> metrics);
std::string render_csv(std::span<const RunMetrics> metrics);
void emit_report(std::span<const RunMetrics> metrics, ReportFormat format,
                 const std::filesystem::path& path);

/// Flat key=value parsing; see README for the key list.
RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);

std::vector<int> parse_int_list(std::string_view text);
std::vector<RunMode> parse_mode_list(std::string_view text);

}  // namespace gamerge
