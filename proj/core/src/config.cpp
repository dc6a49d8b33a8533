#include <charconv>
#include <fstream>
#include <sstream>
#include <string>

#include "gamerge/bench.hpp"
#include "gamerge/error.hpp"

namespace gamerge {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view text, std::string_view key) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("invalid value '" + std::string(text) + "' for " + std::string(key));
  }
  return value;
}

std::vector<std::string_view> split_commas(std::string_view text) {
  std::vector<std::string_view> parts;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const std::string_view part = trim(text.substr(0, comma));
    if (!part.empty()) parts.push_back(part);
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return parts;
}

void apply_key(RunConfig& cfg, std::string_view key, std::string_view value) {
  auto& scene = cfg.scene;
  auto& model = cfg.model;
  auto& merge = cfg.merge;
  if (key == "scene.source") {
    if (value == "synthetic") {
      scene.kind = SceneSource::Kind::Synthetic;
    } else if (value == "directory") {
      scene.kind = SceneSource::Kind::Directory;
    } else {
      throw ConfigError("scene.source must be synthetic or directory");
    }
  } else if (key == "scene.directory") {
    scene.directory = std::string(value);
    scene.kind = SceneSource::Kind::Directory;
  } else if (key == "scene.frames") {
    scene.synthetic.n_frames = parse_number<int>(value, key);
  } else if (key == "scene.height") {
    scene.synthetic.height = parse_number<int>(value, key);
  } else if (key == "scene.width") {
    scene.synthetic.width = parse_number<int>(value, key);
  } else if (key == "scene.shift") {
    scene.synthetic.overlap_shift_px = parse_number<int>(value, key);
  } else if (key == "scene.texture") {
    scene.synthetic.texture = parse_texture(value);
  } else if (key == "scene.seed") {
    scene.seed = parse_number<std::uint64_t>(value, key);
  } else if (key == "model.layers") {
    model.layers = parse_number<int>(value, key);
  } else if (key == "model.heads") {
    model.heads = parse_number<int>(value, key);
  } else if (key == "model.dim") {
    model.dim = parse_number<int>(value, key);
  } else if (key == "model.mlp_ratio") {
    model.mlp_ratio = parse_number<double>(value, key);
  } else if (key == "model.seed") {
    model.seed = parse_number<std::uint64_t>(value, key);
  } else if (key == "model.patch_size") {
    model.patch_size = parse_number<int>(value, key);
  } else if (key == "model.specials") {
    model.specials = parse_number<int>(value, key);
  } else if (key == "merge.alpha") {
    merge.alpha = parse_number<double>(value, key);
  } else if (key == "merge.beta") {
    merge.beta = parse_number<double>(value, key);
  } else if (key == "merge.salient_fraction") {
    merge.salient_fraction = parse_number<double>(value, key);
  } else if (key == "merge.min_sim") {
    merge.min_sim = parse_number<double>(value, key);
  } else if (key == "merge.variance_projection") {
    if (value == "mean") {
      merge.variance_projection = VarianceProjection::Mean;
    } else if (value == "norm") {
      merge.variance_projection = VarianceProjection::Norm;
    } else {
      throw ConfigError("merge.variance_projection must be mean or norm");
    }
  } else if (key == "run.modes") {
    cfg.modes = parse_mode_list(value);
  } else if (key == "run.cache_intervals") {
    cfg.cache_intervals = parse_int_list(value);
  } else if (key == "run.frames") {
    cfg.frame_counts = parse_int_list(value);
  } else if (key == "run.repetitions") {
    cfg.repetitions = parse_number<int>(value, key);
  } else if (key == "run.output") {
    cfg.output = std::string(value);
  } else if (key == "run.format") {
    cfg.format = parse_report_format(value);
  } else if (key == "run.plan_dump") {
    cfg.plan_dump = std::string(value);
  } else {
    throw ConfigError("unknown config key '" + std::string(key) + "'");
  }
}

}  // namespace

std::vector<int> parse_int_list(std::string_view text) {
  std::vector<int> values;
  for (std::string_view part : split_commas(text)) values.push_back(parse_number<int>(part, "list"));
  return values;
}

std::vector<RunMode> parse_mode_list(std::string_view text) {
  std::vector<RunMode> modes;
  for (std::string_view part : split_commas(text)) modes.push_back(parse_run_mode(part));
  return modes;
}

RunConfig parse_run_config(std::string_view text) {
  RunConfig cfg;
  int line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) {
      view = view.substr(0, hash);
    }
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key=value");
    }
    try {
      apply_key(cfg, trim(view.substr(0, eq)), trim(view.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str());
}

}  // namespace gamerge
