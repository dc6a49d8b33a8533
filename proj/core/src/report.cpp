#include <json.hpp>

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <string>
#include <variant>

#include "gamerge/bench.hpp"
#include "gamerge/error.hpp"

namespace gamerge {
namespace {

constexpr std::string_view kSchema = "gamerge-report-v1";

constexpr std::array<std::string_view, 28> kColumns = {
    "schema",          "mode",
    "frames",          "cache_interval",
    "lattice_rows",    "lattice_cols",
    "tokens_total",    "tokens_salient",
    "tokens_dst",      "tokens_src",
    "tokens_specials", "tokens_kept",
    "keep_ratio",      "global_attention_flops",
    "global_quadratic_flops", "plan_computations",
    "plan_cache_hits", "tokenize_ms",
    "gamap_ms",        "partition_ms",
    "plan_ms",         "attention_ms",
    "total_ms",        "deviation_max_abs",
    "deviation_mean_abs", "match_similarity_min",
    "match_similarity_mean", "repetitions",
};

using Cell = std::variant<std::monostate, std::string, std::int64_t, std::uint64_t, double>;

Cell optional_cell(const std::optional<double>& v) {
  if (!v || !std::isfinite(*v)) return std::monostate{};
  return *v;
}

std::array<Cell, kColumns.size()> cells_of(const RunMetrics& m) {
  return {
      std::string(kSchema),
      m.mode,
      std::int64_t{m.frames},
      std::int64_t{m.cache_interval},
      std::int64_t{m.lattice_rows},
      std::int64_t{m.lattice_cols},
      std::int64_t{m.tokens.total},
      std::int64_t{m.tokens.salient},
      std::int64_t{m.tokens.dst},
      std::int64_t{m.tokens.src},
      std::int64_t{m.tokens.specials},
      std::int64_t{m.tokens.kept},
      m.keep_ratio,
      m.global_attention_flops,
      m.global_quadratic_flops,
      std::int64_t{m.plan_computations},
      std::int64_t{m.plan_cache_hits},
      m.times.tokenize_ms,
      m.times.gamap_ms,
      m.times.partition_ms,
      m.times.plan_ms,
      m.times.attention_ms,
      m.total_ms,
      optional_cell(m.deviation_max_abs),
      optional_cell(m.deviation_mean_abs),
      optional_cell(m.match_similarity_min),
      optional_cell(m.match_similarity_mean),
      std::int64_t{m.repetitions},
  };
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string csv_escape(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

struct CsvCell {
  std::string operator()(std::monostate) const { return {}; }
  std::string operator()(const std::string& s) const { return csv_escape(s); }
  std::string operator()(std::int64_t v) const { return std::to_string(v); }
  std::string operator()(std::uint64_t v) const { return std::to_string(v); }
  std::string operator()(double v) const { return format_double(v); }
};

struct JsonCell {
  nlohmann::ordered_json operator()(std::monostate) const { return nullptr; }
  nlohmann::ordered_json operator()(const std::string& s) const { return s; }
  nlohmann::ordered_json operator()(std::int64_t v) const { return v; }
  nlohmann::ordered_json operator()(std::uint64_t v) const { return v; }
  nlohmann::ordered_json operator()(double v) const { return v; }
};

}  // namespace

std::span<const std::string_view> report_columns() {
  return kColumns;
}

std::string render_json(std::span<const RunMetrics> metrics) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const RunMetrics& m : metrics) {
    nlohmann::ordered_json row = nlohmann::ordered_json::object();
    const auto cells = cells_of(m);
    for (std::size_t i = 0; i < kColumns.size(); ++i) {
      row[std::string(kColumns[i])] = std::visit(JsonCell{}, cells[i]);
    }
    rows.push_back(std::move(row));
  }
  return rows.dump(2) + "\n";
}

std::string render_csv(std::span<const RunMetrics> metrics) {
  std::string out;
  for (std::size_t i = 0; i < kColumns.size(); ++i) {
    if (i) out += ',';
    out += kColumns[i];
  }
  out += "\r\n";
  for (const RunMetrics& m : metrics) {
    const auto cells = cells_of(m);
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += std::visit(CsvCell{}, cells[i]);
    }
    out += "\r\n";
  }
  return out;
}

void emit_report(std::span<const RunMetrics> metrics, ReportFormat format,
                 const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write report " + path.string());
  out << (format == ReportFormat::Json ? render_json(metrics) : render_csv(metrics));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace gamerge
