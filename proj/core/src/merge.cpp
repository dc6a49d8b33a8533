#include "gamerge/merge.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "gamerge/error.hpp"

namespace gamerge {
namespace {

constexpr double kMinNorm = 1e-12;

}  // namespace

MergePlan MergePlan::identity(int total_tokens, int layer) {
  MergePlan plan;
  plan.total_tokens = total_tokens;
  plan.built_at_layer = layer;
  plan.finalize();
  return plan;
}

void MergePlan::finalize() {
  if (total_tokens < 0) throw ShapeError("negative token count");
  std::sort(assignment.begin(), assignment.end(),
            [](const Assignment& a, const Assignment& b) { return a.src < b.src; });

  std::vector<char> merged_away(static_cast<std::size_t>(total_tokens), 0);
  for (const Assignment& a : assignment) {
    if (a.src < 0 || a.src >= total_tokens || a.dst < 0 || a.dst >= total_tokens) {
      throw ShapeError("merge assignment index out of range");
    }
    if (merged_away[static_cast<std::size_t>(a.src)]) {
      throw ShapeError("token " + std::to_string(a.src) + " assigned twice");
    }
    merged_away[static_cast<std::size_t>(a.src)] = 1;
  }

  kept.clear();
  slot.assign(static_cast<std::size_t>(total_tokens), -1);
  for (int i = 0; i < total_tokens; ++i) {
    if (!merged_away[static_cast<std::size_t>(i)]) {
      slot[static_cast<std::size_t>(i)] = static_cast<int>(kept.size());
      kept.push_back(i);
    }
  }
  group_size.assign(kept.size(), 1);
  for (const Assignment& a : assignment) {
    if (merged_away[static_cast<std::size_t>(a.dst)]) {
      throw ShapeError("merge target " + std::to_string(a.dst) + " is itself merged");
    }
    const int target = slot[static_cast<std::size_t>(a.dst)];
    slot[static_cast<std::size_t>(a.src)] = target;
    ++group_size[static_cast<std::size_t>(target)];
  }
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("cosine_similarity: length mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  na = std::sqrt(na);
  nb = std::sqrt(nb);
  if (na < kMinNorm || nb < kMinNorm) return -1.0;
  return std::clamp(dot / (na * nb), -1.0, 1.0);
}

MergePlan compute_merge_plan(const Matrix& features, const PartitionLabels& labels, int layer,
                             double min_sim) {
  const int total = static_cast<int>(labels.labels.size());
  if (features.rows() != total) {
    throw ShapeError("feature rows (" + std::to_string(features.rows()) +
                     ") do not match partition size (" + std::to_string(total) + ")");
  }

  std::vector<int> src, dst;
  for (int i = 0; i < total; ++i) {
    switch (labels.label(i)) {
      case TokenLabel::Src: src.push_back(i); break;
      case TokenLabel::Dst: dst.push_back(i); break;
      default: break;
    }
  }

  MergePlan plan;
  plan.total_tokens = total;
  plan.built_at_layer = layer;
  if (src.empty()) {
    plan.finalize();
    return plan;
  }
  if (dst.empty()) throw ShapeError("partition has src tokens but no dst tokens");

  const Eigen::Index d = features.cols();
  Matrix dst_feats(static_cast<Eigen::Index>(dst.size()), d);
  std::vector<double> dst_norm(dst.size());
  for (std::size_t j = 0; j < dst.size(); ++j) {
    dst_feats.row(static_cast<Eigen::Index>(j)) = features.row(dst[j]);
    dst_norm[j] = features.row(dst[j]).norm();
  }

  plan.assignment.reserve(src.size());
  for (int s : src) {
    const RowVector x = features.row(s);
    const double xn = x.norm();
    int best = 0;
    double best_sim = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < dst.size(); ++j) {
      double sim = -1.0;
      if (xn >= kMinNorm && dst_norm[j] >= kMinNorm) {
        sim = std::clamp(x.dot(dst_feats.row(static_cast<Eigen::Index>(j))) / (xn * dst_norm[j]),
                         -1.0, 1.0);
      }
      if (sim > best_sim) {
        best_sim = sim;
        best = static_cast<int>(j);
      }
    }
    if (best_sim < min_sim) continue;
    plan.assignment.push_back({s, dst[static_cast<std::size_t>(best)], best_sim});
  }
  plan.finalize();
  return plan;
}

Matrix apply_merge(const Matrix& tokens, const MergePlan& plan) {
  if (tokens.rows() != plan.total_tokens) {
    throw ShapeError("apply_merge: token count does not match plan");
  }
  Matrix out(plan.merged_size(), tokens.cols());
  for (std::size_t k = 0; k < plan.kept.size(); ++k) {
    out.row(static_cast<Eigen::Index>(k)) = tokens.row(plan.kept[k]);
  }
  for (const Assignment& a : plan.assignment) {
    out.row(plan.slot[static_cast<std::size_t>(a.src)]) += tokens.row(a.src);
  }
  for (std::size_t k = 0; k < plan.kept.size(); ++k) {
    if (plan.group_size[k] > 1) out.row(static_cast<Eigen::Index>(k)) /= plan.group_size[k];
  }
  return out;
}

Matrix apply_unmerge(const Matrix& merged, const MergePlan& plan) {
  if (merged.rows() != plan.merged_size()) {
    throw ShapeError("apply_unmerge: merged length does not match plan");
  }
  Matrix out(plan.total_tokens, merged.cols());
  for (int i = 0; i < plan.total_tokens; ++i) {
    out.row(i) = merged.row(plan.slot[static_cast<std::size_t>(i)]);
  }
  return out;
}

PlanCache::PlanCache(int interval, double min_sim) : interval_(interval), min_sim_(min_sim) {
  if (interval < 1) throw ConfigError("cache interval must be at least 1");
}

const MergePlan& PlanCache::get_or_compute(int layer, const Matrix& features,
                                           const PartitionLabels& labels) {
  if (layer < 0) throw ConfigError("layer must be non-negative");
  const int group = layer / interval_;
  auto it = plans_.find(group);
  if (layer % interval_ == 0 || it == plans_.end()) {
    ++computations_;
    MergePlan plan = compute_merge_plan(features, labels, layer, min_sim_);
    return plans_.insert_or_assign(group, std::move(plan)).first->second;
  }
  ++hits_;
  return it->second;
}

void PlanCache::clear() {
  plans_.clear();
  computations_ = 0;
  hits_ = 0;
}

std::string plan_to_json(const MergePlan& plan) {
  nlohmann::json j;
  j["total_tokens"] = plan.total_tokens;
  j["built_at_layer"] = plan.built_at_layer;
  j["kept"] = plan.kept;
  j["group_size"] = plan.group_size;
  nlohmann::json pairs = nlohmann::json::array();
  for (const Assignment& a : plan.assignment) pairs.push_back({a.src, a.dst, a.similarity});
  j["assignment"] = std::move(pairs);
  j["keep_ratio"] = plan.keep_ratio();
  return j.dump(1);
}

MergePlan plan_from_json(const std::string& text) {
  MergePlan plan;
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    plan.total_tokens = j.at("total_tokens").get<int>();
    plan.built_at_layer = j.at("built_at_layer").get<int>();
    for (const auto& p : j.at("assignment")) {
      plan.assignment.push_back({p.at(0).get<int>(), p.at(1).get<int>(), p.at(2).get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed merge plan JSON: ") + e.what());
  }
  plan.finalize();
  return plan;
}

}  // namespace gamerge
