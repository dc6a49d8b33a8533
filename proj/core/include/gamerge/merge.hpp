#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "gamerge/partition.hpp"
#include "gamerge/tensor.hpp"

namespace gamerge {

struct Assignment {
  int src = 0;
  int dst = 0;
  double similarity = 0.0;
};

/// Which tokens survive a merge and where every merged-away token goes.
/// All indices are positions in the full multi-frame sequence.
struct MergePlan {
  int total_tokens = 0;
  std::vector<Assignment> assignment;  // sorted by src
  std::vector<int> kept;               // ascending
  std::vector<int> group_size;         // parallel to kept: 1 + |assigned src|
  std::vector<int> slot;               // original index -> row in the merged sequence
  int built_at_layer = 0;

  int merged_size() const { return static_cast<int>(kept.size()); }
  double keep_ratio() const {
    return total_tokens == 0 ? 1.0 : static_cast<double>(kept.size()) / total_tokens;
  }

  /// Plan that keeps every token; merging with it is the identity.
  static MergePlan identity(int total_tokens, int layer = 0);

  /// Derives kept, group_size and slot from total_tokens and assignment.
  /// Throws ShapeError if the assignment is inconsistent.
  void finalize();
};

/// dot / (|a||b|); -1 if either norm is below 1e-12.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Assigns each Src token to the most cosine-similar Dst token anywhere in
/// the sequence; ties go to the lowest dst index. Src tokens whose best
/// similarity is below min_sim stay unmerged.
MergePlan compute_merge_plan(const Matrix& features, const PartitionLabels& labels, int layer,
                             double min_sim = -1.0);

/// Every kept Dst row becomes the mean of itself and its assigned src rows;
/// other kept rows pass through. Output rows follow plan.kept.
Matrix apply_merge(const Matrix& tokens, const MergePlan& plan);

/// Copies each merged row back to every original position it represents.
Matrix apply_unmerge(const Matrix& merged, const MergePlan& plan);

/// Plans shared by groups of `interval` consecutive layers within one
/// forward pass. Not thread-safe; each forward pass owns its cache.
class PlanCache {
 public:
  explicit PlanCache(int interval = 1, double min_sim = -1.0);

  int interval() const { return interval_; }

  /// Fresh plan when layer % interval == 0 (or the group has none yet),
  /// otherwise the plan of group layer / interval.
  const MergePlan& get_or_compute(int layer, const Matrix& features,
                                  const PartitionLabels& labels);

  void clear();

  int computations() const { return computations_; }
  int hits() const { return hits_; }
  const std::map<int, MergePlan>& plans() const { return plans_; }

 private:
  int interval_;
  double min_sim_;
  std::map<int, MergePlan> plans_;  // keyed by layer group
  int computations_ = 0;
  int hits_ = 0;
};

/// JSON dump: total_tokens, built_at_layer, kept, group_size, assignment
/// pairs [src, dst, similarity] and keep_ratio.
std::string plan_to_json(const MergePlan& plan);
MergePlan plan_from_json(const std::string& text);

}  // namespace gamerge
