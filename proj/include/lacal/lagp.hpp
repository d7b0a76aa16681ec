#ifndef LACAL_LAGP_HPP
#define LACAL_LAGP_HPP

#include "lacal/common.hpp"
#include "lacal/design.hpp"
#include "lacal/gp.hpp"
#include "lacal/kdtree.hpp"

#include <string>
#include <vector>

namespace lacal {

/// Simulator runs: design inputs x, calibration inputs u, deterministic output.
struct SimulationDataset {
  DesignMatrix x;
  DesignMatrix u;
  Vector y;
  std::vector<std::string> x_names;
  std::vector<std::string> u_names;

  Index size() const { return y.size(); }
  DesignMatrix joint() const;
};

/// Knobs of the local approximate GP. Defaults follow the usual laGP setup:
/// 6 nearest neighbors seed a greedy search to 50 points among the 1000
/// nearest archive rows.
struct LocalSettings {
  Index n0 = 6;
  Index n_m = 50;
  Index candidate_limit = 1000;
  /// Fixed nugget of the local emulators: the GP jitter floor, so local fits
  /// nearly interpolate the deterministic simulator.
  double nugget = GpModel::kJitter;
  double theta_lower = 1e-3;
  /// Upper lengthscale bound; 0 selects the archive's largest squared
  /// pairwise distance.
  double theta_upper = 0.0;
  /// Multi-starts of the local MLE; the first start is always the pilot.
  int mle_starts = 1;
  int threads = 1;
};

/// Simulator runs in scaled space with a spatial index. Exactly repeated joint
/// input rows are dropped (first occurrence kept).
class EmulatorArchive {
 public:
  EmulatorArchive(const SimulationDataset& sim, ScalingTransform transform, Index min_rows = 50);

  const DesignMatrix& inputs() const { return inputs_; }
  const Vector& outputs() const { return outputs_; }
  const ScalingTransform& transform() const { return transform_; }
  const KdTree& index() const { return tree_; }
  Index size() const { return outputs_.size(); }
  Index x_dim() const { return x_dim_; }
  Index u_dim() const { return u_dim_; }
  Index duplicate_count() const { return duplicates_; }
  /// Row of the original dataset behind each archive row.
  const std::vector<Index>& source_rows() const { return source_rows_; }

  /// 10th percentile of squared pairwise distances among the first
  /// min(1000, N) rows: greedy-search lengthscale and MLE start.
  double pilot_theta() const { return pilot_theta_; }
  /// Largest squared pairwise distance among the same rows.
  double max_theta() const { return max_theta_; }

  /// Scaled-space query for natural-unit design inputs x and calibration u.
  Vector query_point(const Vector& x_natural, const Vector& u_natural) const;

 private:
  DesignMatrix inputs_;
  Vector outputs_;
  ScalingTransform transform_;
  KdTree tree_;
  Index x_dim_ = 0;
  Index u_dim_ = 0;
  Index duplicates_ = 0;
  std::vector<Index> source_rows_;
  double pilot_theta_ = 0.1;
  double max_theta_ = 1.0;
};

struct LocalEmulation {
  Vector query;
  std::vector<Index> local_indices;
  double theta = 0.0;
  Prediction prediction;
};

/// Greedy local design: the n0 nearest neighbors of `query`, then one point at
/// a time the candidate (among the candidate_limit nearest) that most reduces
/// K(x,x) - k^T K^{-1} k at the query under isotropic lengthscale `theta`.
/// Ties go to the smallest archive index.
std::vector<Index> local_design(const EmulatorArchive& archive, const Vector& query, Index n0, Index n_m,
                                double theta, double nugget, Index candidate_limit = 1000);

/// Greedy design under the archive's pilot lengthscale.
std::vector<Index> local_design(const EmulatorArchive& archive, const Vector& query, const LocalSettings& settings);

/// MLE protocol used for every local fit; exposed so a full GP can be fitted
/// the same way.
FitOptions local_fit_options(const EmulatorArchive& archive, const LocalSettings& settings);

/// Local design, isotropic MLE on the subset, Student-t prediction at the query.
LocalEmulation emulate_one(const EmulatorArchive& archive, const Vector& query, const LocalSettings& settings);

/// emulate_one for every row of `queries` (scaled space), in parallel over
/// settings.threads workers. Element j equals emulate_one(queries.row(j)).
std::vector<LocalEmulation> emulate_batch(const EmulatorArchive& archive, const DesignMatrix& queries,
                                          const LocalSettings& settings);

}  // namespace lacal

#endif  // LACAL_LAGP_HPP
