#ifndef LACAL_DESIGN_HPP
#define LACAL_DESIGN_HPP

#include "lacal/common.hpp"

#include <cstdint>
#include <vector>

namespace lacal {

/// Throws std::invalid_argument unless the matrix has at least one row and
/// column and every entry is finite.
void check_design(const DesignMatrix& design, const char* what = "design");

enum class ScalingMode { IsotropicCube, SeparableRescaled };

/// Affine per-column map: scaled = (natural - shift) / scale.
struct ScalingTransform {
  Vector shift;
  Vector scale;
  ScalingMode mode = ScalingMode::IsotropicCube;

  static ScalingTransform identity(Index dim);

  Index dim() const { return shift.size(); }
  DesignMatrix apply(const DesignMatrix& natural) const;
  DesignMatrix invert(const DesignMatrix& scaled) const;
  Vector apply_row(const Vector& natural) const;
  Vector invert_row(const Vector& scaled) const;
  /// Restriction to the contiguous block of columns [first, first + count).
  ScalingTransform columns(Index first, Index count) const;
};

/// Latin hypercube sample of n points in (0,1)^d: one point per stratum
/// [(i-1)/n, i/n) in every column, uniformly placed inside the stratum, with an
/// independent permutation per column.
DesignMatrix lhs_sample(Index n, Index d, Rng& rng);

/// Picks k distinct rows of `candidates` that approximately maximize the minimum
/// pairwise Euclidean distance, by stochastic exchange: 100*k proposals, each
/// swapping a random member of the current closest pair for a random outside
/// candidate, accepted when the minimum distance strictly increases.
/// Returned indices are sorted ascending.
std::vector<Index> maximin_subset(const DesignMatrix& candidates, Index k, Rng& rng);

/// Smallest pairwise distance among the given rows (infinity for fewer than two).
double min_pairwise_distance(const DesignMatrix& points, const std::vector<Index>& rows);

/// Maps each column range onto [0,1]. Constant columns map to 0.5 with unit scale.
ScalingTransform fit_unit_cube(const DesignMatrix& data);

/// Divides each (already cube-scaled) coordinate by sqrt(median lengthscale).
ScalingTransform apply_separable_rescale(const ScalingTransform& transform, const Vector& medians);

struct SeparableScaleEstimate {
  Vector median;
  Vector lower_quartile;
  Vector upper_quartile;
  /// One row per repetition, one column per input dimension.
  DesignMatrix per_repetition;
};

struct SeparableScaleOptions {
  Index subset_size = 1000;
  Index repetitions = 100;
  double nugget = 1e-6;
  int threads = 1;
};

/// Repeatedly fits a separable-lengthscale GP to random subsets of the data and
/// summarizes the per-dimension lengthscale estimates across repetitions.
/// Repetition r draws its subset from child_rng(seed, r).
SeparableScaleEstimate estimate_separable_scales(const DesignMatrix& data, const Vector& outputs,
                                                 const SeparableScaleOptions& options,
                                                 std::uint64_t seed);

/// Linear-interpolation (type 7) sample quantile, p in [0,1].
double quantile(std::vector<double> values, double p);

}  // namespace lacal

#endif  // LACAL_DESIGN_HPP
