#ifndef LACAL_OPTIMIZER_HPP
#define LACAL_OPTIMIZER_HPP

#include "lacal/common.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace lacal {

struct BoxDomain {
  Vector lower;
  Vector upper;

  static BoxDomain unit(Index dim);

  Index dim() const { return lower.size(); }
  void validate() const;
  bool contains(const Vector& point) const;
  Vector project(const Vector& point) const;
  double min_width() const;
};

struct TraceEntry {
  Vector point;
  double value = 0.0;
};

struct MeshState {
  Vector incumbent;
  double incumbent_value = 0.0;
  double mesh_size = 0.0;
  /// Every fresh evaluation in order. Re-visited points are served from a
  /// cache and not repeated here.
  std::vector<TraceEntry> trace;
  int evaluations = 0;
  int iterations = 0;
  /// True when the search stopped because the mesh fell below min_mesh_size.
  bool converged = false;
};

struct OptimizerSettings {
  /// Starting mesh size; 0 means a quarter of the narrowest box width.
  double init_mesh_size = 0.0;
  double min_mesh_size = 1e-6;
  int max_evaluations = 500;
  /// Accept the first improving poll point (order +e1, -e1, +e2, ...).
  /// Complete polling evaluates all 2q points and takes the best.
  bool opportunistic = true;
  /// Workers for complete polling; ignored when opportunistic.
  int threads = 1;
  /// Space-filling start: maximin subset of `init_keep` rows of an LHS of
  /// `init_candidates` points.
  Index init_candidates = 200;
  Index init_keep = 20;
  std::uint64_t seed = 0;
};

/// Objective to maximize. Non-finite values (and exceptions, in
/// space_filling_init) count as -inf.
using Objective = std::function<double(const Vector&)>;

struct InitResult {
  Vector best;
  double best_value = 0.0;
  std::vector<TraceEntry> trace;
};

/// Evaluates the objective on a maximin subset of an LHS over the box and
/// returns the best point (first one on ties) with all evaluations.
InitResult space_filling_init(const Objective& objective, const BoxDomain& box, Index candidate_count, Index keep,
                              Rng& rng);

/// Coordinate pattern search on a refining mesh. Poll points incumbent +/- mesh
/// along each axis are projected onto the box. An improving poll moves the
/// incumbent and doubles the mesh (capped at the initial size); a failed poll
/// halves it. Stops once the mesh drops below min_mesh_size or the evaluation
/// budget is spent. `start_value`, when given, is used instead of evaluating
/// the start again.
MeshState maximize(const Objective& objective, const BoxDomain& box, const Vector& start,
                   const OptimizerSettings& settings, std::optional<double> start_value = std::nullopt);

}  // namespace lacal

#endif  // LACAL_OPTIMIZER_HPP
