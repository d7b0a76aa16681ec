#include "lacal/design.hpp"

#include "lacal/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace lacal {

void check_design(const DesignMatrix& design, const char* what) {
  require(design.rows() >= 1 && design.cols() >= 1, std::string(what) + ": needs at least one row and column");
  require(design.allFinite(), std::string(what) + ": entries must be finite");
}

ScalingTransform ScalingTransform::identity(Index dim) {
  ScalingTransform t;
  t.shift = Vector::Zero(dim);
  t.scale = Vector::Ones(dim);
  return t;
}

DesignMatrix ScalingTransform::apply(const DesignMatrix& natural) const {
  require(natural.cols() == dim(), "scaling: column count mismatch");
  return (natural.rowwise() - shift.transpose()).array().rowwise() / scale.transpose().array();
}

DesignMatrix ScalingTransform::invert(const DesignMatrix& scaled) const {
  require(scaled.cols() == dim(), "scaling: column count mismatch");
  return (scaled.array().rowwise() * scale.transpose().array()).matrix().rowwise() + shift.transpose();
}

Vector ScalingTransform::apply_row(const Vector& natural) const {
  require(natural.size() == dim(), "scaling: dimension mismatch");
  return (natural - shift).cwiseQuotient(scale);
}

Vector ScalingTransform::invert_row(const Vector& scaled) const {
  require(scaled.size() == dim(), "scaling: dimension mismatch");
  return scaled.cwiseProduct(scale) + shift;
}

ScalingTransform ScalingTransform::columns(Index first, Index count) const {
  require(first >= 0 && count >= 0 && first + count <= dim(), "scaling: column block out of range");
  ScalingTransform t;
  t.shift = shift.segment(first, count);
  t.scale = scale.segment(first, count);
  t.mode = mode;
  return t;
}

DesignMatrix lhs_sample(Index n, Index d, Rng& rng) {
  require(n >= 1 && d >= 1, "lhs: n and d must be positive");
  DesignMatrix out(n, d);
  std::vector<Index> perm(static_cast<std::size_t>(n));
  const double dn = static_cast<double>(n);
  for (Index j = 0; j < d; ++j) {
    std::iota(perm.begin(), perm.end(), Index{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    for (Index i = 0; i < n; ++i) {
      const double stratum = static_cast<double>(perm[static_cast<std::size_t>(i)]);
      double v = (stratum + uniform01(rng)) / dn;
      // Rounding can push the draw onto the upper stratum edge.
      v = std::min(v, std::nextafter((stratum + 1.0) / dn, 0.0));
      out(i, j) = v;
    }
  }
  return out;
}

double min_pairwise_distance(const DesignMatrix& points, const std::vector<Index>& rows) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < rows.size(); ++a) {
    for (std::size_t b = a + 1; b < rows.size(); ++b) {
      best = std::min(best, (points.row(rows[a]) - points.row(rows[b])).norm());
    }
  }
  return best;
}

std::vector<Index> maximin_subset(const DesignMatrix& candidates, Index k, Rng& rng) {
  const Index n = candidates.rows();
  require(k >= 0, "maximin: k must be non-negative");
  require(k <= n, "maximin: k exceeds the number of candidates");
  std::vector<Index> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), Index{0});
  if (k == n) return all;
  if (k == 0) return {};

  // Partial Fisher-Yates: chosen = all[0..k), outside = all[k..n).
  for (Index i = 0; i < k; ++i) {
    std::uniform_int_distribution<Index> pick(i, n - 1);
    std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(pick(rng))]);
  }
  if (k == 1) return {all[0]};

  auto dist = [&](Index a, Index b) { return (candidates.row(a) - candidates.row(b)).norm(); };
  Eigen::MatrixXd D = Eigen::MatrixXd::Constant(k, k, std::numeric_limits<double>::infinity());
  for (Index a = 0; a < k; ++a) {
    for (Index b = a + 1; b < k; ++b) D(a, b) = D(b, a) = dist(all[static_cast<std::size_t>(a)], all[static_cast<std::size_t>(b)]);
  }
  auto closest_pair = [&](Index& pa, Index& pb) {
    double best = std::numeric_limits<double>::infinity();
    for (Index a = 0; a < k; ++a) {
      for (Index b = a + 1; b < k; ++b) {
        if (D(a, b) < best) {
          best = D(a, b);
          pa = a;
          pb = b;
        }
      }
    }
    return best;
  };

  Index pa = 0, pb = 1;
  double current = closest_pair(pa, pb);
  std::uniform_int_distribution<Index> outside(k, n - 1);
  std::bernoulli_distribution coin(0.5);
  Vector fresh(k);
  const Index budget = 100 * k;
  for (Index it = 0; it < budget; ++it) {
    const Index slot = coin(rng) ? pa : pb;
    const Index swap_pos = outside(rng);
    const Index incoming = all[static_cast<std::size_t>(swap_pos)];
    double candidate_min = std::numeric_limits<double>::infinity();
    for (Index a = 0; a < k; ++a) {
      fresh[a] = a == slot ? std::numeric_limits<double>::infinity() : dist(incoming, all[static_cast<std::size_t>(a)]);
      candidate_min = std::min(candidate_min, fresh[a]);
    }
    if (candidate_min <= current) continue;
    for (Index a = 0; a < k && candidate_min > current; ++a) {
      if (a == slot) continue;
      for (Index b = a + 1; b < k; ++b) {
        if (b != slot) candidate_min = std::min(candidate_min, D(a, b));
      }
    }
    if (candidate_min <= current) continue;
    std::swap(all[static_cast<std::size_t>(slot)], all[static_cast<std::size_t>(swap_pos)]);
    for (Index a = 0; a < k; ++a) {
      if (a != slot) D(a, slot) = D(slot, a) = fresh[a];
    }
    current = closest_pair(pa, pb);
  }
  std::vector<Index> chosen(all.begin(), all.begin() + k);
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

ScalingTransform fit_unit_cube(const DesignMatrix& data) {
  require(data.rows() >= 1 && data.cols() >= 1, "fit_unit_cube: empty matrix");
  require(data.allFinite(), "fit_unit_cube: entries must be finite");
  ScalingTransform t;
  t.mode = ScalingMode::IsotropicCube;
  t.shift.resize(data.cols());
  t.scale.resize(data.cols());
  for (Index j = 0; j < data.cols(); ++j) {
    const double lo = data.col(j).minCoeff();
    const double hi = data.col(j).maxCoeff();
    if (hi > lo) {
      t.shift[j] = lo;
      t.scale[j] = hi - lo;
    } else {
      t.shift[j] = lo - 0.5;
      t.scale[j] = 1.0;
    }
  }
  return t;
}

ScalingTransform apply_separable_rescale(const ScalingTransform& transform, const Vector& medians) {
  require(medians.size() == transform.dim(), "separable rescale: one median per input is required");
  require((medians.array() > 0.0).all() && medians.allFinite(), "separable rescale: medians must be positive");
  ScalingTransform t = transform;
  t.scale = transform.scale.cwiseProduct(medians.cwiseSqrt());
  t.mode = ScalingMode::SeparableRescaled;
  return t;
}

double quantile(std::vector<double> values, double p) {
  require(!values.empty(), "quantile: empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

SeparableScaleEstimate estimate_separable_scales(const DesignMatrix& data, const Vector& outputs,
                                                 const SeparableScaleOptions& options, std::uint64_t seed) {
  check_design(data, "separable scales");
  require(outputs.size() == data.rows(), "separable scales: output count must match rows");
  require(options.subset_size >= 10, "separable scales: subset size must be at least 10");
  require(options.subset_size <= data.rows(), "separable scales: subset size exceeds the data");
  require(options.repetitions >= 1, "separable scales: at least one repetition is required");

  const Index d = data.cols();
  SeparableScaleEstimate est;
  est.per_repetition.resize(options.repetitions, d);
  parallel_for(static_cast<std::size_t>(options.repetitions), options.threads, [&](std::size_t r) {
    Rng rng = child_rng(seed, r);
    std::vector<Index> idx(static_cast<std::size_t>(data.rows()));
    std::iota(idx.begin(), idx.end(), Index{0});
    for (Index i = 0; i < options.subset_size; ++i) {
      std::uniform_int_distribution<Index> pick(i, data.rows() - 1);
      std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
    }
    DesignMatrix X(options.subset_size, d);
    Vector y(options.subset_size);
    for (Index i = 0; i < options.subset_size; ++i) {
      X.row(i) = data.row(idx[static_cast<std::size_t>(i)]);
      y[i] = outputs[idx[static_cast<std::size_t>(i)]];
    }
    FitOptions fit;
    fit.mode = LengthscaleMode::Separable;
    fit.fixed_nugget = options.nugget;
    fit.seed = rng();
    const GpModel model = fit_hyperparameters(X, y, fit);
    est.per_repetition.row(static_cast<Index>(r)) = model.spec().lengthscales.transpose();
  });

  est.median.resize(d);
  est.lower_quartile.resize(d);
  est.upper_quartile.resize(d);
  for (Index j = 0; j < d; ++j) {
    std::vector<double> col(est.per_repetition.col(j).data(), est.per_repetition.col(j).data() + options.repetitions);
    est.median[j] = quantile(col, 0.5);
    est.lower_quartile[j] = quantile(col, 0.25);
    est.upper_quartile[j] = quantile(col, 0.75);
  }
  return est;
}

}  // namespace lacal
