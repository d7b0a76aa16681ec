#include "lacal/lagp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace lacal {

DesignMatrix SimulationDataset::joint() const {
  require(x.rows() == u.rows() && x.rows() == y.size(), "simulation dataset: row counts disagree");
  DesignMatrix out(x.rows(), x.cols() + u.cols());
  out << x, u;
  return out;
}

namespace {

bool rows_less(const DesignMatrix& X, Index a, Index b) {
  for (Index j = 0; j < X.cols(); ++j) {
    if (X(a, j) != X(b, j)) return X(a, j) < X(b, j);
  }
  return a < b;
}

}  // namespace

EmulatorArchive::EmulatorArchive(const SimulationDataset& sim, ScalingTransform transform, Index min_rows)
    : transform_(std::move(transform)), x_dim_(sim.x.cols()), u_dim_(sim.u.cols()) {
  const DesignMatrix joint = sim.joint();
  check_design(joint, "simulation inputs");
  require(sim.y.allFinite(), "simulation outputs must be finite");
  require(transform_.dim() == joint.cols(), "archive: transform dimension must match joint inputs");
  const DesignMatrix scaled = transform_.apply(joint);

  const Index n = scaled.rows();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) { return rows_less(scaled, a, b); });
  std::vector<bool> keep(static_cast<std::size_t>(n), true);
  for (std::size_t i = 1; i < order.size(); ++i) {
    if ((scaled.row(order[i]).array() == scaled.row(order[i - 1]).array()).all()) {
      keep[static_cast<std::size_t>(order[i])] = false;
      ++duplicates_;
    }
  }
  for (Index i = 0; i < n; ++i) {
    if (keep[static_cast<std::size_t>(i)]) source_rows_.push_back(i);
  }
  const Index m = static_cast<Index>(source_rows_.size());
  require(m >= min_rows, "archive: fewer unique simulation rows than the local design size");
  inputs_.resize(m, scaled.cols());
  outputs_.resize(m);
  for (Index i = 0; i < m; ++i) {
    inputs_.row(i) = scaled.row(source_rows_[static_cast<std::size_t>(i)]);
    outputs_[i] = sim.y[source_rows_[static_cast<std::size_t>(i)]];
  }
  tree_ = KdTree(inputs_);

  const Index sample = std::min<Index>(1000, m);
  std::vector<double> d2;
  d2.reserve(static_cast<std::size_t>(sample * (sample - 1) / 2));
  for (Index i = 0; i < sample; ++i) {
    for (Index j = i + 1; j < sample; ++j) d2.push_back((inputs_.row(i) - inputs_.row(j)).squaredNorm());
  }
  if (!d2.empty()) {
    pilot_theta_ = quantile(d2, 0.1);
    max_theta_ = *std::max_element(d2.begin(), d2.end());
  }
  if (!(pilot_theta_ > 0.0)) pilot_theta_ = 0.1;
  if (!(max_theta_ > pilot_theta_)) max_theta_ = std::max(1.0, 10.0 * pilot_theta_);
}

Vector EmulatorArchive::query_point(const Vector& x_natural, const Vector& u_natural) const {
  require(x_natural.size() == x_dim_ && u_natural.size() == u_dim_, "archive query: dimension mismatch");
  Vector joint(x_dim_ + u_dim_);
  joint << x_natural, u_natural;
  return transform_.apply_row(joint);
}

std::vector<Index> local_design(const EmulatorArchive& archive, const Vector& query, Index n0, Index n_m,
                                double theta, double nugget, Index candidate_limit) {
  require(query.size() == archive.inputs().cols(), "local design: query dimension mismatch");
  require(n_m <= archive.size(), "local design: n_m exceeds the archive size");
  require(n0 >= 1 && n0 <= n_m, "local design: need 1 <= n0 <= n_m");
  require(theta > 0.0, "local design: lengthscale must be positive");

  const Index n_cand = std::min(archive.size(), std::max(candidate_limit, n_m));
  const std::vector<Index> cand = archive.index().nearest(query, n_cand);
  const DesignMatrix& X = archive.inputs();
  const double inv_theta = 1.0 / theta;
  auto corr = [&](const auto& a, const auto& b) { return std::exp(-(a - b).squaredNorm() * inv_theta); };

  std::vector<Index> design(cand.begin(), cand.begin() + n0);
  if (n0 == n_m) return design;

  // Cholesky factor of the design correlation matrix, grown one row at a time.
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n_m, n_m);
  {
    Eigen::MatrixXd K(n0, n0);
    for (Index i = 0; i < n0; ++i) {
      K(i, i) = 1.0 + nugget;
      for (Index j = 0; j < i; ++j) K(i, j) = K(j, i) = corr(X.row(design[i]), X.row(design[j]));
    }
    Eigen::LLT<Eigen::MatrixXd> llt(K);
    if (llt.info() != Eigen::Success) throw NumericalFailure("local design: initial neighborhood is singular");
    L.topLeftCorner(n0, n0) = llt.matrixL();
  }

  // Candidate rows of V hold L^{-1} k_c for the current design.
  const Index pool = n_cand - n0;
  const Index dim = X.cols();
  Eigen::MatrixXd P(pool, dim);
  for (Index c = 0; c < pool; ++c) P.row(c) = X.row(cand[n0 + c]);
  auto corr_to_pool = [&](const Eigen::RowVectorXd& z) -> Eigen::ArrayXd {
    return (-(P.rowwise() - z).rowwise().squaredNorm().array() * inv_theta).exp();
  };

  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  RowMatrix V(pool, n_m);
  Vector vx(n_m);
  Eigen::ArrayXd a(pool), b(pool);
  const Eigen::ArrayXd kxc = corr_to_pool(query.transpose());
  std::vector<bool> used(static_cast<std::size_t>(pool), false);
  {
    Eigen::MatrixXd Kc(pool, n0);
    Vector kx(n0);
    for (Index j = 0; j < n0; ++j) {
      const Eigen::RowVectorXd zj = X.row(design[j]);
      kx[j] = corr(query.transpose(), zj);
      Kc.col(j) = corr_to_pool(zj).matrix();
    }
    const auto Lv = L.topLeftCorner(n0, n0).triangularView<Eigen::Lower>();
    V.leftCols(n0) = Lv.solve(Kc.transpose()).transpose();
    vx.head(n0) = Lv.solve(kx);
  }
  a = V.leftCols(n0).rowwise().squaredNorm().array();
  b = (V.leftCols(n0) * vx.head(n0)).array();

  for (Index n = n0; n < n_m; ++n) {
    Index best = -1;
    double best_score = -1.0;
    for (Index c = 0; c < pool; ++c) {
      if (used[static_cast<std::size_t>(c)]) continue;
      const double denom = 1.0 + nugget - a[c];
      const double num = kxc[c] - b[c];
      const double score = denom > 1e-14 ? num * num / denom : 0.0;
      if (score > best_score || (score == best_score && cand[n0 + c] < cand[n0 + best])) {
        best = c;
        best_score = score;
      }
    }
    const double d2 = 1.0 + nugget - a[best];
    if (!(d2 > 1e-12)) {
      // Every remaining candidate is numerically in the span of the design:
      // finish in nearest-first order.
      for (Index c = 0; c < pool && static_cast<Index>(design.size()) < n_m; ++c) {
        if (!used[static_cast<std::size_t>(c)]) design.push_back(cand[n0 + c]);
      }
      break;
    }
    used[static_cast<std::size_t>(best)] = true;
    const Index z = cand[n0 + best];
    design.push_back(z);
    if (n + 1 == n_m) break;

    const Vector lz = V.row(best).head(n).transpose();
    const double d = std::sqrt(d2);
    L.row(n).head(n) = lz.transpose();
    L(n, n) = d;
    const double vx_new = (corr(query.transpose(), X.row(z)) - vx.head(n).dot(lz)) / d;
    vx[n] = vx_new;
    const Eigen::ArrayXd v_new = (corr_to_pool(X.row(z)) - (V.leftCols(n) * lz).array()) / d;
    V.col(n) = v_new.matrix();
    a += v_new.square();
    b += v_new * vx_new;
  }
  return design;
}

std::vector<Index> local_design(const EmulatorArchive& archive, const Vector& query, const LocalSettings& settings) {
  return local_design(archive, query, settings.n0, settings.n_m, archive.pilot_theta(), settings.nugget,
                      settings.candidate_limit);
}

FitOptions local_fit_options(const EmulatorArchive& archive, const LocalSettings& settings) {
  FitOptions fit;
  fit.mode = LengthscaleMode::Isotropic;
  fit.estimate_nugget = false;
  fit.fixed_nugget = settings.nugget;
  fit.theta_lower = settings.theta_lower;
  fit.theta_upper = settings.theta_upper > 0.0 ? settings.theta_upper : archive.max_theta();
  fit.starts = std::max(1, settings.mle_starts);
  fit.initial = Vector::Constant(1, std::clamp(archive.pilot_theta(), fit.theta_lower, fit.theta_upper));
  fit.seed = 0;
  return fit;
}

LocalEmulation emulate_one(const EmulatorArchive& archive, const Vector& query, const LocalSettings& settings) {
  LocalEmulation out;
  out.query = query;
  out.local_indices = local_design(archive, query, settings);
  // Fit on rows in archive order so the result does not depend on the order
  // the greedy search found them in.
  std::vector<Index> rows = out.local_indices;
  std::sort(rows.begin(), rows.end());
  const Index n = static_cast<Index>(rows.size());
  DesignMatrix X(n, archive.inputs().cols());
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    X.row(i) = archive.inputs().row(rows[static_cast<std::size_t>(i)]);
    y[i] = archive.outputs()[rows[static_cast<std::size_t>(i)]];
  }
  const GpModel model = fit_hyperparameters(X, y, local_fit_options(archive, settings));
  out.theta = model.spec().lengthscales[0];
  out.prediction = model.predict(query);
  return out;
}

std::vector<LocalEmulation> emulate_batch(const EmulatorArchive& archive, const DesignMatrix& queries,
                                          const LocalSettings& settings) {
  std::vector<LocalEmulation> out(static_cast<std::size_t>(queries.rows()));
  parallel_for(out.size(), settings.threads, [&](std::size_t j) {
    out[j] = emulate_one(archive, queries.row(static_cast<Index>(j)).transpose(), settings);
  });
  return out;
}

}  // namespace lacal
