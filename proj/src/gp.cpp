#include "lacal/gp.hpp"

#include "lacal/bounded_minimize.hpp"
#include "lacal/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace lacal {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

struct Collapsed {
  DesignMatrix sites;
  Vector counts;
  Vector means;
  double within_ss = 0.0;
  Index total = 0;
  bool has_replicates = false;
};

bool rows_less(const DesignMatrix& X, Index a, Index b) {
  for (Index j = 0; j < X.cols(); ++j) {
    if (X(a, j) < X(b, j)) return true;
    if (X(a, j) > X(b, j)) return false;
  }
  return a < b;
}

bool rows_equal(const DesignMatrix& X, Index a, Index b) { return (X.row(a).array() == X.row(b).array()).all(); }

// Groups identical rows; sites are ordered by first occurrence.
Collapsed collapse(const DesignMatrix& X, const Vector& y) {
  const Index n = X.rows();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) { return rows_less(X, a, b); });

  std::vector<Index> site_of(static_cast<std::size_t>(n));
  std::vector<Index> representative;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i == 0 || !rows_equal(X, order[i - 1], order[i])) representative.push_back(order[i]);
    site_of[static_cast<std::size_t>(order[i])] = representative.back();
  }
  std::vector<Index> reps_sorted = representative;
  std::sort(reps_sorted.begin(), reps_sorted.end());

  Collapsed c;
  c.total = n;
  const Index m = static_cast<Index>(reps_sorted.size());
  c.has_replicates = m < n;
  c.sites.resize(m, X.cols());
  c.counts = Vector::Zero(m);
  c.means = Vector::Zero(m);
  std::vector<Index> slot(static_cast<std::size_t>(n), -1);
  for (Index s = 0; s < m; ++s) {
    slot[static_cast<std::size_t>(reps_sorted[static_cast<std::size_t>(s)])] = s;
    c.sites.row(s) = X.row(reps_sorted[static_cast<std::size_t>(s)]);
  }
  for (Index i = 0; i < n; ++i) {
    const Index s = slot[static_cast<std::size_t>(site_of[static_cast<std::size_t>(i)])];
    c.counts[s] += 1.0;
    c.means[s] += y[i];
  }
  c.means.array() /= c.counts.array();
  if (c.has_replicates) {
    for (Index i = 0; i < n; ++i) {
      const Index s = slot[static_cast<std::size_t>(site_of[static_cast<std::size_t>(i)])];
      const double d = y[i] - c.means[s];
      c.within_ss += d * d;
    }
  }
  return c;
}

// Squared coordinate differences between sites: one matrix per lengthscale.
std::vector<Eigen::MatrixXd> squared_differences(const DesignMatrix& sites, bool isotropic) {
  const Index m = sites.rows();
  const Index d = sites.cols();
  std::vector<Eigen::MatrixXd> out(isotropic ? 1 : static_cast<std::size_t>(d), Eigen::MatrixXd::Zero(m, m));
  for (Index i = 0; i < m; ++i) {
    for (Index j = i + 1; j < m; ++j) {
      for (Index k = 0; k < d; ++k) {
        const double diff = sites(i, k) - sites(j, k);
        auto& target = out[isotropic ? 0 : static_cast<std::size_t>(k)];
        target(i, j) += diff * diff;
      }
    }
  }
  for (auto& mat : out) mat = mat.selfadjointView<Eigen::Upper>();
  return out;
}

struct Factorized {
  Eigen::MatrixXd C;  // correlation without nugget
  Eigen::LLT<Eigen::MatrixXd> llt;
  double nugget_eff = 0.0;
  double jitter = 0.0;
  Vector alpha;
  double psi = 0.0;
  double log_det = 0.0;
  bool ok = false;
};

Factorized factorize(const Collapsed& data, const std::vector<Eigen::MatrixXd>& sqdiff, const Vector& thetas,
                     double nugget, bool allow_jitter) {
  Factorized f;
  const Index m = data.sites.rows();
  f.C = Eigen::MatrixXd::Zero(m, m);
  for (std::size_t k = 0; k < sqdiff.size(); ++k) f.C.noalias() -= sqdiff[k] / thetas[static_cast<Index>(k)];
  f.C = f.C.array().exp().matrix();

  if (data.has_replicates && nugget <= 0.0) return f;

  auto attempt = [&](double g) {
    Eigen::MatrixXd M = f.C;
    M.diagonal().array() += g / data.counts.array();
    f.llt.compute(M);
    return f.llt.info() == Eigen::Success;
  };
  f.nugget_eff = nugget;
  if (!attempt(nugget)) {
    if (!(allow_jitter && nugget == 0.0)) return f;
    f.jitter = GpModel::kJitter;
    f.nugget_eff = f.jitter;
    if (!attempt(f.nugget_eff)) return f;
  }
  const auto& L = f.llt.matrixL();
  f.alpha = f.llt.solve(data.means);
  const double quad = data.means.dot(f.alpha);
  f.psi = quad + (data.has_replicates ? data.within_ss / f.nugget_eff : 0.0);
  double log_det_m = 0.0;
  for (Index i = 0; i < m; ++i) log_det_m += std::log(L(i, i));
  log_det_m *= 2.0;
  f.log_det = log_det_m + data.counts.array().log().sum();
  if (data.has_replicates) f.log_det += static_cast<double>(data.total - m) * std::log(f.nugget_eff);
  f.ok = std::isfinite(f.psi) && f.psi > 0.0 && std::isfinite(f.log_det);
  return f;
}

double log_likelihood_from(double total, double psi, double log_det) {
  return std::lgamma(total / 2.0) - total / 2.0 * kLog2Pi - 0.5 * log_det - total / 2.0 * std::log(psi / 2.0);
}

// Gradient with respect to log lengthscales (and log nugget when requested).
Vector gradient_from(const Collapsed& data, const std::vector<Eigen::MatrixXd>& sqdiff, const Vector& thetas,
                     const Factorized& f, bool include_nugget) {
  const Index m = data.sites.rows();
  const double N = static_cast<double>(data.total);
  const Eigen::MatrixXd Minv = f.llt.solve(Eigen::MatrixXd::Identity(m, m));
  const Index k_count = static_cast<Index>(sqdiff.size());
  Vector grad(k_count + (include_nugget ? 1 : 0));
  for (Index k = 0; k < k_count; ++k) {
    const Eigen::MatrixXd dC = f.C.cwiseProduct(sqdiff[static_cast<std::size_t>(k)]) / thetas[k];
    const double trace_term = Minv.cwiseProduct(dC).sum();
    const double quad = f.alpha.dot(dC * f.alpha);
    grad[k] = -0.5 * trace_term + N / (2.0 * f.psi) * quad;
  }
  if (include_nugget) {
    const double g = f.nugget_eff;
    const Vector inv_counts = data.counts.cwiseInverse();
    const double dlogdet = static_cast<double>(data.total - m) + g * Minv.diagonal().dot(inv_counts);
    const double dpsi = -(data.has_replicates ? data.within_ss / g : 0.0) -
                        g * f.alpha.cwiseProduct(f.alpha).dot(inv_counts);
    grad[k_count] = -0.5 * dlogdet - N / (2.0 * f.psi) * dpsi;
  }
  return grad;
}

}  // namespace

CorrelationSpec CorrelationSpec::isotropic(double theta, double nugget) {
  CorrelationSpec spec;
  spec.lengthscales = Vector::Constant(1, theta);
  spec.nugget = nugget;
  spec.validate(1);
  return spec;
}

CorrelationSpec CorrelationSpec::separable(const Vector& thetas, double nugget) {
  CorrelationSpec spec;
  spec.lengthscales = thetas;
  spec.nugget = nugget;
  spec.validate(thetas.size());
  return spec;
}

void CorrelationSpec::validate(Index dim) const {
  require(lengthscales.size() == 1 || lengthscales.size() == dim,
          "correlation: lengthscale count must be 1 or match the input dimension");
  require((lengthscales.array() > 0.0).all() && lengthscales.allFinite(), "correlation: lengthscales must be positive");
  require(nugget >= 0.0 && std::isfinite(nugget), "correlation: nugget must be non-negative");
}

double correlation(const CorrelationSpec& spec, const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y) {
  require(x.size() == y.size(), "correlation: dimension mismatch between inputs");
  spec.validate(x.size());
  if (spec.is_isotropic()) return std::exp(-(x - y).squaredNorm() / spec.lengthscales[0]);
  return std::exp(-((x - y).array().square() / spec.lengthscales.array()).sum());
}

Eigen::MatrixXd correlation_matrix(const CorrelationSpec& spec, const DesignMatrix& X) {
  spec.validate(X.cols());
  const Index n = X.rows();
  Eigen::MatrixXd K(n, n);
  for (Index i = 0; i < n; ++i) {
    K(i, i) = 1.0 + spec.nugget;
    for (Index j = i + 1; j < n; ++j) {
      K(i, j) = K(j, i) = correlation(spec, X.row(i).transpose(), X.row(j).transpose());
    }
  }
  return K;
}

double Prediction::variance() const {
  require(dof > 2.0, "prediction variance requires more than two degrees of freedom");
  return std::isinf(dof) ? scale2 : scale2 * dof / (dof - 2.0);
}

GpModel::GpModel(DesignMatrix X, Vector y, CorrelationSpec spec, bool allow_jitter)
    : X_(std::move(X)), y_(std::move(y)), spec_(std::move(spec)) {
  check_design(X_, "gp inputs");
  require(y_.size() == X_.rows(), "gp: output count must match input rows");
  require(y_.allFinite(), "gp: outputs must be finite");
  spec_.validate(X_.cols());

  Collapsed data = collapse(X_, y_);
  if (data.has_replicates && spec_.nugget <= 0.0) {
    throw NumericalFailure("gp: repeated input rows with zero nugget make K_N singular");
  }
  const auto sqdiff = squared_differences(data.sites, spec_.is_isotropic());
  Vector thetas = spec_.lengthscales;
  Factorized f = factorize(data, sqdiff, thetas, spec_.nugget, allow_jitter);
  if (!f.ok) throw NumericalFailure("gp: correlation matrix is not positive definite");

  sites_ = std::move(data.sites);
  counts_ = std::move(data.counts);
  site_means_ = std::move(data.means);
  within_ss_ = data.within_ss;
  jitter_ = f.jitter;
  llt_ = std::move(f.llt);
  alpha_ = std::move(f.alpha);
  psi_ = f.psi;
  log_det_ = f.log_det;
}

double GpModel::log_likelihood() const {
  return log_likelihood_from(static_cast<double>(size()), psi_, log_det_);
}

Vector GpModel::log_likelihood_gradient(bool include_nugget) const {
  Collapsed data;
  data.sites = sites_;
  data.counts = counts_;
  data.means = site_means_;
  data.within_ss = within_ss_;
  data.total = size();
  data.has_replicates = sites_.rows() < size();
  const auto sqdiff = squared_differences(sites_, spec_.is_isotropic());
  Factorized f = factorize(data, sqdiff, spec_.lengthscales, spec_.nugget + jitter_, false);
  if (!f.ok) throw NumericalFailure("gp: gradient refactorization failed");
  return gradient_from(data, sqdiff, spec_.lengthscales, f, include_nugget);
}

Vector GpModel::site_correlations(const Eigen::Ref<const Vector>& x) const {
  require(x.size() == dim(), "gp predict: dimension mismatch");
  const Index m = sites_.rows();
  Vector c(m);
  if (spec_.is_isotropic()) {
    const double inv = 1.0 / spec_.lengthscales[0];
    for (Index i = 0; i < m; ++i) c[i] = std::exp(-(sites_.row(i).transpose() - x).squaredNorm() * inv);
  } else {
    const Eigen::ArrayXd inv = spec_.lengthscales.array().inverse();
    for (Index i = 0; i < m; ++i) {
      c[i] = std::exp(-((sites_.row(i).transpose() - x).array().square() * inv).sum());
    }
  }
  return c;
}

double GpModel::reduced_variance(const Eigen::Ref<const Vector>& x) const {
  const Vector c = site_correlations(x);
  const Vector v = llt_.matrixL().solve(c);
  return 1.0 - v.squaredNorm();
}

Prediction GpModel::predict(const Eigen::Ref<const Vector>& x, bool noisy_response) const {
  const Vector c = site_correlations(x);
  Prediction p;
  p.mean = c.dot(alpha_);
  const Vector v = llt_.matrixL().solve(c);
  const double kxx = 1.0 + (noisy_response ? spec_.nugget + jitter_ : 0.0);
  p.scale2 = std::max(0.0, psi_ * (kxx - v.squaredNorm()) / static_cast<double>(size()));
  p.dof = static_cast<double>(size());
  return p;
}

GpModel fit_hyperparameters(const DesignMatrix& X, const Vector& y, const FitOptions& options) {
  check_design(X, "gp inputs");
  require(y.size() == X.rows(), "fit: output count must match input rows");
  require(options.theta_lower > 0.0 && options.theta_lower < options.theta_upper, "fit: invalid lengthscale bounds");
  if (options.estimate_nugget) {
    require(options.nugget_lower > 0.0 && options.nugget_lower < options.nugget_upper, "fit: invalid nugget bounds");
  }
  require(options.starts >= 1, "fit: at least one start is required");

  const bool iso = options.mode == LengthscaleMode::Isotropic;
  const Index n_theta = iso ? 1 : X.cols();
  const Index n_params = n_theta + (options.estimate_nugget ? 1 : 0);

  const Collapsed data = collapse(X, y);
  const auto sqdiff = squared_differences(data.sites, iso);

  Vector lower(n_params), upper(n_params);
  lower.head(n_theta).setConstant(std::log(options.theta_lower));
  upper.head(n_theta).setConstant(std::log(options.theta_upper));
  if (options.estimate_nugget) {
    lower[n_theta] = std::log(options.nugget_lower);
    upper[n_theta] = std::log(options.nugget_upper);
  }

  auto unpack = [&](const Vector& eta, Vector& thetas, double& g) {
    thetas = eta.head(n_theta).array().exp();
    g = options.estimate_nugget ? std::exp(eta[n_theta]) : options.fixed_nugget;
  };

  // A jittered K_N is a different model; the search only takes it when no
  // start can be factorized without.
  bool allow_jitter = false;
  SmoothObjective negative_loglik = [&](const Vector& eta, Vector& grad) {
    Vector thetas;
    double g = 0.0;
    unpack(eta, thetas, g);
    const Factorized f = factorize(data, sqdiff, thetas, g, allow_jitter);
    if (!f.ok) return std::numeric_limits<double>::infinity();
    const double ll = log_likelihood_from(static_cast<double>(data.total), f.psi, f.log_det);
    grad = -gradient_from(data, sqdiff, thetas, f, options.estimate_nugget);
    return -ll;
  };

  std::vector<Vector> starts;
  if (options.initial) {
    require(options.initial->size() == n_params, "fit: initial parameter vector has the wrong length");
    starts.push_back(options.initial->array().log().matrix().cwiseMax(lower).cwiseMin(upper));
  }
  const Index lhs_count = options.starts - static_cast<Index>(starts.size());
  if (lhs_count > 0) {
    Rng rng(options.seed);
    const DesignMatrix unit = lhs_sample(lhs_count, n_params, rng);
    for (Index i = 0; i < lhs_count; ++i) {
      starts.push_back(lower.array() + unit.row(i).transpose().array() * (upper - lower).array());
    }
  }

  MinimizeOptions mopts;
  mopts.max_iterations = options.max_iterations;
  mopts.gradient_tolerance = options.gradient_tolerance;

  double best_value = std::numeric_limits<double>::infinity();
  Vector best_eta;
  for (const bool jitter : {false, true}) {
    if (jitter && (std::isfinite(best_value) || options.estimate_nugget || options.fixed_nugget != 0.0)) break;
    allow_jitter = jitter;
    for (const auto& start : starts) {
      const MinimizeResult r = minimize_box(negative_loglik, start, lower, upper, mopts);
      if (std::isfinite(r.value) && r.value < best_value) {
        best_value = r.value;
        best_eta = r.x;
      }
    }
  }
  if (!std::isfinite(best_value)) throw NumericalFailure("fit: every start failed to factorize K_N");

  Vector thetas;
  double g = 0.0;
  unpack(best_eta, thetas, g);
  CorrelationSpec spec = iso ? CorrelationSpec::isotropic(thetas[0], g) : CorrelationSpec::separable(thetas, g);
  return GpModel(X, y, spec);
}

double iid_log_likelihood(const Vector& residuals) {
  require(residuals.size() >= 1, "iid likelihood: empty residual vector");
  const double psi = residuals.squaredNorm();
  if (!(psi > 0.0) || !std::isfinite(psi)) {
    throw NumericalFailure("iid likelihood: residual sum of squares must be positive and finite");
  }
  return log_likelihood_from(static_cast<double>(residuals.size()), psi, 0.0);
}

}  // namespace lacal
