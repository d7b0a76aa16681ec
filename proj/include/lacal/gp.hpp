#ifndef LACAL_GP_HPP
#define LACAL_GP_HPP

#include "lacal/common.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace lacal {

/// Squared-exponential correlation. One lengthscale means isotropic, d
/// lengthscales means separable. The nugget only enters the diagonal of the
/// training correlation matrix.
struct CorrelationSpec {
  Vector lengthscales;
  double nugget = 0.0;

  static CorrelationSpec isotropic(double theta, double nugget = 0.0);
  static CorrelationSpec separable(const Vector& thetas, double nugget = 0.0);

  bool is_isotropic() const { return lengthscales.size() == 1; }
  void validate(Index dim) const;
};

/// Correlation between two distinct inputs (no nugget).
double correlation(const CorrelationSpec& spec, const Eigen::Ref<const Vector>& x,
                   const Eigen::Ref<const Vector>& y);

/// Training correlation matrix K_N, including the nugget on the diagonal.
Eigen::MatrixXd correlation_matrix(const CorrelationSpec& spec, const DesignMatrix& X);

/// Student-t predictive law of the GP with the scale integrated out.
struct Prediction {
  double mean = 0.0;
  double scale2 = 0.0;
  double dof = 1.0;

  /// Variance of the Student-t law; requires dof > 2.
  double variance() const;
};

/// Zero-mean GP with the process scale marginalized out. Exactly repeated
/// input rows are collapsed internally into site means, so replicated designs
/// cost O(n_unique^3); likelihood and predictions are those of the full
/// N x N system.
class GpModel {
 public:
  static constexpr double kJitter = 1e-8;

  /// Factorizes K_N. When the nugget is zero and the factorization fails, a
  /// jitter of kJitter is added to the diagonal and recorded. Throws
  /// NumericalFailure if that fails too, or if inputs repeat with a zero nugget.
  GpModel(DesignMatrix X, Vector y, CorrelationSpec spec, bool allow_jitter = true);

  const CorrelationSpec& spec() const { return spec_; }
  const DesignMatrix& inputs() const { return X_; }
  const Vector& outputs() const { return y_; }
  Index size() const { return y_.size(); }
  Index unique_sites() const { return sites_.rows(); }
  Index dim() const { return X_.cols(); }
  double psi() const { return psi_; }
  double log_det() const { return log_det_; }
  double jitter() const { return jitter_; }

  /// Log of p(Y | K) with the scale integrated out.
  double log_likelihood() const;

  /// Gradient of log_likelihood with respect to log lengthscales, followed by
  /// log nugget when include_nugget is set.
  Vector log_likelihood_gradient(bool include_nugget) const;

  /// Predictive mean and Student-t scale at x. With noisy_response the nugget
  /// is added to K(x,x), predicting a fresh noisy replicate instead of the
  /// latent surface.
  Prediction predict(const Eigen::Ref<const Vector>& x, bool noisy_response = false) const;

  /// The bracketed variance term K(x,x) - k^T K^{-1} k (with K(x,x)=1).
  double reduced_variance(const Eigen::Ref<const Vector>& x) const;

  /// Estimated noise variance tau^2 * g = nugget * psi / N.
  double noise_variance() const { return (spec_.nugget + jitter_) * psi_ / static_cast<double>(size()); }

 private:
  Vector site_correlations(const Eigen::Ref<const Vector>& x) const;

  DesignMatrix X_;
  Vector y_;
  CorrelationSpec spec_;
  double jitter_ = 0.0;

  DesignMatrix sites_;
  Vector counts_;
  Vector site_means_;
  double within_ss_ = 0.0;

  Eigen::LLT<Eigen::MatrixXd> llt_;
  Vector alpha_;  // M^{-1} site_means
  double psi_ = 0.0;
  double log_det_ = 0.0;
};

enum class LengthscaleMode { Isotropic, Separable };

struct FitOptions {
  LengthscaleMode mode = LengthscaleMode::Isotropic;
  bool estimate_nugget = false;
  /// Nugget used when it is not estimated.
  double fixed_nugget = 0.0;
  double theta_lower = 1e-3;
  double theta_upper = 1e3;
  double nugget_lower = 1e-8;
  double nugget_upper = 1.0;
  /// Number of multi-starts drawn as a Latin hypercube over the log-box.
  int starts = 5;
  /// Explicit start (lengthscales then nugget, natural scale); when set it is
  /// used as the first start and only starts-1 LHS starts are added.
  std::optional<Vector> initial;
  std::uint64_t seed = 0;
  int max_iterations = 200;
  double gradient_tolerance = 1e-6;
};

/// Maximizes the marginal likelihood over log lengthscales (and log nugget)
/// inside the bounds with a bounded quasi-Newton method from each start. The
/// best start wins; ties go to the lowest start index. With a zero fixed
/// nugget, scales whose K_N needs jitter are infeasible unless no start can
/// avoid it. Deterministic given options.seed. Throws NumericalFailure when
/// every start fails.
GpModel fit_hyperparameters(const DesignMatrix& X, const Vector& y, const FitOptions& options);

/// Likelihood of the residual vector under an identity correlation matrix.
double iid_log_likelihood(const Vector& residuals);

}  // namespace lacal

#endif  // LACAL_GP_HPP
