#ifndef LACAL_CALIBRATION_HPP
#define LACAL_CALIBRATION_HPP

#include "lacal/common.hpp"
#include "lacal/design.hpp"
#include "lacal/gp.hpp"
#include "lacal/lagp.hpp"
#include "lacal/optimizer.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace lacal {

/// Field observations in natural units.
struct FieldDataset {
  DesignMatrix x;
  Vector y;
  std::vector<std::string> x_names;

  Index size() const { return y.size(); }
  void validate() const;
};

struct BetaPrior {
  double alpha = 2.0;
  double beta = 2.0;

  /// Log density on [0,1]; -inf outside the support or where the density is 0.
  double log_density(double u) const;
};

/// Independent Beta priors on the unit-cube calibration parameters.
struct PriorSpec {
  std::vector<BetaPrior> components;

  static PriorSpec beta(Index dim, double alpha = 2.0, double beta = 2.0);

  Index dim() const { return static_cast<Index>(components.size()); }
  double log_density(const Vector& u) const;
};

enum class BiasKind { Gp, Iid };

struct BiasSettings {
  BiasKind kind = BiasKind::Gp;
  /// Field input columns the bias GP sees. Empty selects every column with
  /// more than two distinct values.
  std::vector<Index> columns;
  double theta_lower = 1e-3;
  double theta_upper = 1e3;
  /// The nugget absorbs the noise-to-bias variance ratio, which can exceed 1.
  double nugget_lower = 1e-8;
  double nugget_upper = 1e2;
  int starts = 5;
  std::uint64_t seed = 0;
};

/// Columns with more than two distinct values.
std::vector<Index> varying_columns(const DesignMatrix& x);

/// Discrepancy model fitted to residuals Y^F - emulator mean. Gp: separable GP
/// with estimated nugget on the selected (scaled) field columns. Iid: identity
/// correlation, so the likelihood depends on the residuals only through psi.
class BiasModel {
 public:
  BiasModel() = default;

  /// `x_transform` maps natural field inputs to the scale the bias GP works on.
  static BiasModel fit(const DesignMatrix& x_natural, const Vector& residuals, const ScalingTransform& x_transform,
                       const BiasSettings& settings);

  BiasKind kind() const { return kind_; }
  double log_likelihood() const { return log_likelihood_; }
  /// sigma_eps^2: nugget * psi / N for the GP, psi / N for iid.
  double noise_variance() const { return noise_variance_; }
  Index size() const { return residuals_.size(); }
  const Vector& residuals() const { return residuals_; }
  const std::vector<Index>& columns() const { return columns_; }
  const std::optional<GpModel>& gp() const { return gp_; }

  /// Bias at a natural-unit field input. With include_noise the scale covers a
  /// fresh noisy observation, otherwise only the latent bias.
  Prediction predict(const Vector& x_natural, bool include_noise = true) const;

 private:
  Vector model_input(const Vector& x_natural) const;

  BiasKind kind_ = BiasKind::Iid;
  Vector residuals_;
  std::vector<Index> columns_;
  ScalingTransform x_transform_;
  std::optional<GpModel> gp_;
  double log_likelihood_ = 0.0;
  double noise_variance_ = 0.0;
};

/// Simulator or emulator queried at field inputs for one calibration setting.
class ComputerModel {
 public:
  virtual ~ComputerModel() = default;
  virtual Index x_dim() const = 0;
  virtual Index u_dim() const = 0;
  /// One prediction per row of x (natural units), all paired with u (natural).
  virtual std::vector<Prediction> evaluate(const DesignMatrix& x, const Vector& u) const = 0;
};

/// Local approximate GP emulation at the unique rows of x; repeated rows share
/// one emulation.
std::vector<Prediction> emulate_at_field(const EmulatorArchive& archive, const DesignMatrix& x, const Vector& u,
                                         const LocalSettings& settings);

class LocalGpSurrogate final : public ComputerModel {
 public:
  LocalGpSurrogate(const EmulatorArchive& archive, LocalSettings settings)
      : archive_(archive), settings_(std::move(settings)) {}
  Index x_dim() const override { return archive_.x_dim(); }
  Index u_dim() const override { return archive_.u_dim(); }
  std::vector<Prediction> evaluate(const DesignMatrix& x, const Vector& u) const override {
    return emulate_at_field(archive_, x, u, settings_);
  }
  const EmulatorArchive& archive() const { return archive_; }
  const LocalSettings& settings() const { return settings_; }

 private:
  const EmulatorArchive& archive_;
  LocalSettings settings_;
};

/// Direct simulator calls: exact means, zero scale, infinite dof.
class DirectSimulator final : public ComputerModel {
 public:
  using Function = std::function<double(const Vector& x, const Vector& u)>;
  DirectSimulator(Function f, Index x_dim, Index u_dim) : f_(std::move(f)), x_dim_(x_dim), u_dim_(u_dim) {}
  Index x_dim() const override { return x_dim_; }
  Index u_dim() const override { return u_dim_; }
  std::vector<Prediction> evaluate(const DesignMatrix& x, const Vector& u) const override;

 private:
  Function f_;
  Index x_dim_;
  Index u_dim_;
};

/// Everything the objective depends on. Calibration parameters are searched in
/// the unit cube; u_box maps them to natural units.
class CalibrationProblem {
 public:
  CalibrationProblem(FieldDataset field, const ComputerModel& model, PriorSpec prior, BiasSettings bias,
                     BoxDomain u_box, ScalingTransform x_transform);

  const FieldDataset& field() const { return field_; }
  const ComputerModel& model() const { return *model_; }
  const PriorSpec& prior() const { return prior_; }
  const BiasSettings& bias_settings() const { return bias_; }
  const BoxDomain& u_box() const { return u_box_; }
  const ScalingTransform& x_transform() const { return x_transform_; }
  Index u_dim() const { return u_box_.dim(); }

  /// Same problem on different field data (bootstrap, leave-one-out).
  CalibrationProblem with_field(FieldDataset field) const;

  Vector to_natural(const Vector& u_unit) const;
  Vector to_unit(const Vector& u_natural) const;

  std::vector<Prediction> emulate_at_field(const Vector& u_unit) const;
  /// Residuals Y^F - emulator mean and the bias model fitted to them.
  BiasModel fit_bias(const Vector& u_unit) const;
  /// log p(u) + maximized bias log likelihood. -inf where the prior vanishes
  /// (no emulation is done there). Bias fit failures throw NumericalFailure
  /// naming u.
  double objective(const Vector& u_unit) const;

 private:
  FieldDataset field_;
  const ComputerModel* model_;
  PriorSpec prior_;
  BiasSettings bias_;
  BoxDomain u_box_;
  ScalingTransform x_transform_;
};

struct CalibrationResult {
  /// Estimate in the unit cube and in natural units.
  Vector u_hat;
  Vector u_hat_natural;
  double log_posterior = 0.0;
  /// Space-filling evaluations followed by pattern-search evaluations.
  std::vector<TraceEntry> trace;
  Index init_evaluations = 0;
  int iterations = 0;
  bool converged = false;
  BiasModel bias;
  OptimizerSettings settings;
};

/// Space-filling start then pattern search on the objective. Failed objective
/// evaluations count as -inf. Throws NoSignalError when nothing finite was seen.
CalibrationResult calibrate(const CalibrationProblem& problem, const OptimizerSettings& settings);

/// Result-shaped fit at a fixed u (no search): the trace holds the single
/// evaluation.
CalibrationResult fixed_calibration(const CalibrationProblem& problem, const Vector& u_unit,
                                    const OptimizerSettings& settings = {});

struct FieldPrediction {
  double mean = 0.0;
  double emulator_mean = 0.0;
  double bias_mean = 0.0;
  /// Total scale2 of the predictive law and its dof (infinity when Gaussian).
  double scale2 = 0.0;
  double dof = 0.0;
  bool gaussian = false;
  /// False when dof <= 2: only scale2 is meaningful and variance is NaN.
  bool variance_defined = true;
  double variance = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

/// Emulator at (x, u_hat) plus bias plus noise. Gaussian combination of the
/// component variances when min(N_F, n_M) >= 30, else a Student-t with
/// dof = min(N_F, n_M) on the summed scale. Intervals are central at `level`.
std::vector<FieldPrediction> predict_field(const CalibrationResult& result, const CalibrationProblem& problem,
                                           const DesignMatrix& x_new, double level = 0.95);

struct BootstrapOptions {
  Index replicates = 100;
  std::uint64_t seed = 0;
  int threads = 1;
  /// Replaces sigma_eps^2 of the fit when set.
  std::optional<double> noise_variance;
};

struct BootstrapResult {
  /// One row per successful replicate, unit-cube coordinates.
  DesignMatrix u_hat;
  std::vector<double> log_posterior;
  std::vector<Index> replicate;
  Index failures = 0;
};

/// Resamples Y^F as the fitted field mean (emulator at u_hat plus bias mean)
/// plus N(0, sigma_eps^2) noise and recalibrates with the original settings.
/// Replicate b draws from child_rng(seed, b). With sigma_eps^2 = 0 the
/// resample is the observed data itself.
BootstrapResult parametric_bootstrap(const CalibrationResult& result, const CalibrationProblem& problem,
                                     const BootstrapOptions& options);

/// Objective along dimension k at cell midpoints (i + 0.5) / grid_size of the
/// unit interval, other coordinates pinned to `fixed`.
std::vector<TraceEntry> profile_slice(const CalibrationProblem& problem, Index k, const Vector& fixed,
                                      Index grid_size);

}  // namespace lacal

#endif  // LACAL_CALIBRATION_HPP
