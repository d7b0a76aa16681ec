#include "lacal/calibration.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace lacal {

namespace {

constexpr double kMinusInf = -std::numeric_limits<double>::infinity();

std::string describe(const Vector& u) {
  std::string s = "(";
  for (Index i = 0; i < u.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(u[i]);
  }
  return s + ")";
}

}  // namespace

void FieldDataset::validate() const {
  check_design(x, "field inputs");
  require(x.rows() == y.size(), "field: output count must match input rows");
  require(y.size() >= 3, "field: at least 3 observations are required");
  require(y.allFinite(), "field: outputs must be finite");
}

double BetaPrior::log_density(double u) const {
  if (!(u >= 0.0 && u <= 1.0)) return kMinusInf;
  const double norm = std::lgamma(alpha + beta) - std::lgamma(alpha) - std::lgamma(beta);
  const double a = alpha == 1.0 ? 0.0 : (alpha - 1.0) * std::log(u);
  const double b = beta == 1.0 ? 0.0 : (beta - 1.0) * std::log1p(-u);
  const double v = norm + a + b;
  return std::isnan(v) ? kMinusInf : v;
}

PriorSpec PriorSpec::beta(Index dim, double alpha, double beta) {
  require(dim >= 1, "prior: dimension must be positive");
  require(alpha > 0.0 && beta > 0.0, "prior: Beta parameters must be positive");
  return PriorSpec{std::vector<BetaPrior>(static_cast<std::size_t>(dim), BetaPrior{alpha, beta})};
}

double PriorSpec::log_density(const Vector& u) const {
  require(u.size() == dim(), "prior: dimension mismatch");
  double total = 0.0;
  for (Index k = 0; k < u.size(); ++k) total += components[static_cast<std::size_t>(k)].log_density(u[k]);
  return total;
}

std::vector<Index> varying_columns(const DesignMatrix& x) {
  std::vector<Index> out;
  for (Index j = 0; j < x.cols(); ++j) {
    std::set<double> distinct;
    for (Index i = 0; i < x.rows() && distinct.size() < 3; ++i) distinct.insert(x(i, j));
    if (distinct.size() > 2) out.push_back(j);
  }
  return out;
}

BiasModel BiasModel::fit(const DesignMatrix& x_natural, const Vector& residuals, const ScalingTransform& x_transform,
                         const BiasSettings& settings) {
  require(x_natural.rows() == residuals.size(), "bias: residual count must match field rows");
  BiasModel m;
  m.kind_ = settings.kind;
  m.residuals_ = residuals;
  if (settings.kind == BiasKind::Iid) {
    m.log_likelihood_ = iid_log_likelihood(residuals);
    m.noise_variance_ = residuals.squaredNorm() / static_cast<double>(residuals.size());
    return m;
  }
  require(x_transform.dim() == x_natural.cols(), "bias: transform dimension must match field inputs");
  m.columns_ = settings.columns.empty() ? varying_columns(x_natural) : settings.columns;
  require(!m.columns_.empty(), "bias: no field input column varies enough for a bias GP");
  for (Index c : m.columns_) require(c >= 0 && c < x_natural.cols(), "bias: column index out of range");
  m.x_transform_ = x_transform;

  const DesignMatrix scaled = x_transform.apply(x_natural);
  DesignMatrix inputs(scaled.rows(), static_cast<Index>(m.columns_.size()));
  for (std::size_t j = 0; j < m.columns_.size(); ++j) inputs.col(static_cast<Index>(j)) = scaled.col(m.columns_[j]);

  FitOptions fit;
  fit.mode = LengthscaleMode::Separable;
  fit.estimate_nugget = true;
  fit.theta_lower = settings.theta_lower;
  fit.theta_upper = settings.theta_upper;
  fit.nugget_lower = settings.nugget_lower;
  fit.nugget_upper = settings.nugget_upper;
  fit.starts = settings.starts;
  fit.seed = settings.seed;
  m.gp_.emplace(fit_hyperparameters(inputs, residuals, fit));
  m.log_likelihood_ = m.gp_->log_likelihood();
  m.noise_variance_ = m.gp_->noise_variance();
  return m;
}

Vector BiasModel::model_input(const Vector& x_natural) const {
  const Vector scaled = x_transform_.apply_row(x_natural);
  Vector out(static_cast<Index>(columns_.size()));
  for (std::size_t j = 0; j < columns_.size(); ++j) out[static_cast<Index>(j)] = scaled[columns_[j]];
  return out;
}

Prediction BiasModel::predict(const Vector& x_natural, bool include_noise) const {
  if (kind_ == BiasKind::Iid) {
    Prediction p;
    p.mean = 0.0;
    p.scale2 = include_noise ? noise_variance_ : 0.0;
    p.dof = static_cast<double>(residuals_.size());
    return p;
  }
  require(gp_.has_value(), "bias: model has not been fitted");
  require(x_natural.size() == x_transform_.dim(), "bias: input dimension mismatch");
  return gp_->predict(model_input(x_natural), include_noise);
}

std::vector<Prediction> emulate_at_field(const EmulatorArchive& archive, const DesignMatrix& x, const Vector& u,
                                         const LocalSettings& settings) {
  require(x.cols() == archive.x_dim() && u.size() == archive.u_dim(), "emulate at field: dimension mismatch");
  std::map<std::vector<double>, Index> seen;
  std::vector<Index> site_of(static_cast<std::size_t>(x.rows()));
  std::vector<Index> unique_rows;
  for (Index i = 0; i < x.rows(); ++i) {
    std::vector<double> key(static_cast<std::size_t>(x.cols()));
    for (Index j = 0; j < x.cols(); ++j) key[static_cast<std::size_t>(j)] = x(i, j);
    const auto [it, inserted] = seen.emplace(std::move(key), static_cast<Index>(unique_rows.size()));
    if (inserted) unique_rows.push_back(i);
    site_of[static_cast<std::size_t>(i)] = it->second;
  }
  DesignMatrix queries(static_cast<Index>(unique_rows.size()), archive.inputs().cols());
  for (std::size_t s = 0; s < unique_rows.size(); ++s) {
    queries.row(static_cast<Index>(s)) = archive.query_point(x.row(unique_rows[s]).transpose(), u).transpose();
  }
  const std::vector<LocalEmulation> em = emulate_batch(archive, queries, settings);
  std::vector<Prediction> out(static_cast<std::size_t>(x.rows()));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = em[static_cast<std::size_t>(site_of[i])].prediction;
  return out;
}

std::vector<Prediction> DirectSimulator::evaluate(const DesignMatrix& x, const Vector& u) const {
  require(x.cols() == x_dim_ && u.size() == u_dim_, "simulator: dimension mismatch");
  std::vector<Prediction> out(static_cast<std::size_t>(x.rows()));
  for (Index i = 0; i < x.rows(); ++i) {
    Prediction& p = out[static_cast<std::size_t>(i)];
    p.mean = f_(x.row(i).transpose(), u);
    p.scale2 = 0.0;
    p.dof = std::numeric_limits<double>::infinity();
  }
  return out;
}

CalibrationProblem::CalibrationProblem(FieldDataset field, const ComputerModel& model, PriorSpec prior,
                                       BiasSettings bias, BoxDomain u_box, ScalingTransform x_transform)
    : field_(std::move(field)),
      model_(&model),
      prior_(std::move(prior)),
      bias_(std::move(bias)),
      u_box_(std::move(u_box)),
      x_transform_(std::move(x_transform)) {
  field_.validate();
  u_box_.validate();
  require(field_.x.cols() == model.x_dim(), "calibration: field inputs do not match the computer model");
  require(u_box_.dim() == model.u_dim(), "calibration: u box does not match the computer model");
  require(prior_.dim() == u_box_.dim(), "calibration: prior dimension does not match u");
  require(x_transform_.dim() == field_.x.cols(), "calibration: transform does not match field inputs");
}

CalibrationProblem CalibrationProblem::with_field(FieldDataset field) const {
  return CalibrationProblem(std::move(field), *model_, prior_, bias_, u_box_, x_transform_);
}

Vector CalibrationProblem::to_natural(const Vector& u_unit) const {
  return u_box_.lower.array() + u_unit.array() * (u_box_.upper - u_box_.lower).array();
}

Vector CalibrationProblem::to_unit(const Vector& u_natural) const {
  return (u_natural - u_box_.lower).array() / (u_box_.upper - u_box_.lower).array();
}

std::vector<Prediction> CalibrationProblem::emulate_at_field(const Vector& u_unit) const {
  require(u_unit.size() == u_dim(), "calibration: u dimension mismatch");
  return model_->evaluate(field_.x, to_natural(u_unit));
}

BiasModel CalibrationProblem::fit_bias(const Vector& u_unit) const {
  const std::vector<Prediction> emulated = emulate_at_field(u_unit);
  Vector residuals(field_.size());
  for (Index i = 0; i < residuals.size(); ++i) residuals[i] = field_.y[i] - emulated[static_cast<std::size_t>(i)].mean;
  try {
    return BiasModel::fit(field_.x, residuals, x_transform_, bias_);
  } catch (const NumericalFailure& e) {
    throw NumericalFailure("bias fit failed at u = " + describe(u_unit) + ": " + e.what());
  }
}

double CalibrationProblem::objective(const Vector& u_unit) const {
  require(u_unit.size() == u_dim(), "calibration: u dimension mismatch");
  require((u_unit.array() >= 0.0).all() && (u_unit.array() <= 1.0).all(), "calibration: u must lie in the unit cube");
  const double log_prior = prior_.log_density(u_unit);
  if (!std::isfinite(log_prior)) return kMinusInf;
  return log_prior + fit_bias(u_unit).log_likelihood();
}

CalibrationResult calibrate(const CalibrationProblem& problem, const OptimizerSettings& settings) {
  const BoxDomain box = BoxDomain::unit(problem.u_dim());
  const Objective safe = [&](const Vector& u) {
    try {
      return problem.objective(u);
    } catch (const NumericalFailure&) {
      return kMinusInf;
    }
  };
  Rng rng = child_rng(settings.seed, 0);
  InitResult init = space_filling_init(safe, box, settings.init_candidates, settings.init_keep, rng);
  if (!std::isfinite(init.best_value)) {
    throw NoSignalError("calibration: every objective evaluation of the initial design was -inf");
  }
  MeshState state = maximize(safe, box, init.best, settings, init.best_value);

  CalibrationResult out;
  out.trace = std::move(init.trace);
  out.init_evaluations = static_cast<Index>(out.trace.size());
  out.trace.insert(out.trace.end(), state.trace.begin(), state.trace.end());
  out.u_hat = state.incumbent;
  out.u_hat_natural = problem.to_natural(out.u_hat);
  out.log_posterior = state.incumbent_value;
  out.iterations = state.iterations;
  out.converged = state.converged;
  out.bias = problem.fit_bias(out.u_hat);
  out.settings = settings;
  return out;
}

CalibrationResult fixed_calibration(const CalibrationProblem& problem, const Vector& u_unit,
                                    const OptimizerSettings& settings) {
  CalibrationResult out;
  out.u_hat = u_unit;
  out.u_hat_natural = problem.to_natural(u_unit);
  out.bias = problem.fit_bias(u_unit);
  out.log_posterior = problem.prior().log_density(u_unit) + out.bias.log_likelihood();
  out.trace.push_back({u_unit, out.log_posterior});
  out.init_evaluations = 1;
  out.settings = settings;
  return out;
}

std::vector<FieldPrediction> predict_field(const CalibrationResult& result, const CalibrationProblem& problem,
                                           const DesignMatrix& x_new, double level) {
  require(level > 0.0 && level < 1.0, "predict: interval level must lie in (0,1)");
  require(x_new.cols() == problem.field().x.cols(), "predict: input dimension mismatch");
  if (x_new.rows() == 0) return {};
  const std::vector<Prediction> emulated = problem.model().evaluate(x_new, result.u_hat_natural);
  const double tail = 0.5 + 0.5 * level;
  const double z = boost::math::quantile(boost::math::normal_distribution<double>(), tail);

  std::vector<FieldPrediction> out(static_cast<std::size_t>(x_new.rows()));
  for (Index i = 0; i < x_new.rows(); ++i) {
    const Prediction& em = emulated[static_cast<std::size_t>(i)];
    const Prediction bias = result.bias.predict(x_new.row(i).transpose(), true);
    FieldPrediction& p = out[static_cast<std::size_t>(i)];
    p.emulator_mean = em.mean;
    p.bias_mean = bias.mean;
    p.mean = em.mean + bias.mean;
    const double dof = std::min(em.dof, bias.dof);
    if (dof >= 30.0) {
      p.gaussian = true;
      p.dof = std::numeric_limits<double>::infinity();
      p.variance = em.variance() + bias.variance();
      p.scale2 = p.variance;
      const double half = z * std::sqrt(p.variance);
      p.lower = p.mean - half;
      p.upper = p.mean + half;
    } else {
      p.dof = dof;
      p.scale2 = em.scale2 + bias.scale2;
      p.variance_defined = dof > 2.0;
      p.variance = p.variance_defined ? p.scale2 * dof / (dof - 2.0) : std::numeric_limits<double>::quiet_NaN();
      const double t = boost::math::quantile(boost::math::students_t_distribution<double>(dof), tail);
      const double half = t * std::sqrt(p.scale2);
      p.lower = p.mean - half;
      p.upper = p.mean + half;
    }
  }
  return out;
}

BootstrapResult parametric_bootstrap(const CalibrationResult& result, const CalibrationProblem& problem,
                                     const BootstrapOptions& options) {
  require(options.replicates >= 0, "bootstrap: replicate count must be nonnegative");
  BootstrapResult out;
  out.u_hat.resize(0, problem.u_dim());
  if (options.replicates == 0) return out;

  const FieldDataset& field = problem.field();
  const double noise = options.noise_variance ? *options.noise_variance : result.bias.noise_variance();
  require(noise >= 0.0, "bootstrap: noise variance must be nonnegative");
  Vector fitted(field.size());
  if (noise > 0.0) {
    const std::vector<Prediction> emulated = problem.model().evaluate(field.x, result.u_hat_natural);
    for (Index i = 0; i < field.size(); ++i) {
      fitted[i] = emulated[static_cast<std::size_t>(i)].mean + result.bias.predict(field.x.row(i).transpose(), false).mean;
    }
  }
  const double sd = std::sqrt(noise);

  struct Outcome {
    bool ok = false;
    Vector u;
    double value = 0.0;
  };
  std::vector<Outcome> outcomes(static_cast<std::size_t>(options.replicates));
  parallel_for(outcomes.size(), options.threads, [&](std::size_t b) {
    FieldDataset resampled = field;
    if (noise > 0.0) {
      Rng rng = child_rng(options.seed, b);
      for (Index i = 0; i < field.size(); ++i) resampled.y[i] = fitted[i] + sd * standard_normal(rng);
    }
    try {
      const CalibrationResult fit = calibrate(problem.with_field(std::move(resampled)), result.settings);
      outcomes[b] = Outcome{true, fit.u_hat, fit.log_posterior};
    } catch (const std::exception&) {
      outcomes[b] = Outcome{};
    }
  });

  for (std::size_t b = 0; b < outcomes.size(); ++b) {
    if (!outcomes[b].ok) {
      ++out.failures;
      continue;
    }
    out.u_hat.conservativeResize(out.u_hat.rows() + 1, Eigen::NoChange);
    out.u_hat.row(out.u_hat.rows() - 1) = outcomes[b].u.transpose();
    out.log_posterior.push_back(outcomes[b].value);
    out.replicate.push_back(static_cast<Index>(b));
  }
  return out;
}

std::vector<TraceEntry> profile_slice(const CalibrationProblem& problem, Index k, const Vector& fixed,
                                      Index grid_size) {
  require(fixed.size() == problem.u_dim(), "profile slice: fixed values must cover every dimension");
  require(k >= 0 && k < problem.u_dim(), "profile slice: dimension out of range");
  require(grid_size >= 1, "profile slice: grid size must be positive");
  std::vector<TraceEntry> out;
  out.reserve(static_cast<std::size_t>(grid_size));
  for (Index i = 0; i < grid_size; ++i) {
    Vector u = fixed;
    u[k] = (static_cast<double>(i) + 0.5) / static_cast<double>(grid_size);
    const double v = problem.objective(u);
    out.push_back({std::move(u), v});
  }
  return out;
}

}  // namespace lacal
