#include "doctest.h"

#include "lacal/design.hpp"
#include "lacal/gp.hpp"

#include <cmath>

using namespace lacal;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Dense N x N evaluation of the marginal likelihood, written independently of
// the model's replicate collapsing.
double dense_log_likelihood(const DesignMatrix& X, const Vector& y, const CorrelationSpec& spec) {
  const Index n = X.rows();
  Eigen::MatrixXd K(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      double d = 0.0;
      for (Index c = 0; c < X.cols(); ++c) {
        const double th = spec.is_isotropic() ? spec.lengthscales[0] : spec.lengthscales[c];
        d += (X(i, c) - X(j, c)) * (X(i, c) - X(j, c)) / th;
      }
      K(i, j) = std::exp(-d) + (i == j ? spec.nugget : 0.0);
    }
  }
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
  const double psi = y.dot(lu.solve(y));
  const double logdet = std::log(lu.determinant());
  const double N = static_cast<double>(n);
  return std::lgamma(N / 2) - N / 2 * std::log(2 * kPi) - 0.5 * logdet - N / 2 * std::log(psi / 2);
}

Vector log_params(const CorrelationSpec& s, bool nugget) {
  Vector p(s.lengthscales.size() + (nugget ? 1 : 0));
  p.head(s.lengthscales.size()) = s.lengthscales.array().log().matrix();
  if (nugget) p[p.size() - 1] = std::log(s.nugget);
  return p;
}

double ll_at(const DesignMatrix& X, const Vector& y, const Vector& logp, bool nugget, double fixed_g) {
  const Index nt = logp.size() - (nugget ? 1 : 0);
  CorrelationSpec s;
  s.lengthscales = logp.head(nt).array().exp().matrix();
  s.nugget = nugget ? std::exp(logp[nt]) : fixed_g;
  return GpModel(X, y, s, false).log_likelihood();
}

Vector central_difference(const DesignMatrix& X, const Vector& y, const Vector& logp, bool nugget, double fixed_g,
                          double h = 1e-5) {
  Vector g(logp.size());
  for (Index k = 0; k < logp.size(); ++k) {
    Vector a = logp, b = logp;
    a[k] += h;
    b[k] -= h;
    g[k] = (ll_at(X, y, a, nugget, fixed_g) - ll_at(X, y, b, nugget, fixed_g)) / (2 * h);
  }
  return g;
}

}  // namespace

TEST_CASE("correlation: worked values and dimension checks") {
  Vector a = Vector::Zero(2), b(2);
  b << 1.0, 0.0;
  CHECK(correlation(CorrelationSpec::isotropic(1.0), a, b) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  b << 1.0, 1.0;
  const Vector th = (Vector(2) << 1.0, 4.0).finished();
  CHECK(correlation(CorrelationSpec::separable(th), a, b) == doctest::Approx(std::exp(-1.25)).epsilon(1e-14));
  CHECK(correlation(CorrelationSpec::isotropic(1.0), a, a) == 1.0);
  CHECK_THROWS_AS(correlation(CorrelationSpec::separable(th), a, Vector::Zero(3)), std::invalid_argument);

  DesignMatrix X(2, 2);
  X << 0.0, 0.0, 0.3, 0.4;
  const Eigen::MatrixXd K = correlation_matrix(CorrelationSpec::isotropic(0.5, 0.1), X);
  CHECK(K(0, 0) == doctest::Approx(1.1));
  CHECK(K(0, 1) == doctest::Approx(std::exp(-0.25 / 0.5)));
  CHECK(K(0, 1) > 0.0);
  CHECK(K(0, 1) <= 1.0);
}

TEST_CASE("correlation spec validation") {
  CHECK_THROWS_AS(CorrelationSpec::isotropic(0.0), std::invalid_argument);
  CHECK_THROWS_AS(CorrelationSpec::isotropic(1.0, -1e-3), std::invalid_argument);
  CHECK_THROWS_AS(CorrelationSpec::separable((Vector(2) << 1.0, -1.0).finished()), std::invalid_argument);
}

TEST_CASE("likelihood: single observation closed form") {
  DesignMatrix X(1, 2);
  X << 0.3, 0.7;
  Vector y(1);
  y << 2.0;
  for (double theta : {0.01, 1.0, 50.0}) {
    const GpModel m(X, y, CorrelationSpec::isotropic(theta));
    CHECK(m.psi() == doctest::Approx(4.0));
    CHECK(std::abs(m.log_likelihood() + std::log(2.0)) < 1e-12);
  }
}

TEST_CASE("likelihood: matches dense evaluation, including replicated rows") {
  Rng rng(2);
  DesignMatrix X = lhs_sample(12, 2, rng);
  DesignMatrix Xr(18, 2);
  Xr.topRows(12) = X;
  Xr.bottomRows(6) = X.topRows(6);
  Vector y(18);
  for (Index i = 0; i < 18; ++i) y[i] = std::sin(4 * Xr(i, 0)) + Xr(i, 1) + 0.1 * standard_normal(rng);

  const CorrelationSpec iso = CorrelationSpec::isotropic(0.2);
  CHECK(GpModel(X, y.head(12), iso).log_likelihood() ==
        doctest::Approx(dense_log_likelihood(X, y.head(12), iso)).epsilon(1e-9));
  const CorrelationSpec sep = CorrelationSpec::separable((Vector(2) << 0.3, 0.05).finished(), 0.05);
  const GpModel rep(Xr, y, sep);
  CHECK(rep.unique_sites() == 12);
  CHECK(rep.log_likelihood() == doctest::Approx(dense_log_likelihood(Xr, y, sep)).epsilon(1e-9));
}

TEST_CASE("likelihood: scaling outputs by c shifts it by -N log c") {
  Rng rng(4);
  const DesignMatrix X = lhs_sample(15, 3, rng);
  Vector y(15);
  for (Index i = 0; i < 15; ++i) y[i] = X.row(i).sum() + standard_normal(rng) * 0.1;
  const CorrelationSpec s = CorrelationSpec::isotropic(0.4, 1e-4);
  const double base = GpModel(X, y, s).log_likelihood();
  for (double c : {0.1, 3.0, 250.0}) {
    const Vector yc = c * y;
    CHECK(GpModel(X, yc, s).log_likelihood() == doctest::Approx(base - 15.0 * std::log(c)).epsilon(1e-10));
  }
}

TEST_CASE("likelihood: duplicated training point with zero nugget fails") {
  DesignMatrix X(3, 1);
  X << 0.1, 0.5, 0.1;
  const Vector y = Vector::Ones(3);
  CHECK_THROWS_AS(GpModel(X, y, CorrelationSpec::isotropic(1.0)), NumericalFailure);
  CHECK_NOTHROW(GpModel(X, y, CorrelationSpec::isotropic(1.0, 1e-6)));
}

TEST_CASE("jitter is applied and recorded only when needed") {
  DesignMatrix X(2, 1);
  X << 0.0, 1e-9;
  const Vector y = (Vector(2) << 1.0, 1.0).finished();
  const GpModel m(X, y, CorrelationSpec::isotropic(1.0));
  CHECK(m.jitter() == GpModel::kJitter);
  CHECK_THROWS_AS(GpModel(X, y, CorrelationSpec::isotropic(1.0), false), NumericalFailure);

  DesignMatrix Z(2, 1);
  Z << 0.0, 1.0;
  CHECK(GpModel(Z, y, CorrelationSpec::isotropic(1.0)).jitter() == 0.0);
}

TEST_CASE("predict: single training pair by hand") {
  DesignMatrix X(1, 1);
  X << 0.0;
  const Vector y = Vector::Ones(1);
  const GpModel m(X, y, CorrelationSpec::isotropic(1.0));
  const Prediction p = m.predict((Vector(1) << 1.0).finished());
  CHECK(p.mean == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  CHECK(p.scale2 == doctest::Approx(1.0 - std::exp(-2.0)).epsilon(1e-14));
  CHECK(p.dof == 1.0);
}

TEST_CASE("predict: interpolation, far-field reversion and the noisy flag") {
  Rng rng(6);
  const DesignMatrix X = lhs_sample(25, 2, rng);
  Vector y(25);
  for (Index i = 0; i < 25; ++i) y[i] = std::cos(3 * X(i, 0)) * X(i, 1);
  const GpModel m(X, y, CorrelationSpec::isotropic(0.3));
  for (Index i = 0; i < 25; ++i) {
    const Prediction p = m.predict(X.row(i).transpose());
    CHECK(std::abs(p.mean - y[i]) < 1e-6);
    CHECK(p.scale2 < 1e-8);
  }
  const Prediction far = m.predict((Vector(2) << 50.0, -50.0).finished());
  CHECK(std::abs(far.mean) < 1e-12);
  CHECK(far.scale2 == doctest::Approx(m.psi() / 25.0).epsilon(1e-12));

  const GpModel noisy(X, y, CorrelationSpec::isotropic(0.3, 0.2));
  const Vector x = (Vector(2) << 0.4, 0.6).finished();
  CHECK(noisy.predict(x, true).scale2 - noisy.predict(x).scale2 ==
        doctest::Approx(noisy.psi() * 0.2 / 25.0).epsilon(1e-10));
  CHECK(noisy.noise_variance() == doctest::Approx(0.2 * noisy.psi() / 25.0));
}

TEST_CASE("predict: variance conversion needs more than two dof") {
  Prediction p;
  p.scale2 = 2.0;
  p.dof = 2.0;
  CHECK_THROWS_AS(p.variance(), std::invalid_argument);
  p.dof = 10.0;
  CHECK(p.variance() == doctest::Approx(2.5));
}

TEST_CASE("property: scale2 never negative") {
  Rng rng(12);
  const DesignMatrix X = lhs_sample(40, 3, rng);
  Vector y(40);
  for (Index i = 0; i < 40; ++i) y[i] = X.row(i).squaredNorm();
  const GpModel m(X, y, CorrelationSpec::isotropic(2.0));
  const DesignMatrix Q = lhs_sample(200, 3, rng);
  for (Index i = 0; i < Q.rows(); ++i) CHECK(m.predict(Q.row(i).transpose()).scale2 >= 0.0);
  for (Index i = 0; i < X.rows(); ++i) CHECK(m.predict(X.row(i).transpose()).scale2 >= 0.0);
}

TEST_CASE("property: analytic gradient matches central differences") {
  Rng rng(21);
  for (int inst = 0; inst < 10; ++inst) {
    const Index n = 10 + static_cast<Index>(rng() % 60);
    const Index d = 1 + static_cast<Index>(rng() % 3);
    const DesignMatrix X = lhs_sample(n, d, rng);
    Vector y(n);
    for (Index i = 0; i < n; ++i) y[i] = std::sin(5 * X(i, 0)) + 0.3 * standard_normal(rng);
    const bool sep = inst % 2 == 0;
    CorrelationSpec s;
    s.lengthscales = sep ? Vector((0.05 + 0.5 * Eigen::ArrayXd::Random(d).abs()).matrix()) : Vector::Constant(1, 0.2);
    s.nugget = 0.01 + 0.1 * uniform01(rng);
    const GpModel m(X, y, s, false);
    const Vector analytic = m.log_likelihood_gradient(true);
    const Vector numeric = central_difference(X, y, log_params(s, true), true, 0.0);
    for (Index k = 0; k < analytic.size(); ++k) {
      CHECK(std::abs(analytic[k] - numeric[k]) <= 1e-4 * std::max(1.0, std::abs(numeric[k])));
    }
  }
}

TEST_CASE("property: separable with equal lengthscales equals isotropic") {
  Rng rng(31);
  const DesignMatrix X = lhs_sample(30, 3, rng);
  Vector y(30);
  for (Index i = 0; i < 30; ++i) y[i] = X(i, 0) - X(i, 2) * X(i, 1);
  const GpModel iso(X, y, CorrelationSpec::isotropic(0.7, 1e-6));
  const GpModel sep(X, y, CorrelationSpec::separable(Vector::Constant(3, 0.7), 1e-6));
  CHECK(std::abs(iso.log_likelihood() - sep.log_likelihood()) < 1e-10);
  const DesignMatrix Q = lhs_sample(50, 3, rng);
  for (Index i = 0; i < Q.rows(); ++i) {
    const Prediction a = iso.predict(Q.row(i).transpose());
    const Prediction b = sep.predict(Q.row(i).transpose());
    CHECK(std::abs(a.mean - b.mean) < 1e-12);
    CHECK(std::abs(a.scale2 - b.scale2) < 1e-12);
  }
}

TEST_CASE("property: adding a training point never increases the bracketed variance") {
  Rng rng(41);
  const DesignMatrix X = lhs_sample(30, 2, rng);
  Vector y(30);
  for (Index i = 0; i < 30; ++i) y[i] = X(i, 0);
  const DesignMatrix Q = lhs_sample(40, 2, rng);
  const CorrelationSpec s = CorrelationSpec::isotropic(0.1, 1e-6);
  for (Index n = 5; n < 30; n += 5) {
    const GpModel small(X.topRows(n), y.head(n), s);
    const GpModel large(X.topRows(n + 1), y.head(n + 1), s);
    for (Index i = 0; i < Q.rows(); ++i) {
      CHECK(large.reduced_variance(Q.row(i).transpose()) <= small.reduced_variance(Q.row(i).transpose()) + 1e-10);
    }
  }
}

TEST_CASE("fit: smooth 1-d data gives an interior stationary point") {
  DesignMatrix X(30, 1);
  Vector y(30);
  for (Index i = 0; i < 30; ++i) {
    X(i, 0) = static_cast<double>(i) / 29.0;
    y[i] = std::sin(2 * kPi * X(i, 0));
  }
  FitOptions opt;
  opt.fixed_nugget = 1e-6;
  opt.seed = 3;
  const GpModel m = fit_hyperparameters(X, y, opt);
  const double theta = m.spec().lengthscales[0];
  CHECK(theta > opt.theta_lower * 1.01);
  CHECK(theta < opt.theta_upper / 1.01);
  const Vector g = central_difference(X, y, log_params(m.spec(), false), false, 1e-6);
  CHECK(std::abs(g[0]) < 1e-3);

  const GpModel again = fit_hyperparameters(X, y, opt);
  CHECK(again.spec().lengthscales[0] == theta);
}

TEST_CASE("fit: pure noise pushes the nugget well above its floor") {
  Rng rng(17);
  const DesignMatrix X = lhs_sample(60, 2, rng);
  Vector y(60);
  for (Index i = 0; i < 60; ++i) y[i] = standard_normal(rng);
  FitOptions opt;
  opt.mode = LengthscaleMode::Separable;
  opt.estimate_nugget = true;
  const GpModel m = fit_hyperparameters(X, y, opt);
  CHECK(m.spec().nugget >= 10.0 * opt.nugget_lower);
  // The fitted optimum beats the nugget floor at the same lengthscales.
  CorrelationSpec floor = m.spec();
  floor.nugget = opt.nugget_lower;
  CHECK(m.log_likelihood() > GpModel(X, y, floor).log_likelihood());
}

TEST_CASE("fit: argument checks") {
  DesignMatrix X(3, 1);
  X << 0.0, 0.5, 1.0;
  const Vector y = Vector::Ones(3);
  FitOptions opt;
  opt.theta_lower = 2.0;
  opt.theta_upper = 1.0;
  CHECK_THROWS_AS(fit_hyperparameters(X, y, opt), std::invalid_argument);
  opt = FitOptions{};
  opt.starts = 0;
  CHECK_THROWS_AS(fit_hyperparameters(X, y, opt), std::invalid_argument);
}

TEST_CASE("iid likelihood equals the closed form with identity correlation") {
  const Vector r = (Vector(4) << 0.5, -1.0, 2.0, 0.25).finished();
  const double psi = r.squaredNorm();
  const double expected = std::lgamma(2.0) - 2.0 * std::log(2 * kPi) - 2.0 * std::log(psi / 2);
  CHECK(std::abs(iid_log_likelihood(r) - expected) < 1e-12);
  CHECK_THROWS_AS(iid_log_likelihood(Vector::Zero(3)), NumericalFailure);
}
