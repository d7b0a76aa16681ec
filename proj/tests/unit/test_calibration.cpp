#include "doctest.h"

#include "lacal/calibration.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <set>

using namespace lacal;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vector v2(double a, double b) { return (Vector(2) << a, b).finished(); }

double toy(const Vector& x, const Vector& u) { return x[0] + u[0] * x[1] + 0.5 * u[1] * x[1] * x[1]; }

FieldDataset toy_field(Index n, const Vector& u_star, double noise_sd, std::uint64_t seed) {
  Rng rng(seed);
  FieldDataset f;
  f.x = lhs_sample(n, 2, rng);
  f.y.resize(n);
  for (Index i = 0; i < n; ++i) f.y[i] = toy(f.x.row(i).transpose(), u_star) + noise_sd * standard_normal(rng);
  f.x_names = {"x1", "x2"};
  return f;
}

struct ToySetup {
  DirectSimulator model{toy, 2, 2};
  FieldDataset field;
  BiasSettings bias;

  explicit ToySetup(Index n = 40, BiasKind kind = BiasKind::Iid, std::uint64_t seed = 1)
      : field(toy_field(n, v2(0.3, 0.7), 0.1, seed)) {
    bias.kind = kind;
  }
  CalibrationProblem problem() const {
    return CalibrationProblem(field, model, PriorSpec::beta(2), bias, BoxDomain::unit(2), fit_unit_cube(field.x));
  }
};

// Fixed predictions, for driving predict_field with chosen emulator laws.
class ConstantModel final : public ComputerModel {
 public:
  ConstantModel(double mean, double scale2, double dof) : p_{mean, scale2, dof} {}
  Index x_dim() const override { return 2; }
  Index u_dim() const override { return 2; }
  std::vector<Prediction> evaluate(const DesignMatrix& x, const Vector&) const override {
    return std::vector<Prediction>(static_cast<std::size_t>(x.rows()), p_);
  }

 private:
  Prediction p_;
};

}  // namespace

TEST_CASE("prior: Beta(2,2) values and support") {
  const PriorSpec prior = PriorSpec::beta(2);
  CHECK(prior.log_density(v2(0.5, 0.5)) == doctest::Approx(2.0 * std::log(1.5)).epsilon(1e-14));
  CHECK(prior.log_density(v2(0.5, 0.5)) == doctest::Approx(0.8109).epsilon(1e-4));
  CHECK(prior.log_density(v2(0.0, 0.5)) == -kInf);
  CHECK(prior.log_density(v2(0.5, 1.0)) == -kInf);
  CHECK(prior.log_density(v2(-0.1, 0.5)) == -kInf);
  CHECK(PriorSpec::beta(1, 1.0, 1.0).log_density(Vector::Constant(1, 0.0)) == 0.0);
  CHECK_THROWS_AS(PriorSpec::beta(2, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(prior.log_density(Vector::Constant(3, 0.5)), std::invalid_argument);
}

TEST_CASE("prior: densities integrate to one") {
  for (const auto& [a, b] : std::vector<std::pair<double, double>>{{2, 2}, {3, 5}, {1, 1}, {1.5, 4}}) {
    const BetaPrior p{a, b};
    const int n = 200000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += std::exp(p.log_density((i + 0.5) / n));
    CHECK(sum / n == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("varying columns: more than two distinct values") {
  DesignMatrix x(4, 3);
  x << 0.1, 1.0, 5.0,  //
      0.2, 2.0, 5.0,   //
      0.3, 1.0, 5.0,   //
      0.4, 2.0, 5.0;
  CHECK(varying_columns(x) == std::vector<Index>{0});
}

TEST_CASE("iid bias: constant residuals against the closed form") {
  for (const double c : {0.3, -2.0, 1e-3}) {
    const Index n = 17;
    const Vector r = Vector::Constant(n, c);
    const BiasModel m = BiasModel::fit(DesignMatrix::Zero(n, 2), r, ScalingTransform{}, BiasSettings{BiasKind::Iid});
    const double N = static_cast<double>(n);
    const double psi = N * c * c;
    const double expect = std::lgamma(N / 2) - N / 2 * std::log(2 * M_PI) - N / 2 * std::log(psi / 2);
    CHECK(m.log_likelihood() == doctest::Approx(expect).epsilon(1e-13));
    CHECK(m.noise_variance() == doctest::Approx(c * c).epsilon(1e-13));
    const Prediction p = m.predict(v2(0.5, 0.5));
    CHECK(p.mean == 0.0);
    CHECK(p.scale2 == doctest::Approx(c * c));
    CHECK(p.dof == N);
    CHECK(m.predict(v2(0.5, 0.5), false).scale2 == 0.0);
  }
}

TEST_CASE("unbiased objective equals the GP likelihood with identity correlation") {
  ToySetup s(25);
  const CalibrationProblem problem = s.problem();
  for (const Vector& u : {v2(0.5, 0.5), v2(0.1, 0.9), v2(0.77, 0.2)}) {
    Vector r(s.field.size());
    DesignMatrix sites(s.field.size(), 1);
    for (Index i = 0; i < r.size(); ++i) {
      r[i] = s.field.y[i] - toy(s.field.x.row(i).transpose(), u);
      sites(i, 0) = static_cast<double>(i);
    }
    // Unit-spaced sites and a tiny lengthscale make K_N exactly the identity.
    const GpModel identity(sites, r, CorrelationSpec::isotropic(1e-4, 0.0), false);
    REQUIRE(identity.log_det() == 0.0);
    const double expect = problem.prior().log_density(u) + identity.log_likelihood();
    CHECK(std::abs(problem.objective(u) - expect) <= 1e-12 * std::abs(expect));
  }
}

TEST_CASE("objective: prior boundary short-circuits and failures carry u") {
  std::atomic<int> calls{0};
  const DirectSimulator counting(
      [&](const Vector& x, const Vector& u) {
        ++calls;
        return toy(x, u);
      },
      2, 2);
  ToySetup s(10);
  const CalibrationProblem problem(s.field, counting, PriorSpec::beta(2), s.bias, BoxDomain::unit(2),
                                   fit_unit_cube(s.field.x));
  CHECK(problem.objective(v2(0.0, 0.4)) == -kInf);
  CHECK(problem.objective(v2(0.3, 1.0)) == -kInf);
  CHECK(calls == 0);
  CHECK_THROWS_AS(problem.objective(v2(1.2, 0.4)), std::invalid_argument);

  // Noiseless data at the evaluated u leaves nothing for the bias model.
  FieldDataset exact = s.field;
  for (Index i = 0; i < exact.size(); ++i) exact.y[i] = toy(exact.x.row(i).transpose(), v2(0.25, 0.5));
  const CalibrationProblem degenerate = problem.with_field(exact);
  try {
    degenerate.objective(v2(0.25, 0.5));
    FAIL("expected a numerical failure");
  } catch (const NumericalFailure& e) {
    CHECK(std::string(e.what()).find("u = (0.250000, 0.500000)") != std::string::npos);
  }
}

TEST_CASE("problem: validation and unit mapping") {
  ToySetup s(10);
  const BoxDomain box{v2(1.0, -2.0), v2(3.0, 2.0)};
  const CalibrationProblem p(s.field, s.model, PriorSpec::beta(2), s.bias, box, fit_unit_cube(s.field.x));
  CHECK(p.to_natural(v2(0.5, 0.25)) == v2(2.0, -1.0));
  CHECK(p.to_unit(v2(2.0, -1.0)) == v2(0.5, 0.25));
  CHECK_THROWS_AS(CalibrationProblem(s.field, s.model, PriorSpec::beta(3), s.bias, box, fit_unit_cube(s.field.x)),
                  std::invalid_argument);
  FieldDataset tiny = s.field;
  tiny.x.conservativeResize(2, 2);
  tiny.y.conservativeResize(2);
  CHECK_THROWS_AS(p.with_field(tiny), std::invalid_argument);
}

TEST_CASE("calibrate: recovers u, reproduces its value and is deterministic") {
  ToySetup s(60);
  const CalibrationProblem problem = s.problem();
  OptimizerSettings opt;
  opt.seed = 5;
  const CalibrationResult r = calibrate(problem, opt);
  CHECK((r.u_hat - v2(0.3, 0.7)).norm() < 0.1);
  CHECK(problem.objective(r.u_hat) == r.log_posterior);
  CHECK(r.init_evaluations == 20);
  double best = -kInf;
  for (const TraceEntry& e : r.trace) best = std::max(best, e.value);
  CHECK(best == r.log_posterior);
  CHECK(r.bias.kind() == BiasKind::Iid);
  CHECK(r.bias.log_likelihood() + problem.prior().log_density(r.u_hat) == r.log_posterior);

  const CalibrationResult again = calibrate(problem, opt);
  CHECK(again.u_hat == r.u_hat);
  REQUIRE(again.trace.size() == r.trace.size());
  for (std::size_t i = 0; i < r.trace.size(); ++i) {
    CHECK(again.trace[i].point == r.trace[i].point);
    CHECK(again.trace[i].value == r.trace[i].value);
  }
}

TEST_CASE("calibrate: a constant added to the log prior shifts the trace only") {
  ToySetup s(30);
  const CalibrationProblem problem = s.problem();
  OptimizerSettings opt;
  opt.seed = 2;
  opt.max_evaluations = 120;
  const auto run = [&](double shift) {
    const Objective f = [&](const Vector& u) { return problem.objective(u) + shift; };
    Rng rng = child_rng(opt.seed, 0);
    const InitResult init = space_filling_init(f, BoxDomain::unit(2), opt.init_candidates, opt.init_keep, rng);
    return maximize(f, BoxDomain::unit(2), init.best, opt, init.best_value);
  };
  const MeshState base = run(0.0);
  const MeshState shifted = run(3.0);
  CHECK(shifted.incumbent == base.incumbent);
  REQUIRE(shifted.trace.size() == base.trace.size());
  for (std::size_t i = 0; i < base.trace.size(); ++i) {
    CHECK(shifted.trace[i].point == base.trace[i].point);
    CHECK(shifted.trace[i].value - base.trace[i].value == doctest::Approx(3.0).epsilon(1e-12));
  }
  CHECK(calibrate(problem, opt).u_hat == base.incumbent);
}

TEST_CASE("calibrate: no finite evaluation is a no-signal error") {
  const DirectSimulator broken([](const Vector&, const Vector&) { return std::nan(""); }, 2, 2);
  ToySetup s(10);
  const CalibrationProblem problem(s.field, broken, PriorSpec::beta(2), s.bias, BoxDomain::unit(2),
                                   fit_unit_cube(s.field.x));
  CHECK_THROWS_AS(calibrate(problem, OptimizerSettings{}), NoSignalError);
}

TEST_CASE("gp bias: positive nugget, reported noise and additive prediction") {
  ToySetup s(40, BiasKind::Gp);
  // Add a smooth discrepancy the iid model could not describe.
  for (Index i = 0; i < s.field.size(); ++i) s.field.y[i] += 0.5 * std::sin(4.0 * s.field.x(i, 0));
  const CalibrationProblem problem = s.problem();
  const CalibrationResult r = fixed_calibration(problem, v2(0.3, 0.7));
  REQUIRE(r.bias.gp().has_value());
  CHECK(r.bias.gp()->spec().nugget > 0.0);
  CHECK(r.bias.noise_variance() == doctest::Approx(r.bias.gp()->noise_variance()));
  CHECK(r.bias.columns() == std::vector<Index>{0, 1});
  CHECK(r.trace.size() == 1);
  CHECK(r.trace[0].value == r.log_posterior);
  CHECK(problem.objective(v2(0.3, 0.7)) == r.log_posterior);

  DesignMatrix xs(3, 2);
  xs << 0.2, 0.3, 0.5, 0.5, 0.9, 0.1;
  const std::vector<FieldPrediction> p = predict_field(r, problem, xs);
  for (Index i = 0; i < 3; ++i) {
    const FieldPrediction& q = p[static_cast<std::size_t>(i)];
    CHECK(q.emulator_mean == toy(xs.row(i).transpose(), v2(0.3, 0.7)));
    CHECK(q.mean == q.emulator_mean + q.bias_mean);
    CHECK(std::abs(q.bias_mean - 0.5 * std::sin(4.0 * xs(i, 0))) < 0.2);
    CHECK(q.gaussian);
    CHECK(q.lower < q.mean);
    CHECK(q.upper > q.mean);
  }
}

TEST_CASE("predict_field: mean additivity with a constant emulator") {
  ToySetup s(12);
  const ConstantModel two(2.0, 0.0, kInf);
  FieldDataset f = s.field;
  for (Index i = 0; i < f.size(); ++i) f.y[i] = 2.5 + (i % 2 ? 0.1 : -0.1);
  BiasSettings gp;
  gp.kind = BiasKind::Gp;
  const CalibrationProblem problem(f, two, PriorSpec::beta(2), gp, BoxDomain::unit(2), fit_unit_cube(f.x));
  const CalibrationResult r = fixed_calibration(problem, v2(0.5, 0.5));
  const FieldPrediction p = predict_field(r, problem, f.x.topRows(1))[0];
  CHECK(p.emulator_mean == 2.0);
  CHECK(p.mean == p.emulator_mean + p.bias_mean);
  CHECK(p.bias_mean == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("predict_field: dof rule and interval widths") {
  ToySetup small(12);
  ToySetup large(40);
  const Vector u = v2(0.3, 0.7);

  SUBCASE("Gaussian combination at min dof >= 30") {
    const ConstantModel em(1.0, 0.04, 50.0);
    const CalibrationProblem problem(large.field, em, PriorSpec::beta(2), large.bias, BoxDomain::unit(2),
                                     fit_unit_cube(large.field.x));
    const CalibrationResult r = fixed_calibration(problem, u);
    const FieldPrediction p = predict_field(r, problem, large.field.x.topRows(1))[0];
    const double var = 0.04 * 50.0 / 48.0 + r.bias.noise_variance() * 40.0 / 38.0;
    CHECK(p.gaussian);
    CHECK(std::isinf(p.dof));
    CHECK(p.variance == doctest::Approx(var).epsilon(1e-14));
    CHECK(p.upper - p.mean == doctest::Approx(1.959963984540054 * std::sqrt(var)).epsilon(1e-12));
    CHECK(p.variance >= 0.04 * 50.0 / 48.0);
  }
  SUBCASE("Student-t on the summed scale below 30") {
    const ConstantModel em(1.0, 0.04, 50.0);
    const CalibrationProblem problem(small.field, em, PriorSpec::beta(2), small.bias, BoxDomain::unit(2),
                                     fit_unit_cube(small.field.x));
    const CalibrationResult r = fixed_calibration(problem, u);
    const FieldPrediction p = predict_field(r, problem, small.field.x.topRows(1))[0];
    const double s2 = 0.04 + r.bias.noise_variance();
    CHECK_FALSE(p.gaussian);
    CHECK(p.dof == 12.0);
    CHECK(p.scale2 == doctest::Approx(s2).epsilon(1e-14));
    CHECK(p.variance == doctest::Approx(s2 * 12.0 / 10.0).epsilon(1e-14));
    CHECK(p.variance >= 0.04 * 50.0 / 48.0);
    // t quantile, 12 dof, 0.975.
    CHECK(p.upper - p.mean == doctest::Approx(2.178812829663418 * std::sqrt(s2)).epsilon(1e-10));
  }
  SUBCASE("dof <= 2 reports the scale only") {
    const ConstantModel em(1.0, 0.04, 2.0);
    const CalibrationProblem problem(small.field, em, PriorSpec::beta(2), small.bias, BoxDomain::unit(2),
                                     fit_unit_cube(small.field.x));
    const CalibrationResult r = fixed_calibration(problem, u);
    const FieldPrediction p = predict_field(r, problem, small.field.x.topRows(1))[0];
    CHECK_FALSE(p.variance_defined);
    CHECK(std::isnan(p.variance));
    CHECK(p.dof == 2.0);
    // t quantile, 2 dof, 0.975.
    CHECK(p.upper - p.mean == doctest::Approx(4.302652729749464 * std::sqrt(p.scale2)).epsilon(1e-10));
  }
  CHECK_THROWS_AS(predict_field(fixed_calibration(small.problem(), u), small.problem(), small.field.x, 1.0),
                  std::invalid_argument);
}

TEST_CASE("predict_field: intervals cover fresh observations at nominal rate") {
  ToySetup s(60, BiasKind::Iid, 7);
  const CalibrationProblem problem = s.problem();
  const CalibrationResult r = fixed_calibration(problem, v2(0.3, 0.7));
  Rng rng(99);
  const DesignMatrix xs = lhs_sample(1000, 2, rng);
  const std::vector<FieldPrediction> p = predict_field(r, problem, xs);
  int covered = 0;
  for (Index i = 0; i < xs.rows(); ++i) {
    const double y = toy(xs.row(i).transpose(), v2(0.3, 0.7)) + 0.1 * standard_normal(rng);
    const FieldPrediction& q = p[static_cast<std::size_t>(i)];
    covered += (y >= q.lower && y <= q.upper) ? 1 : 0;
  }
  CHECK(covered >= 900);
  CHECK(covered <= 990);
}

TEST_CASE("bootstrap: empty, degenerate, thread independent") {
  ToySetup s(30);
  const CalibrationProblem problem = s.problem();
  OptimizerSettings opt;
  opt.seed = 4;
  opt.max_evaluations = 150;
  const CalibrationResult r = calibrate(problem, opt);

  BootstrapOptions none;
  none.replicates = 0;
  const BootstrapResult empty = parametric_bootstrap(r, problem, none);
  CHECK(empty.u_hat.rows() == 0);
  CHECK(empty.failures == 0);

  BootstrapOptions zero;
  zero.replicates = 3;
  zero.noise_variance = 0.0;
  const BootstrapResult same = parametric_bootstrap(r, problem, zero);
  REQUIRE(same.u_hat.rows() == 3);
  for (Index b = 0; b < 3; ++b) CHECK(same.u_hat.row(b).transpose() == r.u_hat);

  BootstrapOptions noisy;
  noisy.replicates = 4;
  noisy.seed = 11;
  const BootstrapResult one = parametric_bootstrap(r, problem, noisy);
  noisy.threads = 4;
  const BootstrapResult four = parametric_bootstrap(r, problem, noisy);
  CHECK(one.u_hat == four.u_hat);
  CHECK(one.log_posterior == four.log_posterior);
  CHECK(one.replicate == std::vector<Index>{0, 1, 2, 3});
  std::set<std::vector<double>> distinct;
  for (Index b = 0; b < 4; ++b) distinct.insert({one.u_hat(b, 0), one.u_hat(b, 1)});
  CHECK(distinct.size() > 1);
}

TEST_CASE("bootstrap: failing replicates are counted and skipped") {
  ToySetup s(10);
  const Vector u_fit = v2(0.5, 0.5);
  // Finite only at the fitted setting, so every recalibration has no signal.
  const DirectSimulator picky(
      [&](const Vector& x, const Vector& u) { return u == u_fit ? toy(x, u) : std::nan(""); }, 2, 2);
  const CalibrationProblem problem(s.field, picky, PriorSpec::beta(2), s.bias, BoxDomain::unit(2),
                                   fit_unit_cube(s.field.x));
  const CalibrationResult r = fixed_calibration(problem, u_fit);
  BootstrapOptions o;
  o.replicates = 2;
  const BootstrapResult b = parametric_bootstrap(r, problem, o);
  CHECK(b.failures == 2);
  CHECK(b.u_hat.rows() == 0);
}

TEST_CASE("profile slice: cell midpoints and objective values") {
  ToySetup s(20);
  const CalibrationProblem problem = s.problem();
  const std::vector<TraceEntry> one = profile_slice(problem, 0, v2(0.2, 0.7), 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0].point == v2(0.5, 0.7));
  const std::vector<TraceEntry> four = profile_slice(problem, 1, v2(0.3, 0.0), 4);
  REQUIRE(four.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(four[i].point[0] == 0.3);
    CHECK(four[i].point[1] == (static_cast<double>(i) + 0.5) / 4.0);
    CHECK(four[i].value == problem.objective(four[i].point));
  }
  CHECK_THROWS_AS(profile_slice(problem, 2, v2(0.3, 0.3), 4), std::invalid_argument);
  CHECK_THROWS_AS(profile_slice(problem, 0, v2(0.3, 0.3), 0), std::invalid_argument);
}

namespace {

double smooth(const Vector& x, const Vector& u) {
  return std::sin(2.0 * x[0]) + x[1] * u[0] + u[1] * u[1];
}

struct ArchiveSetup {
  SimulationDataset sim;
  FieldDataset field;
  std::unique_ptr<EmulatorArchive> archive;

  ArchiveSetup() {
    Rng rng(21);
    const DesignMatrix joint = lhs_sample(800, 4, rng);
    field.x = lhs_sample(20, 2, rng);
    field.y = Vector::Zero(20);
    const Vector u_field = v2(0.4, 0.6);
    sim.x.resize(820, 2);
    sim.u.resize(820, 2);
    sim.y.resize(820);
    for (Index i = 0; i < 800; ++i) {
      sim.x.row(i) = joint.row(i).head(2);
      sim.u.row(i) = joint.row(i).tail(2);
    }
    // The field sites paired with u_field, so emulation there nearly interpolates.
    for (Index i = 0; i < 20; ++i) {
      sim.x.row(800 + i) = field.x.row(i);
      sim.u.row(800 + i) = u_field.transpose();
    }
    for (Index i = 0; i < 820; ++i) sim.y[i] = smooth(sim.x.row(i).transpose(), sim.u.row(i).transpose());
    archive = std::make_unique<EmulatorArchive>(sim, fit_unit_cube(sim.joint()));
  }
};

}  // namespace

TEST_CASE("emulate_at_field: one emulation per site, near interpolation, u-dependent designs") {
  const ArchiveSetup a;
  LocalSettings ls;
  const std::vector<Prediction> p = emulate_at_field(*a.archive, a.field.x, v2(0.4, 0.6), ls);
  REQUIRE(p.size() == 20);
  for (Index i = 0; i < 20; ++i) {
    CHECK(std::abs(p[static_cast<std::size_t>(i)].mean - a.sim.y[800 + i]) < 1e-4);
    CHECK(p[static_cast<std::size_t>(i)].dof == 50.0);
  }

  DesignMatrix repeated(40, 2);
  repeated << a.field.x, a.field.x;
  const std::vector<Prediction> rp = emulate_at_field(*a.archive, repeated, v2(0.4, 0.6), ls);
  for (std::size_t i = 0; i < 20; ++i) {
    CHECK(rp[i].mean == p[i].mean);
    CHECK(rp[i + 20].mean == p[i].mean);
    CHECK(rp[i + 20].scale2 == p[i].scale2);
  }

  int differing = 0;
  for (Index i = 0; i < 20; ++i) {
    const Vector x = a.field.x.row(i).transpose();
    const LocalEmulation e1 = emulate_one(*a.archive, a.archive->query_point(x, v2(0.1, 0.1)), ls);
    const LocalEmulation e2 = emulate_one(*a.archive, a.archive->query_point(x, v2(0.9, 0.8)), ls);
    std::set<Index> s1(e1.local_indices.begin(), e1.local_indices.end());
    std::set<Index> s2(e2.local_indices.begin(), e2.local_indices.end());
    differing += s1 != s2 ? 1 : 0;
  }
  CHECK(differing > 0);
}

TEST_CASE("surrogate calibration: variance never below the emulator's") {
  ArchiveSetup a;
  for (Index i = 0; i < 20; ++i) a.field.y[i] = smooth(a.field.x.row(i).transpose(), v2(0.4, 0.6)) + 0.05 * (i % 3 - 1.0);
  const LocalGpSurrogate surrogate(*a.archive, LocalSettings{});
  BiasSettings gp;
  gp.kind = BiasKind::Gp;
  const CalibrationProblem problem(a.field, surrogate, PriorSpec::beta(2), gp, BoxDomain::unit(2),
                                   a.archive->transform().columns(0, 2));
  const CalibrationResult r = fixed_calibration(problem, v2(0.4, 0.6));
  Rng rng(3);
  const DesignMatrix xs = lhs_sample(30, 2, rng);
  const std::vector<FieldPrediction> p = predict_field(r, problem, xs);
  const std::vector<Prediction> em = surrogate.evaluate(xs, v2(0.4, 0.6));
  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK(p[i].emulator_mean == em[i].mean);
    CHECK(p[i].variance >= em[i].variance());
  }
}
