#include "lacal/benchmark.hpp"

#include "lacal/design.hpp"
#include "lacal/io.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>

namespace lacal {

double synthetic_simulator(const Vector& x, const Vector& u) {
  require(x.size() == 2 && u.size() == 2, "simulator: expects 2-d x and 2-d u");
  require(x[1] > 0.0, "simulator: x2 must be positive");
  const double x1 = x[0];
  const double x1_2 = x1 * x1;
  const double x1_3 = x1_2 * x1;
  const double num = 1000.0 * u[0] * x1_3 + 1900.0 * x1_2 + 2092.0 * x1 + 60.0;
  const double den = 100.0 * u[1] * x1_3 + 500.0 * x1_2 + 4.0 * x1 + 20.0;
  return -std::expm1(-1.0 / (2.0 * x[1])) * num / den;
}

double synthetic_bias(const Vector& x) {
  require(x.size() == 2, "bias: expects 2-d x");
  return (10.0 * x[0] * x[0] + 4.0 * x[1] * x[1]) / (50.0 * x[0] * x[1] + 10.0);
}

void SyntheticSpec::validate() const {
  require(u_star.size() == 2, "synthetic spec: u* must be 2-d");
  require(noise_sd >= 0.0, "synthetic spec: noise sd must be nonnegative");
  require(replicates >= 1, "synthetic spec: replicates must be at least 1");
  require(field_sites >= 1 && sim_design_size >= 1 && validation_size >= 1, "synthetic spec: sizes must be positive");
  require(aligned_per_site >= 0, "synthetic spec: aligned rows per site must be nonnegative");
}

double SyntheticSpec::truth(const Vector& x) const {
  return synthetic_simulator(x, u_star) + (biased ? synthetic_bias(x) : 0.0);
}

Experiment generate_experiment(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  Experiment e;
  e.spec = spec;

  Rng design_rng = child_rng(seed, 1);
  e.sites = lhs_sample(spec.field_sites, 2, design_rng);
  const Index n_field = spec.field_sites * spec.replicates;
  e.field.x.resize(n_field, 2);
  e.field.y.resize(n_field);
  e.field.x_names = {"x1", "x2"};
  Rng noise_rng = child_rng(seed, 2);
  for (Index s = 0; s < spec.field_sites; ++s) {
    const Vector x = e.sites.row(s).transpose();
    const double mean = spec.truth(x);
    for (Index r = 0; r < spec.replicates; ++r) {
      const Index row = s * spec.replicates + r;
      e.field.x.row(row) = x.transpose();
      e.field.y[row] = mean + spec.noise_sd * standard_normal(noise_rng);
    }
  }

  Rng sim_rng = child_rng(seed, 3);
  const DesignMatrix base = lhs_sample(spec.sim_design_size, 4, sim_rng);
  const Index n_aligned = spec.field_sites * spec.aligned_per_site;
  DesignMatrix aligned_u(0, 2);
  if (n_aligned > 0) {
    Rng aligned_rng = child_rng(seed, 4);
    aligned_u = lhs_sample(n_aligned, 2, aligned_rng);
  }
  const Index n_sim = spec.sim_design_size + n_aligned;
  e.sim.x.resize(n_sim, 2);
  e.sim.u.resize(n_sim, 2);
  e.sim.y.resize(n_sim);
  e.sim.x_names = {"x1", "x2"};
  e.sim.u_names = {"u1", "u2"};
  e.sim.x.topRows(spec.sim_design_size) = base.leftCols(2);
  e.sim.u.topRows(spec.sim_design_size) = base.rightCols(2);
  for (Index i = 0; i < n_aligned; ++i) {
    e.sim.x.row(spec.sim_design_size + i) = e.sites.row(i / spec.aligned_per_site);
    e.sim.u.row(spec.sim_design_size + i) = aligned_u.row(i);
  }
  for (Index i = 0; i < n_sim; ++i) e.sim.y[i] = synthetic_simulator(e.sim.x.row(i).transpose(), e.sim.u.row(i).transpose());

  Rng validation_rng = child_rng(seed, 5);
  e.validation_x = lhs_sample(spec.validation_size, 2, validation_rng);
  e.validation_truth.resize(spec.validation_size);
  for (Index i = 0; i < spec.validation_size; ++i) e.validation_truth[i] = spec.truth(e.validation_x.row(i).transpose());
  return e;
}

BenchmarkContext::BenchmarkContext(const Experiment& experiment, const BenchmarkSettings& settings)
    : experiment_(experiment), settings_(settings) {
  ScalingTransform transform = fit_unit_cube(experiment.sim.joint());
  archive_ = std::make_unique<EmulatorArchive>(experiment.sim, std::move(transform), settings.local.n_m);
  emulator_ = std::make_unique<LocalGpSurrogate>(*archive_, settings.local);
  simulator_ = std::make_unique<DirectSimulator>(synthetic_simulator, 2, 2);
}

CalibrationProblem BenchmarkContext::problem(const ComputerModel& model) const {
  BiasSettings bias = settings_.bias;
  bias.kind = settings_.bias_kind ? *settings_.bias_kind : (experiment_.spec.biased ? BiasKind::Gp : BiasKind::Iid);
  return CalibrationProblem(experiment_.field, model, PriorSpec::beta(2, settings_.prior_alpha, settings_.prior_beta),
                            bias, BoxDomain::unit(2), archive_->transform().columns(0, 2));
}

namespace {

struct Scores {
  double rmse = 0.0;
  double mean_sd = 0.0;
};

Scores score(const std::vector<FieldPrediction>& preds, const Vector& truth) {
  Vector mean(static_cast<Index>(preds.size()));
  double sd = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    mean[static_cast<Index>(i)] = preds[i].mean;
    sd += std::sqrt(preds[i].variance_defined ? preds[i].variance : preds[i].scale2);
  }
  return Scores{rmse(mean, truth), sd / static_cast<double>(preds.size())};
}

}  // namespace

ComparatorResult run_comparator(const std::string& label, const BenchmarkContext& context,
                                const BenchmarkSettings& settings, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  const Experiment& e = context.experiment();
  ComparatorResult out;
  out.label = label;
  try {
    if (label == "field-only") {
      const ScalingTransform xt = context.archive().transform().columns(0, 2);
      FitOptions fit;
      fit.mode = settings.field_only_mode;
      fit.estimate_nugget = true;
      fit.seed = seed;
      const GpModel gp = fit_hyperparameters(xt.apply(e.field.x), e.field.y, fit);
      std::vector<FieldPrediction> preds(static_cast<std::size_t>(e.validation_x.rows()));
      for (Index i = 0; i < e.validation_x.rows(); ++i) {
        const Prediction p = gp.predict(xt.apply_row(e.validation_x.row(i).transpose()), true);
        FieldPrediction& f = preds[static_cast<std::size_t>(i)];
        f.mean = p.mean;
        f.variance = p.variance();
      }
      const Scores s = score(preds, e.validation_truth);
      out.rmse = s.rmse;
      out.mean_sd = s.mean_sd;
    } else {
      const std::size_t dash = label.rfind('-');
      const std::string u_part = dash == std::string::npos ? label : label.substr(0, dash);
      const std::string m_part = dash == std::string::npos ? "Mhat" : label.substr(dash + 1);
      require(m_part == "Mhat" || m_part == "M", "unknown comparator: " + label);
      const ComputerModel& model = m_part == "Mhat" ? context.emulator() : context.simulator();
      const CalibrationProblem problem = context.problem(model);
      OptimizerSettings opt = settings.optimizer;
      opt.seed = seed;
      CalibrationResult fit;
      if (u_part == "uhat") {
        fit = calibrate(problem, opt);
      } else if (u_part == "urand") {
        Rng rng = child_rng(seed, 7);
        Vector u(2);
        u[0] = uniform01(rng);
        u[1] = uniform01(rng);
        fit = fixed_calibration(problem, u, opt);
      } else if (u_part == "u*") {
        fit = fixed_calibration(problem, problem.to_unit(e.spec.u_star), opt);
      } else {
        throw std::invalid_argument("unknown comparator: " + label);
      }
      const Scores s = score(predict_field(fit, problem, e.validation_x), e.validation_truth);
      out.rmse = s.rmse;
      out.mean_sd = s.mean_sd;
      out.u = fit.u_hat_natural;
    }
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::exception& ex) {
    out.failed = true;
    out.error = ex.what();
    out.rmse = out.mean_sd = std::numeric_limits<double>::quiet_NaN();
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

std::vector<double> MCReport::rmse(const std::string& label) const {
  std::vector<double> out;
  for (const MCRow& row : rows) {
    if (row.result.label == label && !row.result.failed) out.push_back(row.result.rmse);
  }
  return out;
}

std::uint64_t repetition_seed(std::uint64_t seed, Index rep) {
  Rng rng = child_rng(seed, static_cast<std::uint64_t>(rep));
  return rng();
}

MCReport run_mc(Index repetitions, const SyntheticSpec& spec, const BenchmarkSettings& settings, std::uint64_t seed) {
  require(repetitions >= 1, "benchmark: at least one repetition is required");
  spec.validate();
  for (const std::string& label : settings.comparators) {
    bool known = false;
    for (const std::string& l : comparator_labels()) known = known || l == label;
    require(known, "benchmark: unknown comparator " + label);
  }
  BenchmarkSettings inner = settings;
  if (repetitions > 1) inner.local.threads = 1;
  const int outer_threads = repetitions > 1 ? settings.threads : 1;
  if (repetitions == 1) inner.local.threads = settings.threads;

  std::vector<std::vector<MCRow>> per_rep(static_cast<std::size_t>(repetitions));
  parallel_for(per_rep.size(), outer_threads, [&](std::size_t rep) {
    const std::uint64_t rep_seed = repetition_seed(seed, static_cast<Index>(rep));
    std::vector<MCRow>& rows = per_rep[rep];
    auto row_for = [&](ComparatorResult r) {
      MCRow row;
      row.seed = rep_seed;
      row.repetition = static_cast<Index>(rep);
      row.replicates = spec.replicates;
      row.biased = spec.biased;
      row.result = std::move(r);
      return row;
    };
    try {
      const Experiment e = generate_experiment(spec, rep_seed);
      const BenchmarkContext context(e, inner);
      for (const std::string& label : inner.comparators) rows.push_back(row_for(run_comparator(label, context, inner, rep_seed)));
    } catch (const std::exception& ex) {
      rows.clear();
      for (const std::string& label : inner.comparators) {
        ComparatorResult r;
        r.label = label;
        r.failed = true;
        r.error = ex.what();
        r.rmse = r.mean_sd = std::numeric_limits<double>::quiet_NaN();
        rows.push_back(row_for(std::move(r)));
      }
    }
  });
  MCReport report;
  for (auto& rows : per_rep) report.rows.insert(report.rows.end(), rows.begin(), rows.end());
  return report;
}

void write_report(std::ostream& out, const MCReport& report) {
  out << "seed,label,r,biased,rmse,mean_sd,u1,u2\n";
  for (const MCRow& row : report.rows) {
    const ComparatorResult& r = row.result;
    out << row.seed << ',' << r.label << ',' << row.replicates << ',' << (row.biased ? 1 : 0) << ','
        << format_number(r.rmse) << ',' << format_number(r.mean_sd);
    for (Index k = 0; k < 2; ++k) {
      out << ',' << (k < r.u.size() ? format_number(r.u[k]) : std::string("NA"));
    }
    out << '\n';
  }
}

void write_timing(std::ostream& out, const MCReport& report) {
  out << "seed,label,r,biased,seconds\n";
  for (const MCRow& row : report.rows) {
    out << row.seed << ',' << row.result.label << ',' << row.replicates << ',' << (row.biased ? 1 : 0) << ','
        << format_number(row.result.seconds) << '\n';
  }
}

double rmse(const Vector& predictions, const Vector& truth) {
  require(predictions.size() == truth.size(), "rmse: length mismatch");
  require(predictions.size() >= 1, "rmse: empty input");
  return std::sqrt((predictions - truth).squaredNorm() / static_cast<double>(truth.size()));
}

BatchPredictor archive_predictor(const EmulatorArchive& archive, const LocalSettings& settings) {
  return [&archive, settings](const DesignMatrix& points) {
    const DesignMatrix queries = archive.transform().apply(points);
    const std::vector<LocalEmulation> em = emulate_batch(archive, queries, settings);
    Vector out(static_cast<Index>(em.size()));
    for (std::size_t i = 0; i < em.size(); ++i) out[static_cast<Index>(i)] = em[i].prediction.mean;
    return out;
  };
}

MainEffect main_effects(const BatchPredictor& predictor, const BoxDomain& ranges, Index d, Index grid_size,
                        Index mc_size, Rng& rng) {
  ranges.validate();
  require(d >= 0 && d < ranges.dim(), "main effects: input index out of range");
  require(grid_size >= 2, "main effects: grid size must be at least 2");
  require(mc_size >= 1, "main effects: Monte Carlo size must be positive");
  const Index dim = ranges.dim();
  DesignMatrix draws = lhs_sample(mc_size, dim, rng);
  for (Index j = 0; j < dim; ++j) {
    draws.col(j) = (ranges.lower[j] + draws.col(j).array() * (ranges.upper[j] - ranges.lower[j])).matrix();
  }
  MainEffect out;
  out.input = d;
  out.grid.resize(grid_size);
  DesignMatrix points(grid_size * mc_size, dim);
  for (Index g = 0; g < grid_size; ++g) {
    out.grid[g] = ranges.lower[d] + (ranges.upper[d] - ranges.lower[d]) * static_cast<double>(g) /
                                        static_cast<double>(grid_size - 1);
    points.middleRows(g * mc_size, mc_size) = draws;
    points.middleRows(g * mc_size, mc_size).col(d).setConstant(out.grid[g]);
  }
  const Vector preds = predictor(points);
  require(preds.size() == points.rows(), "main effects: predictor returned the wrong number of values");
  out.effect.resize(grid_size);
  for (Index g = 0; g < grid_size; ++g) out.effect[g] = preds.segment(g * mc_size, mc_size).mean();
  return out;
}

std::vector<LooRow> leave_one_out(const CalibrationProblem& problem, const OptimizerSettings& settings,
                                  const std::function<double(const Vector&)>& truth, int threads) {
  const FieldDataset& field = problem.field();
  std::map<std::vector<double>, Index> seen;
  std::vector<Index> site_of(static_cast<std::size_t>(field.size()));
  std::vector<Index> first_row;
  for (Index i = 0; i < field.size(); ++i) {
    std::vector<double> key(static_cast<std::size_t>(field.x.cols()));
    for (Index j = 0; j < field.x.cols(); ++j) key[static_cast<std::size_t>(j)] = field.x(i, j);
    const auto [it, inserted] = seen.emplace(std::move(key), static_cast<Index>(first_row.size()));
    if (inserted) first_row.push_back(i);
    site_of[static_cast<std::size_t>(i)] = it->second;
  }
  const Index n_sites = static_cast<Index>(first_row.size());
  require(n_sites >= 4, "leave-one-out: at least 4 distinct field sites are required");

  std::vector<LooRow> out(static_cast<std::size_t>(n_sites));
  parallel_for(out.size(), threads, [&](std::size_t s) {
    LooRow& row = out[s];
    row.site = static_cast<Index>(s);
    row.x = field.x.row(first_row[s]).transpose();
    std::vector<Index> keep;
    double sum = 0.0;
    for (Index i = 0; i < field.size(); ++i) {
      if (site_of[static_cast<std::size_t>(i)] == static_cast<Index>(s)) {
        sum += field.y[i];
        ++row.count;
      } else {
        keep.push_back(i);
      }
    }
    row.observed_mean = sum / static_cast<double>(row.count);
    FieldDataset rest;
    rest.x_names = field.x_names;
    rest.x.resize(static_cast<Index>(keep.size()), field.x.cols());
    rest.y.resize(static_cast<Index>(keep.size()));
    for (std::size_t i = 0; i < keep.size(); ++i) {
      rest.x.row(static_cast<Index>(i)) = field.x.row(keep[i]);
      rest.y[static_cast<Index>(i)] = field.y[keep[i]];
    }
    const CalibrationProblem sub = problem.with_field(std::move(rest));
    const CalibrationResult fit = calibrate(sub, settings);
    row.u_hat = fit.u_hat_natural;
    row.prediction = predict_field(fit, sub, row.x.transpose())[0];
    row.truth = truth ? truth(row.x) : std::numeric_limits<double>::quiet_NaN();
    const double target = truth ? row.truth : row.observed_mean;
    row.covered = row.prediction.lower <= target && target <= row.prediction.upper;
  });
  return out;
}

}  // namespace lacal
