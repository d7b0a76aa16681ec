#include "lacal/benchmark.hpp"
#include "lacal/calibration.hpp"
#include "lacal/design.hpp"
#include "lacal/io.hpp"
#include "lacal/lagp.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace lacal;

namespace {

const std::set<std::string> kKnownKeys = {
    "seed", "simulation", "field", "u_dim", "u_lower", "u_upper", "scaling", "scaling_subset",
    "scaling_repetitions", "prior_alpha", "prior_beta", "bias", "bias_columns", "bias_theta_lower",
    "bias_theta_upper", "bias_nugget_lower", "bias_nugget_upper", "bias_starts", "bias_seed", "local_n0",
    "local_nm", "local_candidates", "local_nugget", "local_theta_lower", "local_theta_upper", "local_mle_starts",
    "opt_init_mesh", "opt_min_mesh", "opt_max_evaluations", "opt_opportunistic", "opt_init_candidates",
    "opt_init_keep", "predict_inputs", "predict_level", "bootstrap_replicates", "bootstrap_noise_variance",
    "sensitivity_grid", "sensitivity_mc", "bench_repetitions", "bench_replicates", "bench_biased",
    "bench_field_sites", "bench_sim_size", "bench_aligned", "bench_validation", "bench_noise_sd", "bench_u_star",
    "bench_comparators", "bench_field_only_scaling",
};

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string out = ".";
  bool timing = false;
};

struct Run {
  Config config;
  std::uint64_t seed = 0;
  int threads = 1;
  fs::path out;
  bool timing = false;
};

Run prepare(const Options& o) {
  Run r;
  r.config = Config::load(o.config_path);
  r.config.check_known(kKnownKeys);
  if (o.seed) {
    r.seed = *o.seed;
  } else if (r.config.has("seed")) {
    const long long s = r.config.get_int("seed", 0);
    if (s < 0) throw ParseError(o.config_path + ": seed must be nonnegative");
    r.seed = static_cast<std::uint64_t>(s);
  } else {
    throw ParseError("a seed is required: set 'seed' in the configuration or pass --seed");
  }
  if (o.threads < 1) throw std::invalid_argument("--threads must be at least 1");
  r.threads = o.threads;
  r.out = o.out;
  r.timing = o.timing;
  fs::create_directories(r.out);
  return r;
}

Index positive(const Config& c, const std::string& key, long long fallback, long long minimum = 1) {
  const long long v = c.get_int(key, fallback);
  if (v < minimum) throw ParseError("configuration: " + key + " must be at least " + std::to_string(minimum));
  return static_cast<Index>(v);
}

/// One value per dimension, or a single value broadcast to all.
std::vector<double> per_dimension(const Config& c, const std::string& key, Index dim, double fallback) {
  if (!c.has(key)) return std::vector<double>(static_cast<std::size_t>(dim), fallback);
  std::vector<double> v = c.get_doubles(key);
  if (v.size() == 1) v.assign(static_cast<std::size_t>(dim), v[0]);
  if (static_cast<Index>(v.size()) != dim) {
    throw ParseError("configuration: " + key + " needs 1 or " + std::to_string(dim) + " values");
  }
  return v;
}

LocalSettings local_settings(const Config& c, int threads) {
  LocalSettings s;
  s.n0 = positive(c, "local_n0", s.n0);
  s.n_m = positive(c, "local_nm", s.n_m);
  s.candidate_limit = positive(c, "local_candidates", s.candidate_limit);
  s.nugget = c.get_double("local_nugget", s.nugget);
  s.theta_lower = c.get_double("local_theta_lower", s.theta_lower);
  s.theta_upper = c.get_double("local_theta_upper", s.theta_upper);
  s.mle_starts = static_cast<int>(positive(c, "local_mle_starts", s.mle_starts));
  s.threads = threads;
  return s;
}

OptimizerSettings optimizer_settings(const Config& c, std::uint64_t seed) {
  OptimizerSettings s;
  s.init_mesh_size = c.get_double("opt_init_mesh", s.init_mesh_size);
  s.min_mesh_size = c.get_double("opt_min_mesh", s.min_mesh_size);
  s.max_evaluations = static_cast<int>(positive(c, "opt_max_evaluations", s.max_evaluations));
  s.opportunistic = c.get_bool("opt_opportunistic", s.opportunistic);
  s.init_candidates = positive(c, "opt_init_candidates", s.init_candidates);
  s.init_keep = positive(c, "opt_init_keep", s.init_keep);
  s.seed = seed;
  return s;
}

BiasSettings bias_settings(const Config& c) {
  BiasSettings s;
  const std::string kind = c.get_string("bias", "gp");
  if (kind == "gp") {
    s.kind = BiasKind::Gp;
  } else if (kind == "iid") {
    s.kind = BiasKind::Iid;
  } else {
    throw ParseError("configuration: bias must be 'gp' or 'iid', got '" + kind + "'");
  }
  if (c.has("bias_columns")) {
    for (double v : c.get_doubles("bias_columns")) {
      if (v < 0 || v != std::floor(v)) throw ParseError("configuration: bias_columns must be column indices");
      s.columns.push_back(static_cast<Index>(v));
    }
  }
  s.theta_lower = c.get_double("bias_theta_lower", s.theta_lower);
  s.theta_upper = c.get_double("bias_theta_upper", s.theta_upper);
  s.nugget_lower = c.get_double("bias_nugget_lower", s.nugget_lower);
  s.nugget_upper = c.get_double("bias_nugget_upper", s.nugget_upper);
  s.starts = static_cast<int>(positive(c, "bias_starts", s.starts));
  s.seed = static_cast<std::uint64_t>(positive(c, "bias_seed", 0, 0));
  return s;
}

SimulationDataset load_simulation(const Config& c) {
  const fs::path path = c.get_path("simulation");
  const CsvTable t = read_csv(path);
  const Index q = positive(c, "u_dim", 0);
  const Index p = static_cast<Index>(t.header.size()) - q - 1;
  if (p < 1) {
    throw ParseError(path.string() + ": expected design inputs, " + std::to_string(q) +
                     " calibration inputs and one output column");
  }
  SimulationDataset sim;
  sim.x = t.values.leftCols(p);
  sim.u = t.values.middleCols(p, q);
  sim.y = t.values.col(p + q);
  sim.x_names.assign(t.header.begin(), t.header.begin() + p);
  sim.u_names.assign(t.header.begin() + p, t.header.begin() + p + q);
  if (!sim.x.allFinite() || !sim.u.allFinite() || !sim.y.allFinite()) {
    throw ParseError(path.string() + ": missing or non-finite values");
  }
  return sim;
}

/// Reads a design-input table whose leading columns must match the simulator's.
DesignMatrix load_inputs(const fs::path& path, const std::vector<std::string>& names, bool with_output,
                         Vector* output) {
  const CsvTable t = read_csv(path);
  const std::size_t expect = names.size() + (with_output ? 1 : 0);
  if (t.header.size() != expect) {
    throw ParseError(path.string() + ": expected " + std::to_string(expect) + " columns, found " +
                     std::to_string(t.header.size()));
  }
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (t.header[j] != names[j]) {
      throw ParseError(path.string() + ": column " + std::to_string(j + 1) + " is '" + t.header[j] +
                       "', the simulation file has '" + names[j] + "'");
    }
  }
  if (!t.values.allFinite()) throw ParseError(path.string() + ": missing or non-finite values");
  if (output) *output = t.values.col(static_cast<Index>(names.size()));
  return t.values.leftCols(static_cast<Index>(names.size()));
}

/// Archive, surrogate and calibration problem built from the configuration.
struct Workspace {
  SimulationDataset sim;
  FieldDataset field;
  LocalSettings local;
  OptimizerSettings optimizer;
  std::unique_ptr<EmulatorArchive> archive;
  std::unique_ptr<LocalGpSurrogate> surrogate;
  std::unique_ptr<CalibrationProblem> problem;
};

ScalingTransform archive_transform(const Config& c, const SimulationDataset& sim, std::uint64_t seed, int threads) {
  const DesignMatrix joint = sim.joint();
  const ScalingTransform cube = fit_unit_cube(joint);
  const std::string mode = c.get_string("scaling", "isotropic");
  if (mode == "isotropic") return cube;
  if (mode != "separable") throw ParseError("configuration: scaling must be 'isotropic' or 'separable'");
  SeparableScaleOptions o;
  o.subset_size = std::min<Index>(positive(c, "scaling_subset", 1000), joint.rows());
  o.repetitions = positive(c, "scaling_repetitions", 10);
  o.threads = threads;
  const SeparableScaleEstimate est = estimate_separable_scales(cube.apply(joint), sim.y, o, seed);
  return apply_separable_rescale(cube, est.median);
}

std::unique_ptr<Workspace> build_workspace(const Run& run, bool need_field, int local_threads) {
  auto w = std::make_unique<Workspace>();
  const Config& c = run.config;
  w->sim = load_simulation(c);
  w->local = local_settings(c, local_threads);
  w->optimizer = optimizer_settings(c, run.seed);
  w->archive = std::make_unique<EmulatorArchive>(w->sim, archive_transform(c, w->sim, run.seed, run.threads),
                                                 w->local.n_m);
  w->surrogate = std::make_unique<LocalGpSurrogate>(*w->archive, w->local);
  if (!need_field) return w;

  w->field.x = load_inputs(c.get_path("field"), w->sim.x_names, true, &w->field.y);
  w->field.x_names = w->sim.x_names;
  const Index q = w->sim.u.cols();
  const std::vector<double> lo = per_dimension(c, "u_lower", q, 0.0);
  const std::vector<double> hi = per_dimension(c, "u_upper", q, 0.0);
  BoxDomain box{w->sim.u.colwise().minCoeff().transpose(), w->sim.u.colwise().maxCoeff().transpose()};
  for (Index k = 0; k < q; ++k) {
    if (c.has("u_lower")) box.lower[k] = lo[static_cast<std::size_t>(k)];
    if (c.has("u_upper")) box.upper[k] = hi[static_cast<std::size_t>(k)];
  }
  const std::vector<double> a = per_dimension(c, "prior_alpha", q, 2.0);
  const std::vector<double> b = per_dimension(c, "prior_beta", q, 2.0);
  PriorSpec prior;
  for (Index k = 0; k < q; ++k) {
    require(a[static_cast<std::size_t>(k)] > 0 && b[static_cast<std::size_t>(k)] > 0,
            "prior: Beta parameters must be positive");
    prior.components.push_back({a[static_cast<std::size_t>(k)], b[static_cast<std::size_t>(k)]});
  }
  w->problem = std::make_unique<CalibrationProblem>(w->field, *w->surrogate, prior, bias_settings(c), box,
                                                    w->archive->transform().columns(0, w->sim.x.cols()));
  return w;
}

std::vector<std::string> suffixed(const std::vector<std::string>& names, const std::string& suffix) {
  std::vector<std::string> out;
  for (const std::string& n : names) out.push_back(n + suffix);
  return out;
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

Vector read_uhat(const Run& run, Index q) {
  const fs::path path = run.out / "uhat.csv";
  if (!fs::exists(path)) throw ParseError(path.string() + ": missing; run the calibrate command first");
  const CsvTable t = read_csv(path);
  if (t.values.rows() != 1 || t.values.cols() < q) throw ParseError(path.string() + ": expected one row of estimates");
  const Vector u = t.values.row(0).head(q).transpose();
  if (!((u.array() >= 0.0).all() && (u.array() <= 1.0).all())) {
    throw ParseError(path.string() + ": unit-cube estimates must lie in [0,1]");
  }
  return u;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path.string() + ": cannot write file");
  out << text;
}

// Inverse-distance-weighted interpolation of the finite trace values onto a
// regular grid over the unit square.
DesignMatrix trace_surface(const std::vector<TraceEntry>& trace, Index grid) {
  std::vector<const TraceEntry*> finite;
  for (const TraceEntry& e : trace) {
    if (std::isfinite(e.value)) finite.push_back(&e);
  }
  DesignMatrix out(grid * grid, 3);
  for (Index i = 0; i < grid; ++i) {
    for (Index j = 0; j < grid; ++j) {
      Vector g(2);
      g << static_cast<double>(i) / (grid - 1), static_cast<double>(j) / (grid - 1);
      double num = 0.0, den = 0.0, exact = std::numeric_limits<double>::quiet_NaN();
      for (const TraceEntry* e : finite) {
        const double d2 = (e->point - g).squaredNorm();
        if (d2 == 0.0) {
          exact = e->value;
          break;
        }
        num += e->value / d2;
        den += 1.0 / d2;
      }
      const Index row = i * grid + j;
      out(row, 0) = g[0];
      out(row, 1) = g[1];
      out(row, 2) = !std::isnan(exact) ? exact : (den > 0.0 ? num / den : std::nan(""));
    }
  }
  return out;
}

int cmd_calibrate(const Run& run) {
  const auto w = build_workspace(run, true, run.threads);
  const CalibrationResult r = calibrate(*w->problem, w->optimizer);
  const Index q = w->problem->u_dim();
  const std::vector<std::string>& un = w->sim.u_names;

  DesignMatrix uhat(1, 2 * q);
  uhat << r.u_hat.transpose(), r.u_hat_natural.transpose();
  write_csv(run.out / "uhat.csv", concat(un, suffixed(un, "_natural")), uhat);

  DesignMatrix trace(static_cast<Index>(r.trace.size()), q + 2);
  for (std::size_t i = 0; i < r.trace.size(); ++i) {
    const Index row = static_cast<Index>(i);
    trace.row(row).head(q) = r.trace[i].point.transpose();
    trace(row, q) = r.trace[i].value;
    trace(row, q + 1) = row < r.init_evaluations ? 0.0 : 1.0;
  }
  write_csv(run.out / "trace.csv", concat(un, {"log_posterior", "stage"}), trace);
  if (q == 2) write_csv(run.out / "surface.csv", concat(un, {"log_posterior"}), trace_surface(r.trace, 50));

  std::string s;
  s += "log_posterior = " + format_number(r.log_posterior) + "\n";
  s += "evaluations = " + std::to_string(r.trace.size()) + "\n";
  s += "init_evaluations = " + std::to_string(r.init_evaluations) + "\n";
  s += "iterations = " + std::to_string(r.iterations) + "\n";
  s += std::string("converged = ") + (r.converged ? "true" : "false") + "\n";
  s += std::string("bias = ") + (r.bias.kind() == BiasKind::Gp ? "gp" : "iid") + "\n";
  s += "noise_variance = " + format_number(r.bias.noise_variance()) + "\n";
  if (r.bias.gp()) {
    std::string cols, thetas;
    for (std::size_t j = 0; j < r.bias.columns().size(); ++j) {
      cols += (j ? "," : "") + std::to_string(r.bias.columns()[j]);
      thetas += (j ? "," : "") + format_number(r.bias.gp()->spec().lengthscales[static_cast<Index>(
                                     r.bias.gp()->spec().is_isotropic() ? 0 : j)]);
    }
    s += "bias_columns = " + cols + "\n";
    s += "bias_theta = " + thetas + "\n";
    s += "bias_nugget = " + format_number(r.bias.gp()->spec().nugget) + "\n";
  }
  write_text(run.out / "summary.txt", s);
  std::cout << "uhat =";
  for (Index k = 0; k < q; ++k) std::cout << ' ' << format_number(r.u_hat_natural[k]);
  std::cout << "  log posterior = " << format_number(r.log_posterior) << '\n';
  return 0;
}

int cmd_predict(const Run& run) {
  const auto w = build_workspace(run, true, run.threads);
  const Vector u = read_uhat(run, w->problem->u_dim());
  const DesignMatrix x = load_inputs(run.config.get_path("predict_inputs"), w->sim.x_names, false, nullptr);
  const double level = run.config.get_double("predict_level", 0.95);
  const CalibrationResult r = fixed_calibration(*w->problem, u, w->optimizer);
  const std::vector<FieldPrediction> p = predict_field(r, *w->problem, x, level);
  DesignMatrix out(x.rows(), x.cols() + 8);
  for (Index i = 0; i < x.rows(); ++i) {
    const FieldPrediction& f = p[static_cast<std::size_t>(i)];
    out.row(i).head(x.cols()) = x.row(i);
    out.row(i).tail(8) << f.mean, f.emulator_mean, f.bias_mean, f.variance, f.scale2, f.dof, f.lower, f.upper;
  }
  write_csv(run.out / "predictions.csv",
            concat(w->sim.x_names, {"mean", "emulator_mean", "bias_mean", "variance", "scale2", "dof", "lower", "upper"}),
            out);
  std::cout << x.rows() << " predictions written\n";
  return 0;
}

int cmd_bootstrap(const Run& run) {
  const auto w = build_workspace(run, true, 1);
  const Index q = w->problem->u_dim();
  const CalibrationResult r = fixed_calibration(*w->problem, read_uhat(run, q), w->optimizer);
  BootstrapOptions o;
  o.replicates = positive(run.config, "bootstrap_replicates", 100, 0);
  o.seed = run.seed;
  o.threads = run.threads;
  if (run.config.has("bootstrap_noise_variance")) o.noise_variance = run.config.get_double("bootstrap_noise_variance", 0);
  const BootstrapResult b = parametric_bootstrap(r, *w->problem, o);
  DesignMatrix out(b.u_hat.rows(), 2 * q + 2);
  for (Index i = 0; i < b.u_hat.rows(); ++i) {
    out(i, 0) = static_cast<double>(b.replicate[static_cast<std::size_t>(i)]);
    out.row(i).segment(1, q) = b.u_hat.row(i);
    out.row(i).segment(1 + q, q) = w->problem->to_natural(b.u_hat.row(i).transpose()).transpose();
    out(i, 2 * q + 1) = b.log_posterior[static_cast<std::size_t>(i)];
  }
  const std::vector<std::string>& un = w->sim.u_names;
  write_csv(run.out / "bootstrap.csv", concat(concat({"replicate"}, concat(un, suffixed(un, "_natural"))), {"log_posterior"}),
            out);
  std::cout << b.u_hat.rows() << " replicates, " << b.failures << " failed\n";
  return 0;
}

int cmd_sensitivity(const Run& run) {
  const auto w = build_workspace(run, false, run.threads);
  const DesignMatrix joint = w->sim.joint();
  const BoxDomain ranges{joint.colwise().minCoeff().transpose(), joint.colwise().maxCoeff().transpose()};
  const Index grid = positive(run.config, "sensitivity_grid", 20, 2);
  const Index mc = positive(run.config, "sensitivity_mc", 100);
  const BatchPredictor predictor = archive_predictor(*w->archive, w->local);
  const std::vector<std::string> names = concat(w->sim.x_names, w->sim.u_names);
  for (Index d = 0; d < joint.cols(); ++d) {
    Rng rng = child_rng(run.seed, static_cast<std::uint64_t>(d));
    const MainEffect m = main_effects(predictor, ranges, d, grid, mc, rng);
    DesignMatrix out(grid, 2);
    out << m.grid, m.effect;
    const std::string& name = names[static_cast<std::size_t>(d)];
    write_csv(run.out / ("main_effect_" + name + ".csv"), {name, "effect"}, out);
  }
  std::cout << joint.cols() << " main-effect curves written\n";
  return 0;
}

int cmd_loo(const Run& run) {
  const auto w = build_workspace(run, true, 1);
  const std::vector<LooRow> rows = leave_one_out(*w->problem, w->optimizer, {}, run.threads);
  const Index p = w->sim.x.cols();
  const Index q = w->problem->u_dim();
  DesignMatrix out(static_cast<Index>(rows.size()), p + q + 8);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const LooRow& r = rows[i];
    const Index row = static_cast<Index>(i);
    out(row, 0) = static_cast<double>(r.site);
    out.row(row).segment(1, p) = r.x.transpose();
    out.row(row).segment(1 + p, 7) << static_cast<double>(r.count), r.observed_mean, r.prediction.mean,
        r.prediction.variance, r.prediction.lower, r.prediction.upper, r.covered ? 1.0 : 0.0;
    out.row(row).tail(q) = r.u_hat.transpose();
  }
  write_csv(run.out / "loo.csv",
            concat(concat(concat({"site"}, w->sim.x_names),
                          {"count", "observed_mean", "mean", "variance", "lower", "upper", "covered"}),
                   w->sim.u_names),
            out);
  int covered = 0;
  for (const LooRow& r : rows) covered += r.covered ? 1 : 0;
  std::cout << covered << " of " << rows.size() << " held-out sites covered\n";
  return 0;
}

int cmd_benchmark(const Run& run) {
  const Config& c = run.config;
  SyntheticSpec spec;
  spec.replicates = positive(c, "bench_replicates", 1);
  spec.biased = c.get_bool("bench_biased", false);
  spec.field_sites = positive(c, "bench_field_sites", spec.field_sites);
  spec.sim_design_size = positive(c, "bench_sim_size", spec.sim_design_size);
  spec.aligned_per_site = positive(c, "bench_aligned", spec.aligned_per_site, 0);
  spec.validation_size = positive(c, "bench_validation", spec.validation_size);
  spec.noise_sd = c.get_double("bench_noise_sd", spec.noise_sd);
  if (c.has("bench_u_star")) {
    const std::vector<double> u = c.get_doubles("bench_u_star");
    if (u.size() != 2) throw ParseError("configuration: bench_u_star needs 2 values");
    spec.u_star = Eigen::Map<const Vector>(u.data(), 2);
  }
  const Index reps = positive(c, "bench_repetitions", 20);

  BenchmarkSettings s;
  s.local = local_settings(c, 1);
  s.optimizer = optimizer_settings(c, run.seed);
  s.bias = bias_settings(c);
  if (c.has("bias")) s.bias_kind = s.bias.kind;
  s.prior_alpha = c.get_double("prior_alpha", s.prior_alpha);
  s.prior_beta = c.get_double("prior_beta", s.prior_beta);
  const std::string fo = c.get_string("bench_field_only_scaling", "isotropic");
  if (fo != "isotropic" && fo != "separable") {
    throw ParseError("configuration: bench_field_only_scaling must be isotropic or separable");
  }
  s.field_only_mode = fo == "separable" ? LengthscaleMode::Separable : LengthscaleMode::Isotropic;
  if (c.has("bench_comparators")) {
    s.comparators.clear();
    std::string list = c.get_string("bench_comparators");
    std::size_t start = 0;
    while (start <= list.size()) {
      const std::size_t comma = std::min(list.find(',', start), list.size());
      std::string item = list.substr(start, comma - start);
      item.erase(0, item.find_first_not_of(' '));
      item.erase(item.find_last_not_of(' ') + 1);
      if (!item.empty()) s.comparators.push_back(item);
      start = comma + 1;
    }
  }
  s.threads = run.threads;
  const MCReport report = run_mc(reps, spec, s, run.seed);
  std::ofstream out(run.out / "report.csv", std::ios::binary);
  if (!out) throw std::runtime_error((run.out / "report.csv").string() + ": cannot write file");
  write_report(out, report);

  DesignMatrix validation(reps * spec.validation_size, 4);
  for (Index rep = 0; rep < reps; ++rep) {
    const Experiment e = generate_experiment(spec, repetition_seed(run.seed, rep));
    for (Index i = 0; i < spec.validation_size; ++i) {
      validation.row(rep * spec.validation_size + i) << static_cast<double>(rep), e.validation_x(i, 0),
          e.validation_x(i, 1), e.validation_truth[i];
    }
  }
  write_csv(run.out / "validation.csv", {"repetition", "x1", "x2", "truth"}, validation);
  if (run.timing) {
    std::ofstream t(run.out / "timing.csv", std::ios::binary);
    write_timing(t, report);
  }
  int failed = 0;
  for (const MCRow& r : report.rows) failed += r.result.failed ? 1 : 0;
  std::cout << report.rows.size() << " report rows, " << failed << " failed\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local approximate GP emulation and modular calibration"};
  app.require_subcommand(1);
  Options opt;
  std::uint64_t seed_value = 0;

  struct Command {
    const char* name;
    const char* help;
    int (*fn)(const Run&);
  };
  const std::vector<Command> commands{
      {"calibrate", "estimate the calibration parameters", cmd_calibrate},
      {"predict", "predict the field response at new inputs", cmd_predict},
      {"bootstrap", "parametric bootstrap of the calibration estimate", cmd_bootstrap},
      {"benchmark", "Monte Carlo comparison on the synthetic problem", cmd_benchmark},
      {"sensitivity", "main effects of every simulator input", cmd_sensitivity},
      {"loo", "leave-one-site-out validation", cmd_loo},
  };
  std::vector<CLI::App*> subs;
  for (const Command& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", opt.config_path, "configuration file")->required();
    sub->add_option("--seed", seed_value, "random seed (overrides the configuration)");
    sub->add_option("--threads", opt.threads, "worker threads");
    sub->add_option("--out", opt.out, "output directory");
    if (std::string(c.name) == "benchmark") sub->add_flag("--timing", opt.timing, "also write timing.csv");
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  for (std::size_t i = 0; i < commands.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    if (subs[i]->count("--seed")) opt.seed = seed_value;
    try {
      return commands[i].fn(prepare(opt));
    } catch (const ParseError& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 2;
    } catch (const std::invalid_argument& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 2;
    } catch (const NumericalFailure& e) {
      std::cerr << "numerical failure: " << e.what() << '\n';
      return 3;
    } catch (const NoSignalError& e) {
      std::cerr << "numerical failure: " << e.what() << '\n';
      return 3;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 1;
    }
  }
  return 2;
}
