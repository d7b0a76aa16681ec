#ifndef LACAL_BENCHMARK_HPP
#define LACAL_BENCHMARK_HPP

#include "lacal/calibration.hpp"
#include "lacal/common.hpp"
#include "lacal/lagp.hpp"
#include "lacal/optimizer.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace lacal {

/// Synthetic simulator on x in (0,1] x (0,1], u in [0,1]^2. Throws for x2 <= 0.
double synthetic_simulator(const Vector& x, const Vector& u);

/// Synthetic discrepancy (10 x1^2 + 4 x2^2) / (50 x1 x2 + 10).
double synthetic_bias(const Vector& x);

struct SyntheticSpec {
  Vector u_star = (Vector(2) << 0.2, 0.1).finished();
  double noise_sd = 0.5;
  bool biased = false;
  Index replicates = 1;
  Index field_sites = 50;
  Index sim_design_size = 10000;
  /// Archive rows sharing each field site's x, with distinct u.
  Index aligned_per_site = 10;
  Index validation_size = 1000;

  void validate() const;
  /// Noiseless field response at x.
  double truth(const Vector& x) const;
};

struct Experiment {
  SyntheticSpec spec;
  SimulationDataset sim;
  FieldDataset field;
  /// The field_sites distinct design points, each repeated `replicates` times
  /// in field.x.
  DesignMatrix sites;
  DesignMatrix validation_x;
  Vector validation_truth;
};

/// Field design: LHS of field_sites points, each observed `replicates` times
/// with N(0, noise_sd^2) noise. Archive: LHS of sim_design_size (x,u) points,
/// then aligned rows pairing site i with rows i*k..i*k+k-1 of a second u-LHS
/// (k = aligned_per_site). Validation: fresh LHS with noiseless truth.
Experiment generate_experiment(const SyntheticSpec& spec, std::uint64_t seed);

inline const std::vector<std::string>& comparator_labels() {
  static const std::vector<std::string> labels{"uhat-Mhat", "uhat-M", "urand", "u*-Mhat", "u*-M", "field-only"};
  return labels;
}

struct BenchmarkSettings {
  LocalSettings local;
  OptimizerSettings optimizer;
  BiasSettings bias;
  /// Bias model kind; unset means the regime's own (GP when biased, iid
  /// otherwise).
  std::optional<BiasKind> bias_kind;
  double prior_alpha = 2.0;
  double prior_beta = 2.0;
  /// Lengthscales of the field-only GP (nugget always estimated).
  LengthscaleMode field_only_mode = LengthscaleMode::Isotropic;
  std::vector<std::string> comparators = comparator_labels();
  int threads = 1;
};

/// Archive, models and problem factories for one experiment.
class BenchmarkContext {
 public:
  BenchmarkContext(const Experiment& experiment, const BenchmarkSettings& settings);

  const Experiment& experiment() const { return experiment_; }
  const EmulatorArchive& archive() const { return *archive_; }
  const ComputerModel& emulator() const { return *emulator_; }
  const ComputerModel& simulator() const { return *simulator_; }
  CalibrationProblem problem(const ComputerModel& model) const;

 private:
  const Experiment& experiment_;
  BenchmarkSettings settings_;
  std::unique_ptr<EmulatorArchive> archive_;
  std::unique_ptr<LocalGpSurrogate> emulator_;
  std::unique_ptr<DirectSimulator> simulator_;
};

struct ComparatorResult {
  std::string label;
  double rmse = 0.0;
  double mean_sd = 0.0;
  /// Natural-unit u used for prediction; empty for field-only.
  Vector u;
  double seconds = 0.0;
  bool failed = false;
  std::string error;
};

/// Fits comparator `label` on the context's field data and scores it on the
/// noiseless validation set. `seed` drives the calibration start design and
/// the urand draw.
ComparatorResult run_comparator(const std::string& label, const BenchmarkContext& context,
                                const BenchmarkSettings& settings, std::uint64_t seed);

struct MCRow {
  std::uint64_t seed = 0;
  Index repetition = 0;
  Index replicates = 1;
  bool biased = false;
  ComparatorResult result;
};

struct MCReport {
  std::vector<MCRow> rows;
  std::vector<double> rmse(const std::string& label) const;
};

/// Seed of MC repetition `rep` under a run seed.
std::uint64_t repetition_seed(std::uint64_t seed, Index rep);

/// Fresh experiment per repetition (seeded by repetition_seed), every
/// configured comparator on it. Failures are recorded in their rows.
MCReport run_mc(Index repetitions, const SyntheticSpec& spec, const BenchmarkSettings& settings, std::uint64_t seed);

/// Delimited report: seed,label,r,biased,rmse,mean_sd,u1..uq. Timing goes to a
/// separate stream so the report itself is reproducible byte for byte.
void write_report(std::ostream& out, const MCReport& report);
void write_timing(std::ostream& out, const MCReport& report);

double rmse(const Vector& predictions, const Vector& truth);

/// Predictive means for a batch of natural-unit points.
using BatchPredictor = std::function<Vector(const DesignMatrix& points)>;

/// Local GP means over the archive's joint (x, u) inputs, natural units.
BatchPredictor archive_predictor(const EmulatorArchive& archive, const LocalSettings& settings);

struct MainEffect {
  Index input = 0;
  Vector grid;
  Vector effect;
};

/// Average of the predictor over `mc_size` LHS draws of the other inputs (one
/// draw set shared across the grid) at grid_size evenly spaced values of
/// input d spanning the box.
MainEffect main_effects(const BatchPredictor& predictor, const BoxDomain& ranges, Index d, Index grid_size,
                        Index mc_size, Rng& rng);

struct LooRow {
  Index site = 0;
  Vector x;
  Index count = 0;
  double observed_mean = 0.0;
  double truth = 0.0;
  FieldPrediction prediction;
  Vector u_hat;
  bool covered = false;
};

/// Each unique field site in turn is removed, the rest recalibrated, and the
/// held-out site predicted. Coverage is judged against `truth` when given,
/// else against the held-out observed mean.
std::vector<LooRow> leave_one_out(const CalibrationProblem& problem, const OptimizerSettings& settings,
                                  const std::function<double(const Vector&)>& truth = {}, int threads = 1);

}  // namespace lacal

#endif  // LACAL_BENCHMARK_HPP
