// Writes a small synthetic calibration data set: simulation.csv, field.csv and
// new_inputs.csv.
#include "lacal/benchmark.hpp"
#include "lacal/io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

using namespace lacal;

int main(int argc, char** argv) {
  CLI::App app{"Synthetic calibration fixture"};
  std::string out = ".";
  std::uint64_t seed = 1;
  SyntheticSpec spec;
  spec.field_sites = 15;
  spec.replicates = 2;
  spec.sim_design_size = 1500;
  spec.aligned_per_site = 10;
  spec.validation_size = 25;
  app.add_option("--out", out, "output directory");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--sites", spec.field_sites, "field sites");
  app.add_option("--replicates", spec.replicates, "observations per site");
  app.add_option("--sim-size", spec.sim_design_size, "simulator LHS size");
  app.add_option("--aligned", spec.aligned_per_site, "aligned simulator runs per site");
  app.add_option("--new", spec.validation_size, "new input rows to predict at");
  app.add_flag("--biased", spec.biased, "add the discrepancy term to the field data");
  CLI11_PARSE(app, argc, argv);

  try {
    const Experiment e = generate_experiment(spec, seed);
    std::filesystem::create_directories(out);
    const std::filesystem::path dir(out);
    DesignMatrix sim(e.sim.size(), 5);
    sim << e.sim.x, e.sim.u, e.sim.y;
    write_csv(dir / "simulation.csv", {"x1", "x2", "u1", "u2", "y"}, sim);
    DesignMatrix field(e.field.size(), 3);
    field << e.field.x, e.field.y;
    write_csv(dir / "field.csv", {"x1", "x2", "y"}, field);
    write_csv(dir / "new_inputs.csv", {"x1", "x2"}, e.validation_x);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 2;
  }
  return 0;
}
