// Command-line front end: mesh generation / stability preview, ground-truth
// simulation, estimation and comparison of summaries.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "plume/config.hpp"
#include "plume/experiment.hpp"
#include "plume/io.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace plume;

namespace {

// Input or configuration problems; mapped to exit code 2.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  bool force = false;
  std::optional<int> threads;
  bool verbose = false;
};

ScenarioConfig load_scenario(const Globals& g) {
  ScenarioConfig c = g.config.empty() ? ScenarioConfig{} : load_config(g.config);
  if (g.seed) c.seed = *g.seed;
  if (g.threads) c.threads = *g.threads;
  c.force = g.force;
  validate(c);
  return c;
}

void print_stability(const StabilityReport& r, double diffusivity, double dt) {
  std::printf("stability: lambda_max=%.6g 1/s  critical dt=%.6g s  courant dt=%.6g s  diffusion dt=%.6g s\n",
              r.lambda_max, r.critical_dt, r.courant_dt, r.diffusion_dt);
  std::printf("           max Peclet=%.6g  diffusivity=%.6g m^2/s  recommended dt=%.6g s%s\n", r.max_peclet,
              diffusivity, r.recommended_dt(), r.power_iteration_converged ? "" : "  (power iteration not converged)");
  if (r.max_peclet > 1.0) {
    std::printf("           Peclet > 1: suggested artificial diffusivity lambda*=%.6g m^2/s\n", r.artificial_diffusivity);
  }
  if (dt > 0) std::printf("           dt=%.6g s is %s\n", dt, r.is_stable(dt) ? "stable" : "UNSTABLE");
}

std::string tag(EstimatorKind kind, std::size_t size) { return to_string(kind) + std::to_string(size); }

// --- mesh --------------------------------------------------------------------

struct MeshArgs {
  std::vector<double> rect;
  std::size_t nx = 0, ny = 0;
  std::string in;
  std::string file = "mesh.msh";
  std::optional<double> diffusivity;
  std::vector<double> velocity;
  std::optional<double> dt;
};

int cmd_mesh(const Globals& g, const MeshArgs& a) {
  std::optional<TriMesh> mesh;
  if (!a.in.empty()) {
    mesh = read_mesh_file(a.in);
  } else if (!a.rect.empty()) {
    if (a.nx == 0 || a.ny == 0) throw ValidationError("--rect needs --nx and --ny");
    const Rect r{a.rect[0], a.rect[1], a.rect[2], a.rect[3]};
    if (!(r.width() > 0 && r.height() > 0)) throw ValidationError("--rect must have positive width and height");
    mesh = build_structured_mesh(r, a.nx, a.ny);
  } else if (!g.config.empty()) {
    const Scenario s(load_scenario(g));
    mesh = s.mesh();
    print_stability(s.stability(), s.diffusivity(), s.dt());
  } else {
    throw ValidationError("mesh: give --rect/--nx/--ny, --in or --config");
  }

  std::printf("nodes %zu elements %zu area %.6g\n", mesh->node_count(), mesh->element_count(), mesh->total_area());

  if (a.diffusivity) {
    FlowField flow = ZeroFlow{};
    if (!a.velocity.empty()) flow = UniformFlow{{a.velocity[0], a.velocity[1]}};
    const auto vel = element_velocities(flow, *mesh, 0.0);
    print_stability(stability_report(*mesh, vel, *a.diffusivity), *a.diffusivity, a.dt.value_or(0.0));
  }

  const fs::path path = fs::path(g.out) / a.file;
  auto out = open_output(path, g.force);
  write_mesh(out, *mesh);
  std::printf("wrote %s\n", path.string().c_str());
  return 0;
}

// --- simulate ------------------------------------------------------------------

int cmd_simulate(const Globals& g) {
  const ScenarioConfig c = load_scenario(g);
  const Scenario s(c);
  if (g.verbose) print_stability(s.stability(), s.diffusivity(), s.dt());

  ObservationLog log;
  log.config_hash = s.hash();
  std::vector<std::vector<Eigen::VectorXd>> states;
  for (std::size_t q = 0; q < c.trials; ++q) {
    const auto truth = simulate_ground_truth(s, truth_seed(trial_seed(c.seed, q)));
    log.levels.push_back(received_levels(truth));
    states.push_back(truth.states);
  }

  const fs::path dir(g.out);
  auto truth_out = open_output(dir / "truth.csv", g.force);
  write_truth(truth_out, s.hash(), states, c.truth_stride);
  auto obs_out = open_output(dir / "observations.csv", g.force);
  write_observations(obs_out, log);
  auto sensor_out = open_output(dir / "sensors.txt", g.force);
  write_sensors(sensor_out, s.sensors().sensors());

  std::printf("simulated %zu trial(s) x %zu step(s), %zu nodes, %zu sensors, dt=%.6g s\n", c.trials, c.steps,
              s.mesh().node_count(), s.sensors().size(), s.dt());
  std::printf("config_hash %s\nwrote %s, %s, %s\n", s.hash().c_str(), (dir / "truth.csv").string().c_str(),
              (dir / "observations.csv").string().c_str(), (dir / "sensors.txt").string().c_str());
  return 0;
}

// --- estimate ------------------------------------------------------------------

struct EstimateArgs {
  std::string observations;
  std::string method;
  std::optional<std::size_t> size;
  bool dump_particles = false;
  bool dump_latent = false;
};

int cmd_estimate(const Globals& g, const EstimateArgs& a) {
  ScenarioConfig c = load_scenario(g);
  if (!a.method.empty()) c.method = parse_estimator(a.method);
  if (a.size) c.size = *a.size;
  validate(c);

  const fs::path obs_path = a.observations.empty() ? fs::path(g.out) / "observations.csv" : fs::path(a.observations);
  if (!fs::exists(obs_path)) throw ValidationError("observation file not found: " + obs_path.string());
  const ObservationLog log = read_observation_file(obs_path);

  const Scenario s(c);
  if (log.config_hash != s.hash()) {
    throw ValidationError("config hash mismatch: observations were simulated with " + log.config_hash +
                          ", this configuration hashes to " + s.hash());
  }
  if (log.levels.size() != c.trials) {
    throw ValidationError("observation file holds " + std::to_string(log.levels.size()) + " trial(s), config expects " +
                          std::to_string(c.trials));
  }

  const EstimatorSpec spec = EstimatorSpec::from(c);
  const std::string name = tag(spec.kind, spec.size);
  const fs::path dir(g.out);

  std::ofstream dump;
  if (a.dump_particles) {
    if (spec.kind != EstimatorKind::rbpf) throw ValidationError("--dump-particles needs the rbpf estimator");
    dump = open_output(dir / ("particles_" + name + ".csv"), g.force);
    dump << "# config_hash=" << s.hash() << "\ntrial,step,particle,weight,strength";
    if (a.dump_latent) {
      for (std::size_t j = 0; j < s.sensors().size(); ++j) dump << ",z" << j;
    }
    dump << '\n';
  }

  std::vector<TrialResult> results;
  double total_seconds = 0.0;
  for (std::size_t q = 0; q < c.trials; ++q) {
    const std::uint64_t seed = trial_seed(c.seed, q);
    // The truth is regenerated from the same seed; the estimator only sees the
    // logged observations.
    const GroundTruth truth = simulate_ground_truth(s, truth_seed(seed));
    StepObserver observer;
    if (a.dump_particles) {
      observer = [&](std::size_t step, const Rbpf* rbpf) {
        const auto& ps = rbpf->particles();
        for (std::size_t m = 0; m < ps.size(); ++m) {
          const auto& p = ps[m];
          dump << q << ',' << step << ',' << m << ',' << format_double(p.weight) << ','
               << format_double(p.mean(p.mean.size() - 1));
          if (a.dump_latent) {
            for (double z : p.latent) dump << ',' << format_double(z);
          }
          dump << '\n';
        }
      };
    }
    const auto trace = run_estimator(s, log.levels[q], spec, filter_seed(seed), observer);
    results.push_back(score_trial(truth, trace, q, seed));
    total_seconds += trace.seconds;
    if (g.verbose) {
      std::printf("trial %zu: mean error %.6g, final strength %.6g, %.3f s\n", q, results.back().mean_error(),
                  results.back().strength_estimates.empty() ? 0.0 : results.back().strength_estimates.back(),
                  trace.seconds);
    }
  }

  const double aee = compute_aee(results);
  const auto stats = step_statistics(results);

  auto est_out = open_output(dir / ("estimates_" + name + ".csv"), g.force);
  write_estimates(est_out, s.hash(), results);

  json summary;
  summary["method"] = to_string(spec.kind);
  summary["size"] = spec.size;
  summary["trials"] = c.trials;
  summary["steps"] = c.steps;
  summary["aee"] = aee;
  summary["runtime_seconds"] = total_seconds;
  summary["mean_trial_seconds"] = c.trials ? total_seconds / static_cast<double>(c.trials) : 0.0;
  summary["config_hash"] = s.hash();
  summary["seed"] = c.seed;
  json seeds = json::array();
  for (const auto& r : results) seeds.push_back(r.seed);
  summary["trial_seeds"] = seeds;
  summary["settings"] = {{"prior_variance", spec.prior_variance},
                         {"ess_threshold", spec.ess_threshold},
                         {"inflation", spec.inflation},
                         {"threads", spec.threads},
                         {"dt", s.dt()},
                         {"diffusivity", s.diffusivity()}};
  summary["error_mean_per_step"] = stats.mean;
  summary["error_std_per_step"] = stats.stddev;
  std::vector<double> strength_mean(c.steps, 0.0);
  for (const auto& r : results) {
    for (std::size_t k = 0; k < r.strength_estimates.size(); ++k) {
      strength_mean[k] += r.strength_estimates[k] / static_cast<double>(results.size());
    }
  }
  summary["strength_mean_per_step"] = strength_mean;

  auto sum_out = open_output(dir / ("summary_" + name + ".json"), g.force);
  sum_out << std::setw(2) << summary << '\n';

  std::printf("%s: AEE %.6g over %zu trial(s), %.3f s\n", name.c_str(), aee, c.trials, total_seconds);
  std::printf("wrote %s, %s\n", (dir / ("estimates_" + name + ".csv")).string().c_str(),
              (dir / ("summary_" + name + ".json")).string().c_str());
  return 0;
}

// --- compare -------------------------------------------------------------------

int cmd_compare(const Globals& g, const std::vector<std::string>& files, const std::string& csv_name) {
  struct Row {
    std::string method;
    std::size_t size;
    double aee;
    double seconds;
  };
  std::vector<Row> rows;
  std::string hash;
  for (const auto& f : files) {
    std::ifstream in(f);
    if (!in) throw ValidationError("cannot open summary " + f);
    json j;
    try {
      in >> j;
      const std::string h = j.at("config_hash").get<std::string>();
      if (hash.empty()) {
        hash = h;
      } else if (h != hash) {
        throw ValidationError("summary " + f + " comes from a different scenario (config hash " + h + ")");
      }
      rows.push_back({j.at("method").get<std::string>(), j.at("size").get<std::size_t>(), j.at("aee").get<double>(),
                      j.at("mean_trial_seconds").get<double>()});
    } catch (const json::exception& e) {
      throw ValidationError("malformed summary " + f + ": " + e.what());
    }
  }

  const fs::path path = fs::path(g.out) / csv_name;
  auto csv = open_output(path, g.force);
  csv << "# config_hash=" << hash << "\nmethod,number,aee,execution_time_s\n";
  for (const auto& r : rows) {
    csv << r.method << ',' << r.size << ',' << format_double(r.aee) << ',' << format_double(r.seconds) << '\n';
  }

  std::printf("%-8s %8s %14s %20s\n", "Method", "Number", "AEE", "Execution time (s)");
  for (const auto& r : rows) {
    std::string m = r.method;
    for (auto& ch : m) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    std::printf("%-8s %8zu %14.6g %20.6g\n", m.c_str(), r.size, r.aee, r.seconds);
  }
  std::printf("wrote %s\n", path.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Source-term estimation for advection-diffusion plumes with imperfect sensors"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  std::uint64_t seed = 0;
  int threads = 1;
  app.add_option("--config", g.config, "scenario file (INI)")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "master seed (overrides [run] seed)");
  app.add_option("--out", g.out, "output directory")->capture_default_str();
  app.add_flag("--force", g.force, "overwrite outputs and accept an unstable time step");
  auto* threads_opt = app.add_option("--threads", threads, "worker threads for the particle loop")->check(CLI::PositiveNumber);
  app.add_flag("-v,--verbose", g.verbose, "print per-trial progress");

  MeshArgs mesh_args;
  auto* mesh = app.add_subcommand("mesh", "build or check a mesh and preview stability");
  mesh->add_option("--rect", mesh_args.rect, "x0 y0 x1 y1")->expected(4);
  mesh->add_option("--nx", mesh_args.nx, "cells in x")->check(CLI::PositiveNumber);
  mesh->add_option("--ny", mesh_args.ny, "cells in y")->check(CLI::PositiveNumber);
  mesh->add_option("--in", mesh_args.in, "existing mesh file to validate")->check(CLI::ExistingFile);
  mesh->add_option("--file", mesh_args.file, "output mesh file name")->capture_default_str();
  mesh->add_option("--diffusivity", mesh_args.diffusivity, "diffusivity for the stability preview");
  mesh->add_option("--velocity", mesh_args.velocity, "uniform flow u v for the preview")->expected(2);
  mesh->add_option("--dt", mesh_args.dt, "time step to check");

  auto* simulate = app.add_subcommand("simulate", "simulate truth and quantised observations");

  EstimateArgs est_args;
  auto* estimate = app.add_subcommand("estimate", "run an estimator over logged observations");
  estimate->add_option("--observations", est_args.observations, "observation CSV (default <out>/observations.csv)");
  estimate->add_option("--method", est_args.method, "rbpf or enkf")->check(CLI::IsMember({"rbpf", "enkf"}));
  estimate->add_option("--size", est_args.size, "particles / ensemble members")->check(CLI::PositiveNumber);
  estimate->add_flag("--dump-particles", est_args.dump_particles, "write the weighted particle set per step");
  estimate->add_flag("--dump-latent", est_args.dump_latent, "include latent samples in the particle dump");

  std::vector<std::string> summaries;
  std::string compare_csv = "comparison.csv";
  auto* compare = app.add_subcommand("compare", "tabulate estimator summaries");
  compare->add_option("summaries", summaries, "summary JSON files")->required()->check(CLI::ExistingFile);
  compare->add_option("--csv", compare_csv, "output table name")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  if (*seed_opt) g.seed = seed;
  if (*threads_opt) g.threads = threads;

  try {
    if (*mesh) return cmd_mesh(g, mesh_args);
    if (*simulate) return cmd_simulate(g);
    if (*estimate) return cmd_estimate(g, est_args);
    if (*compare) return cmd_compare(g, summaries, compare_csv);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const MeshError& e) {
    std::cerr << "mesh error: " << e.what() << '\n';
    return 2;
  } catch (const SensingError& e) {
    std::cerr << "sensor error: " << e.what() << '\n';
    return 2;
  } catch (const ModelError& e) {
    std::cerr << "model error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
