// Acceptance suite: one PASS/FAIL line per criterion.
//
// Usage: plume_acceptance [--expect-fail 9,10] [--only 1,5]
// Exit status is nonzero when a criterion fails that is not listed in
// --expect-fail. Expected failures still print FAIL.

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "plume/experiment.hpp"
#include "plume/fem.hpp"
#include "plume/filters.hpp"
#include "plume/io.hpp"
#include "plume/normal.hpp"
#include "plume/random.hpp"
#include "plume/sensing.hpp"

using namespace plume;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

Eigen::VectorXd gaussian_bump(const TriMesh& mesh, Point2 c, double sigma) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.node_count()) + 1);
  for (std::size_t i = 0; i < mesh.node_count(); ++i) {
    const double dx = mesh.nodes()[i].x - c.x, dy = mesh.nodes()[i].y - c.y;
    x(static_cast<Eigen::Index>(i)) = std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
  }
  return x;
}

// Noise-free model with zero source strength in the state.
DispersionModel pure_transport(const TriMesh& mesh, const FlowField& flow, double lambda, double dt) {
  const auto vel = element_velocities(flow, mesh, 0.0);
  const auto sys = assemble(mesh, vel, lambda, mesh.nodes().front(), MassKind::lumped);
  return build_model(sys, dt, 0.0, 0.0);
}

ScenarioConfig desk_config() {
  ScenarioConfig c;  // defaults are the desk scenario
  c.trials = 20;
  c.size = 30;
  c.seed = 1;
  return c;
}

// ---------------------------------------------------------------------------
// 1. Diffusion against the free-space Gaussian solution
// ---------------------------------------------------------------------------

Outcome c1_diffusion() {
  const auto t0 = Clock::now();
  const TriMesh mesh = build_structured_mesh({0, 0, 1, 1}, 40, 40);
  const double lambda = 1e-3, sigma0 = 0.1, t_end = 5.0;
  const auto vel = element_velocities(ZeroFlow{}, mesh, 0.0);
  const auto report = stability_report(mesh, vel, lambda);
  const double dt_max = 0.4 * report.critical_dt;
  const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt_max));
  const double dt = t_end / static_cast<double>(steps);

  const DispersionModel model = pure_transport(mesh, ZeroFlow{}, lambda, dt);
  Eigen::VectorXd x = gaussian_bump(mesh, {0.5, 0.5}, sigma0);
  for (std::size_t k = 0; k < steps; ++k) x = model.step(x);

  const double s2 = sigma0 * sigma0 + 2 * lambda * t_end;
  double num = 0, den = 0;
  for (std::size_t i = 0; i < mesh.node_count(); ++i) {
    const double dx = mesh.nodes()[i].x - 0.5, dy = mesh.nodes()[i].y - 0.5;
    const double exact = sigma0 * sigma0 / s2 * std::exp(-(dx * dx + dy * dy) / (2 * s2));
    const double d = x(static_cast<Eigen::Index>(i)) - exact;
    num += d * d;
    den += exact * exact;
  }
  const double rel = std::sqrt(num / den);
  const double secs = seconds_since(t0);
  return {rel < 0.05 && secs < 10.0, "relative L2 error " + fmt("%.4g", rel) + " (< 0.05), " + std::to_string(steps) +
                                         " steps, " + fmt("%.2f", secs) + " s (< 10 s)"};
}

// ---------------------------------------------------------------------------
// 2. Advection of the bump's centroid
// ---------------------------------------------------------------------------

Outcome c2_advection() {
  const TriMesh mesh = build_structured_mesh({0, 0, 1, 1}, 40, 40);
  const FlowField flow = UniformFlow{{0.05, 0.0}};
  const auto vel = element_velocities(flow, mesh, 0.0);
  const double lambda0 = 1e-6;
  const auto first = stability_report(mesh, vel, lambda0);
  const double lambda = apply_artificial_diffusivity(lambda0, first);
  const auto report = stability_report(mesh, vel, lambda);

  const std::size_t steps = 50;
  // Travel 0.2 in 50 steps, well inside the stable range.
  const double dt = 0.2 / (0.05 * steps);
  if (!report.is_stable(dt)) return {false, "chosen dt " + fmt("%.4g", dt) + " is not stable"};

  const auto sys = assemble(mesh, vel, lambda, mesh.nodes().front(), MassKind::lumped);
  const DispersionModel model = build_model(sys, dt, 0.0, 0.0);
  const Eigen::VectorXd mass = sys.mass.diagonal();

  auto centroid = [&](const Eigen::VectorXd& x) {
    double m = 0, mx = 0, my = 0;
    for (std::size_t i = 0; i < mesh.node_count(); ++i) {
      const double w = mass(static_cast<Eigen::Index>(i)) * x(static_cast<Eigen::Index>(i));
      m += w;
      mx += w * mesh.nodes()[i].x;
      my += w * mesh.nodes()[i].y;
    }
    return Point2{mx / m, my / m};
  };

  Eigen::VectorXd x = gaussian_bump(mesh, {0.3, 0.5}, 0.1);
  const Point2 c0 = centroid(x);
  for (std::size_t k = 0; k < steps; ++k) x = model.step(x);
  const Point2 c1 = centroid(x);

  const double expected = 0.05 * dt * static_cast<double>(steps);
  const double moved = c1.x - c0.x;
  const double diameter = std::sqrt(2.0) / 40.0;  // longest edge of the structured triangles
  const double miss = std::hypot(moved - expected, c1.y - c0.y);
  return {miss < diameter, "centroid moved " + fmt("%.5g", moved) + " vs " + fmt("%.5g", expected) + ", offset " +
                               fmt("%.3g", miss) + " (< element diameter " + fmt("%.4g", diameter) +
                               "), lambda* = " + fmt("%.3g", lambda - lambda0)};
}

// ---------------------------------------------------------------------------
// 3. Stability dichotomy around 2 / lambda_max
// ---------------------------------------------------------------------------

Outcome c3_stability() {
  const TriMesh mesh = build_structured_mesh({0, 0, 1, 1}, 20, 20);
  const FlowField flow = UniformFlow{{0.01, 0.005}};
  const auto vel = element_velocities(flow, mesh, 0.0);
  const double lambda = 2e-3;
  const auto report = stability_report(mesh, vel, lambda);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  Eigen::VectorXd x0 = gaussian_bump(mesh, {0.5, 0.5}, 0.1);
  for (Eigen::Index i = 0; i + 1 < x0.size(); ++i) x0(i) += 0.01 * g(rng);

  auto run = [&](double dt, std::size_t steps) {
    const DispersionModel model = pure_transport(mesh, flow, lambda, dt);
    Eigen::VectorXd x = x0;
    double peak = x.norm();
    for (std::size_t k = 0; k < steps; ++k) {
      x = model.step(x);
      peak = std::max(peak, x.norm());
    }
    return peak / x0.norm();
  };
  const double stable = run(0.5 * report.critical_dt, 1000);
  const double unstable = run(4.0 / report.lambda_max, 100);
  return {stable <= 1.0 + 1e-9 && unstable >= 10.0,
          "max growth " + fmt("%.6g", stable) + " at 0.5*(2/L) over 1000 steps (bounded), " + fmt("%.3g", unstable) +
              "x at 4/L within 100 steps (>= 10)"};
}

// ---------------------------------------------------------------------------
// 4. Peclet repair
// ---------------------------------------------------------------------------

Outcome c4_peclet() {
  const TriMesh mesh = build_structured_mesh({0, 0, 1000, 1000}, 20, 20);
  const FlowField flow = UniformFlow{{0.02, 0.0}};
  const auto vel = element_velocities(flow, mesh, 0.0);
  const double h = mesh.element_geometry(0).length_scale();
  const double lambda = 0.02 * h / 4.0;  // Pe = |v| h / (2 lambda) = 2
  const auto before = stability_report(mesh, vel, lambda);
  const double repaired = apply_artificial_diffusivity(lambda, before);
  const auto after = stability_report(mesh, vel, repaired);
  return {std::abs(before.max_peclet - 2.0) < 1e-12 && std::abs(after.max_peclet - 1.0) < 1e-12,
          "max Pe " + fmt("%.15g", before.max_peclet) + " -> " + fmt("%.15g", after.max_peclet) +
              " (|Pe - 1| < 1e-12)"};
}

// ---------------------------------------------------------------------------
// 5. Quantiser contract
// ---------------------------------------------------------------------------

Outcome c5_quantiser() {
  const double eta = 660.0;
  const std::int64_t zeta = 11000;
  const Quantiser q(eta, zeta);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-eta, eta);
  std::vector<double> ys(1000000);
  for (auto& y : ys) y = u(rng);
  ys.front() = -eta;
  ys.back() = eta;

  std::size_t bound = 0, idem = 0, mono = 0;
  for (double y : ys) {
    const double v = q.quantise(y);
    if (std::abs(v - y) > eta / static_cast<double>(zeta)) ++bound;
    if (q.quantise(v) != v) ++idem;
  }
  std::sort(ys.begin(), ys.end());
  for (std::size_t i = 1; i < ys.size(); ++i) {
    if (q.quantise(ys[i]) < q.quantise(ys[i - 1])) ++mono;
  }
  return {bound + idem + mono == 0, "1e6 samples: " + std::to_string(bound) + " bound, " + std::to_string(idem) +
                                        " idempotence, " + std::to_string(mono) + " monotonicity violations (0)"};
}

// ---------------------------------------------------------------------------
// 6. Likelihood partition
// ---------------------------------------------------------------------------

Outcome c6_partition() {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> zd(-1.2, 1.2), vd(-6, 0);
  double worst = 0;
  for (std::int64_t zeta : {std::int64_t{1}, std::int64_t{7}, std::int64_t{100}, std::int64_t{1000}, std::int64_t{11000}}) {
    const double eta = 1.0;
    const Quantiser q(eta, zeta);
    for (int rep = 0; rep < 20; ++rep) {
      const double z = zd(rng);
      const double var = std::pow(10.0, vd(rng));
      const double sd = std::sqrt(var);
      double total = normal::cdf((-eta - z) / sd) + normal::cdf(-(eta - z) / sd);
      for (std::int64_t h = 0; h < zeta; ++h) total += cell_probability(q, q.level(h), z, var);
      worst = std::max(worst, std::abs(total - 1.0));
    }
  }
  return {worst < 1e-10, "max |sum - 1| = " + fmt("%.3g", worst) + " over 100 cases, zeta up to 1.1e4 (< 1e-10)"};
}

// ---------------------------------------------------------------------------
// 7. Kalman recursion against a dense-algebra oracle
// ---------------------------------------------------------------------------

Outcome c7_kalman() {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> pos(0.1, 1.0);
  double worst = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 5, m = 3;
    Eigen::MatrixXd a(n, n), h(m, n), l(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = 0.4 * g(rng), l(i, j) = g(rng);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) h(i, j) = g(rng);
    Eigen::VectorXd w(n), mean(n), z(m);
    for (int i = 0; i < n; ++i) w(i) = pos(rng), mean(i) = g(rng);
    for (int i = 0; i < m; ++i) z(i) = g(rng);
    const Eigen::MatrixXd p = l * l.transpose() + Eigen::MatrixXd::Identity(n, n);
    const double jitter = 1e-9;

    const DispersionModel model(a.sparseView(), w, 1.0);
    const SparseRowMatrix hs = h.sparseView();
    const auto pred = kf_predict(model, {mean, p});
    const auto post = kf_update(pred, hs, z, jitter);

    // Oracle: textbook formulas with an explicit inverse.
    const Eigen::VectorXd mean_p = a * mean;
    Eigen::MatrixXd p_p = a * p * a.transpose();
    p_p.diagonal() += w;
    const Eigen::MatrixXd s = h * p_p * h.transpose() + jitter * Eigen::MatrixXd::Identity(m, m);
    const Eigen::MatrixXd k = p_p * h.transpose() * s.inverse();
    const Eigen::VectorXd mean_u = mean_p + k * (z - h * mean_p);
    Eigen::MatrixXd p_u = (Eigen::MatrixXd::Identity(n, n) - k * h) * p_p;
    p_u = 0.5 * (p_u + p_u.transpose());

    worst = std::max({worst, (pred.mean - mean_p).cwiseAbs().maxCoeff(), (pred.cov - p_p).cwiseAbs().maxCoeff(),
                      (post.mean - mean_u).cwiseAbs().maxCoeff(), (post.cov - p_u).cwiseAbs().maxCoeff()});
  }
  return {worst < 1e-10, "max deviation " + fmt("%.3g", worst) + " over 100 random 5-state cases (< 1e-10)"};
}

// ---------------------------------------------------------------------------
// 8. RBPF reduces to a KF on the true latent measurement
// ---------------------------------------------------------------------------

Outcome c8_degeneracy() {
  ScenarioConfig c = desk_config();
  c.detection_prob = 1.0;
  c.noise_variance = 1e-6;
  c.levels = 10000000;
  const Scenario s(c);
  EstimatorSpec spec = EstimatorSpec::from(c);
  spec.kind = EstimatorKind::rbpf;

  double worst = 0;
  const std::size_t trials = 5;
  for (std::size_t q = 0; q < trials; ++q) {
    const auto seed = trial_seed(c.seed, q);
    const auto truth = simulate_ground_truth(s, truth_seed(seed));
    const auto trace = run_estimator(s, received_levels(truth), spec, filter_seed(seed));

    const auto n = static_cast<Eigen::Index>(s.state_dim());
    GaussianBelief kf{Eigen::VectorXd::Zero(n), c.prior_variance * Eigen::MatrixXd::Identity(n, n)};
    const auto& h = s.sensors().measurement_matrix();
    double ss = 0;
    for (std::size_t k = 0; k < s.steps(); ++k) {
      kf = kf_predict(s.dynamics().at_step(k), kf);
      const Eigen::VectorXd z = h * truth.states[k + 1];
      kf = kf_update(kf, h, z, innovation_jitter(kf.cov));
      const double d = trace.estimates[k](n - 1) - kf.mean(n - 1);
      ss += d * d;
    }
    worst = std::max(worst, std::sqrt(ss / static_cast<double>(s.steps())) / c.strength);
  }
  return {worst < 0.01, "worst RMS strength difference " + fmt("%.3g", 100 * worst) + "% over " +
                            std::to_string(trials) + " trials (< 1%)"};
}

// ---------------------------------------------------------------------------
// 9-10, 12. Desk scenario
// ---------------------------------------------------------------------------

struct DeskRun {
  std::vector<TrialResult> rbpf, enkf;
  std::string csv;  // observations, truth and both estimate files
  double seconds = 0;
  double rbpf_seconds = 0;
};

DeskRun run_desk(int threads) {
  const auto t0 = Clock::now();
  ScenarioConfig c = desk_config();
  c.threads = threads;
  const Scenario s(c);
  EstimatorSpec rb = EstimatorSpec::from(c);
  rb.kind = EstimatorKind::rbpf;
  EstimatorSpec en = rb;
  en.kind = EstimatorKind::enkf;

  DeskRun out;
  ObservationLog log;
  log.config_hash = s.hash();
  std::vector<std::vector<Eigen::VectorXd>> states;
  for (std::size_t q = 0; q < c.trials; ++q) {
    const auto seed = trial_seed(c.seed, q);
    const auto truth = simulate_ground_truth(s, truth_seed(seed));
    const auto levels = received_levels(truth);
    log.levels.push_back(levels);
    states.push_back(truth.states);
    const auto tr = run_estimator(s, levels, rb, filter_seed(seed));
    out.rbpf.push_back(score_trial(truth, tr, q, seed));
    out.rbpf_seconds += tr.seconds;
    out.enkf.push_back(score_trial(truth, run_estimator(s, levels, en, filter_seed(seed)), q, seed));
  }
  std::ostringstream csv;
  write_observations(csv, log);
  write_truth(csv, s.hash(), states, c.truth_stride);
  write_estimates(csv, s.hash(), out.rbpf);
  write_estimates(csv, s.hash(), out.enkf);
  out.csv = csv.str();
  out.seconds = seconds_since(t0);
  return out;
}

Outcome c9_desk(const DeskRun& run) {
  std::vector<double> finals;
  std::size_t converged = 0;
  double worst_spread = 0;
  for (const auto& r : run.rbpf) {
    const auto& s = r.strength_estimates;
    const auto first = s.end() - 10;
    finals.push_back(std::accumulate(first, s.end(), 0.0) / 10.0);
    const auto [lo, hi] = std::minmax_element(first, s.end());
    worst_spread = std::max(worst_spread, *hi - *lo);
    if (*hi - *lo < 0.2) ++converged;
  }
  std::sort(finals.begin(), finals.end());
  const std::size_t q = finals.size();
  const double median = q % 2 ? finals[q / 2] : 0.5 * (finals[q / 2 - 1] + finals[q / 2]);
  const bool ok = std::abs(median - 1.0) <= 0.15 && converged == q && run.seconds < 300.0;
  return {ok, "median final-10 strength " + fmt("%.4g", median) + " (1 +/- 0.15), " + std::to_string(converged) + "/" +
                  std::to_string(q) + " trials with last-10 spread < 0.2 (worst " + fmt("%.3g", worst_spread) +
                  "), " + fmt("%.1f", run.seconds) + " s (< 300 s)"};
}

// Same scenario with every detection delivered; printed when criterion 9
// fails to show how much of the failure the missed detections account for.
std::string perfect_detection_control() {
  ScenarioConfig c = desk_config();
  c.detection_prob = 1.0;
  const Scenario s(c);
  EstimatorSpec spec = EstimatorSpec::from(c);
  std::vector<double> finals;
  std::size_t converged = 0;
  for (std::size_t q = 0; q < c.trials; ++q) {
    const auto r = run_trial(s, spec, q);
    const auto first = r.strength_estimates.end() - 10;
    finals.push_back(std::accumulate(first, r.strength_estimates.end(), 0.0) / 10.0);
    const auto [lo, hi] = std::minmax_element(first, r.strength_estimates.end());
    if (*hi - *lo < 0.2) ++converged;
  }
  std::sort(finals.begin(), finals.end());
  return "control with detection_prob = 1: median " + fmt("%.4g", 0.5 * (finals[9] + finals[10])) + ", " +
         std::to_string(converged) + "/20 converged";
}

Outcome c10_versus_enkf(const DeskRun& run) {
  std::size_t wins = 0;
  for (std::size_t q = 0; q < run.rbpf.size(); ++q) {
    if (run.rbpf[q].mean_error() < run.enkf[q].mean_error()) ++wins;
  }
  const double a_rb = compute_aee(run.rbpf), a_en = compute_aee(run.enkf);
  const double ratio = a_en / a_rb;
  const bool ok = 5 * wins >= 4 * run.rbpf.size() && ratio >= 1.5;
  return {ok, "RBPF better in " + std::to_string(wins) + "/" + std::to_string(run.rbpf.size()) +
                  " trials (>= 80%), AEE RBPF " + fmt("%.4g", a_rb) + " vs EnKF " + fmt("%.4g", a_en) + ", ratio " +
                  fmt("%.3g", ratio) + " (>= 1.5)"};
}

// ---------------------------------------------------------------------------
// 11. Miss-detection statistics
// ---------------------------------------------------------------------------

Outcome c11_detection() {
  const TriMesh mesh = build_structured_mesh({0, 0, 1, 1}, 4, 4);
  std::vector<Sensor> sensors;
  for (int j = 0; j < 100; ++j) sensors.push_back({{0.01 * j + 0.005, 0.5}, 1.0, 100, 1e-2, 0.85});
  const SensorNetwork net(mesh, sensors);
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(mesh.node_count()) + 1, 0.5);
  Rng rng = make_rng(11, {});
  std::size_t hits = 0, total = 0;
  for (int k = 0; k < 1000; ++k) {
    const auto obs = observe(net, {x.data(), static_cast<std::size_t>(x.size())}, rng);
    for (bool d : obs.detected) hits += d, ++total;
  }
  const double p = 0.85, mean = static_cast<double>(hits) / static_cast<double>(total);
  const double sd = std::sqrt(p * (1 - p) / static_cast<double>(total));
  const double z = (mean - p) / sd;
  return {std::abs(z) <= 3.0, std::to_string(total) + " draws: mean " + fmt("%.5f", mean) + ", " + fmt("%.2f", z) +
                                  " binomial sd from 0.85 (|z| <= 3)"};
}

Outcome c12_determinism(const DeskRun& a, const DeskRun& b) {
  const bool same = a.csv == b.csv;
  std::size_t at = 0;
  while (at < std::min(a.csv.size(), b.csv.size()) && a.csv[at] == b.csv[at]) ++at;
  return {same, same ? std::to_string(a.csv.size()) + " CSV bytes identical across two runs (1 and 2 threads)"
                     : "outputs diverge at byte " + std::to_string(at)};
}

std::set<int> parse_list(const std::string& s) {
  std::set<int> out;
  std::stringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    if (!tok.empty()) out.insert(std::stoi(tok));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> expected_fail, only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--expect-fail" && i + 1 < argc) {
      expected_fail = parse_list(argv[++i]);
    } else if (arg == "--only" && i + 1 < argc) {
      only = parse_list(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--expect-fail 9,10] [--only 1,5]\n", argv[0]);
      return 2;
    }
  }
  auto wanted = [&](int id) { return only.empty() || only.count(id); };

  int passed = 0, failed = 0, unexpected = 0;
  auto report = [&](int id, const char* name, const Outcome& o) {
    std::printf("%s C%-2d %-30s %s%s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(),
                !o.pass && expected_fail.count(id) ? "  [expected failure]" : "");
    std::fflush(stdout);
    if (o.pass) {
      ++passed;
    } else {
      ++failed;
      if (!expected_fail.count(id)) ++unexpected;
    }
  };
  auto guarded = [](const std::function<Outcome()>& fn) -> Outcome {
    try {
      return fn();
    } catch (const std::exception& e) {
      return {false, std::string("threw: ") + e.what()};
    }
  };

  if (wanted(1)) report(1, "fem diffusion accuracy", guarded(c1_diffusion));
  if (wanted(2)) report(2, "advection transport", guarded(c2_advection));
  if (wanted(3)) report(3, "stability dichotomy", guarded(c3_stability));
  if (wanted(4)) report(4, "peclet repair", guarded(c4_peclet));
  if (wanted(5)) report(5, "quantiser contract", guarded(c5_quantiser));
  if (wanted(6)) report(6, "likelihood partition", guarded(c6_partition));
  if (wanted(7)) report(7, "kalman oracle", guarded(c7_kalman));
  if (wanted(8)) report(8, "rbpf -> kf degeneracy", guarded(c8_degeneracy));

  if (wanted(11)) report(11, "miss-detection statistics", guarded(c11_detection));
  if (wanted(9) || wanted(10) || wanted(12)) {
    std::optional<DeskRun> first, second;
    try {
      first = run_desk(1);
    } catch (const std::exception& e) {
      std::printf("desk scenario threw: %s\n", e.what());
    }
    auto desk = [&](auto fn) { return first ? guarded(fn) : Outcome{false, "desk scenario failed to run"}; };
    if (wanted(9)) {
      const Outcome o = desk([&] { return c9_desk(*first); });
      report(9, "desk source-term estimation", o);
      if (!o.pass && first) std::printf("     note: %s\n", guarded([] { return Outcome{true, perfect_detection_control()}; }).detail.c_str());
    }
    if (wanted(10)) report(10, "rbpf beats enkf", desk([&] { return c10_versus_enkf(*first); }));
    if (wanted(12)) {
      report(12, "determinism", desk([&] {
               second = run_desk(2);
               return c12_determinism(*first, *second);
             }));
    }
  }

  std::printf("%d passed, %d failed (%d unexpected)\n", passed, failed, unexpected);
  return unexpected == 0 ? 0 : 1;
}
