#include "plume/fem.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <string>

namespace plume {

namespace {

using Triplet = Eigen::Triplet<double>;

void require_nondegenerate(const ElementGeometry& g) {
  if (!(g.area > 0.0)) throw ModelError("degenerate element (zero area)");
}

}  // namespace

Eigen::Matrix3d element_mass(const ElementGeometry& g, MassKind kind) {
  require_nondegenerate(g);
  if (kind == MassKind::lumped) return (g.area / 3.0) * Eigen::Matrix3d::Identity();
  Eigen::Matrix3d m;
  m << 2, 1, 1, 1, 2, 1, 1, 1, 2;
  return (g.area / 12.0) * m;
}

Eigen::Matrix3d element_stiffness(const ElementGeometry& g, double diffusivity, Velocity vel) {
  require_nondegenerate(g);
  if (diffusivity < 0.0) throw ModelError("diffusivity must be non-negative");
  const double u = vel.u, v = vel.v;

  const Eigen::RowVector3d adv_row(v * g.x32 - u * g.y32, u * g.y31 - v * g.x31, v * g.x21 - u * g.y21);
  Eigen::Matrix3d adv;
  adv.row(0) = adv_row;
  adv.row(1) = adv_row;
  adv.row(2) = adv_row;

  // Gradient coefficients of the shape functions; the diffusion blocks are
  // their outer products.
  const Eigen::Vector3d by(g.y32, -g.y31, g.y21);
  const Eigen::Vector3d bx(g.x32, -g.x31, g.x21);
  const Eigen::Matrix3d diff = by * by.transpose() + bx * bx.transpose();

  return adv / 6.0 + (diffusivity / (4.0 * g.area)) * diff;
}

Eigen::Vector3d element_force(const ElementGeometry& g, bool contains_source, double strength) {
  if (!contains_source) return Eigen::Vector3d::Zero();
  return Eigen::Vector3d::Constant(g.area * strength / 3.0);
}

GlobalSystem assemble(const TriMesh& mesh, std::span<const Velocity> velocities, double diffusivity,
                      const Point2& source, MassKind kind) {
  if (velocities.size() != mesh.element_count()) {
    throw ModelError("expected " + std::to_string(mesh.element_count()) + " element velocities, got " +
                     std::to_string(velocities.size()));
  }
  const auto src = mesh.locate_point(source);
  if (!src) {
    throw ModelError("source position (" + std::to_string(source.x) + ", " + std::to_string(source.y) +
                     ") lies outside the mesh");
  }

  const auto c = static_cast<Eigen::Index>(mesh.node_count());
  std::vector<Triplet> mass, stiff;
  mass.reserve(mesh.element_count() * (kind == MassKind::lumped ? 3 : 9));
  stiff.reserve(mesh.element_count() * 9);
  Eigen::VectorXd q = Eigen::VectorXd::Zero(c);

  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    const auto g = mesh.element_geometry(e);
    const auto& tri = mesh.elements()[e];
    const Eigen::Matrix3d me = element_mass(g, kind);
    const Eigen::Matrix3d ke = element_stiffness(g, diffusivity, velocities[e]);
    for (int i = 0; i < 3; ++i) {
      const auto gi = static_cast<Eigen::Index>(tri[i]);
      for (int j = 0; j < 3; ++j) {
        const auto gj = static_cast<Eigen::Index>(tri[j]);
        if (me(i, j) != 0.0) mass.emplace_back(gi, gj, me(i, j));
        stiff.emplace_back(gi, gj, ke(i, j));
      }
    }
    if (e == *src) {
      const Eigen::Vector3d fe = element_force(g, true, 1.0);
      for (int i = 0; i < 3; ++i) q(static_cast<Eigen::Index>(tri[i])) += fe(i);
    }
  }

  GlobalSystem sys;
  sys.mass.resize(c, c);
  sys.stiffness.resize(c, c);
  sys.mass.setFromTriplets(mass.begin(), mass.end());
  sys.stiffness.setFromTriplets(stiff.begin(), stiff.end());
  sys.mass.makeCompressed();
  sys.stiffness.makeCompressed();
  sys.source = std::move(q);
  sys.source_element = *src;
  sys.mass_kind = kind;
  return sys;
}

// ---------------------------------------------------------------------------

DispersionModel::DispersionModel(SparseRowMatrix transition, Eigen::VectorXd process_variance, double dt)
    : transition_(std::move(transition)), process_variance_(std::move(process_variance)), dt_(dt) {
  if (transition_.rows() != transition_.cols() || transition_.rows() < 2) {
    throw ModelError("augmented transition must be square with at least one node");
  }
  if (process_variance_.size() != transition_.rows()) throw ModelError("process variance has wrong length");
  transition_.makeCompressed();
}

Eigen::VectorXd DispersionModel::input() const {
  const auto n = transition_.rows();
  return Eigen::VectorXd(transition_.col(n - 1)).head(n - 1);
}

simd::CsrView DispersionModel::csr() const {
  return {static_cast<std::size_t>(transition_.rows()), static_cast<std::size_t>(transition_.cols()),
          transition_.outerIndexPtr(), transition_.innerIndexPtr(), transition_.valuePtr()};
}

Eigen::VectorXd DispersionModel::step(const Eigen::VectorXd& x, const Eigen::VectorXd* noise) const {
  if (x.size() != transition_.cols()) {
    throw ModelError("state has length " + std::to_string(x.size()) + ", model expects " +
                     std::to_string(transition_.cols()));
  }
  if (noise && noise->size() != x.size()) throw ModelError("noise vector has wrong length");
  Eigen::VectorXd out(x.size());
  apply({x.data(), static_cast<std::size_t>(x.size())}, {out.data(), static_cast<std::size_t>(out.size())});
  if (noise) out += *noise;
  return out;
}

void DispersionModel::apply(std::span<const double> x, std::span<double> out) const {
  simd::csr_matvec(csr(), x, out);
}

DispersionModel build_model(const GlobalSystem& system, double dt, const Eigen::VectorXd& process_variance,
                            double strength_variance) {
  const auto c = system.mass.rows();
  if (dt < 0.0) throw ModelError("time step must be non-negative");
  if (process_variance.size() != c) throw ModelError("process variance length must equal node count");
  if ((process_variance.array() < 0.0).any() || strength_variance < 0.0) {
    throw ModelError("process covariance must be positive semi-definite");
  }

  SparseRowMatrix a;
  Eigen::VectorXd b;
  SparseRowMatrix identity(c, c);
  identity.setIdentity();

  if (system.mass_kind == MassKind::lumped) {
    const Eigen::VectorXd diag = system.mass.diagonal();
    for (Eigen::Index i = 0; i < c; ++i) {
      if (!(diag(i) > 0.0)) {
        throw ModelError("mass matrix is singular: node " + std::to_string(i) + " belongs to no element");
      }
    }
    const Eigen::VectorXd inv = diag.cwiseInverse();
    SparseRowMatrix scaled = system.stiffness;
    for (Eigen::Index r = 0; r < c; ++r) {
      for (SparseRowMatrix::InnerIterator it(scaled, r); it; ++it) it.valueRef() *= dt * inv(r);
    }
    a = identity - scaled;
    b = dt * inv.cwiseProduct(system.source);
  } else {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    ldlt.compute(Eigen::SparseMatrix<double>(system.mass));
    if (ldlt.info() != Eigen::Success) throw ModelError("mass matrix is singular");
    const Eigen::MatrixXd minv_n = ldlt.solve(Eigen::MatrixXd(system.stiffness));
    a = (Eigen::MatrixXd(identity) - dt * minv_n).sparseView();
    b = dt * ldlt.solve(system.source);
  }

  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(a.nonZeros() + c + 1));
  for (Eigen::Index r = 0; r < a.outerSize(); ++r) {
    for (SparseRowMatrix::InnerIterator it(a, r); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
  }
  for (Eigen::Index i = 0; i < c; ++i) {
    if (b(i) != 0.0) t.emplace_back(i, c, b(i));
  }
  t.emplace_back(c, c, 1.0);

  SparseRowMatrix abar(c + 1, c + 1);
  abar.setFromTriplets(t.begin(), t.end());

  Eigen::VectorXd wbar(c + 1);
  wbar.head(c) = process_variance;
  wbar(c) = strength_variance;
  return DispersionModel(std::move(abar), std::move(wbar), dt);
}

DispersionModel build_model(const GlobalSystem& system, double dt, double process_variance,
                            double strength_variance) {
  return build_model(system, dt, Eigen::VectorXd::Constant(system.mass.rows(), process_variance),
                     strength_variance);
}

// ---------------------------------------------------------------------------

double StabilityReport::recommended_dt() const { return 0.5 * std::min(critical_dt, courant_dt); }

double element_peclet(double speed, double length_scale, double diffusivity) {
  const double num = speed * length_scale;
  if (num == 0.0) return 0.0;
  if (diffusivity <= 0.0) return std::numeric_limits<double>::infinity();
  return num / (2.0 * diffusivity);
}

double max_eigenvalue(const GlobalSystem& system, const PowerIterationOptions& opts, bool* converged,
                      std::size_t* iterations) {
  const auto c = system.mass.rows();
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> apply_op;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  Eigen::VectorXd inv_diag;
  if (system.mass_kind == MassKind::lumped) {
    inv_diag = system.mass.diagonal().cwiseInverse();
    apply_op = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
      return inv_diag.cwiseProduct(system.stiffness * x);
    };
  } else {
    ldlt.compute(Eigen::SparseMatrix<double>(system.mass));
    if (ldlt.info() != Eigen::Success) throw ModelError("mass matrix is singular");
    apply_op = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return ldlt.solve(system.stiffness * x); };
  }

  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> unif(0.5, 1.5);
  Eigen::VectorXd x(c);
  for (Eigen::Index i = 0; i < c; ++i) x(i) = (i % 2 ? -1.0 : 1.0) * unif(rng);
  x.normalize();

  constexpr std::size_t kWindow = 10;
  std::vector<double> history;
  history.reserve(opts.max_iterations);
  bool done = false;
  std::size_t it = 0;
  double estimate = 0.0;
  for (; it < opts.max_iterations; ++it) {
    Eigen::VectorXd y = apply_op(x);
    const double norm = y.norm();
    if (norm == 0.0) {
      estimate = 0.0;
      done = true;
      break;
    }
    estimate = norm;
    history.push_back(estimate);
    x = y / norm;
    if (history.size() > kWindow) {
      const double prev = history[history.size() - 1 - kWindow];
      if (std::abs(estimate - prev) <= opts.tolerance * estimate) {
        done = true;
        ++it;
        break;
      }
    }
  }
  if (!done && !history.empty()) {
    // Oscillating estimates (complex dominant pair): take the largest recent
    // value so the derived time step errs on the small side.
    const std::size_t tail = std::min<std::size_t>(history.size(), 100);
    estimate = *std::max_element(history.end() - static_cast<std::ptrdiff_t>(tail), history.end());
  }
  if (converged) *converged = done;
  if (iterations) *iterations = it;
  return estimate;
}

StabilityReport stability_report(const TriMesh& mesh, std::span<const Velocity> velocities, double diffusivity,
                                 MassKind kind, const PowerIterationOptions& opts) {
  if (velocities.size() != mesh.element_count()) throw ModelError("one velocity per element required");
  StabilityReport r;
  r.courant_dt = std::numeric_limits<double>::infinity();
  r.diffusion_dt = std::numeric_limits<double>::infinity();
  r.peclet.resize(mesh.element_count());

  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    const auto g = mesh.element_geometry(e);
    const double h = g.length_scale();
    const double speed = velocities[e].norm();
    if (speed > 0.0) r.courant_dt = std::min(r.courant_dt, h / speed);
    if (diffusivity > 0.0) r.diffusion_dt = std::min(r.diffusion_dt, h * h / (2.0 * diffusivity));
    const double pe = element_peclet(speed, h, diffusivity);
    r.peclet[e] = pe;
    r.max_peclet = std::max(r.max_peclet, pe);
    const double alpha = pe > 0.0 ? std::max(0.0, 1.0 - 1.0 / pe) : 0.0;
    r.artificial_diffusivity = std::max(r.artificial_diffusivity, alpha * speed * h / 2.0);
  }

  // The source position does not affect M or N; use any node for assembly.
  const auto sys = assemble(mesh, velocities, diffusivity, mesh.nodes().front(), kind);
  r.lambda_max = max_eigenvalue(sys, opts, &r.power_iteration_converged, &r.power_iterations);
  r.critical_dt = r.lambda_max > 0.0 ? 2.0 / r.lambda_max : std::numeric_limits<double>::infinity();
  return r;
}

double apply_artificial_diffusivity(double diffusivity, const StabilityReport& report) {
  if (diffusivity < 0.0) throw ModelError("diffusivity must be non-negative");
  return diffusivity + report.artificial_diffusivity;
}

// ---------------------------------------------------------------------------

DynamicsSchedule::DynamicsSchedule(const TriMesh& mesh, const FlowField& flow, const Settings& settings,
                                   std::size_t horizon)
    : settings_(settings), node_count_(mesh.node_count()) {
  if (!(settings.dt > 0.0)) throw ModelError("time step must be positive");
  std::map<std::size_t, std::size_t> epoch_to_model;
  step_to_model_.reserve(horizon);
  for (std::size_t k = 0; k < horizon; ++k) {
    const std::size_t epoch = flow_epoch(flow, static_cast<double>(k) * settings.dt);
    auto it = epoch_to_model.find(epoch);
    if (it == epoch_to_model.end()) {
      const auto vel = element_velocities(flow, mesh, epoch_time(flow, epoch));
      const auto sys = assemble(mesh, vel, settings.diffusivity, settings.source, settings.mass_kind);
      models_.push_back(build_model(sys, settings.dt, settings.process_variance, settings.strength_variance));
      it = epoch_to_model.emplace(epoch, models_.size() - 1).first;
    }
    step_to_model_.push_back(it->second);
  }
  if (models_.empty()) {
    const auto vel = element_velocities(flow, mesh, epoch_time(flow, 0));
    const auto sys = assemble(mesh, vel, settings.diffusivity, settings.source, settings.mass_kind);
    models_.push_back(build_model(sys, settings.dt, settings.process_variance, settings.strength_variance));
  }
}

const DispersionModel& DynamicsSchedule::at_step(std::size_t k) const {
  if (step_to_model_.empty()) return models_.front();
  if (k >= step_to_model_.size()) throw std::out_of_range("step beyond schedule horizon");
  return models_[step_to_model_[k]];
}

}  // namespace plume
