#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "plume/flowfield.hpp"
#include "plume/mesh.hpp"
#include "plume/simd/kernels.hpp"

namespace plume {

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class MassKind { lumped, consistent };

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Element matrices for linear triangles
// ---------------------------------------------------------------------------

Eigen::Matrix3d element_mass(const ElementGeometry& g, MassKind kind);

/// Advection (identical rows, scaled by 1/6) plus the two lambda/(4S)
/// diffusion blocks, for velocity (u, v) constant over the element.
Eigen::Matrix3d element_stiffness(const ElementGeometry& g, double diffusivity, Velocity vel);

/// Source term for an element; uniform strength over the element that holds
/// the point source, zero elsewhere.
Eigen::Vector3d element_force(const ElementGeometry& g, bool contains_source, double strength);

// ---------------------------------------------------------------------------
// Global assembly
// ---------------------------------------------------------------------------

struct GlobalSystem {
  SparseRowMatrix mass;       // M, C x C
  SparseRowMatrix stiffness;  // N, C x C
  Eigen::VectorXd source;     // Q(p_s) for unit strength
  std::size_t source_element = 0;
  MassKind mass_kind = MassKind::lumped;
};

/// Scatter-add of element matrices. The boundary flux vector is zero
/// (zero-gradient boundaries). Throws ModelError if the source is outside the
/// mesh or the velocity list does not have one entry per element.
GlobalSystem assemble(const TriMesh& mesh, std::span<const Velocity> velocities, double diffusivity,
                      const Point2& source, MassKind kind);

// ---------------------------------------------------------------------------
// Augmented discrete-time model
// ---------------------------------------------------------------------------

/// x_{k+1} = Abar x_k + wbar_k with x = [c; u]. Abar = [[A, B], [0, 1]],
/// A = M^-1 (M - dt N), B = dt M^-1 Q. Process covariance is diagonal,
/// diag(W, Pi).
class DispersionModel {
 public:
  DispersionModel(SparseRowMatrix transition, Eigen::VectorXd process_variance, double dt);

  std::size_t node_count() const { return static_cast<std::size_t>(transition_.rows()) - 1; }
  std::size_t state_dim() const { return static_cast<std::size_t>(transition_.rows()); }
  double time_step() const { return dt_; }

  const SparseRowMatrix& transition() const { return transition_; }
  const Eigen::VectorXd& process_variance() const { return process_variance_; }
  Eigen::VectorXd input() const;  // B column
  Eigen::MatrixXd transition_dense() const { return Eigen::MatrixXd(transition_); }

  simd::CsrView csr() const;

  /// Abar x + noise. Throws ModelError on dimension mismatch.
  Eigen::VectorXd step(const Eigen::VectorXd& x, const Eigen::VectorXd* noise = nullptr) const;
  /// In-place variant used on hot paths: out = Abar x.
  void apply(std::span<const double> x, std::span<double> out) const;

 private:
  SparseRowMatrix transition_;
  Eigen::VectorXd process_variance_;
  double dt_;
};

/// process_variance holds W's diagonal (length C); strength_variance is Pi.
DispersionModel build_model(const GlobalSystem& system, double dt, const Eigen::VectorXd& process_variance,
                            double strength_variance);

/// Convenience overload with W = w I.
DispersionModel build_model(const GlobalSystem& system, double dt, double process_variance,
                            double strength_variance);

// ---------------------------------------------------------------------------
// Stability diagnostics
// ---------------------------------------------------------------------------

struct StabilityReport {
  double lambda_max = 0;           // largest eigenvalue of M^-1 N [1/s]
  double critical_dt = 0;          // 2 / lambda_max
  double courant_dt = 0;           // min_e h_e / |v_e| (inf without flow)
  double diffusion_dt = 0;         // min_e h_e^2 / (2 lambda) (inf without diffusion)
  std::vector<double> peclet;      // per element
  double max_peclet = 0;
  double artificial_diffusivity = 0;  // lambda*, max over elements
  bool power_iteration_converged = false;
  std::size_t power_iterations = 0;

  /// 0.5 * min(critical_dt, courant_dt).
  double recommended_dt() const;
  bool is_stable(double dt) const { return dt <= critical_dt; }
};

struct PowerIterationOptions {
  double tolerance = 1e-8;
  std::size_t max_iterations = 10000;
};

/// Dominant eigenvalue magnitude of M^-1 N by power iteration.
double max_eigenvalue(const GlobalSystem& system, const PowerIterationOptions& opts = {},
                      bool* converged = nullptr, std::size_t* iterations = nullptr);

StabilityReport stability_report(const TriMesh& mesh, std::span<const Velocity> velocities, double diffusivity,
                                 MassKind kind = MassKind::lumped, const PowerIterationOptions& opts = {});

/// lambda + lambda*; afterwards every element has Pe <= 1.
double apply_artificial_diffusivity(double diffusivity, const StabilityReport& report);

double element_peclet(double speed, double length_scale, double diffusivity);

// ---------------------------------------------------------------------------
// Time-varying dynamics
// ---------------------------------------------------------------------------

/// Models for each flow snapshot reached within a horizon. The transition is
/// rebuilt when the flow epoch changes and reused within an epoch.
class DynamicsSchedule {
 public:
  struct Settings {
    double diffusivity = 0;
    double dt = 0;
    Point2 source;
    MassKind mass_kind = MassKind::lumped;
    double process_variance = 5e-3;
    double strength_variance = 5e-3;
  };

  DynamicsSchedule(const TriMesh& mesh, const FlowField& flow, const Settings& settings, std::size_t horizon);

  /// Model for the transition from step k to k + 1 (time k * dt).
  const DispersionModel& at_step(std::size_t k) const;
  std::size_t node_count() const { return node_count_; }
  std::size_t state_dim() const { return node_count_ + 1; }
  const Settings& settings() const { return settings_; }
  std::size_t model_count() const { return models_.size(); }

 private:
  Settings settings_;
  std::size_t node_count_ = 0;
  std::vector<DispersionModel> models_;
  std::vector<std::size_t> step_to_model_;
};

}  // namespace plume
