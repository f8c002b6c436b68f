#include <Eigen/Cholesky>
#include <cmath>
#include <string>

#include "plume/filters.hpp"
#include "plume/normal.hpp"

namespace plume {

namespace {

Eigen::MatrixXd predict_covariance(const DispersionModel& model, const Eigen::MatrixXd& cov) {
  const auto& a = model.transition();
  const Eigen::MatrixXd ap = a * cov;
  // A P A^T = (A (A P)^T)^T for symmetric P.
  Eigen::MatrixXd out = (a * ap.transpose()).transpose();
  out.diagonal() += model.process_variance();
  return 0.5 * (out + out.transpose());
}

}  // namespace

GaussianBelief kf_predict(const DispersionModel& model, const GaussianBelief& belief) {
  const auto n = static_cast<Eigen::Index>(model.state_dim());
  if (belief.mean.size() != n || belief.cov.rows() != n || belief.cov.cols() != n) {
    throw FilterError("belief dimension does not match model");
  }
  return {model.step(belief.mean), predict_covariance(model, belief.cov)};
}

double innovation_jitter(const Eigen::MatrixXd& cov, double jitter_scale) {
  return jitter_scale * cov.trace() / static_cast<double>(cov.rows());
}

CovarianceUpdate kf_covariance_update(const Eigen::MatrixXd& predicted_cov, const SparseRowMatrix& h,
                                      double jitter) {
  if (h.cols() != predicted_cov.rows()) throw FilterError("measurement matrix does not match state dimension");
  const Eigen::MatrixXd hp = h * predicted_cov;  // N x n
  Eigen::MatrixXd s = (h * hp.transpose()).transpose();
  s = 0.5 * (s + s.transpose());

  CovarianceUpdate out;
  out.innovation_var = s.diagonal();
  s.diagonal().array() += jitter;

  Eigen::MatrixXd kt;  // K^T = S^-1 H P
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() == Eigen::Success) {
    kt = llt.solve(hp);
  } else {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(s);
    const double dmin = ldlt.info() == Eigen::Success ? ldlt.vectorD().minCoeff() : 0.0;
    if (!(dmin > 0.0)) {
      throw FilterError("innovation covariance is singular even with jitter " + std::to_string(jitter) +
                        "; check for duplicate sensors or a degenerate prior");
    }
    kt = ldlt.solve(hp);
  }
  out.gain = kt.transpose();
  out.posterior = predicted_cov - out.gain * hp;
  out.posterior = 0.5 * (out.posterior + out.posterior.transpose());
  return out;
}

GaussianBelief kf_update(const GaussianBelief& belief, const SparseRowMatrix& h, const Eigen::VectorXd& z,
                         double jitter) {
  if (z.size() != h.rows()) throw FilterError("observation length does not match measurement matrix");
  auto cu = kf_covariance_update(belief.cov, h, jitter);
  const Eigen::VectorXd innovation = z - h * belief.mean;
  return {belief.mean + cu.gain * innovation, std::move(cu.posterior)};
}

double log_latent_transition_density(double predicted, double innovation_var, double z, double jitter) {
  const double var = innovation_var + jitter;
  if (!(var > 0.0)) throw FilterError("latent transition variance must be positive");
  return normal::log_pdf(z, predicted, var);
}

double latent_transition_density(double predicted, double innovation_var, double z, double jitter) {
  return std::exp(log_latent_transition_density(predicted, innovation_var, z, jitter));
}

}  // namespace plume
