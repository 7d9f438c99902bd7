#pragma once

#include <cstdint>
#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "condvar/covariance.hpp"
#include "condvar/obs_operators.hpp"
#include "condvar/solvers.hpp"

namespace condvar {

// Identifies one experiment cell in reports.
struct ModelDescriptor {
  std::string operator_name;
  std::optional<double> lb;  // background lengthscale, if SOAR
  std::optional<double> lr;  // observation lengthscale, if SOAR
  std::size_t n = 0;
  std::size_t p = 0;
  double sigma_b = 1.0;
  double sigma_r = 1.0;
  std::optional<std::uint64_t> seed;
};

nlohmann::json to_json(const ModelDescriptor& d);

// 3D-Var model: B = sigma_b^2 * B~, R = sigma_r^2 * R~ and H, with B~ and R~
// correlation matrices. The factorizations of B~ and R~ are shared so sweep
// cells reuse them.
class HessianModel {
 public:
  // Throws ParameterError when dimensions disagree, p >= n or a variance is
  // not positive.
  HessianModel(std::shared_ptr<const SpdFactorization> b_correlation, double b_variance,
               std::shared_ptr<const SpdFactorization> r_correlation, double r_variance,
               std::shared_ptr<const ObservationOperator> h);

  static HessianModel from_correlations(const CorrelationMatrix& b, double b_variance,
                                        const CorrelationMatrix& r, double r_variance,
                                        ObservationOperator h);

  std::size_t n() const noexcept { return h_->n(); }
  std::size_t p() const noexcept { return h_->p(); }
  double b_variance() const noexcept { return b_variance_; }
  double r_variance() const noexcept { return r_variance_; }
  const SpdFactorization& b_correlation() const noexcept { return *b_; }
  const SpdFactorization& r_correlation() const noexcept { return *r_; }
  const ObservationOperator& h() const noexcept { return *h_; }

  Eigen::MatrixXd b() const { return b_variance_ * b_->matrix(); }
  Eigen::MatrixXd r() const { return r_variance_ * r_->matrix(); }
  Eigen::MatrixXd b_sqrt() const { return std::sqrt(b_variance_) * b_->sqrt(); }
  Eigen::MatrixXd b_inverse() const { return b_->inverse() / b_variance_; }
  Eigen::MatrixXd r_inverse() const { return r_->inverse() / r_variance_; }
  Eigen::MatrixXd r_inverse_sqrt() const { return r_->inverse_sqrt() / std::sqrt(r_variance_); }
  // Descending spectra of the scaled covariances.
  Eigen::VectorXd b_eigenvalues() const { return b_variance_ * b_->eigenvalues(); }
  Eigen::VectorXd r_eigenvalues() const { return r_variance_ * r_->eigenvalues(); }

  // H B H^T (p x p).
  Eigen::MatrixXd hbht() const;
  // R^{-1/2} H B H^T R^{-1/2} (p x p, symmetrized): similar to R^{-1} H B H^T
  // and shares its nonzero spectrum with B^{1/2} H^T R^{-1} H B^{1/2}.
  Eigen::MatrixXd whitened_hbht() const;
  // The same product built from the correlations only; whitened_hbht() is
  // variance_ratio() times this.
  Eigen::MatrixXd whitened_correlation_hbht() const;
  // sigma_b^2 / sigma_r^2, the only way the variances enter S^.
  double variance_ratio() const noexcept { return b_variance_ / r_variance_; }

  ModelDescriptor descriptor() const { return descriptor_; }
  void set_descriptor(ModelDescriptor d) { descriptor_ = std::move(d); }

 private:
  std::shared_ptr<const SpdFactorization> b_;
  double b_variance_;
  std::shared_ptr<const SpdFactorization> r_;
  double r_variance_;
  std::shared_ptr<const ObservationOperator> h_;
  ModelDescriptor descriptor_;
};

// I + B^{1/2} H^T R^{-1} H B^{1/2}, assembled as I + W W^T with
// W = B^{1/2} H^T R^{-1/2}, then symmetrized.
Eigen::MatrixXd assemble_preconditioned(const HessianModel& m);

// B^{-1} + H^T R^{-1} H, symmetrized.
Eigen::MatrixXd assemble_unpreconditioned(const HessianModel& m);

// kappa(S^) = 1 + lambda_1(R^{-1} H B H^T), from the p x p symmetric form
// (variance ratio times the correlation-only eigenvalue).
double kappa_via_rank_p(const HessianModel& m);

// Matrix-free y = S^ x using the SIMD kernels; holds its own row-major
// copies of B^{1/2} and R^{-1}. Safe to call concurrently.
class PreconditionedHessianOperator {
 public:
  explicit PreconditionedHessianOperator(const HessianModel& m);
  std::size_t dim() const noexcept { return n_; }
  void apply(std::span<const double> x, std::span<double> y) const;
  LinearOperator as_linear_operator() const;

 private:
  std::size_t n_, p_;
  std::vector<double> b_sqrt_;     // n x n row-major
  std::vector<double> r_inverse_;  // p x p row-major
  std::shared_ptr<const ObservationOperator> h_;
};

struct SpectrumOptions {
  // Adjacent sorted eigenvalues share a cluster when (a - b) / a < gap.
  double cluster_gap = 0.05;
  // When set, the first update_rank eigenvalues minus one are reported as
  // the nonzero update spectrum of a preconditioned Hessian.
  std::optional<std::size_t> update_rank;
};

struct SpectrumReport {
  Eigen::VectorXd eigenvalues;  // descending
  double kappa = 0.0;
  std::size_t cluster_count = 0;
  double cluster_gap = 0.05;
  std::optional<Eigen::VectorXd> update_eigenvalues;  // descending
  std::optional<std::size_t> update_cluster_count;
  std::optional<ModelDescriptor> model;
};

// Number of clusters in a descending sequence of positive values.
std::size_t count_clusters(std::span<const double> descending, double gap);

// Throws ParameterError for nonsymmetric input or a non-positive smallest
// eigenvalue (kappa undefined).
SpectrumReport spectrum(const Eigen::MatrixXd& matrix, const SpectrumOptions& options = {});

// spectrum(assemble_preconditioned(m)) with update_rank = p and the model
// descriptor attached.
SpectrumReport preconditioned_spectrum(const HessianModel& m, double cluster_gap = 0.05);

nlohmann::json to_json(const SpectrumReport& s);

}  // namespace condvar
