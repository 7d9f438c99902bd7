#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace condvar {

// Eigenpairs of a dense symmetric matrix, eigenvalues in descending order
// (eigenvalues[0] is lambda_1, the largest). Column k of eigenvectors
// belongs to eigenvalues[k].
struct EigenDecomposition {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;
};

// Largest |A(i,j) - A(j,i)|.
double symmetry_defect(const Eigen::MatrixXd& a);

// Throws ParameterError when a is not square or its symmetry defect exceeds
// tol * max(1, max|A|).
void require_symmetric(const Eigen::MatrixXd& a, double tol, const char* what);

// Throws ParameterError for nonsymmetric input (defect > 1e-10 relative) and
// SolverError if the QR iteration fails to converge.
EigenDecomposition symmetric_eigendecomposition(const Eigen::MatrixXd& a);

// Eigenvalues only, descending. Same preconditions as above.
Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& a);

// out = A * in, for an SPD operator A. Must not retain the spans.
using LinearOperator = std::function<void(std::span<const double> in, std::span<double> out)>;

struct CGOptions {
  double tolerance = 1e-10;
  // 0 means 5 * dim.
  std::size_t max_iterations = 0;
  // The true residual b - A x replaces the recursive one every this many
  // iterations.
  std::size_t residual_replacement = 10;
};

struct CGRunReport {
  std::size_t iterations = 0;
  // ||b - A x_k|| / ||b|| after each iteration k = 1..iterations.
  std::vector<double> relative_residual_trace;
  bool converged = false;
  double tolerance = 0.0;
  // ||x_k - x_true|| / ||x_true||, when the truth was supplied.
  std::optional<double> recovered_solution_error;
  std::vector<double> solution;

  double final_residual() const {
    return relative_residual_trace.empty() ? 0.0 : relative_residual_trace.back();
  }
};

// Unpreconditioned conjugate gradients from x0 = 0.
//
// Convergence is declared only on the true relative residual: when the
// recursive residual first meets the tolerance, b - A x is recomputed and
// the iteration continues from it if the check fails.
//
// Throws ParameterError for a non-positive tolerance or empty b and
// SolverError (carrying the iteration) when p^T A p <= 0.
CGRunReport conjugate_gradient(const LinearOperator& apply_a, std::span<const double> b,
                               const CGOptions& options = {},
                               std::optional<std::span<const double>> x_true = std::nullopt);

struct TestSignalDescriptor {
  std::vector<int> wavenumbers{1, 4, 16};
  std::vector<double> amplitudes{1.0, 0.5, 0.25};
  // Gaussian bump: center and width are fractions of n.
  double bump_center_fraction = 1.0 / 3.0;
  double bump_width_fraction = 1.0 / 20.0;
  double bump_amplitude = 1.0;

  std::string describe() const;
};

// Multi-scale reference state for the CG recovery experiments:
//   x_i = sum_k a_k sin(2 pi k i / n) + A exp(-((i - c) / w)^2 / 2),
// with c = n * center_fraction and w = n * width_fraction.
struct TestSignal {
  std::vector<double> values;
  TestSignalDescriptor descriptor;
};

// Throws ParameterError when n < 8, a wavenumber is not below n/2, or the
// amplitude list does not match the wavenumber list.
TestSignal make_test_signal(std::size_t n, const TestSignalDescriptor& descriptor = {});

}  // namespace condvar
