#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace condvar {

// Evenly spaced points on the unit circle.
class CircleGrid {
 public:
  // Throws ParameterError for n_points < 2.
  explicit CircleGrid(std::size_t n_points);

  std::size_t n_points() const noexcept { return n_; }
  double angular_spacing() const noexcept;
  // Angle between points i and j using the shorter arc: 2 pi s / n with
  // s = min(|i - j|, n - |i - j|).
  double angle(std::size_t i, std::size_t j) const;
  // Straight-line distance 2 sin(angle / 2).
  double chordal_distance(std::size_t i, std::size_t j) const;

 private:
  std::size_t n_;
};

// SOAR kernel (1 + d/L) exp(-d/L) at distance d >= 0.
double soar_correlation(double distance, double lengthscale);

// Dense symmetric positive-definite matrix with unit diagonal.
class CorrelationMatrix {
 public:
  // Validates exact symmetry, unit diagonal and positive definiteness.
  // Throws ParameterError for the first two, DegeneracyError (with the
  // minimum eigenvalue) for the last.
  static CorrelationMatrix from_entries(Eigen::MatrixXd entries,
                                        std::optional<double> lengthscale = std::nullopt);
  static CorrelationMatrix identity(std::size_t dim);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(entries_.rows()); }
  const Eigen::MatrixXd& entries() const noexcept { return entries_; }
  std::optional<double> lengthscale() const noexcept { return lengthscale_; }

 private:
  CorrelationMatrix(Eigen::MatrixXd entries, std::optional<double> lengthscale)
      : entries_(std::move(entries)), lengthscale_(lengthscale) {}

  Eigen::MatrixXd entries_;
  std::optional<double> lengthscale_;
};

// SOAR correlation on the grid, evaluated entrywise from the kernel.
// Throws ParameterError for lengthscale <= 0 and DegeneracyError if the
// result is not positive definite.
CorrelationMatrix build_soar(const CircleGrid& grid, double lengthscale);

// First row of a circulant matrix with its DFT eigenvalues
// gamma_m = sum_k c_k w^(mk), w = exp(-2 pi i / d).
class CirculantSpec {
 public:
  const std::vector<double>& first_row() const noexcept { return row_; }
  const std::vector<std::complex<double>>& eigenvalues() const noexcept { return gamma_; }
  std::size_t dim() const noexcept { return row_.size(); }
  // Row r is the first row cyclically shifted right by r: C(r, j) = c_{(j - r) mod d}.
  Eigen::MatrixXd materialize() const;
  // c_k == c_{d-k} within tol * max|c|.
  bool is_symmetric(double tol = 1e-12) const;

 private:
  friend CirculantSpec circulant_from_first_row(std::vector<double> row);
  std::vector<double> row_;
  std::vector<std::complex<double>> gamma_;
};

// Throws ParameterError for an empty row.
CirculantSpec circulant_from_first_row(std::vector<double> row);

// Real eigenvalues in descending order. Throws UnsupportedInputError when the
// row is not reflection-symmetric (complex spectrum).
std::vector<double> circulant_eigenvalues(const CirculantSpec& spec);

// First row of a matrix (no circulant check).
std::vector<double> first_row_of(const Eigen::MatrixXd& m);

// Largest |A(i,j) - A(0, (j - i) mod d)|; zero for an exact circulant.
double circulant_defect(const Eigen::MatrixXd& m);

struct SqrtResult {
  Eigen::MatrixXd root;
  // Some eigenvalues in [-1e-12, 0] were set to zero.
  bool clamped = false;
};

// Unique symmetric positive semidefinite square root via eigendecomposition.
// Throws NotPositiveDefiniteError for an eigenvalue below -1e-12.
SqrtResult symmetric_sqrt(const Eigen::MatrixXd& m);
SqrtResult symmetric_sqrt(const CorrelationMatrix& m);

// Inverse through a Cholesky factorization. Throws NotPositiveDefiniteError
// if the factorization fails.
Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& m);
Eigen::MatrixXd spd_inverse(const CorrelationMatrix& m);

// Spectral data of one SPD matrix, computed once and shared between the
// Hessian, bounds and sweep code. Immutable.
class SpdFactorization {
 public:
  // Throws NotPositiveDefiniteError unless every eigenvalue is > 0.
  explicit SpdFactorization(Eigen::MatrixXd m);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(matrix_.rows()); }
  const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }
  // Descending.
  const Eigen::VectorXd& eigenvalues() const noexcept { return eigenvalues_; }
  const Eigen::MatrixXd& eigenvectors() const noexcept { return eigenvectors_; }
  double lambda_max() const { return eigenvalues_(0); }
  double lambda_min() const { return eigenvalues_(eigenvalues_.size() - 1); }
  const Eigen::MatrixXd& sqrt() const noexcept { return sqrt_; }
  const Eigen::MatrixXd& inverse_sqrt() const noexcept { return inverse_sqrt_; }
  const Eigen::MatrixXd& inverse() const noexcept { return inverse_; }

 private:
  Eigen::MatrixXd matrix_;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd eigenvectors_;
  Eigen::MatrixXd sqrt_;
  Eigen::MatrixXd inverse_sqrt_;
  Eigen::MatrixXd inverse_;
};

}  // namespace condvar
