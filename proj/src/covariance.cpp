#include "condvar/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "condvar/errors.hpp"
#include "condvar/kernels.hpp"
#include "condvar/solvers.hpp"

namespace condvar {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kClampTolerance = 1e-12;

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& a) { return 0.5 * (a + a.transpose()); }

Eigen::MatrixXd spectral_function(const EigenDecomposition& ed,
                                  const std::function<double(double)>& f) {
  const Eigen::VectorXd mapped = ed.eigenvalues.unaryExpr(f);
  return symmetrized(ed.eigenvectors * mapped.asDiagonal() * ed.eigenvectors.transpose());
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
  const Eigen::VectorXd ev = symmetric_eigenvalues(m);
  return ev(ev.size() - 1);
}

}  // namespace

CircleGrid::CircleGrid(std::size_t n_points) : n_(n_points) {
  if (n_points < 2) throw ParameterError("CircleGrid: need at least 2 points");
}

double CircleGrid::angular_spacing() const noexcept { return 2.0 * kPi / static_cast<double>(n_); }

double CircleGrid::angle(std::size_t i, std::size_t j) const {
  if (i >= n_ || j >= n_) throw ParameterError("CircleGrid: point index out of range");
  const std::size_t d = i > j ? i - j : j - i;
  const std::size_t s = std::min(d, n_ - d);
  return 2.0 * kPi * static_cast<double>(s) / static_cast<double>(n_);
}

double CircleGrid::chordal_distance(std::size_t i, std::size_t j) const {
  return std::abs(2.0 * std::sin(0.5 * angle(i, j)));
}

double soar_correlation(double distance, double lengthscale) {
  const double r = distance / lengthscale;
  return (1.0 + r) * std::exp(-r);
}

CorrelationMatrix CorrelationMatrix::from_entries(Eigen::MatrixXd entries,
                                                  std::optional<double> lengthscale) {
  if (entries.rows() == 0 || entries.rows() != entries.cols())
    throw ParameterError("CorrelationMatrix: entries must be a nonempty square matrix");
  if (symmetry_defect(entries) != 0.0)
    throw ParameterError("CorrelationMatrix: entries are not exactly symmetric");
  for (Eigen::Index i = 0; i < entries.rows(); ++i)
    if (entries(i, i) != 1.0) throw ParameterError("CorrelationMatrix: diagonal must be 1");
  if (lengthscale && !(*lengthscale > 0.0))
    throw ParameterError("CorrelationMatrix: lengthscale must be positive");

  Eigen::LLT<Eigen::MatrixXd> llt(entries);
  if (llt.info() != Eigen::Success) {
    const double lmin = min_eigenvalue(entries);
    std::ostringstream os;
    os << "CorrelationMatrix: not positive definite (minimum eigenvalue " << lmin << ")";
    throw DegeneracyError(os.str(), lmin);
  }
  return CorrelationMatrix(std::move(entries), lengthscale);
}

CorrelationMatrix CorrelationMatrix::identity(std::size_t dim) {
  if (dim == 0) throw ParameterError("CorrelationMatrix: dimension must be positive");
  const auto d = static_cast<Eigen::Index>(dim);
  return CorrelationMatrix(Eigen::MatrixXd::Identity(d, d), std::nullopt);
}

CorrelationMatrix build_soar(const CircleGrid& grid, double lengthscale) {
  if (!(lengthscale > 0.0) || !std::isfinite(lengthscale))
    throw ParameterError("build_soar: lengthscale must be positive and finite");
  const std::size_t n = grid.n_points();
  const auto nn = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd d(nn, nn);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i)
      d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          soar_correlation(grid.chordal_distance(i, j), lengthscale);
  return CorrelationMatrix::from_entries(std::move(d), lengthscale);
}

CirculantSpec circulant_from_first_row(std::vector<double> row) {
  if (row.empty()) throw ParameterError("circulant_from_first_row: empty row");
  const std::size_t d = row.size();
  // Twiddles indexed by (m k) mod d so every angle is reduced exactly.
  std::vector<double> cos_tab(d), sin_tab(d);
  for (std::size_t j = 0; j < d; ++j) {
    const double t = 2.0 * kPi * static_cast<double>(j) / static_cast<double>(d);
    cos_tab[j] = std::cos(t);
    sin_tab[j] = std::sin(t);
  }
  CirculantSpec spec;
  spec.gamma_.resize(d);
  std::vector<double> c(d), s(d);
  for (std::size_t m = 0; m < d; ++m) {
    for (std::size_t k = 0; k < d; ++k) {
      const std::size_t idx = (m * k) % d;
      c[k] = cos_tab[idx];
      s[k] = sin_tab[idx];
    }
    spec.gamma_[m] = {kernels::dot(row, c), -kernels::dot(row, s)};
  }
  spec.row_ = std::move(row);
  return spec;
}

Eigen::MatrixXd CirculantSpec::materialize() const {
  const auto d = static_cast<Eigen::Index>(row_.size());
  Eigen::MatrixXd m(d, d);
  for (Eigen::Index r = 0; r < d; ++r)
    for (Eigen::Index j = 0; j < d; ++j) m(r, j) = row_[static_cast<std::size_t>((j - r + d) % d)];
  return m;
}

bool CirculantSpec::is_symmetric(double tol) const {
  double scale = 0.0;
  for (double v : row_) scale = std::max(scale, std::abs(v));
  const std::size_t d = row_.size();
  for (std::size_t k = 1; k < d; ++k)
    if (std::abs(row_[k] - row_[d - k]) > tol * scale) return false;
  return true;
}

std::vector<double> circulant_eigenvalues(const CirculantSpec& spec) {
  if (!spec.is_symmetric())
    throw UnsupportedInputError(
        "circulant_eigenvalues: first row is not reflection-symmetric, spectrum is complex");
  std::vector<double> out;
  out.reserve(spec.dim());
  for (const auto& g : spec.eigenvalues()) out.push_back(g.real());
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

std::vector<double> first_row_of(const Eigen::MatrixXd& m) {
  std::vector<double> row(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(0, j);
  return row;
}

double circulant_defect(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw ParameterError("circulant_defect: matrix is not square");
  const Eigen::Index d = m.rows();
  double defect = 0.0;
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      defect = std::max(defect, std::abs(m(i, j) - m(0, (j - i + d) % d)));
  return defect;
}

SqrtResult symmetric_sqrt(const Eigen::MatrixXd& m) {
  const EigenDecomposition ed = symmetric_eigendecomposition(m);
  const double lmin = ed.eigenvalues(ed.eigenvalues.size() - 1);
  if (lmin < -kClampTolerance) {
    std::ostringstream os;
    os << "symmetric_sqrt: matrix is not positive semidefinite (eigenvalue " << lmin << ")";
    throw NotPositiveDefiniteError(os.str());
  }
  SqrtResult result;
  result.clamped = lmin < 0.0;
  result.root = spectral_function(ed, [](double l) { return l < 0.0 ? 0.0 : std::sqrt(l); });
  return result;
}

SqrtResult symmetric_sqrt(const CorrelationMatrix& m) { return symmetric_sqrt(m.entries()); }

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& m) {
  if (m.rows() == 0 || m.rows() != m.cols())
    throw ParameterError("spd_inverse: matrix must be nonempty and square");
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefiniteError("spd_inverse: Cholesky factorization failed");
  const auto d = m.rows();
  return symmetrized(llt.solve(Eigen::MatrixXd::Identity(d, d)));
}

Eigen::MatrixXd spd_inverse(const CorrelationMatrix& m) { return spd_inverse(m.entries()); }

SpdFactorization::SpdFactorization(Eigen::MatrixXd m) : matrix_(std::move(m)) {
  EigenDecomposition ed = symmetric_eigendecomposition(matrix_);
  const double lmin = ed.eigenvalues(ed.eigenvalues.size() - 1);
  if (!(lmin > 0.0)) {
    std::ostringstream os;
    os << "SpdFactorization: matrix is not positive definite (eigenvalue " << lmin << ")";
    throw NotPositiveDefiniteError(os.str());
  }
  sqrt_ = spectral_function(ed, [](double l) { return std::sqrt(l); });
  inverse_sqrt_ = spectral_function(ed, [](double l) { return 1.0 / std::sqrt(l); });
  inverse_ = spd_inverse(matrix_);
  eigenvalues_ = std::move(ed.eigenvalues);
  eigenvectors_ = std::move(ed.eigenvectors);
}

}  // namespace condvar
