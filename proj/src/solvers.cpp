#include "condvar/solvers.hpp"

#include <cmath>
#include <sstream>

#include "condvar/errors.hpp"
#include "condvar/format.hpp"
#include "condvar/kernels.hpp"

namespace condvar {

double symmetry_defect(const Eigen::MatrixXd& a) {
  double defect = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = j + 1; i < a.rows(); ++i)
      defect = std::max(defect, std::abs(a(i, j) - a(j, i)));
  return defect;
}

void require_symmetric(const Eigen::MatrixXd& a, double tol, const char* what) {
  if (a.rows() != a.cols())
    throw ParameterError(std::string(what) + ": matrix is not square");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  const double defect = symmetry_defect(a);
  if (defect > tol * scale) {
    std::ostringstream os;
    os << what << ": matrix is not symmetric (defect " << defect << ")";
    throw ParameterError(os.str());
  }
}

namespace {

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solve(const Eigen::MatrixXd& a, int options) {
  require_symmetric(a, 1e-10, "symmetric eigensolver");
  if (a.rows() == 0) throw ParameterError("symmetric eigensolver: empty matrix");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, options);
  if (es.info() != Eigen::Success)
    throw SolverError("symmetric eigensolver did not converge for dimension " +
                          std::to_string(a.rows()),
                      static_cast<std::size_t>(a.rows()));
  return es;
}

}  // namespace

EigenDecomposition symmetric_eigendecomposition(const Eigen::MatrixXd& a) {
  const auto es = solve(a, Eigen::ComputeEigenvectors);
  // Eigen returns ascending order.
  return {es.eigenvalues().reverse(), es.eigenvectors().rowwise().reverse()};
}

Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& a) {
  return solve(a, Eigen::EigenvaluesOnly).eigenvalues().reverse();
}

CGRunReport conjugate_gradient(const LinearOperator& apply_a, std::span<const double> b,
                               const CGOptions& options,
                               std::optional<std::span<const double>> x_true) {
  const std::size_t n = b.size();
  if (n == 0) throw ParameterError("conjugate_gradient: empty right-hand side");
  if (!(options.tolerance > 0.0))
    throw ParameterError("conjugate_gradient: tolerance must be positive");
  if (x_true && x_true->size() != n)
    throw ParameterError("conjugate_gradient: reference solution has wrong length");

  CGRunReport report;
  report.tolerance = options.tolerance;
  const std::size_t max_it = options.max_iterations ? options.max_iterations : 5 * n;
  const std::size_t replace_every = std::max<std::size_t>(1, options.residual_replacement);

  std::vector<double> x(n, 0.0), r(b.begin(), b.end()), p(r), ap(n);
  const double b_norm = kernels::nrm2(b);
  if (b_norm == 0.0) {
    report.converged = true;
    report.solution = x;
    if (x_true) {
      const double t = kernels::nrm2(*x_true);
      report.recovered_solution_error = t == 0.0 ? 0.0 : 1.0;
    }
    return report;
  }

  auto true_residual = [&] {
    apply_a(x, ap);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
  };

  double rr = kernels::dot(r, r);
  for (std::size_t k = 1; k <= max_it; ++k) {
    apply_a(p, ap);
    const double curvature = kernels::dot(p, ap);
    if (!(curvature > 0.0)) {
      std::ostringstream os;
      os << "conjugate_gradient: operator is not positive definite (p^T A p = " << curvature
         << " at iteration " << k << ")";
      throw SolverError(os.str(), k);
    }
    const double alpha = rr / curvature;
    kernels::axpy(alpha, p, x);
    kernels::axpy(-alpha, ap, r);
    if (k % replace_every == 0) true_residual();
    double rr_new = kernels::dot(r, r);
    double rel = std::sqrt(rr_new) / b_norm;

    if (rel <= options.tolerance && k % replace_every != 0) {
      true_residual();
      rr_new = kernels::dot(r, r);
      rel = std::sqrt(rr_new) / b_norm;
    }
    report.relative_residual_trace.push_back(rel);
    report.iterations = k;
    if (rel <= options.tolerance) {
      report.converged = true;
      break;
    }
    kernels::xpay(r, rr_new / rr, p);
    rr = rr_new;
  }

  if (x_true) {
    std::vector<double> diff(x);
    kernels::axpy(-1.0, *x_true, diff);
    const double t = kernels::nrm2(*x_true);
    report.recovered_solution_error = kernels::nrm2(diff) / (t == 0.0 ? 1.0 : t);
  }
  report.solution = std::move(x);
  return report;
}

std::string TestSignalDescriptor::describe() const {
  std::ostringstream os;
  os << "sines(k=";
  for (std::size_t i = 0; i < wavenumbers.size(); ++i) os << (i ? ";" : "") << wavenumbers[i];
  os << ",a=";
  for (std::size_t i = 0; i < amplitudes.size(); ++i)
    os << (i ? ";" : "") << format_double(amplitudes[i]);
  os << ")+bump(c=" << format_double(bump_center_fraction) << "n,w="
     << format_double(bump_width_fraction) << "n,a=" << format_double(bump_amplitude) << ")";
  return os.str();
}

TestSignal make_test_signal(std::size_t n, const TestSignalDescriptor& d) {
  if (n < 8) throw ParameterError("make_test_signal: n must be at least 8");
  if (d.wavenumbers.size() != d.amplitudes.size())
    throw ParameterError("make_test_signal: wavenumbers and amplitudes differ in length");
  for (int k : d.wavenumbers)
    if (k <= 0 || 2 * static_cast<std::size_t>(k) >= n)
      throw ParameterError("make_test_signal: wavenumber " + std::to_string(k) +
                           " is not resolvable on " + std::to_string(n) + " points");
  if (!(d.bump_width_fraction > 0.0))
    throw ParameterError("make_test_signal: bump width must be positive");

  const double two_pi = 2.0 * std::acos(-1.0);
  const double nn = static_cast<double>(n);
  const double center = nn * d.bump_center_fraction;
  const double width = nn * d.bump_width_fraction;
  TestSignal s{std::vector<double>(n, 0.0), d};
  for (std::size_t i = 0; i < n; ++i) {
    const double fi = static_cast<double>(i);
    double v = 0.0;
    for (std::size_t j = 0; j < d.wavenumbers.size(); ++j)
      v += d.amplitudes[j] * std::sin(two_pi * d.wavenumbers[j] * fi / nn);
    const double z = (fi - center) / width;
    v += d.bump_amplitude * std::exp(-0.5 * z * z);
    s.values[i] = v;
  }
  return s;
}

}  // namespace condvar
