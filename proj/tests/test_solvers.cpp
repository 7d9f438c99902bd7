#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "condvar/errors.hpp"
#include "condvar/hessian.hpp"
#include "condvar/solvers.hpp"
#include "oracles.hpp"

using namespace condvar;

namespace {

LinearOperator dense_op(const Eigen::MatrixXd& a) {
  return [a](std::span<const double> in, std::span<double> out) {
    Eigen::Map<Eigen::VectorXd>(out.data(), out.size()) =
        a * Eigen::Map<const Eigen::VectorXd>(in.data(), in.size());
  };
}

HessianModel soar_model(OperatorKind k, std::size_t p, double lb, double lr) {
  return HessianModel::from_correlations(build_soar(CircleGrid(2 * p), lb), 1.0,
                                         build_soar(CircleGrid(p), lr), 1.0,
                                         make_operator(k, p, 2 * p, 42));
}

}  // namespace

TEST_CASE("eigendecomposition closed forms") {
  const auto id = symmetric_eigendecomposition(Eigen::MatrixXd::Identity(5, 5));
  for (int i = 0; i < 5; ++i) CHECK(id.eigenvalues(i) == doctest::Approx(1.0));
  Eigen::MatrixXd a(2, 2);
  a << 2, 1, 1, 2;
  const auto d = symmetric_eigendecomposition(a);
  CHECK(d.eigenvalues(0) == doctest::Approx(3.0));
  CHECK(d.eigenvalues(1) == doctest::Approx(1.0));
  const double s = 1 / std::sqrt(2.0);
  CHECK(std::abs(std::abs(d.eigenvectors(0, 0)) - s) < 1e-14);
  CHECK(d.eigenvectors(0, 0) * d.eigenvectors(1, 0) > 0);
  CHECK(d.eigenvectors(0, 1) * d.eigenvectors(1, 1) < 0);
  a(0, 1) = 1.1;
  CHECK_THROWS_AS(symmetric_eigendecomposition(a), ParameterError);
  CHECK_THROWS_AS(symmetric_eigenvalues(Eigen::MatrixXd::Zero(2, 3)), ParameterError);
}

TEST_CASE("eigendecomposition residuals and orthonormality on random symmetric matrices") {
  gen::Rng rng(41);
  for (int t = 0; t < 10; ++t) {
    const std::size_t n = rng.index(1, 80);
    Eigen::MatrixXd a(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j <= i; ++j) a(i, j) = a(j, i) = rng.uniform(-1, 1);
    const auto d = symmetric_eigendecomposition(a);
    const double norm2 = d.eigenvalues.cwiseAbs().maxCoeff();
    for (std::size_t k = 0; k < n; ++k) {
      CHECK((a * d.eigenvectors.col(k) - d.eigenvalues(k) * d.eigenvectors.col(k)).norm() <= 1e-8 * norm2);
      if (k > 0) CHECK(d.eigenvalues(k) <= d.eigenvalues(k - 1));
    }
    CHECK((d.eigenvectors.transpose() * d.eigenvectors - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("eigenvalues of SOAR n = 64 match the DFT oracle") {
  const auto m = oracle::soar(64, 0.4);
  Eigen::VectorXd ev = symmetric_eigenvalues(m);
  std::vector<double> row(64);
  for (int k = 0; k < 64; ++k) row[k] = m(0, k);
  auto g = oracle::dft(row);
  std::vector<double> re;
  for (auto& z : g) re.push_back(z.real());
  std::sort(re.rbegin(), re.rend());
  for (int k = 0; k < 64; ++k) CHECK(std::abs(ev(k) - re[k]) <= 1e-10 * re[0]);
}

TEST_CASE("CG on the identity converges in one iteration") {
  const auto b = gen::Rng(42).vec(30);
  const auto rep = conjugate_gradient(dense_op(Eigen::MatrixXd::Identity(30, 30)), b);
  CHECK(rep.converged);
  CHECK(rep.iterations == 1);
  CHECK(rep.relative_residual_trace.size() == 1);
  CHECK(rep.final_residual() <= 1e-10);
}

TEST_CASE("CG on the two-eigenvalue identity Hessian needs at most three iterations") {
  const auto m = HessianModel::from_correlations(CorrelationMatrix::identity(200), 1.0,
                                                 CorrelationMatrix::identity(100), 1.0,
                                                 make_operator(OperatorKind::first_half, 100, 200));
  const PreconditionedHessianOperator op(m);
  const auto rep = conjugate_gradient(op.as_linear_operator(), gen::Rng(43).vec(200));
  CHECK(rep.converged);
  CHECK(rep.iterations <= 3);
}

TEST_CASE("CG iterations are bounded by the number of distinct eigenvalues") {
  gen::Rng rng(44);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = rng.index(10, 150), distinct = rng.index(1, 8);
    std::vector<double> levels(distinct);
    for (auto& l : levels) l = rng.uniform(1.0, 100.0);
    Eigen::VectorXd diag(n);
    for (std::size_t i = 0; i < n; ++i) diag(i) = levels[i % distinct];
    const auto rep = conjugate_gradient(dense_op(diag.asDiagonal().toDenseMatrix()), rng.vec(n, 0.5, 1.5));
    CHECK(rep.converged);
    CHECK(rep.iterations <= distinct + 2);
  }
}

TEST_CASE("CG report invariants") {
  gen::Rng rng(45);
  for (int t = 0; t < 10; ++t) {
    const std::size_t n = rng.index(5, 60);
    Eigen::MatrixXd g = Eigen::MatrixXd::Random(n, n);
    const Eigen::MatrixXd a = g * g.transpose() + Eigen::MatrixXd::Identity(n, n);
    const auto x = rng.vec(n);
    const Eigen::VectorXd bv = a * Eigen::Map<const Eigen::VectorXd>(x.data(), n);
    const std::vector<double> b(bv.data(), bv.data() + n);
    CGOptions opt;
    opt.max_iterations = 3;
    const auto capped = conjugate_gradient(dense_op(a), b, opt);
    CHECK(capped.iterations <= 3);
    CHECK(capped.relative_residual_trace.size() == capped.iterations);
    const auto rep = conjugate_gradient(dense_op(a), b, {}, std::span<const double>(x));
    CHECK(rep.relative_residual_trace.size() == rep.iterations);
    CHECK(rep.converged == (rep.final_residual() <= rep.tolerance));
    REQUIRE(rep.recovered_solution_error);
    // Final residual is the true one.
    Eigen::Map<const Eigen::VectorXd> xs(rep.solution.data(), n);
    CHECK(std::abs((bv - a * xs).norm() / bv.norm() - rep.final_residual()) <= 1e-12);
  }
}

TEST_CASE("CG errors") {
  CHECK_THROWS_AS(conjugate_gradient(dense_op(Eigen::MatrixXd::Identity(2, 2)), std::vector<double>{}),
                  ParameterError);
  CGOptions bad;
  bad.tolerance = 0;
  CHECK_THROWS_AS(conjugate_gradient(dense_op(Eigen::MatrixXd::Identity(2, 2)), std::vector<double>{1, 1}, bad),
                  ParameterError);
  Eigen::MatrixXd indef(2, 2);
  indef << 1, 0, 0, -1;
  try {
    conjugate_gradient(dense_op(indef), std::vector<double>{0, 1});
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(e.iteration() == 1);
  }
  const auto zero = conjugate_gradient(dense_op(Eigen::MatrixXd::Identity(2, 2)), std::vector<double>{0, 0});
  CHECK(zero.converged);
  CHECK(zero.iterations == 0);
}

TEST_CASE("CG iteration count matches a textbook implementation") {
  const auto m = soar_model(OperatorKind::alternate, 100, 0.1, 0.7);
  const PreconditionedHessianOperator op(m);
  const auto x = make_test_signal(200).values;
  std::vector<double> b(200);
  op.apply(x, b);
  const auto rep = conjugate_gradient(op.as_linear_operator(), b);
  const auto ref = oracle::textbook_cg(assemble_preconditioned(m), Eigen::Map<const Eigen::VectorXd>(b.data(), 200),
                                       1e-10, 1000);
  CHECK(rep.converged);
  CHECK(ref.converged);
  CHECK(std::abs(static_cast<int>(rep.iterations) - ref.iterations) <= 1);
}

TEST_CASE("test signal") {
  const auto s = make_test_signal(200);
  CHECK(s.values == make_test_signal(200).values);
  std::vector<double> re(s.values.begin(), s.values.end());
  const auto spec = oracle::dft(re);
  // A sine of amplitude a contributes a * n / 2 to its coefficient.
  for (int k : {1, 4, 16}) CHECK(std::abs(spec[k]) > 10.0);
  CHECK(std::abs(spec[60]) < 1e-6);
  const double pi = std::numbers::pi;
  const double c = 200.0 / 3.0, w = 10.0;
  for (int i : {0, 17, 66, 199}) {
    const double want = std::sin(2 * pi * i / 200) + 0.5 * std::sin(2 * pi * 4 * i / 200) +
                        0.25 * std::sin(2 * pi * 16 * i / 200) + std::exp(-0.5 * std::pow((i - c) / w, 2));
    CHECK(s.values[i] == doctest::Approx(want).epsilon(1e-14));
  }
  CHECK_THROWS_AS(make_test_signal(7), ParameterError);
  CHECK_THROWS_AS(make_test_signal(32), ParameterError);
  TestSignalDescriptor d;
  d.amplitudes.pop_back();
  CHECK_THROWS_AS(make_test_signal(200, d), ParameterError);
  CHECK(s.descriptor.describe().find("k=1;4;16") != std::string::npos);
}

TEST_CASE("end-to-end recovery on a well-conditioned cell") {
  const auto m = soar_model(OperatorKind::alternate, 100, 0.5, 0.5);
  const PreconditionedHessianOperator op(m);
  const auto x = make_test_signal(200).values;
  std::vector<double> b(200);
  op.apply(x, b);
  const auto rep = conjugate_gradient(op.as_linear_operator(), b, {}, std::span<const double>(x));
  CHECK(rep.converged);
  CHECK(*rep.recovered_solution_error <= 1e-6);
}
