#include <doctest.h>

#include <cmath>

#include "condvar/errors.hpp"
#include "condvar/hessian.hpp"
#include "oracles.hpp"

using namespace condvar;

namespace {

HessianModel soar_model(OperatorKind k, std::size_t p, double lb, double lr, double vb = 1.0,
                        double vr = 1.0) {
  return HessianModel::from_correlations(build_soar(CircleGrid(2 * p), lb), vb,
                                         build_soar(CircleGrid(p), lr), vr,
                                         make_operator(k, p, 2 * p, 42));
}

HessianModel identity_model(OperatorKind k, std::size_t p) {
  return HessianModel::from_correlations(CorrelationMatrix::identity(2 * p), 1.0,
                                         CorrelationMatrix::identity(p), 1.0,
                                         make_operator(k, p, 2 * p, 42));
}

Eigen::MatrixXd oracle_shat(const HessianModel& m) {
  return oracle::preconditioned_hessian(m.b(), m.r(), m.h().dense());
}

const OperatorKind kAll[] = {OperatorKind::first_half, OperatorKind::alternate,
                             OperatorKind::smoothed_alternate, OperatorKind::random_direct};

}  // namespace

TEST_CASE("model validation") {
  const auto b = std::make_shared<const SpdFactorization>(Eigen::MatrixXd::Identity(8, 8));
  const auto r = std::make_shared<const SpdFactorization>(Eigen::MatrixXd::Identity(4, 4));
  const auto r5 = std::make_shared<const SpdFactorization>(Eigen::MatrixXd::Identity(5, 5));
  const auto h = std::make_shared<const ObservationOperator>(make_operator(OperatorKind::alternate, 4, 8));
  CHECK_NOTHROW(HessianModel(b, 1.0, r, 1.0, h));
  CHECK_THROWS_AS(HessianModel(b, 0.0, r, 1.0, h), ParameterError);
  CHECK_THROWS_AS(HessianModel(b, 1.0, r, -1.0, h), ParameterError);
  CHECK_THROWS_AS(HessianModel(b, 1.0, r5, 1.0, h), ParameterError);
  CHECK_THROWS_AS(HessianModel(r, 1.0, r, 1.0, h), ParameterError);
}

TEST_CASE("identity covariances with a direct operator") {
  const auto m = identity_model(OperatorKind::first_half, 4);
  const auto s = assemble_preconditioned(m);
  const auto ev = oracle::eigenvalues_desc(s);
  for (int i = 0; i < 4; ++i) CHECK(ev(i) == doctest::Approx(2.0));
  for (int i = 4; i < 8; ++i) CHECK(ev(i) == doctest::Approx(1.0));
  CHECK(kappa_via_rank_p(m) == doctest::Approx(2.0));
  const auto u = assemble_unpreconditioned(m);
  for (int i = 0; i < 8; ++i) CHECK(u(i, i) == (i < 4 ? 2.0 : 1.0));
  CHECK(u.isDiagonal());
  for (auto k : {OperatorKind::alternate, OperatorKind::random_direct})
    CHECK(kappa_via_rank_p(identity_model(k, 50)) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("small SOAR model against the dense oracle") {
  const auto m = soar_model(OperatorKind::alternate, 4, 0.5, 0.3);
  const auto s = assemble_preconditioned(m);
  CHECK((s - oracle_shat(m)).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(kappa_via_rank_p(m) == doctest::Approx(oracle::cond(oracle_shat(m))).epsilon(1e-8));
  const auto u = assemble_unpreconditioned(m);
  CHECK((u - u.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(oracle::eigenvalues_desc(u)(7) > 0.0);
}

TEST_CASE("assembled Hessians are symmetric and the preconditioned floor is one") {
  gen::Rng rng(21);
  for (int t = 0; t < 12; ++t) {
    const auto k = kAll[t % 4];
    const auto m = soar_model(k, 100, rng.grid_lengthscale(), rng.grid_lengthscale());
    const auto s = assemble_preconditioned(m);
    CHECK((s - s.transpose()).cwiseAbs().maxCoeff() == 0.0);
    const auto ev = oracle::eigenvalues_desc(s);
    CHECK(std::abs(ev(199) - 1.0) <= 1e-10);
  }
}

TEST_CASE("kappa_via_rank_p equals the dense condition number on a 5x5 grid") {
  const double ls[] = {0.1, 0.3, 0.5, 0.7, 1.0};
  for (auto k : kAll)
    for (double lb : ls)
      for (double lr : ls) {
        const auto m = soar_model(k, 100, lb, lr);
        const double want = oracle::cond(oracle_shat(m));
        CAPTURE(lb);
        CAPTURE(lr);
        CHECK(std::abs(kappa_via_rank_p(m) - want) <= 1e-8 * want);
      }
}

TEST_CASE("trace identity") {
  for (auto k : kAll) {
    const auto m = soar_model(k, 100, 0.4, 0.6);
    const double lhs = (assemble_preconditioned(m) - Eigen::MatrixXd::Identity(200, 200)).trace();
    const double rhs = (m.r().inverse() * m.hbht()).trace();
    CHECK(std::abs(lhs - rhs) <= 1e-8 * std::abs(rhs));
  }
}

TEST_CASE("variance scaling") {
  gen::Rng rng(22);
  for (int t = 0; t < 8; ++t) {
    const auto k = kAll[t % 4];
    const double lb = rng.grid_lengthscale(), lr = rng.grid_lengthscale();
    const double f = rng.uniform(0.1, 10.0);
    const auto base = soar_model(k, 50, lb, lr);
    const auto joint = soar_model(k, 50, lb, lr, f, f);
    const auto a = assemble_preconditioned(base), b = assemble_preconditioned(joint);
    CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff()));
    const double k0 = kappa_via_rank_p(base);
    const double k4 = kappa_via_rank_p(soar_model(k, 50, lb, lr, 4.0, 1.0));
    CHECK(std::abs((k4 - 1) - 4 * (k0 - 1)) <= 1e-10 * 4 * (k0 - 1));
    double prev = 0;
    for (double ratio : {0.25, 0.5, 1.0, 2.0, 8.0}) {
      const double kk = kappa_via_rank_p(soar_model(k, 50, lb, lr, ratio, 1.0));
      CHECK(kk >= prev);
      prev = kk;
    }
  }
}

TEST_CASE("matrix-free operator matches the assembled matrix") {
  gen::Rng rng(23);
  for (auto k : kAll) {
    const auto m = soar_model(k, 100, 0.2, 0.8);
    const PreconditionedHessianOperator op(m);
    const auto s = assemble_preconditioned(m);
    const auto x = rng.vec(200);
    std::vector<double> y(200);
    op.apply(x, y);
    const Eigen::VectorXd ref = s * Eigen::Map<const Eigen::VectorXd>(x.data(), 200);
    for (int i = 0; i < 200; ++i) CHECK(std::abs(y[i] - ref(i)) <= 1e-10 * (1 + ref.cwiseAbs().maxCoeff()));
    CHECK_THROWS_AS(op.apply(std::vector<double>(199), y), ParameterError);
  }
}

TEST_CASE("count_clusters") {
  const std::vector<double> a{10, 9.9, 5, 4.9, 4.8, 1};
  CHECK(count_clusters(a, 0.05) == 3);
  CHECK(count_clusters(std::vector<double>{}, 0.05) == 0);
  CHECK(count_clusters(std::vector<double>{1, 1, 1}, 0.05) == 1);
  CHECK(count_clusters(a, 1e-8) == 6);
}

TEST_CASE("spectrum reports") {
  const auto id = spectrum(Eigen::MatrixXd::Identity(6, 6));
  CHECK(id.kappa == 1.0);
  CHECK(id.cluster_count == 1);
  for (int i = 0; i < 6; ++i) CHECK(id.eigenvalues(i) == 1.0);

  const auto two = preconditioned_spectrum(identity_model(OperatorKind::first_half, 4));
  CHECK(two.cluster_count == 2);
  CHECK(two.kappa == doctest::Approx(2.0));
  REQUIRE(two.update_eigenvalues);
  for (int i = 0; i < 4; ++i) CHECK((*two.update_eigenvalues)(i) == doctest::Approx(1.0));
  CHECK(two.update_cluster_count == 1u);

  Eigen::MatrixXd asym = Eigen::MatrixXd::Identity(3, 3);
  asym(0, 1) = 0.5;
  CHECK_THROWS_AS(spectrum(asym), ParameterError);
  CHECK_THROWS_AS(spectrum(-Eigen::MatrixXd::Identity(3, 3)), ParameterError);
}

TEST_CASE("first-half at L_B = 0.5, L_R = 1: one dominant eigenvalue, rest near one") {
  const auto rep = preconditioned_spectrum(soar_model(OperatorKind::first_half, 100, 0.5, 1.0));
  const auto& ev = rep.eigenvalues;
  CHECK(ev(0) > 1000.0);
  CHECK(ev(1) < 10.0);
  int near_one = 0;
  for (int i = 1; i < ev.size(); ++i) near_one += std::abs(ev(i) - 1.0) < 1.5;
  CHECK(near_one >= 190);
  CHECK(rep.model.has_value());
  const auto j = to_json(rep);
  CHECK(j["eigenvalues"].size() == 200);
  CHECK(j["update_eigenvalues"].size() == 100);
  CHECK(j["kappa"].get<double>() == rep.kappa);
}

TEST_CASE("identity covariances give a flat update spectrum for direct operators") {
  for (auto k : {OperatorKind::first_half, OperatorKind::alternate, OperatorKind::random_direct}) {
    const auto rep = preconditioned_spectrum(identity_model(k, 50));
    for (int i = 0; i < 50; ++i) CHECK((*rep.update_eigenvalues)(i) == doctest::Approx(1.0));
  }
}
