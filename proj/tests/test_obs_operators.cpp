#include <doctest.h>

#include <algorithm>
#include <set>

#include "condvar/errors.hpp"
#include "condvar/obs_operators.hpp"
#include "oracles.hpp"

using namespace condvar;

namespace {
const OperatorKind kCanonical[] = {OperatorKind::first_half, OperatorKind::alternate,
                                   OperatorKind::smoothed_alternate, OperatorKind::random_direct};
}

TEST_CASE("operator names and aliases") {
  CHECK(parse_operator_kind("H1") == OperatorKind::first_half);
  CHECK(parse_operator_kind("H2") == OperatorKind::alternate);
  CHECK(parse_operator_kind("H3") == OperatorKind::smoothed_alternate);
  CHECK(parse_operator_kind("H4") == OperatorKind::random_direct);
  for (auto k : kCanonical) CHECK(parse_operator_kind(operator_name(k)) == k);
  CHECK_THROWS_AS(parse_operator_kind("H5"), ParameterError);
}

TEST_CASE("alternate picks the even 1-based columns") {
  const auto h = make_operator(OperatorKind::alternate, 4, 8);
  const std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8};
  CHECK(h.apply(x) == std::vector<double>{2, 4, 6, 8});
}

TEST_CASE("smoothed-alternate rows sum to one with five 1/5 weights") {
  const auto h = make_operator(OperatorKind::smoothed_alternate, 4, 8);
  for (const auto& row : h.rows()) {
    CHECK(row.size() == 5);
    double s = 0;
    for (const auto& e : row) {
      CHECK(e.weight == 0.2);
      s += e.weight;
    }
    CHECK(s == doctest::Approx(1.0));
  }
  const auto y = h.apply(std::vector<double>(8, 3.5));
  for (double v : y) CHECK(v == doctest::Approx(3.5));
}

TEST_CASE("dense forms match the written-out patterns") {
  for (std::size_t p : {4u, 5u, 100u}) {
    CHECK(make_operator(OperatorKind::first_half, p, 2 * p).dense() == oracle::h_first_half(p));
    CHECK(make_operator(OperatorKind::alternate, p, 2 * p).dense() == oracle::h_alternate(p));
    CHECK((make_operator(OperatorKind::smoothed_alternate, p, 2 * p).dense() - oracle::h_smoothed(p))
              .cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("gram matrices") {
  CHECK(make_operator(OperatorKind::first_half, 4, 8).gram() == Eigen::MatrixXd::Identity(4, 4));
  CHECK(make_operator(OperatorKind::alternate, 4, 8).gram() == Eigen::MatrixXd::Identity(4, 4));
  CHECK(make_operator(OperatorKind::random_direct, 50, 100, 3).gram() == Eigen::MatrixXd::Identity(50, 50));
  const auto hs = oracle::h_smoothed(4);
  const Eigen::MatrixXd want = hs * hs.transpose();
  const auto g = make_operator(OperatorKind::smoothed_alternate, 4, 8).gram();
  CHECK((g - want).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(g(0, 0) == doctest::Approx(0.2));
  // Rows i and i+1 share three columns (2i+1..2i+3, 0-based).
  CHECK(g(0, 1) == doctest::Approx(3.0 / 25));
}

TEST_CASE("direct operators have unit gram spectrum, smoothed gram is circulant") {
  for (auto k : {OperatorKind::first_half, OperatorKind::alternate, OperatorKind::random_direct}) {
    const auto ev = oracle::eigenvalues_desc(make_operator(k, 100, 200, 42).gram());
    for (int i = 0; i < ev.size(); ++i) CHECK(std::abs(ev(i) - 1.0) <= 1e-12);
  }
  const auto g = make_operator(OperatorKind::smoothed_alternate, 100, 200).gram();
  for (int i = 0; i < 100; ++i)
    for (int j = 0; j < 100; ++j) CHECK(g(i, j) == g(0, ((j - i) % 100 + 100) % 100));
}

TEST_CASE("random-direct determinism and shape") {
  const auto a = make_operator(OperatorKind::random_direct, 100, 200, 42);
  const auto b = make_operator(OperatorKind::random_direct, 100, 200, 42);
  CHECK(a == b);
  CHECK(a.seed() == 42u);
  CHECK_FALSE(a == make_operator(OperatorKind::random_direct, 100, 200, 43));
  std::vector<std::size_t> cols;
  for (const auto& row : a.rows()) {
    REQUIRE(row.size() == 1);
    CHECK(row[0].weight == 1.0);
    cols.push_back(row[0].column);
  }
  CHECK(std::is_sorted(cols.begin(), cols.end()));
  CHECK(std::set<std::size_t>(cols.begin(), cols.end()).size() == 100);
  CHECK(cols.back() < 200);
}

TEST_CASE("sample_without_replacement properties") {
  gen::Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = rng.index(1, 300), p = rng.index(0, n);
    const std::uint64_t seed = rng.eng();
    const auto s = sample_without_replacement(n, p, seed);
    CHECK(s.size() == p);
    CHECK(std::is_sorted(s.begin(), s.end()));
    CHECK(std::adjacent_find(s.begin(), s.end()) == s.end());
    if (!s.empty()) CHECK(s.back() < n);
    CHECK(s == sample_without_replacement(n, p, seed));
  }
  CHECK_THROWS_AS(sample_without_replacement(3, 4, 1), ParameterError);
}

TEST_CASE("make_operator preconditions") {
  CHECK_THROWS_AS(make_operator(OperatorKind::alternate, 4, 9), ParameterError);
  CHECK_THROWS_AS(make_operator(OperatorKind::random_direct, 4, 8), ParameterError);
  CHECK_THROWS_AS(make_operator(OperatorKind::custom, 4, 8), ParameterError);
  CHECK_FALSE(make_operator(OperatorKind::alternate, 4, 8, 7).seed().has_value());
}

TEST_CASE("custom operators enforce the invariants") {
  CHECK_THROWS_AS(ObservationOperator::from_rows(2, {{{0, 1.0}}, {{1, 1.0}}}), ParameterError);  // p == n
  CHECK_THROWS_AS(ObservationOperator::from_rows(3, {{}}), ParameterError);
  CHECK_THROWS_AS(ObservationOperator::from_rows(3, {{{3, 1.0}}}), ParameterError);
  const auto h = ObservationOperator::from_rows(3, {{{0, 0.5}, {2, 0.5}}});
  CHECK(h.kind() == OperatorKind::custom);
  CHECK(h.apply(std::vector<double>{2, 100, 4}) == std::vector<double>{3});
}

TEST_CASE("apply and apply_transpose agree with dense products") {
  gen::Rng rng(6);
  for (auto k : kCanonical) {
    const auto h = make_operator(k, 100, 200, 9);
    const Eigen::MatrixXd d = h.dense();
    for (int t = 0; t < 100; ++t) {
      const auto x = rng.vec(200);
      const auto y = h.apply(x);
      const Eigen::VectorXd ref = d * Eigen::Map<const Eigen::VectorXd>(x.data(), 200);
      for (int i = 0; i < 100; ++i) CHECK(std::abs(y[i] - ref(i)) <= 1e-14 * (1 + std::abs(ref(i))));
    }
    const auto yv = rng.vec(100);
    std::vector<double> xt(200);
    h.apply_transpose(yv, xt);
    const Eigen::VectorXd ref = d.transpose() * Eigen::Map<const Eigen::VectorXd>(yv.data(), 100);
    for (int i = 0; i < 200; ++i) CHECK(std::abs(xt[i] - ref(i)) <= 1e-14);
    const Eigen::MatrixXd g = Eigen::MatrixXd::Random(200, 200);
    const Eigen::MatrixXd a = g + g.transpose();
    CHECK((h.congruence(a) - d * a * d.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  }
  const auto h = make_operator(OperatorKind::alternate, 4, 8);
  CHECK_THROWS_AS(h.apply(std::vector<double>(7)), ParameterError);
}

TEST_CASE("JSON round trip") {
  for (auto k : kCanonical) {
    const auto h = make_operator(k, 10, 20, 77);
    const auto j = to_json(h);
    CHECK(operator_from_json(j) == h);
    CHECK(operator_from_json(nlohmann::json::parse(j.dump())) == h);
  }
  const auto custom = ObservationOperator::from_rows(5, {{{1, 0.25}, {4, 0.75}}, {{0, 1.0}}});
  CHECK(operator_from_json(to_json(custom)) == custom);
  auto bad = to_json(make_operator(OperatorKind::alternate, 4, 8));
  bad["rows"][0]["columns"][0] = 0;
  CHECK_THROWS_AS(operator_from_json(bad), ParameterError);
  CHECK_THROWS_AS(operator_from_json(nlohmann::json{{"kind", "alternate"}}), ParameterError);
}
