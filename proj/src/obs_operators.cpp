#include "condvar/obs_operators.hpp"

#include <algorithm>
#include <random>

#include "condvar/errors.hpp"

namespace condvar {
namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ParameterError(msg);
}

// Unbiased draw from [0, bound) by rejection on the raw 64-bit output;
// std::uniform_int_distribution is implementation-defined.
std::uint64_t bounded(std::mt19937_64& gen, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t v;
  do {
    v = gen();
  } while (v >= limit);
  return v % bound;
}

}  // namespace

std::string_view operator_name(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::first_half: return "first-half";
    case OperatorKind::alternate: return "alternate";
    case OperatorKind::smoothed_alternate: return "smoothed-alternate";
    case OperatorKind::random_direct: return "random-direct";
    case OperatorKind::custom: return "custom";
  }
  return "unknown";
}

OperatorKind parse_operator_kind(std::string_view name) {
  for (auto k : {OperatorKind::first_half, OperatorKind::alternate,
                 OperatorKind::smoothed_alternate, OperatorKind::random_direct,
                 OperatorKind::custom})
    if (name == operator_name(k)) return k;
  if (name == "H1") return OperatorKind::first_half;
  if (name == "H2") return OperatorKind::alternate;
  if (name == "H3") return OperatorKind::smoothed_alternate;
  if (name == "H4") return OperatorKind::random_direct;
  throw ParameterError("unknown observation operator '" + std::string(name) + "'");
}

ObservationOperator::ObservationOperator(OperatorKind kind, std::size_t n,
                                         std::vector<ObservationRow> rows,
                                         std::optional<std::uint64_t> seed)
    : kind_(kind), n_(n), rows_(std::move(rows)), seed_(seed) {
  require(!rows_.empty(), "ObservationOperator: need at least one observation");
  require(rows_.size() < n_, "ObservationOperator: need fewer observations than state points (p < n)");
  for (const auto& row : rows_) {
    require(!row.empty(), "ObservationOperator: empty row");
    for (const auto& e : row)
      require(e.column < n_, "ObservationOperator: column index out of range");
  }
}

ObservationOperator ObservationOperator::from_rows(std::size_t n, std::vector<ObservationRow> rows) {
  return ObservationOperator(OperatorKind::custom, n, std::move(rows), std::nullopt);
}

std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t p,
                                                    std::uint64_t seed) {
  require(p <= n, "sample_without_replacement: p exceeds n");
  std::mt19937_64 gen(seed);
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  for (std::size_t i = 0; i < p; ++i) {
    const auto j = i + static_cast<std::size_t>(bounded(gen, n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(p);
  std::sort(pool.begin(), pool.end());
  return pool;
}

ObservationOperator make_operator(OperatorKind kind, std::size_t p, std::size_t n,
                                  std::optional<std::uint64_t> seed) {
  require(kind != OperatorKind::custom, "make_operator: custom operators use from_rows");
  require(p > 0, "make_operator: p must be positive");
  require(n == 2 * p, "make_operator: canonical operators require n = 2p (got n=" +
                          std::to_string(n) + ", p=" + std::to_string(p) + ")");
  std::vector<ObservationRow> rows(p);
  switch (kind) {
    case OperatorKind::first_half:
      for (std::size_t i = 0; i < p; ++i) rows[i] = {{i, 1.0}};
      break;
    case OperatorKind::alternate:
      for (std::size_t i = 0; i < p; ++i) rows[i] = {{2 * i + 1, 1.0}};
      break;
    case OperatorKind::smoothed_alternate:
      for (std::size_t i = 0; i < p; ++i)
        for (std::size_t o = 0; o < 5; ++o)
          rows[i].push_back({(2 * i + 1 + n + o - 2) % n, 1.0 / 5.0});
      break;
    case OperatorKind::random_direct: {
      require(seed.has_value(), "make_operator: random-direct requires a seed");
      const auto cols = sample_without_replacement(n, p, *seed);
      for (std::size_t i = 0; i < p; ++i) rows[i] = {{cols[i], 1.0}};
      break;
    }
    case OperatorKind::custom: break;
  }
  if (kind != OperatorKind::random_direct) seed.reset();
  return ObservationOperator(kind, n, std::move(rows), seed);
}

void ObservationOperator::apply(std::span<const double> x, std::span<double> y) const {
  require(x.size() == n_, "ObservationOperator::apply: state has length " +
                              std::to_string(x.size()) + ", expected " + std::to_string(n_));
  require(y.size() == rows_.size(), "ObservationOperator::apply: output has wrong length");
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    double s = 0.0;
    for (const auto& e : rows_[i]) s += e.weight * x[e.column];
    y[i] = s;
  }
}

std::vector<double> ObservationOperator::apply(std::span<const double> x) const {
  std::vector<double> y(rows_.size());
  apply(x, y);
  return y;
}

void ObservationOperator::apply_transpose(std::span<const double> y, std::span<double> x) const {
  require(y.size() == rows_.size() && x.size() == n_,
          "ObservationOperator::apply_transpose: length mismatch");
  std::fill(x.begin(), x.end(), 0.0);
  for (std::size_t i = 0; i < rows_.size(); ++i)
    for (const auto& e : rows_[i]) x[e.column] += e.weight * y[i];
}

Eigen::MatrixXd ObservationOperator::dense() const {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p()),
                                            static_cast<Eigen::Index>(n_));
  for (std::size_t i = 0; i < rows_.size(); ++i)
    for (const auto& e : rows_[i])
      h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(e.column)) += e.weight;
  return h;
}

Eigen::MatrixXd ObservationOperator::gram() const {
  const Eigen::MatrixXd h = dense();
  Eigen::MatrixXd g = h * h.transpose();
  return 0.5 * (g + g.transpose());
}

Eigen::MatrixXd ObservationOperator::congruence(const Eigen::MatrixXd& a) const {
  require(a.rows() == static_cast<Eigen::Index>(n_) && a.cols() == a.rows(),
          "ObservationOperator::congruence: matrix must be n x n");
  // Rows of H A, then (H A) H^T, touching only the sparse support.
  const auto pp = static_cast<Eigen::Index>(p());
  Eigen::MatrixXd ha = Eigen::MatrixXd::Zero(pp, a.cols());
  for (std::size_t i = 0; i < rows_.size(); ++i)
    for (const auto& e : rows_[i])
      ha.row(static_cast<Eigen::Index>(i)) += e.weight * a.row(static_cast<Eigen::Index>(e.column));
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(pp, pp);
  for (std::size_t j = 0; j < rows_.size(); ++j)
    for (const auto& e : rows_[j])
      out.col(static_cast<Eigen::Index>(j)) += e.weight * ha.col(static_cast<Eigen::Index>(e.column));
  return 0.5 * (out + out.transpose());
}

nlohmann::json to_json(const ObservationOperator& h) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : h.rows()) {
    nlohmann::json cols = nlohmann::json::array(), weights = nlohmann::json::array();
    for (const auto& e : row) {
      cols.push_back(e.column);
      weights.push_back(e.weight);
    }
    rows.push_back({{"columns", cols}, {"weights", weights}});
  }
  nlohmann::json j{{"kind", operator_name(h.kind())}, {"p", h.p()}, {"n", h.n()}, {"rows", rows}};
  j["seed"] = h.seed() ? nlohmann::json(*h.seed()) : nlohmann::json(nullptr);
  return j;
}

ObservationOperator operator_from_json(const nlohmann::json& j) {
  try {
    const OperatorKind kind = parse_operator_kind(j.at("kind").get<std::string>());
    const auto p = j.at("p").get<std::size_t>();
    const auto n = j.at("n").get<std::size_t>();
    std::optional<std::uint64_t> seed;
    if (j.contains("seed") && !j.at("seed").is_null()) seed = j.at("seed").get<std::uint64_t>();

    std::vector<ObservationRow> rows;
    if (j.contains("rows")) {
      for (const auto& r : j.at("rows")) {
        const auto cols = r.at("columns").get<std::vector<std::size_t>>();
        const auto weights = r.at("weights").get<std::vector<double>>();
        require(cols.size() == weights.size(), "operator JSON: columns/weights length mismatch");
        ObservationRow row;
        for (std::size_t k = 0; k < cols.size(); ++k) row.push_back({cols[k], weights[k]});
        rows.push_back(std::move(row));
      }
    }
    if (kind == OperatorKind::custom) {
      require(rows.size() == p, "operator JSON: row count does not match p");
      return ObservationOperator::from_rows(n, std::move(rows));
    }
    ObservationOperator h = make_operator(kind, p, n, seed);
    require(rows.empty() || rows == h.rows(),
            "operator JSON: stored rows do not match the canonical construction");
    return h;
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("operator JSON: ") + e.what());
  }
}

}  // namespace condvar
