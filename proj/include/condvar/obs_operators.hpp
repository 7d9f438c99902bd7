#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace condvar {

// Canonical operators for N = 2p state points (0-based indices, row i):
//   first_half          column i
//   alternate           column 2i + 1         (1-based j = 2i)
//   smoothed_alternate  columns 2i+1+o mod n, o in -2..2, weight 1/5
//   random_direct       p distinct seeded columns, ascending
enum class OperatorKind { first_half, alternate, smoothed_alternate, random_direct, custom };

std::string_view operator_name(OperatorKind kind);
// Accepts the canonical names ("alternate", ...) and the aliases H1..H4.
// Throws ParameterError for anything else.
OperatorKind parse_operator_kind(std::string_view name);

struct ObservationEntry {
  std::size_t column;
  double weight;
  bool operator==(const ObservationEntry&) const = default;
};

using ObservationRow = std::vector<ObservationEntry>;

// Sparse p x n linear observation operator. Immutable.
//
// A time-stacked operator for a multi-time window would plug in here as
// a custom operator over the stacked observation vector.
class ObservationOperator {
 public:
  // Custom operator. Enforces p < n, nonempty rows and columns in [0, n).
  static ObservationOperator from_rows(std::size_t n, std::vector<ObservationRow> rows);

  OperatorKind kind() const noexcept { return kind_; }
  std::size_t p() const noexcept { return rows_.size(); }
  std::size_t n() const noexcept { return n_; }
  std::optional<std::uint64_t> seed() const noexcept { return seed_; }
  const std::vector<ObservationRow>& rows() const noexcept { return rows_; }

  // y = H x. Throws ParameterError on length mismatch.
  std::vector<double> apply(std::span<const double> x) const;
  void apply(std::span<const double> x, std::span<double> y) const;
  // x = H^T y.
  void apply_transpose(std::span<const double> y, std::span<double> x) const;
  Eigen::MatrixXd dense() const;
  // H H^T (p x p).
  Eigen::MatrixXd gram() const;
  // H A H^T for a dense symmetric n x n matrix A; the result is symmetrized.
  Eigen::MatrixXd congruence(const Eigen::MatrixXd& a) const;

  bool operator==(const ObservationOperator&) const = default;

 private:
  friend ObservationOperator make_operator(OperatorKind, std::size_t, std::size_t,
                                           std::optional<std::uint64_t>);
  ObservationOperator(OperatorKind kind, std::size_t n, std::vector<ObservationRow> rows,
                      std::optional<std::uint64_t> seed);

  OperatorKind kind_;
  std::size_t n_;
  std::vector<ObservationRow> rows_;
  std::optional<std::uint64_t> seed_;
};

// Canonical kinds require n == 2p; random_direct requires a seed. Throws
// ParameterError otherwise (custom is not constructible here).
ObservationOperator make_operator(OperatorKind kind, std::size_t p, std::size_t n,
                                  std::optional<std::uint64_t> seed = std::nullopt);

// p distinct integers from [0, n), ascending, from a seeded 64-bit Mersenne
// twister with partial Fisher-Yates. Identical on every platform.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t p,
                                                    std::uint64_t seed);

// {"kind", "p", "n", "seed" (or null), "rows": [{"columns": [...], "weights": [...]}]}
nlohmann::json to_json(const ObservationOperator& h);
// Canonical kinds are rebuilt from (kind, p, n, seed) and must match the
// stored rows when present. Throws ParameterError on malformed input.
ObservationOperator operator_from_json(const nlohmann::json& j);

}  // namespace condvar
