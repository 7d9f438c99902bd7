#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "condvar/bounds.hpp"
#include "condvar/hessian.hpp"
#include "condvar/obs_operators.hpp"
#include "condvar/solvers.hpp"

namespace condvar {

inline constexpr const char* kToolVersion = "0.1.0";

enum class CorrelationModel { soar, identity };

// One (operator, L_B, L_R) point for the spectrum export.
struct SpectrumCell {
  OperatorKind kind;
  double lb;
  double lr;
};

// Parses "operator:L_B:L_R", e.g. "alternate:0.5:0.3" or "H1:0.1:1".
SpectrumCell parse_cell(const std::string& text);
std::string format_cell(const SpectrumCell& c);

// Lengthscales k/20 for k = 1..20.
std::vector<double> default_lengthscale_grid();

struct SweepConfig {
  std::size_t n = 200;
  std::size_t p = 100;
  std::vector<double> lb_grid = default_lengthscale_grid();
  std::vector<double> lr_grid = default_lengthscale_grid();
  std::vector<OperatorKind> operators{OperatorKind::first_half, OperatorKind::alternate,
                                      OperatorKind::smoothed_alternate,
                                      OperatorKind::random_direct};
  std::uint64_t seed = 42;
  double tolerance = 1e-10;
  std::size_t max_iterations = 0;  // 0: 5n
  double sigma_b = 1.0;
  double sigma_r = 1.0;
  // identity replaces both SOAR matrices by I (the lengthscales then only
  // label cells).
  CorrelationModel correlation = CorrelationModel::soar;
  double cluster_gap = 0.05;
  std::vector<double> table_lengthscales{0.1, 0.33, 0.66, 0.99, 1.0};
  std::vector<SpectrumCell> cells;
  bool cg_traces = false;
  // Not part of the hash: they do not change the data.
  std::string output_dir;
  std::size_t threads = 0;  // 0: hardware concurrency

  // Throws ParameterError.
  void validate() const;
};

nlohmann::json to_json(const SweepConfig& c);
// Keys present in j override the corresponding fields of base.
SweepConfig config_from_json(const nlohmann::json& j, SweepConfig base = {});
// FNV-1a over the canonical JSON of every data-affecting field.
std::string config_hash(const SweepConfig& c);

struct Table1Row {
  std::string matrix;  // "R" or "B"
  std::size_t dim = 0;
  double lengthscale = 0.0;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
};

struct ConditionRow {
  OperatorKind kind;
  double lb = 0.0, lr = 0.0;
  double kappa = 0.0;
  std::string error;  // empty when the cell succeeded
};

struct BoundsRow {
  OperatorKind kind;
  double lb = 0.0, lr = 0.0;
  std::optional<BoundsReport> report;
  std::string error;
};

struct CGRow {
  OperatorKind kind;
  double lb = 0.0, lr = 0.0;
  double kappa = 0.0;
  std::optional<CGRunReport> report;
  std::string error;
};

struct SpectrumRow {
  SpectrumCell cell;
  std::optional<SpectrumReport> report;
  std::string error;
};

// Shared factorizations of every covariance and operator a config needs.
class ModelBank {
 public:
  ModelBank(const SweepConfig& config, const std::vector<double>& lb_values,
            const std::vector<double>& lr_values);
  HessianModel model(OperatorKind kind, double lb, double lr) const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

std::vector<Table1Row> run_table1(const SweepConfig& config);
std::vector<ConditionRow> run_condition_sweep(const SweepConfig& config);
std::vector<BoundsRow> run_bounds_sweep(const SweepConfig& config);
std::vector<CGRow> run_cg_sweep(const SweepConfig& config);
std::vector<SpectrumRow> run_spectrum_export(const SweepConfig& config,
                                             const std::vector<SpectrumCell>& cells);

// "# {json}" header, column names, then one row per result; every row
// starts with the config hash.
void write_table1_csv(std::ostream& os, const SweepConfig& c, const std::vector<Table1Row>& rows);
void write_condition_csv(std::ostream& os, const SweepConfig& c,
                         const std::vector<ConditionRow>& rows);
void write_bounds_csv(std::ostream& os, const SweepConfig& c, const std::vector<BoundsRow>& rows);
void write_cg_csv(std::ostream& os, const SweepConfig& c, const std::vector<CGRow>& rows);
void write_cg_traces_csv(std::ostream& os, const SweepConfig& c, const std::vector<CGRow>& rows);
nlohmann::json spectrum_json(const SweepConfig& c, const std::vector<SpectrumRow>& rows);

std::string csv_header_comment(const SweepConfig& c, const std::string& command);

}  // namespace condvar
