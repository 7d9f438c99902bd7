#include "condvar/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "condvar/covariance.hpp"
#include "condvar/errors.hpp"
#include "condvar/format.hpp"

namespace condvar {
namespace {

// Runs fn(i) for i in [0, count) on a small pool; fn must not throw.
template <class Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
}

std::vector<double> sorted_unique(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::vector<OperatorKind> sorted_operators(std::vector<OperatorKind> ops) {
  std::sort(ops.begin(), ops.end(),
            [](OperatorKind a, OperatorKind b) { return operator_name(a) < operator_name(b); });
  ops.erase(std::unique(ops.begin(), ops.end()), ops.end());
  return ops;
}

struct GridCell {
  OperatorKind kind;
  double lb, lr;
};

std::vector<GridCell> grid_cells(const SweepConfig& c) {
  std::vector<GridCell> cells;
  for (auto k : sorted_operators(c.operators))
    for (double lb : sorted_unique(c.lb_grid))
      for (double lr : sorted_unique(c.lr_grid)) cells.push_back({k, lb, lr});
  return cells;
}

CorrelationMatrix correlation_for(const SweepConfig& c, std::size_t dim, double l) {
  if (c.correlation == CorrelationModel::identity) return CorrelationMatrix::identity(dim);
  return build_soar(CircleGrid(dim), l);
}

std::string_view correlation_name(CorrelationModel m) {
  return m == CorrelationModel::identity ? "identity" : "soar";
}

std::string describe_error(const std::exception& e) { return std::string("error: ") + e.what(); }

std::vector<std::string> with_hash(const std::string& hash, std::vector<std::string> fields) {
  fields.insert(fields.begin(), hash);
  return fields;
}

std::string opt_seed(const SweepConfig& c, OperatorKind k) {
  return k == OperatorKind::random_direct ? std::to_string(c.seed) : "";
}

}  // namespace

SpectrumCell parse_cell(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
  if (parts.size() != 3)
    throw ParameterError("spectrum cell '" + text + "' must look like operator:L_B:L_R");
  SpectrumCell c{parse_operator_kind(parts[0]), 0.0, 0.0};
  try {
    std::size_t used = 0;
    c.lb = std::stod(parts[1], &used);
    if (used != parts[1].size()) throw std::invalid_argument("trailing");
    c.lr = std::stod(parts[2], &used);
    if (used != parts[2].size()) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw ParameterError("spectrum cell '" + text + "' has a malformed lengthscale");
  }
  if (c.kind == OperatorKind::custom || !(c.lb > 0.0) || !(c.lr > 0.0))
    throw ParameterError("spectrum cell '" + text + "' is not a valid cell");
  return c;
}

std::string format_cell(const SpectrumCell& c) {
  return std::string(operator_name(c.kind)) + ":" + format_double(c.lb) + ":" + format_double(c.lr);
}

std::vector<double> default_lengthscale_grid() {
  std::vector<double> g;
  for (int k = 1; k <= 20; ++k) g.push_back(k / 20.0);
  return g;
}

void SweepConfig::validate() const {
  auto fail = [](const std::string& m) { throw ParameterError("config: " + m); };
  if (p == 0 || n == 0) fail("n and p must be positive");
  if (n != 2 * p) fail("the canonical operators need n = 2p");
  auto check_grid = [&](const std::vector<double>& g, const char* name) {
    if (g.empty()) fail(std::string(name) + " is empty");
    for (double v : g)
      if (!(v > 0.0) || !std::isfinite(v)) fail(std::string(name) + " has a non-positive lengthscale");
  };
  check_grid(lb_grid, "lb_grid");
  check_grid(lr_grid, "lr_grid");
  check_grid(table_lengthscales, "table_lengthscales");
  if (operators.empty()) fail("no operators selected");
  for (auto k : operators)
    if (k == OperatorKind::custom) fail("custom operators cannot be swept");
  if (!(tolerance > 0.0)) fail("tolerance must be positive");
  if (!(sigma_b > 0.0) || !(sigma_r > 0.0)) fail("standard deviations must be positive");
  if (!(cluster_gap > 0.0)) fail("cluster_gap must be positive");
  for (const auto& c : cells)
    if (!(c.lb > 0.0) || !(c.lr > 0.0) || c.kind == OperatorKind::custom) fail("invalid spectrum cell");
}

nlohmann::json to_json(const SweepConfig& c) {
  nlohmann::json ops = nlohmann::json::array();
  for (auto k : c.operators) ops.push_back(operator_name(k));
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& cell : c.cells) cells.push_back(format_cell(cell));
  return {{"n", c.n},
          {"p", c.p},
          {"lb_grid", c.lb_grid},
          {"lr_grid", c.lr_grid},
          {"operators", ops},
          {"seed", c.seed},
          {"tolerance", c.tolerance},
          {"max_iterations", c.max_iterations},
          {"sigma_b", c.sigma_b},
          {"sigma_r", c.sigma_r},
          {"correlation", correlation_name(c.correlation)},
          {"cluster_gap", c.cluster_gap},
          {"table_lengthscales", c.table_lengthscales},
          {"cells", cells},
          {"cg_traces", c.cg_traces},
          {"output_dir", c.output_dir},
          {"threads", c.threads}};
}

SweepConfig config_from_json(const nlohmann::json& j, SweepConfig c) {
  if (!j.is_object()) throw ParameterError("config: top level must be a JSON object");
  static const std::vector<std::string> known{
      "n", "p", "lb_grid", "lr_grid", "operators", "seed", "tolerance", "max_iterations",
      "sigma_b", "sigma_r", "correlation", "cluster_gap", "table_lengthscales", "cells",
      "cg_traces", "output_dir", "threads"};
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ParameterError("config: unknown key '" + key + "'");
  try {
    if (j.contains("n")) c.n = j["n"].get<std::size_t>();
    if (j.contains("p")) c.p = j["p"].get<std::size_t>();
    if (j.contains("lb_grid")) c.lb_grid = j["lb_grid"].get<std::vector<double>>();
    if (j.contains("lr_grid")) c.lr_grid = j["lr_grid"].get<std::vector<double>>();
    if (j.contains("operators")) {
      c.operators.clear();
      for (const auto& name : j["operators"]) c.operators.push_back(parse_operator_kind(name.get<std::string>()));
    }
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("tolerance")) c.tolerance = j["tolerance"].get<double>();
    if (j.contains("max_iterations")) c.max_iterations = j["max_iterations"].get<std::size_t>();
    if (j.contains("sigma_b")) c.sigma_b = j["sigma_b"].get<double>();
    if (j.contains("sigma_r")) c.sigma_r = j["sigma_r"].get<double>();
    if (j.contains("correlation")) {
      const auto m = j["correlation"].get<std::string>();
      if (m == "soar") c.correlation = CorrelationModel::soar;
      else if (m == "identity") c.correlation = CorrelationModel::identity;
      else throw ParameterError("config: correlation must be 'soar' or 'identity'");
    }
    if (j.contains("cluster_gap")) c.cluster_gap = j["cluster_gap"].get<double>();
    if (j.contains("table_lengthscales"))
      c.table_lengthscales = j["table_lengthscales"].get<std::vector<double>>();
    if (j.contains("cells")) {
      c.cells.clear();
      for (const auto& s : j["cells"]) c.cells.push_back(parse_cell(s.get<std::string>()));
    }
    if (j.contains("cg_traces")) c.cg_traces = j["cg_traces"].get<bool>();
    if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
    if (j.contains("threads")) c.threads = j["threads"].get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("config: ") + e.what());
  }
  return c;
}

std::string config_hash(const SweepConfig& c) {
  nlohmann::json j = to_json(c);
  j.erase("output_dir");
  j.erase("threads");
  return fnv1a_hex(j.dump());
}

struct ModelBank::Impl {
  SweepConfig config;
  std::map<double, std::shared_ptr<const SpdFactorization>> b, r;
  std::map<OperatorKind, std::shared_ptr<const ObservationOperator>> ops;
};

ModelBank::ModelBank(const SweepConfig& config, const std::vector<double>& lb_values,
                     const std::vector<double>& lr_values) {
  auto impl = std::make_shared<Impl>();
  impl->config = config;
  const auto lbs = sorted_unique(lb_values);
  const auto lrs = sorted_unique(lr_values);

  std::vector<std::shared_ptr<const SpdFactorization>> built(lbs.size() + lrs.size());
  std::vector<std::string> errors(built.size());
  parallel_for(built.size(), config.threads, [&](std::size_t i) {
    try {
      const bool is_b = i < lbs.size();
      const double l = is_b ? lbs[i] : lrs[i - lbs.size()];
      const std::size_t dim = is_b ? config.n : config.p;
      built[i] = std::make_shared<const SpdFactorization>(correlation_for(config, dim, l).entries());
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  for (std::size_t i = 0; i < built.size(); ++i) {
    if (!built[i]) continue;  // reported when a cell asks for it
    if (i < lbs.size()) impl->b[lbs[i]] = built[i];
    else impl->r[lrs[i - lbs.size()]] = built[i];
  }
  for (auto k : config.operators)
    if (!impl->ops.count(k))
      impl->ops[k] = std::make_shared<const ObservationOperator>(
          make_operator(k, config.p, config.n, config.seed));
  impl_ = std::move(impl);
}

HessianModel ModelBank::model(OperatorKind kind, double lb, double lr) const {
  const auto& c = impl_->config;
  auto get = [&](const auto& map, double l, std::size_t dim) {
    auto it = map.find(l);
    if (it != map.end()) return it->second;
    // Factorization failed up front (or l is new): rebuild to surface the error.
    return std::make_shared<const SpdFactorization>(correlation_for(c, dim, l).entries());
  };
  auto op_it = impl_->ops.find(kind);
  auto op = op_it != impl_->ops.end()
                ? op_it->second
                : std::make_shared<const ObservationOperator>(make_operator(kind, c.p, c.n, c.seed));
  HessianModel m(get(impl_->b, lb, c.n), c.sigma_b * c.sigma_b, get(impl_->r, lr, c.p),
                 c.sigma_r * c.sigma_r, std::move(op));
  auto d = m.descriptor();
  d.lb = lb;
  d.lr = lr;
  m.set_descriptor(d);
  return m;
}

std::vector<Table1Row> run_table1(const SweepConfig& config) {
  config.validate();
  const auto ls = config.table_lengthscales;
  std::vector<Table1Row> rows;
  for (const auto& [name, dim] : {std::pair<std::string, std::size_t>{"R", config.p}, {"B", config.n}})
    for (double l : ls) rows.push_back({name, dim, l, 0.0, 0.0});
  parallel_for(rows.size(), config.threads, [&](std::size_t i) {
    auto& row = rows[i];
    const auto m = correlation_for(config, row.dim, row.lengthscale);
    const auto ev = circulant_eigenvalues(circulant_from_first_row(first_row_of(m.entries())));
    row.lambda_max = ev.front();
    row.lambda_min = ev.back();
  });
  return rows;
}

std::vector<ConditionRow> run_condition_sweep(const SweepConfig& config) {
  config.validate();
  const auto cells = grid_cells(config);
  const ModelBank bank(config, config.lb_grid, config.lr_grid);
  std::vector<ConditionRow> rows(cells.size());
  parallel_for(cells.size(), config.threads, [&](std::size_t i) {
    const auto& cell = cells[i];
    rows[i] = {cell.kind, cell.lb, cell.lr, 0.0, {}};
    try {
      rows[i].kappa = kappa_via_rank_p(bank.model(cell.kind, cell.lb, cell.lr));
    } catch (const std::exception& e) {
      rows[i].error = describe_error(e);
    }
  });
  return rows;
}

std::vector<BoundsRow> run_bounds_sweep(const SweepConfig& config) {
  config.validate();
  const auto cells = grid_cells(config);
  const ModelBank bank(config, config.lb_grid, config.lr_grid);
  std::vector<BoundsRow> rows(cells.size());
  parallel_for(cells.size(), config.threads, [&](std::size_t i) {
    const auto& cell = cells[i];
    rows[i] = {cell.kind, cell.lb, cell.lr, std::nullopt, {}};
    try {
      rows[i].report = compute_bounds(bank.model(cell.kind, cell.lb, cell.lr));
    } catch (const std::exception& e) {
      rows[i].error = describe_error(e);
    }
  });
  return rows;
}

std::vector<CGRow> run_cg_sweep(const SweepConfig& config) {
  config.validate();
  const auto cells = grid_cells(config);
  const ModelBank bank(config, config.lb_grid, config.lr_grid);
  const TestSignal truth = make_test_signal(config.n);
  CGOptions opts;
  opts.tolerance = config.tolerance;
  opts.max_iterations = config.max_iterations;
  std::vector<CGRow> rows(cells.size());
  parallel_for(cells.size(), config.threads, [&](std::size_t i) {
    const auto& cell = cells[i];
    rows[i] = {cell.kind, cell.lb, cell.lr, 0.0, std::nullopt, {}};
    try {
      const HessianModel m = bank.model(cell.kind, cell.lb, cell.lr);
      rows[i].kappa = kappa_via_rank_p(m);
      const PreconditionedHessianOperator op(m);
      std::vector<double> b(config.n);
      op.apply(truth.values, b);
      auto report = conjugate_gradient(op.as_linear_operator(), b, opts,
                                       std::span<const double>(truth.values));
      if (!config.cg_traces) {
        const double last = report.final_residual();
        report.relative_residual_trace.assign(1, last);
      }
      report.solution.clear();
      rows[i].report = std::move(report);
      if (!rows[i].report->converged)
        rows[i].error = "error: no convergence within the iteration budget";
    } catch (const std::exception& e) {
      rows[i].error = describe_error(e);
    }
  });
  return rows;
}

std::vector<SpectrumRow> run_spectrum_export(const SweepConfig& config,
                                             const std::vector<SpectrumCell>& cells) {
  config.validate();
  if (cells.empty()) throw ParameterError("spectrum: no cells requested");
  std::vector<double> lbs, lrs;
  for (const auto& c : cells) {
    if (!(c.lb > 0.0) || !(c.lr > 0.0) || c.kind == OperatorKind::custom)
      throw ParameterError("spectrum: invalid cell " + format_cell(c));
    lbs.push_back(c.lb);
    lrs.push_back(c.lr);
  }
  SweepConfig with_ops = config;
  for (const auto& c : cells)
    if (std::find(with_ops.operators.begin(), with_ops.operators.end(), c.kind) == with_ops.operators.end())
      with_ops.operators.push_back(c.kind);
  const ModelBank bank(with_ops, lbs, lrs);
  std::vector<SpectrumRow> rows(cells.size());
  parallel_for(cells.size(), config.threads, [&](std::size_t i) {
    rows[i].cell = cells[i];
    try {
      rows[i].report = preconditioned_spectrum(bank.model(cells[i].kind, cells[i].lb, cells[i].lr),
                                               config.cluster_gap);
    } catch (const std::exception& e) {
      rows[i].error = describe_error(e);
    }
  });
  return rows;
}

std::string csv_header_comment(const SweepConfig& c, const std::string& command) {
  const nlohmann::json h{{"command", command},
                         {"config_hash", config_hash(c)},
                         {"seed", c.seed},
                         {"tool_version", kToolVersion},
                         {"config", [&] {
                            auto j = to_json(c);
                            j.erase("output_dir");
                            j.erase("threads");
                            return j;
                          }()}};
  return "# " + h.dump();
}

void write_table1_csv(std::ostream& os, const SweepConfig& c, const std::vector<Table1Row>& rows) {
  const auto hash = config_hash(c);
  os << csv_header_comment(c, "table1") << '\n';
  write_csv_row(os, {"config_hash", "matrix", "dim", "L", "lambda_min", "lambda_max"});
  for (const auto& r : rows)
    write_csv_row(os, {hash, r.matrix, std::to_string(r.dim), format_double(r.lengthscale),
                       format_double(r.lambda_min), format_double(r.lambda_max)});
}

void write_condition_csv(std::ostream& os, const SweepConfig& c,
                         const std::vector<ConditionRow>& rows) {
  const auto hash = config_hash(c);
  os << csv_header_comment(c, "sweep-cond") << '\n';
  write_csv_row(os, {"config_hash", "operator", "L_B", "L_R", "n", "p", "seed", "kappa", "status"});
  for (const auto& r : rows)
    write_csv_row(os, {hash, std::string(operator_name(r.kind)), format_double(r.lb),
                       format_double(r.lr), std::to_string(c.n), std::to_string(c.p),
                       opt_seed(c, r.kind), r.error.empty() ? format_double(r.kappa) : "",
                       r.error.empty() ? "ok" : r.error});
}

void write_bounds_csv(std::ostream& os, const SweepConfig& c, const std::vector<BoundsRow>& rows) {
  const auto hash = config_hash(c);
  os << csv_header_comment(c, "sweep-bounds") << '\n';
  auto cols = bounds_csv_columns();
  cols.insert(cols.begin(), "config_hash");
  cols.push_back("status");
  write_csv_row(os, cols);
  for (const auto& r : rows) {
    std::vector<std::string> fields;
    if (r.report) {
      fields = bounds_csv_fields(*r.report);
    } else {
      fields.assign(bounds_csv_columns().size(), "");
      fields[0] = std::string(operator_name(r.kind));
      fields[1] = format_double(r.lb);
      fields[2] = format_double(r.lr);
      fields[3] = std::to_string(c.n);
      fields[4] = std::to_string(c.p);
      fields[5] = format_double(c.sigma_b);
      fields[6] = format_double(c.sigma_r);
      fields[7] = opt_seed(c, r.kind);
    }
    fields.push_back(r.error.empty() ? "ok" : r.error);
    write_csv_row(os, with_hash(hash, std::move(fields)));
  }
}

void write_cg_csv(std::ostream& os, const SweepConfig& c, const std::vector<CGRow>& rows) {
  const auto hash = config_hash(c);
  os << csv_header_comment(c, "sweep-cg") << '\n';
  write_csv_row(os, {"config_hash", "operator", "L_B", "L_R", "n", "p", "sigma_b", "sigma_r", "seed",
                     "signal", "tolerance", "iterations", "final_residual", "solution_error",
                     "converged", "kappa", "status"});
  const std::string signal = make_test_signal(c.n).descriptor.describe();
  for (const auto& r : rows) {
    const bool has = r.report.has_value();
    write_csv_row(
        os, {hash, std::string(operator_name(r.kind)), format_double(r.lb), format_double(r.lr),
             std::to_string(c.n), std::to_string(c.p), format_double(c.sigma_b),
             format_double(c.sigma_r), opt_seed(c, r.kind), signal, format_double(c.tolerance),
             has ? std::to_string(r.report->iterations) : "",
             has ? format_double(r.report->final_residual()) : "",
             has && r.report->recovered_solution_error
                 ? format_double(*r.report->recovered_solution_error)
                 : "",
             has ? (r.report->converged ? "1" : "0") : "",
             r.kappa > 0.0 ? format_double(r.kappa) : "", r.error.empty() ? "ok" : r.error});
  }
}

void write_cg_traces_csv(std::ostream& os, const SweepConfig& c, const std::vector<CGRow>& rows) {
  const auto hash = config_hash(c);
  os << csv_header_comment(c, "sweep-cg-traces") << '\n';
  write_csv_row(os, {"config_hash", "operator", "L_B", "L_R", "iteration", "relative_residual"});
  for (const auto& r : rows) {
    if (!r.report) continue;
    const auto& t = r.report->relative_residual_trace;
    for (std::size_t k = 0; k < t.size(); ++k)
      write_csv_row(os, {hash, std::string(operator_name(r.kind)), format_double(r.lb),
                         format_double(r.lr), std::to_string(k + 1), format_double(t[k])});
  }
}

nlohmann::json spectrum_json(const SweepConfig& c, const std::vector<SpectrumRow>& rows) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json j{{"cell", format_cell(r.cell)}, {"config_hash", config_hash(c)}};
    if (r.report) {
      j["report"] = to_json(*r.report);
      j["status"] = "ok";
    } else {
      j["report"] = nullptr;
      j["status"] = r.error;
    }
    cells.push_back(std::move(j));
  }
  return {{"config_hash", config_hash(c)},
          {"seed", c.seed},
          {"tool_version", kToolVersion},
          {"cells", cells}};
}

}  // namespace condvar
