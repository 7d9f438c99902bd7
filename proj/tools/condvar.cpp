// condvar: data driver for the conditioning experiments.
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "condvar/errors.hpp"
#include "condvar/experiments.hpp"
#include "condvar/kernels.hpp"

namespace fs = std::filesystem;
using condvar::SweepConfig;

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    item = trim(item);
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw condvar::ParameterError("not a number: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

// Value of a "key = value" line as JSON: numbers, booleans, comma lists, else a string.
nlohmann::json kv_value(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (v == "true" || v == "false") return v == "true";
  const bool list_key = key == "lb_grid" || key == "lr_grid" || key == "table_lengthscales";
  if (list_key) return parse_list(v);
  if (key == "operators" || key == "cells") {
    nlohmann::json arr = nlohmann::json::array();
    std::stringstream ss(v);
    for (std::string item; std::getline(ss, item, ',');)
      if (!trim(item).empty()) arr.push_back(trim(item));
    return arr;
  }
  const auto nums = [&]() -> std::optional<nlohmann::json> {
    try {
      return nlohmann::json::parse(v);
    } catch (const nlohmann::json::exception&) {
      return std::nullopt;
    }
  }();
  if (nums && nums->is_number()) return *nums;
  return v;
}

nlohmann::json read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw condvar::IoError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  if (trim(text).starts_with("{")) {
    try {
      return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw condvar::ParameterError("config file '" + path + "': " + e.what());
    }
  }
  nlohmann::json j = nlohmann::json::object();
  std::stringstream lines(text);
  int lineno = 0;
  for (std::string line; std::getline(lines, line);) {
    ++lineno;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw condvar::ParameterError("config file '" + path + "' line " + std::to_string(lineno) +
                                    ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    j[key] = kv_value(key, line.substr(eq + 1));
  }
  return j;
}

struct Output {
  std::ofstream file;
  std::string path;
  std::ostream& stream() { return path.empty() ? std::cout : file; }
};

void open_output(Output& o, const std::string& out, const SweepConfig& c, const std::string& fallback) {
  std::string path = out;
  if (path.empty() && !c.output_dir.empty()) path = (fs::path(c.output_dir) / fallback).string();
  else if (!path.empty() && !c.output_dir.empty() && fs::path(path).is_relative())
    path = (fs::path(c.output_dir) / path).string();
  if (path.empty()) return;
  const auto parent = fs::path(path).parent_path();
  std::error_code ec;
  if (!parent.empty()) fs::create_directories(parent, ec);
  o.file.open(path, std::ios::binary);
  if (!o.file) throw condvar::IoError("cannot open output file '" + path + "'");
  o.path = path;
}

void close_output(Output& o) {
  o.stream().flush();
  if (!o.stream()) throw condvar::IoError("write failed for '" + (o.path.empty() ? "<stdout>" : o.path) + "'");
}

template <class Rows>
int failures(const Rows& rows) {
  int bad = 0;
  for (const auto& r : rows)
    if (!r.error.empty()) ++bad;
  return bad;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Condition-number experiments for variational data assimilation Hessians"};
  app.require_subcommand(1);
  app.set_version_flag("--version", condvar::kToolVersion);

  SweepConfig cfg;
  std::optional<std::size_t> n, p;
  std::vector<std::string> operator_names;
  std::string lb_grid, lr_grid, lengthscales, correlation, config_path, out, kernels;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol, sigma_b, sigma_r;
  std::optional<std::size_t> threads, max_iter;
  std::vector<std::string> cell_texts;
  bool traces = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--n", n, "State dimension (default 200)");
    sub->add_option("--p", p, "Number of observations (default 100)");
    sub->add_option("--operator", operator_names,
                    "Observation operator; repeatable (first-half|alternate|smoothed-alternate|random-direct or H1..H4)");
    sub->add_option("--lb-grid", lb_grid, "Comma-separated background lengthscales");
    sub->add_option("--lr-grid", lr_grid, "Comma-separated observation lengthscales");
    sub->add_option("--seed", seed, "Seed for the random operator (default 42)");
    sub->add_option("--tol", tol, "CG relative residual tolerance (default 1e-10)");
    sub->add_option("--max-iter", max_iter, "CG iteration cap (default 5n)");
    sub->add_option("--sigma-b", sigma_b, "Background error standard deviation");
    sub->add_option("--sigma-r", sigma_r, "Observation error standard deviation");
    sub->add_option("--correlation", correlation, "soar or identity");
    sub->add_option("--threads", threads, "Worker threads (0: all cores)");
    sub->add_option("--out", out, "Output file (stdout if absent)");
    sub->add_option("--config", config_path, "JSON or key = value file; its values override flags");
    sub->add_option("--kernels", kernels, "Force a kernel backend (scalar|avx2|neon)");
  };

  auto* t1 = app.add_subcommand("table1", "Extreme eigenvalues of the SOAR matrices");
  add_common(t1);
  t1->add_option("--lengthscales", lengthscales, "Comma-separated lengthscales");
  auto* sc = app.add_subcommand("sweep-cond", "Condition number over the lengthscale grid");
  add_common(sc);
  auto* sb = app.add_subcommand("sweep-bounds", "Condition number bounds over the grid");
  add_common(sb);
  auto* sg = app.add_subcommand("sweep-cg", "CG iteration counts over the grid");
  add_common(sg);
  sg->add_flag("--traces", traces, "Also write per-iteration residuals to <out>.traces.csv");
  auto* sp = app.add_subcommand("spectrum", "Update eigenvalues and clusters for chosen cells");
  add_common(sp);
  sp->add_option("--cell", cell_texts, "operator:L_B:L_R; repeatable");

  CLI11_PARSE(app, argc, argv);

  try {
    if (n) cfg.n = *n;
    if (p) cfg.p = *p;
    if (n && !p) cfg.p = cfg.n / 2;
    if (p && !n) cfg.n = 2 * cfg.p;
    if (!operator_names.empty()) {
      cfg.operators.clear();
      for (const auto& name : operator_names) cfg.operators.push_back(condvar::parse_operator_kind(name));
    }
    if (!lb_grid.empty()) cfg.lb_grid = parse_list(lb_grid);
    if (!lr_grid.empty()) cfg.lr_grid = parse_list(lr_grid);
    if (!lengthscales.empty()) cfg.table_lengthscales = parse_list(lengthscales);
    if (seed) cfg.seed = *seed;
    if (tol) cfg.tolerance = *tol;
    if (max_iter) cfg.max_iterations = *max_iter;
    if (sigma_b) cfg.sigma_b = *sigma_b;
    if (sigma_r) cfg.sigma_r = *sigma_r;
    if (threads) cfg.threads = *threads;
    if (!correlation.empty())
      cfg = condvar::config_from_json({{"correlation", correlation}}, cfg);
    for (const auto& c : cell_texts) cfg.cells.push_back(condvar::parse_cell(c));
    if (traces) cfg.cg_traces = true;
    if (!config_path.empty()) cfg = condvar::config_from_json(read_config_file(config_path), cfg);
    if (!kernels.empty()) {
      const std::string k = kernels;
      condvar::kernels::Backend b = condvar::kernels::Backend::scalar;
      if (k == "avx2") b = condvar::kernels::Backend::avx2;
      else if (k == "neon") b = condvar::kernels::Backend::neon;
      else if (k != "scalar") throw condvar::ParameterError("unknown kernel backend '" + k + "'");
      condvar::kernels::set_backend(b);
    }
    cfg.validate();

    Output o;
    int bad = 0;
    if (*t1) {
      open_output(o, out, cfg, "table1.csv");
      const auto rows = condvar::run_table1(cfg);
      condvar::write_table1_csv(o.stream(), cfg, rows);
    } else if (*sc) {
      open_output(o, out, cfg, "sweep-cond.csv");
      const auto rows = condvar::run_condition_sweep(cfg);
      condvar::write_condition_csv(o.stream(), cfg, rows);
      bad = failures(rows);
    } else if (*sb) {
      open_output(o, out, cfg, "sweep-bounds.csv");
      const auto rows = condvar::run_bounds_sweep(cfg);
      condvar::write_bounds_csv(o.stream(), cfg, rows);
      bad = failures(rows);
    } else if (*sg) {
      open_output(o, out, cfg, "sweep-cg.csv");
      const auto rows = condvar::run_cg_sweep(cfg);
      condvar::write_cg_csv(o.stream(), cfg, rows);
      bad = failures(rows);
      if (cfg.cg_traces) {
        if (o.path.empty()) throw condvar::ParameterError("--traces needs --out or output_dir");
        Output tr;
        open_output(tr, o.path + ".traces.csv", SweepConfig{}, "");
        condvar::write_cg_traces_csv(tr.stream(), cfg, rows);
        close_output(tr);
      }
    } else if (*sp) {
      if (cfg.cells.empty()) throw condvar::ParameterError("spectrum needs at least one --cell");
      open_output(o, out, cfg, "spectrum.json");
      const auto rows = condvar::run_spectrum_export(cfg, cfg.cells);
      o.stream() << condvar::spectrum_json(cfg, rows).dump(2) << '\n';
      bad = failures(rows);
    }
    close_output(o);
    if (bad > 0) {
      std::cerr << "condvar: " << bad << " cell(s) failed; see the status column\n";
      return 1;
    }
    return 0;
  } catch (const condvar::ParameterError& e) {
    std::cerr << "condvar: invalid parameters: " << e.what() << '\n';
    return 2;
  } catch (const condvar::Error& e) {
    std::cerr << "condvar: " << e.what() << '\n';
    return 3;
  }
}
