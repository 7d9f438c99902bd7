#include "condvar/bounds.hpp"

#include <algorithm>
#include <cmath>

#include "condvar/errors.hpp"
#include "condvar/format.hpp"

namespace condvar {
namespace {

constexpr double kCirculantTolerance = 1e-10;
constexpr double kNegativeTolerance = -1e-12;

double last(const Eigen::VectorXd& v) { return v(v.size() - 1); }

// Intermediates shared by every bound family.
struct Ingredients {
  Eigen::VectorXd b_eigs, r_eigs, hbht_eigs, hht_eigs;
  double lambda1_htrih = 0.0;  // lambda_1(H^T R^-1 H)
  Eigen::MatrixXd hbht, whitened;

  explicit Ingredients(const HessianModel& m, bool need_general = true) {
    b_eigs = m.b_eigenvalues();
    r_eigs = m.r_eigenvalues();
    hbht = m.hbht();
    const Eigen::MatrixXd ris = m.r_inverse_sqrt();
    whitened = ris * hbht * ris;
    whitened = 0.5 * (whitened + whitened.transpose());
    if (need_general) {
      hbht_eigs = symmetric_eigenvalues(hbht);
      const Eigen::MatrixXd hht = m.h().gram();
      hht_eigs = symmetric_eigenvalues(hht);
      // H^T R^-1 H shares its nonzero spectrum with R^{-1/2} H H^T R^{-1/2}.
      Eigen::MatrixXd w = ris * hht * ris;
      lambda1_htrih = symmetric_eigenvalues(0.5 * (w + w.transpose()))(0);
    }
  }
};

GeneralBounds general_from(const Ingredients& g) {
  GeneralBounds b;
  b.lower_terms = {1.0 + g.lambda1_htrih * last(g.b_eigs),
                   1.0 + g.hbht_eigs(0) / g.r_eigs(0),
                   1.0 + last(g.hbht_eigs) / last(g.r_eigs)};
  b.upper_terms = {1.0 + g.b_eigs(0) * g.lambda1_htrih,
                   1.0 + g.hbht_eigs(0) / last(g.r_eigs)};
  return b;
}

FactoredBounds factored_from(const Ingredients& g) {
  FactoredBounds b;
  b.lower_terms = {1.0 + last(g.hht_eigs) * last(g.b_eigs) / last(g.r_eigs),
                   1.0 + g.hht_eigs(0) * last(g.b_eigs) / g.r_eigs(0)};
  b.upper = 1.0 + g.b_eigs(0) * g.hht_eigs(0) / last(g.r_eigs);
  return b;
}

HabenBounds haben_from(const Ingredients& g) {
  const double p = static_cast<double>(g.whitened.rows());
  return {1.0 + g.whitened.sum() / p, 1.0 + g.whitened.cwiseAbs().rowwise().sum().maxCoeff()};
}

double relative_circulant_defect(const Eigen::MatrixXd& a) {
  const double scale = std::max(1e-300, a.cwiseAbs().maxCoeff());
  return circulant_defect(a) / scale;
}

CirculantExactness exactness_from(const HessianModel& m, const Ingredients& g) {
  CirculantExactness e;
  e.hbht_circulant_defect = relative_circulant_defect(g.hbht);
  e.r_circulant_defect = relative_circulant_defect(m.r_correlation().matrix());
  e.most_negative_entry = g.whitened.minCoeff();
  e.hbht_circulant = e.hbht_circulant_defect <= kCirculantTolerance;
  e.r_circulant = e.r_circulant_defect <= kCirculantTolerance;
  e.entries_nonnegative = e.most_negative_entry >= kNegativeTolerance;
  e.flag = e.hbht_circulant && e.r_circulant && e.entries_nonnegative;
  return e;
}

}  // namespace

double GeneralBounds::lower() const { return *std::max_element(lower_terms.begin(), lower_terms.end()); }
double GeneralBounds::upper() const { return *std::min_element(upper_terms.begin(), upper_terms.end()); }
double FactoredBounds::lower() const { return *std::max_element(lower_terms.begin(), lower_terms.end()); }

GeneralBounds general_bounds(const HessianModel& m) { return general_from(Ingredients(m)); }
FactoredBounds factored_bounds(const HessianModel& m) { return factored_from(Ingredients(m)); }
HabenBounds haben_bounds(const HessianModel& m) { return haben_from(Ingredients(m, false)); }

CirculantExactness check_circulant_exactness(const HessianModel& m) {
  return exactness_from(m, Ingredients(m, false));
}

BoundsReport compute_bounds(const HessianModel& m) {
  const Ingredients g(m);
  BoundsReport r;
  r.model = m.descriptor();
  r.kappa_exact = 1.0 + symmetric_eigenvalues(g.whitened)(0);
  r.general = general_from(g);
  r.factored = factored_from(g);
  r.haben = haben_from(g);
  r.exactness = exactness_from(m, g);
  return r;
}

bool sandwiched(double lower, double kappa, double upper, double slack) {
  const double tol = slack * std::abs(kappa);
  return lower <= kappa + tol && kappa <= upper + tol;
}

std::vector<std::string> bounds_csv_columns() {
  return {"operator",        "L_B",             "L_R",             "n",
          "p",               "sigma_b",         "sigma_r",         "seed",
          "kappa_exact",     "general_lower_1", "general_lower_2", "general_lower_3",
          "general_upper_1", "general_upper_2", "factored_lower_1", "factored_lower_2",
          "factored_upper",  "haben_lower",     "haben_upper",     "exactness_flag",
          "most_negative_entry", "hbht_circulant_defect"};
}

std::vector<std::string> bounds_csv_fields(const BoundsReport& r) {
  const auto& d = r.model;
  return {d.operator_name,
          d.lb ? format_double(*d.lb) : "",
          d.lr ? format_double(*d.lr) : "",
          std::to_string(d.n),
          std::to_string(d.p),
          format_double(d.sigma_b),
          format_double(d.sigma_r),
          d.seed ? std::to_string(*d.seed) : "",
          format_double(r.kappa_exact),
          format_double(r.general.lower_terms[0]),
          format_double(r.general.lower_terms[1]),
          format_double(r.general.lower_terms[2]),
          format_double(r.general.upper_terms[0]),
          format_double(r.general.upper_terms[1]),
          format_double(r.factored.lower_terms[0]),
          format_double(r.factored.lower_terms[1]),
          format_double(r.factored.upper),
          format_double(r.haben.lower),
          format_double(r.haben.upper),
          r.exactness.flag ? "1" : "0",
          format_double(r.exactness.most_negative_entry),
          format_double(r.exactness.hbht_circulant_defect)};
}

}  // namespace condvar
