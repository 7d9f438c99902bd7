#pragma once

#include <array>
#include <string>
#include <vector>

#include "condvar/hessian.hpp"

namespace condvar {

// Candidates of the general bound (p < n):
//   lower: 1 + lambda_1(H^T R^-1 H) lambda_n(B)
//          1 + lambda_1(H B H^T) / lambda_1(R)
//          1 + lambda_p(H B H^T) / lambda_p(R)
//   upper: 1 + lambda_1(B) lambda_1(H^T R^-1 H)
//          1 + lambda_1(H B H^T) / lambda_p(R)
// kappa lies between the largest lower and the smallest upper candidate.
struct GeneralBounds {
  std::array<double, 3> lower_terms{};
  std::array<double, 2> upper_terms{};
  double lower() const;
  double upper() const;
};

// Factored form separating R from H H^T:
//   lower: 1 + lambda_p(H H^T) lambda_n(B) / lambda_p(R)
//          1 + lambda_1(H H^T) lambda_n(B) / lambda_1(R)
//   upper: 1 + lambda_1(B) lambda_1(H H^T) / lambda_p(R)
struct FactoredBounds {
  std::array<double, 2> lower_terms{};
  double upper = 0.0;
  double lower() const;
};

// With P = R^{-1/2} H B H^T R^{-1/2}:
//   lower = 1 + (1/p) sum_ij P_ij,   upper = 1 + max_i sum_j |P_ij|.
struct HabenBounds {
  double lower = 0.0;
  double upper = 0.0;
};

struct CirculantExactness {
  bool flag = false;
  // Shift-invariance defects, relative to the largest entry.
  double hbht_circulant_defect = 0.0;
  double r_circulant_defect = 0.0;
  double most_negative_entry = 0.0;  // min_ij P_ij
  bool hbht_circulant = false;
  bool r_circulant = false;
  bool entries_nonnegative = false;
};

GeneralBounds general_bounds(const HessianModel& m);
FactoredBounds factored_bounds(const HessianModel& m);
HabenBounds haben_bounds(const HessianModel& m);

// When H B H^T and R are circulant (defect <= 1e-10) and P has no entry below
// -1e-12, the two Haben bounds coincide with kappa.
CirculantExactness check_circulant_exactness(const HessianModel& m);

struct BoundsReport {
  ModelDescriptor model;
  double kappa_exact = 0.0;
  GeneralBounds general;
  FactoredBounds factored;
  HabenBounds haben;
  CirculantExactness exactness;
};

// Everything above from one set of shared intermediates (P, H B H^T and
// their spectra are computed once).
BoundsReport compute_bounds(const HessianModel& m);

// lower <= kappa <= upper with kappa * slack tolerance on each side.
bool sandwiched(double lower, double kappa, double upper, double slack = 1e-8);

std::vector<std::string> bounds_csv_columns();
std::vector<std::string> bounds_csv_fields(const BoundsReport& r);

}  // namespace condvar
