#pragma once

#include "xmal/types.hpp"

namespace xmal {

struct PearsonResult {
  double r = 0.0;
  bool degenerate = false;  // zero variance in either argument
};

// Product-moment correlation. Needs at least two observations; zero variance
// in either argument yields r = 0 with the degenerate flag set.
PearsonResult pearson(const Vector& x, const Vector& y);

double mean_squared_error(const Vector& predictions, const Vector& truth);

// Regularized incomplete beta function I_x(a, b), evaluated with the Lentz
// continued fraction. Absolute accuracy around 1e-12 on (0, 1).
double regularized_incomplete_beta(double a, double b, double x);

// Two-sided p-value of Student's t with `dof` degrees of freedom:
// p = I_{dof/(dof+t^2)}(dof/2, 1/2).
double student_t_two_sided_p(double t, double dof);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  bool degenerate = false;  // zero-variance differences
};

// Paired t-test on d = a - b with the sample standard deviation and N-1
// degrees of freedom.
TTestResult paired_ttest(const Vector& a, const Vector& b);

}  // namespace xmal
