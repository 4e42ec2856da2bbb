#include "xmal/stats.hpp"

#include <algorithm>
#include <cmath>

namespace xmal {

namespace {

// Continued fraction for the incomplete beta function (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 300;
  constexpr double kEpsilon = 1e-15;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEpsilon) return h;
  }
  throw NumericError("regularized_incomplete_beta: continued fraction did not converge");
}

}  // namespace

PearsonResult pearson(const Vector& x, const Vector& y) {
  if (x.size() != y.size())
    throw DataError("pearson: length mismatch");
  if (x.size() < 2) throw DataError("pearson: need at least 2 observations");
  if (!x.allFinite() || !y.allFinite())
    throw NumericError("pearson: non-finite input");

  const double mx = x.mean();
  const double my = y.mean();
  const Vector dx = x.array() - mx;
  const Vector dy = y.array() - my;
  const double sxx = dx.squaredNorm();
  const double syy = dy.squaredNorm();
  if (sxx == 0.0 || syy == 0.0) return {0.0, true};
  const double r = dx.dot(dy) / std::sqrt(sxx * syy);
  // guard against rounding just past the closed interval
  return {std::clamp(r, -1.0, 1.0), false};
}

double mean_squared_error(const Vector& predictions, const Vector& truth) {
  if (predictions.size() != truth.size() || predictions.size() == 0)
    throw DataError("mean_squared_error: length mismatch");
  return (predictions - truth).squaredNorm() /
         static_cast<double>(predictions.size());
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0)
    throw NumericError("regularized_incomplete_beta: a, b must be positive");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;

  const double log_front = std::lgamma(a + b) - std::lgamma(a) -
                           std::lgamma(b) + a * std::log(x) +
                           b * std::log1p(-x);
  const double front = std::exp(log_front);
  // The continued fraction converges fast only for x < (a+1)/(a+b+2); use the
  // symmetry I_x(a,b) = 1 - I_{1-x}(b,a) on the other side.
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double dof) {
  if (dof <= 0.0) throw NumericError("student_t_two_sided_p: dof must be positive");
  if (!std::isfinite(t)) return 0.0;
  const double x = dof / (dof + t * t);
  return regularized_incomplete_beta(dof / 2.0, 0.5, x);
}

TTestResult paired_ttest(const Vector& a, const Vector& b) {
  if (a.size() != b.size())
    throw DataError("paired_ttest: length mismatch");
  const Index n = a.size();
  if (n < 2) throw DataError("paired_ttest: need at least 2 pairs");
  const Vector d = a - b;
  if (!d.allFinite()) throw NumericError("paired_ttest: non-finite input");

  const double mean = d.mean();
  const double ss = (d.array() - mean).square().sum();
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (sd == 0.0) return {0.0, 1.0, true};

  TTestResult result;
  result.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  result.p = student_t_two_sided_p(result.t, static_cast<double>(n - 1));
  return result;
}

}  // namespace xmal
