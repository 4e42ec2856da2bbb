#include "xmal/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace xmal {

namespace {

// Row norms with zero-norm diagnostics.
Vector checked_row_norms(const Matrix& m, const char* label) {
  Vector norms = m.rowwise().norm();
  for (Index i = 0; i < norms.size(); ++i) {
    if (norms(i) == 0.0)
      throw NumericError(std::string("zero-norm ") + label + " row " +
                         std::to_string(i));
  }
  return norms;
}

void check_batch(const Matrix& A, const Matrix& T) {
  if (A.rows() != T.rows() || A.cols() != T.cols())
    throw DataError("loss: student batch is " + std::to_string(A.rows()) + "x" +
                    std::to_string(A.cols()) + " but target batch is " +
                    std::to_string(T.rows()) + "x" + std::to_string(T.cols()));
  if (A.rows() == 0) throw DataError("loss: empty batch");
  if (!A.allFinite()) throw NumericError("loss: non-finite student embedding");
  if (!T.allFinite()) throw NumericError("loss: non-finite target embedding");
}

}  // namespace

LossKind parse_loss_kind(const std::string& name) {
  if (name == "cs") return LossKind::CosineSimilarity;
  if (name == "nce") return LossKind::Nce;
  throw ConfigError("unknown loss '" + name + "' (expected cs or nce)");
}

std::string to_string(LossKind kind) {
  return kind == LossKind::CosineSimilarity ? "cs" : "nce";
}

Matrix pairwise_similarity(const Matrix& A, const Matrix& T) {
  if (A.cols() != T.cols())
    throw DataError("pairwise_similarity: dimension mismatch");
  const Vector na = checked_row_norms(A, "student");
  const Vector nt = checked_row_norms(T, "target");
  Matrix sims = A * T.transpose();
  sims.array().colwise() /= na.array();
  sims.array().rowwise() /= nt.transpose().array();
  return sims;
}

LossResult cs_loss(const Matrix& A, const Matrix& T) {
  check_batch(A, T);
  const Vector na = checked_row_norms(A, "student");
  const Vector nt = checked_row_norms(T, "target");

  LossResult result;
  result.grad_wrt_students.resize(A.rows(), A.cols());
  for (Index i = 0; i < A.rows(); ++i) {
    const auto a = A.row(i);
    const auto t = T.row(i);
    const double sim = a.dot(t) / (na(i) * nt(i));
    result.value += 1.0 - sim;
    // d(1 - sim)/dA_i = -(T_i / (|A||T|) - sim * A_i / |A|^2)
    result.grad_wrt_students.row(i) =
        -(t / (na(i) * nt(i)) - sim * a / (na(i) * na(i)));
  }
  return result;
}

LossResult nce_loss(const Matrix& A, const Matrix& T, double temperature,
                    bool include_positive) {
  check_batch(A, T);
  if (temperature <= 0.0)
    throw ConfigError("nce_loss: temperature must be positive");
  const Index n = A.rows();
  if (!include_positive && n < 2)
    throw ConfigError("nce_loss: exclusive denominator needs at least 2 rows");

  const Vector na = checked_row_norms(A, "student");
  const Vector nt = checked_row_norms(T, "target");
  Matrix an = A.array().colwise() / na.array();
  Matrix tn = T.array().colwise() / nt.array();

  const Matrix sims = an * tn.transpose();
  const Matrix scores = sims / temperature;

  LossResult result;
  result.grad_wrt_students.setZero(A.rows(), A.cols());

  // coeff(i,b) = dL_i / dscore(i,b)
  Matrix coeff(n, n);
  for (Index i = 0; i < n; ++i) {
    double max_score = -std::numeric_limits<double>::infinity();
    for (Index b = 0; b < n; ++b) {
      if (!include_positive && b == i) continue;
      max_score = std::max(max_score, scores(i, b));
    }
    double denom = 0.0;
    for (Index b = 0; b < n; ++b) {
      if (!include_positive && b == i) continue;
      denom += std::exp(scores(i, b) - max_score);
    }
    result.value += max_score + std::log(denom) - scores(i, i);
    for (Index b = 0; b < n; ++b) {
      const bool in_denominator = include_positive || b != i;
      const double p =
          in_denominator ? std::exp(scores(i, b) - max_score) / denom : 0.0;
      coeff(i, b) = p - (b == i ? 1.0 : 0.0);
    }
  }

  // dsim(i,b)/dA_i = (tn_b - sim(i,b) * an_i) / |A_i|
  const Vector row_dot = (coeff.array() * sims.array()).rowwise().sum();
  result.grad_wrt_students =
      ((coeff * tn) - (an.array().colwise() * row_dot.array()).matrix());
  result.grad_wrt_students.array().colwise() /= (na * temperature).array();
  return result;
}

LossResult evaluate_loss(const LossConfig& config, const Matrix& A,
                         const Matrix& T) {
  if (config.kind == LossKind::CosineSimilarity) return cs_loss(A, T);
  return nce_loss(A, T, config.temperature, config.include_positive);
}

double finite_difference_check(const LossConfig& config, const Matrix& A,
                               const Matrix& T, double eps) {
  if (eps <= 0.0 || eps > 1e-3)
    throw ConfigError("finite_difference_check: eps must be in (0, 1e-3]");
  const LossResult analytic = evaluate_loss(config, A, T);

  double max_rel_error = 0.0;
  Matrix probe = A;
  for (Index i = 0; i < A.rows(); ++i) {
    for (Index j = 0; j < A.cols(); ++j) {
      probe(i, j) = A(i, j) + eps;
      const double up = evaluate_loss(config, probe, T).value;
      probe(i, j) = A(i, j) - eps;
      const double down = evaluate_loss(config, probe, T).value;
      probe(i, j) = A(i, j);
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic.grad_wrt_students(i, j);
      const double rel =
          std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), 1e-4);
      max_rel_error = std::max(max_rel_error, rel);
    }
  }
  return max_rel_error;
}

}  // namespace xmal
