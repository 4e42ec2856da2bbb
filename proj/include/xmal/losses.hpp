#pragma once

#include <string>

#include "xmal/types.hpp"

namespace xmal {

enum class LossKind { CosineSimilarity, Nce };

LossKind parse_loss_kind(const std::string& name);
std::string to_string(LossKind kind);

struct LossConfig {
  LossKind kind = LossKind::Nce;
  double temperature = 0.1;
  // InfoNCE denominator membership. The standard form keeps the positive
  // pair in the denominator, which bounds every term below by zero; the
  // exclusive variant drops it and is unbounded below.
  bool include_positive = true;
};

struct LossResult {
  double value = 0.0;
  Matrix grad_wrt_students;  // N x d, derivative with respect to A only
};

// Cosine similarity between two vectors. Throws on a zero norm; callers that
// want per-row diagnostics use pairwise_similarity.
template <typename DerivedA, typename DerivedB>
double cosine_similarity(const Eigen::MatrixBase<DerivedA>& a,
                         const Eigen::MatrixBase<DerivedB>& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0)
    throw NumericError("cosine_similarity: zero-norm input");
  return (a.reshaped().cwiseProduct(b.reshaped())).sum() / (na * nb);
}

// Entry (i, j) = cosine_similarity(A.row(i), T.row(j)). Zero-norm rows are
// reported with their matrix ("student"/"target") and row index.
Matrix pairwise_similarity(const Matrix& A, const Matrix& T);

// L = sum_i (1 - sim(A_i, T_i)), with the analytic gradient in A. T is
// treated as constant (frozen teacher).
LossResult cs_loss(const Matrix& A, const Matrix& T);

// L = sum_i -log( exp(sim(A_i,T_i)/tau) / sum_b exp(sim(A_i,T_b)/tau) ),
// evaluated with max-subtraction inside the log-sum-exp. Duplicate target
// rows are ordinary negatives; identity is by batch index, not value.
LossResult nce_loss(const Matrix& A, const Matrix& T, double temperature,
                    bool include_positive = true);

LossResult evaluate_loss(const LossConfig& config, const Matrix& A,
                         const Matrix& T);

// Compares the analytic gradient of the configured loss against central
// finite differences, coordinate by coordinate, and returns the largest
// relative error |analytic - numeric| / max(|analytic| + |numeric|, 1e-4);
// the floor keeps near-zero gradients (stationary points) from amplifying
// rounding noise in the differences.
double finite_difference_check(const LossConfig& config, const Matrix& A,
                               const Matrix& T, double eps);

}  // namespace xmal
