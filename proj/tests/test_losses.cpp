#include <doctest.h>

#include <cmath>

#include "xmal/losses.hpp"
#include "xmal/rng.hpp"

using namespace xmal;

namespace {

// Scalar re-implementations with plain loops, independent of the Eigen path.
double cosine_oracle(const Matrix& A, Index i, const Matrix& T, Index j) {
  double dot = 0.0, na = 0.0, nt = 0.0;
  for (Index k = 0; k < A.cols(); ++k) {
    dot += A(i, k) * T(j, k);
    na += A(i, k) * A(i, k);
    nt += T(j, k) * T(j, k);
  }
  return dot / (std::sqrt(na) * std::sqrt(nt));
}

double cs_oracle(const Matrix& A, const Matrix& T) {
  double total = 0.0;
  for (Index i = 0; i < A.rows(); ++i) total += 1.0 - cosine_oracle(A, i, T, i);
  return total;
}

double nce_oracle(const Matrix& A, const Matrix& T, double tau,
                  bool include_positive) {
  double total = 0.0;
  for (Index i = 0; i < A.rows(); ++i) {
    double denom = 0.0;
    for (Index b = 0; b < T.rows(); ++b) {
      if (!include_positive && b == i) continue;
      denom += std::exp(cosine_oracle(A, i, T, b) / tau);
    }
    total += -std::log(std::exp(cosine_oracle(A, i, T, i) / tau) / denom);
  }
  return total;
}

Matrix nonzero_batch(Rng& rng, Index n, Index d) {
  Matrix m = rng.normal_matrix(n, d);
  for (Index i = 0; i < n; ++i)
    if (m.row(i).norm() < 1e-3) m(i, 0) += 1.0;
  return m;
}

}  // namespace

TEST_SUITE("losses") {

TEST_CASE("cosine similarity anchors") {
  Vector e1(2), e2(2), neg(2);
  e1 << 1, 0;
  e2 << 0, 1;
  neg << -1, 0;
  CHECK(cosine_similarity(e1, e1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cosine_similarity(e1, e2) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(cosine_similarity(e1, neg) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK_THROWS_AS(cosine_similarity(Vector::Zero(2), e1), NumericError);
}

TEST_CASE("pairwise similarity anchors") {
  const Matrix identity = Matrix::Identity(2, 2);
  CHECK(pairwise_similarity(identity, identity).isApprox(identity, 1e-15));

  Matrix one_row(1, 3);
  one_row << 1, 2, 2;
  Matrix other(1, 3);
  other << 2, 1, 2;
  const Matrix sims = pairwise_similarity(one_row, other);
  REQUIRE(sims.rows() == 1);
  CHECK(sims(0, 0) == doctest::Approx(8.0 / 9.0).epsilon(1e-12));

  Matrix constant(3, 2);
  constant << 1, 1, 2, 2, 3, 3;
  CHECK(pairwise_similarity(constant, constant)
            .isApprox(Matrix::Ones(3, 3), 1e-12));
}

TEST_CASE("pairwise similarity reports the zero-norm row") {
  Matrix A = Matrix::Ones(2, 2);
  A.row(1).setZero();
  try {
    pairwise_similarity(A, Matrix::Ones(2, 2));
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    const std::string message = e.what();
    CHECK(message.find("student") != std::string::npos);
    CHECK(message.find("row 1") != std::string::npos);
  }
}

TEST_CASE("cs loss is zero on perfect alignment") {
  Rng rng(5);
  const Matrix A = nonzero_batch(rng, 3, 4);
  const LossResult result = cs_loss(A, A);
  CHECK(result.value == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(result.grad_wrt_students.norm() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("cs loss on orthogonal pairs") {
  Matrix A(2, 2), T(2, 2);
  A << 1, 0, 0, 1;
  T << 0, 1, 1, 0;
  CHECK(cs_loss(A, T).value == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("cs loss matches the scalar oracle") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 1 + static_cast<Index>(rng.below(6));
    const Index d = 2 + static_cast<Index>(rng.below(4));
    const Matrix A = nonzero_batch(rng, n, d);
    const Matrix T = nonzero_batch(rng, n, d);
    CHECK(cs_loss(A, T).value ==
          doctest::Approx(cs_oracle(A, T)).epsilon(1e-12));
  }
}

TEST_CASE("nce loss value is zero for a singleton batch") {
  Matrix A(1, 3), T(1, 3);
  A << 1, 2, 3;
  T << -1, 0, 1;
  CHECK(nce_loss(A, T, 0.1).value == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("all-equal batch costs log N per term") {
  const Index n = 5;
  Matrix A = Matrix::Ones(n, 3);
  const LossResult result = nce_loss(A, A, 0.1);
  CHECK(result.value / n == doctest::Approx(std::log(double(n))).epsilon(1e-9));
}

TEST_CASE("orthogonal two-batch anchor at tau 0.1") {
  const Matrix identity = Matrix::Identity(2, 2);
  const LossResult result = nce_loss(identity, identity, 0.1);
  // per-term value log(1 + e^-10)
  CHECK(result.value / 2 ==
        doctest::Approx(std::log1p(std::exp(-10.0))).epsilon(1e-9));
}

TEST_CASE("nce loss matches the scalar oracle, both denominators") {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 2 + static_cast<Index>(rng.below(6));
    const Index d = 2 + static_cast<Index>(rng.below(4));
    const Matrix A = nonzero_batch(rng, n, d);
    const Matrix T = nonzero_batch(rng, n, d);
    const double tau = 0.1 + rng.uniform();
    CHECK(nce_loss(A, T, tau, true).value ==
          doctest::Approx(nce_oracle(A, T, tau, true)).epsilon(1e-11));
    CHECK(nce_loss(A, T, tau, false).value ==
          doctest::Approx(nce_oracle(A, T, tau, false)).epsilon(1e-11));
  }
}

TEST_CASE("gradients match central finite differences") {
  Rng rng(29);
  const Matrix A = nonzero_batch(rng, 3, 4);
  const Matrix T = nonzero_batch(rng, 3, 4);
  CHECK(finite_difference_check({LossKind::CosineSimilarity, 0.1, true}, A, T,
                                1e-6) < 1e-4);

  const Matrix A5 = nonzero_batch(rng, 5, 4);
  const Matrix T5 = nonzero_batch(rng, 5, 4);
  CHECK(finite_difference_check({LossKind::Nce, 0.1, true}, A5, T5, 1e-6) <
        1e-4);
  CHECK(finite_difference_check({LossKind::Nce, 0.1, false}, A5, T5, 1e-6) <
        1e-4);
}

TEST_CASE("stationary point has a matching near-zero gradient") {
  Rng rng(31);
  const Matrix A = nonzero_batch(rng, 4, 3);
  CHECK(finite_difference_check({LossKind::CosineSimilarity, 0.1, true}, A, A,
                                1e-6) < 1e-4);
}

TEST_CASE("row scaling leaves both losses unchanged") {
  Rng rng(37);
  const Matrix A = nonzero_batch(rng, 4, 5);
  const Matrix T = nonzero_batch(rng, 4, 5);
  Matrix A2 = A;
  A2.row(1) *= 3.7;
  Matrix T2 = T;
  T2.row(2) *= 0.4;
  CHECK(cs_loss(A2, T2).value == doctest::Approx(cs_loss(A, T).value).epsilon(1e-9));
  CHECK(nce_loss(A2, T2, 0.1).value ==
        doctest::Approx(nce_loss(A, T, 0.1).value).epsilon(1e-9));
}

TEST_CASE("loss bounds") {
  Rng rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    const Index n = 2 + static_cast<Index>(rng.below(6));
    const Matrix A = nonzero_batch(rng, n, 4);
    const Matrix T = nonzero_batch(rng, n, 4);

    const double cs = cs_loss(A, T).value;
    CHECK(cs >= 0.0);
    CHECK(cs <= 2.0 * n);

    const double tau = 0.1;
    const double per_term = nce_loss(A, T, tau).value / n;
    CHECK(per_term > 0.0);
    CHECK(per_term < std::log(double(n)) + 2.0 / tau);

    // positive similarity maximal: per-term value at most log N
    const double aligned_per_term = nce_loss(A, A, tau).value / n;
    CHECK(aligned_per_term <= std::log(double(n)) + 1e-12);
  }
}

TEST_CASE("large temperature flattens the softmax toward log N") {
  Rng rng(43);
  const Index n = 6;
  const Matrix A = nonzero_batch(rng, n, 4);
  const Matrix T = nonzero_batch(rng, n, 4);
  const double per_term = nce_loss(A, T, 1e7).value / n;
  CHECK(per_term == doctest::Approx(std::log(double(n))).epsilon(1e-6));
}

TEST_CASE("input validation") {
  const Matrix ones = Matrix::Ones(2, 2);
  CHECK_THROWS_AS(nce_loss(ones, ones, 0.0), ConfigError);
  CHECK_THROWS_AS(nce_loss(ones, ones, -1.0), ConfigError);
  CHECK_THROWS_AS(nce_loss(Matrix::Ones(1, 2), Matrix::Ones(1, 2), 0.1, false),
                  ConfigError);
  CHECK_THROWS_AS(cs_loss(ones, Matrix::Ones(3, 2)), DataError);
  Matrix with_zero = ones;
  with_zero.row(0).setZero();
  CHECK_THROWS_AS(cs_loss(with_zero, ones), NumericError);
  CHECK_THROWS_AS(
      finite_difference_check({LossKind::Nce, 0.1, true}, ones, ones, 0.0),
      ConfigError);
}

}  // TEST_SUITE
