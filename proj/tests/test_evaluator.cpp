#include <doctest.h>

#include <cmath>
#include <numbers>

#include "xmal/evaluator.hpp"
#include "xmal/rng.hpp"
#include "testutil.hpp"

using namespace xmal;

namespace {

// Student-t two-sided p by direct numeric integration of the density,
// independent of the incomplete-beta path.
double t_pvalue_oracle(double t, double dof) {
  const double half = (dof + 1.0) / 2.0;
  const double log_norm = std::lgamma(half) - std::lgamma(dof / 2.0) -
                          0.5 * std::log(dof * std::numbers::pi);
  const double norm = std::exp(log_norm);
  const auto pdf = [&](double x) {
    return norm * std::pow(1.0 + x * x / dof, -half);
  };
  // Simpson over [-|t|, |t|]
  const double hi = std::abs(t);
  const int steps = 20000;
  const double h = 2.0 * hi / steps;
  double sum = pdf(-hi) + pdf(hi);
  for (int i = 1; i < steps; ++i)
    sum += pdf(-hi + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return 1.0 - sum * h / 3.0;
}

EmbeddingStore store_from(const std::vector<std::string>& ids,
                          const Matrix& matrix) {
  return {ids, matrix};
}

}  // namespace

TEST_SUITE("evaluator") {

TEST_CASE("aggregate_person averages and sorts") {
  EmbeddingStore store;
  store.ids = {"s1", "s2", "s3"};
  store.matrix = Matrix(3, 2);
  store.matrix << 1, 2, 3, 4, 5, 6;
  const std::map<std::string, std::string> seg2person = {
      {"s1", "p2"}, {"s2", "p2"}, {"s3", "p1"}};
  const auto people = aggregate_person(store, seg2person);
  REQUIRE(people.size() == 2);
  CHECK(people[0].person_id == "p1");
  CHECK(people[0].n_segments == 1);
  CHECK(people[0].vector == Vector(store.matrix.row(2).transpose()));
  CHECK(people[1].person_id == "p2");
  CHECK(people[1].n_segments == 2);
  Vector expected(2);
  expected << 2, 3;
  CHECK(people[1].vector == expected);

  CHECK_THROWS_AS(aggregate_person(store, {{"s1", "p1"}}), DataError);
}

TEST_CASE("ridge_solve closed-form oracle") {
  Matrix X(3, 1);
  X << 1, 2, 3;
  Vector y(3);
  y << 1, 2, 3;
  const Vector beta = ridge_solve(X, y, 1.0);
  CHECK(beta(0) == doctest::Approx(14.0 / 15.0).epsilon(1e-12));
  CHECK_THROWS_AS(ridge_solve(X, y, 0.0), ConfigError);
}

TEST_CASE("ridge_cv recovers an exact linear relation") {
  Matrix X(4, 1);
  X << 1, 2, 3, 4;
  Vector y(4);
  y << 1, 2, 3, 4;
  RidgeCvConfig config;
  config.folds = 2;
  config.lambda_grid = {1e-6};
  config.seed = 3;
  const CVResult result = ridge_cv(X, y, {"a", "b", "c", "d"}, config);
  CHECK(result.pearson_r > 0.9999);
  CHECK(result.mse < 1e-6);
  CHECK(result.chosen_lambda == std::vector<double>{1e-6, 1e-6});
}

TEST_CASE("constant outcome is flagged degenerate") {
  Rng rng(5);
  const Matrix X = rng.normal_matrix(8, 2);
  const Vector y = Vector::Constant(8, 3.0);
  std::vector<std::string> ids;
  for (int i = 0; i < 8; ++i) ids.push_back("p" + std::to_string(i));
  RidgeCvConfig config;
  config.folds = 2;
  const CVResult result = ridge_cv(X, y, ids, config);
  CHECK(result.degenerate);
  CHECK(result.pearson_r == 0.0);
  CHECK(result.mse >= 0.0);
}

TEST_CASE("ridge_cv input validation") {
  Rng rng(7);
  const Matrix X = rng.normal_matrix(4, 2);
  const Vector y = rng.normal_matrix(4, 1);
  const std::vector<std::string> ids = {"a", "b", "c", "d"};
  RidgeCvConfig config;
  config.folds = 5;
  CHECK_THROWS_AS(ridge_cv(X, y, ids, config), DataError);
  config.folds = 1;
  CHECK_THROWS_AS(ridge_cv(X, y, ids, config), ConfigError);
  config.folds = 2;
  config.lambda_grid = {0.0};
  CHECK_THROWS_AS(ridge_cv(X, y, ids, config), ConfigError);
  config.lambda_grid = {1.0};
  CHECK_THROWS_AS(ridge_cv(X, y, {"a", "a", "b", "c"}, config), DataError);
}

TEST_CASE("out-of-fold discipline is invariant to row permutation") {
  Rng rng(11);
  const Index n = 20;
  const Matrix X = rng.normal_matrix(n, 3);
  Vector y = X * Vector::Ones(3) + 0.1 * rng.normal_matrix(n, 1);
  std::vector<std::string> ids;
  for (Index i = 0; i < n; ++i) ids.push_back("p" + std::to_string(i));

  RidgeCvConfig config;
  config.folds = 5;
  config.seed = 12;
  const CVResult base = ridge_cv(X, y, ids, config);

  // rotate rows by 7 together with their ids
  Matrix Xp(n, 3);
  Vector yp(n);
  std::vector<std::string> idsp(n);
  for (Index i = 0; i < n; ++i) {
    const Index j = (i + 7) % n;
    Xp.row(i) = X.row(j);
    yp(i) = y(j);
    idsp[i] = ids[j];
  }
  const CVResult permuted = ridge_cv(Xp, yp, idsp, config);
  CHECK(permuted.pearson_r == doctest::Approx(base.pearson_r).epsilon(1e-9));
  CHECK(permuted.mse == doctest::Approx(base.mse).epsilon(1e-9));
  for (Index i = 0; i < n; ++i)
    CHECK(permuted.predictions(i) ==
          doctest::Approx(base.predictions((i + 7) % n)).epsilon(1e-9));
}

TEST_CASE("huge penalties drive predictions to the fold mean") {
  Rng rng(13);
  const Index n = 30;
  const Matrix X = rng.normal_matrix(n, 2);
  const Vector y = X * Vector::Ones(2);
  std::vector<std::string> ids;
  for (Index i = 0; i < n; ++i) ids.push_back("p" + std::to_string(i));

  RidgeCvConfig small_lambda;
  small_lambda.folds = 5;
  small_lambda.lambda_grid = {1e-6};
  RidgeCvConfig big_lambda = small_lambda;
  big_lambda.lambda_grid = {1e9};

  const CVResult precise = ridge_cv(X, y, ids, small_lambda);
  const CVResult shrunk = ridge_cv(X, y, ids, big_lambda);
  CHECK(shrunk.pearson_r < precise.pearson_r);
  // predictions collapse onto the per-fold training means of y
  const double prediction_spread =
      shrunk.predictions.maxCoeff() - shrunk.predictions.minCoeff();
  const double y_spread = y.maxCoeff() - y.minCoeff();
  CHECK(prediction_spread < 0.25 * y_spread);
  CHECK(shrunk.mse > precise.mse);
}

TEST_CASE("noiseless linear task reaches r >= 0.999 with the default grid") {
  Rng rng(17);
  const Index n = 40;
  const Matrix X = rng.normal_matrix(n, 5);
  const Vector beta = rng.normal_matrix(5, 1);
  const Vector y = X * beta;
  std::vector<std::string> ids;
  for (Index i = 0; i < n; ++i) ids.push_back("p" + std::to_string(i));
  RidgeCvConfig config;  // k = 10, defaults
  const CVResult result = ridge_cv(X, y, ids, config);
  CHECK(result.pearson_r >= 0.999);
}

TEST_CASE("pearson anchors") {
  Vector x(3), y(3);
  x << 1, 2, 3;
  y << 2, 4, 6;
  CHECK(pearson(x, y).r == doctest::Approx(1.0).epsilon(1e-15));
  y << 6, 4, 2;
  CHECK(pearson(x, y).r == doctest::Approx(-1.0).epsilon(1e-15));

  Vector x4(4), y4(4);
  x4 << 1, 2, 1, 2;
  y4 << 1, 1, 2, 2;
  CHECK(pearson(x4, y4).r == doctest::Approx(0.0).epsilon(1e-15));

  const PearsonResult degenerate = pearson(Vector::Ones(3), x);
  CHECK(degenerate.degenerate);
  CHECK(degenerate.r == 0.0);
  CHECK_THROWS_AS(pearson(Vector::Ones(1), Vector::Ones(1)), DataError);
}

TEST_CASE("pearson is invariant under positive affine transforms") {
  Rng rng(19);
  const Vector x = rng.normal_matrix(12, 1);
  const Vector y = rng.normal_matrix(12, 1);
  const double base = pearson(x, y).r;
  const Vector x_affine = (2.5 * x.array() + 3.0).matrix();
  const Vector y_affine = (0.1 * y.array() - 7.0).matrix();
  CHECK(pearson(x_affine, y).r == doctest::Approx(base).epsilon(1e-12));
  CHECK(pearson(x, y_affine).r == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("incomplete beta agrees with closed forms") {
  for (double x : {0.05, 0.2, 0.5, 0.85}) {
    for (double b : {0.5, 1.0, 2.0, 5.0}) {
      CHECK(regularized_incomplete_beta(1.0, b, x) ==
            doctest::Approx(1.0 - std::pow(1.0 - x, b)).epsilon(1e-10));
      CHECK(regularized_incomplete_beta(b, 1.0, x) ==
            doctest::Approx(std::pow(x, b)).epsilon(1e-10));
      CHECK(regularized_incomplete_beta(b, 2.0 * b, x) ==
            doctest::Approx(1.0 - regularized_incomplete_beta(2.0 * b, b,
                                                              1.0 - x))
                .epsilon(1e-10));
    }
  }
  CHECK(regularized_incomplete_beta(2.0, 3.0, 0.0) == 0.0);
  CHECK(regularized_incomplete_beta(2.0, 3.0, 1.0) == 1.0);
}

TEST_CASE("paired t-test anchors") {
  Vector a(3), zero(3);
  a << 1, 1, -2;
  zero.setZero();
  const TTestResult balanced = paired_ttest(a, zero);
  CHECK(balanced.t == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(balanced.p == doctest::Approx(1.0).epsilon(1e-12));

  Vector d(3);
  d << 1, 2, 3;
  const TTestResult result = paired_ttest(d, zero);
  CHECK(result.t == doctest::Approx(2.0 * std::sqrt(3.0)).epsilon(1e-12));
  CHECK(result.p == doctest::Approx(0.07417990022744847).epsilon(1e-6));
  CHECK(result.p == doctest::Approx(t_pvalue_oracle(result.t, 2.0)).epsilon(1e-6));

  const TTestResult degenerate = paired_ttest(Vector::Constant(3, 2.0), zero);
  CHECK(degenerate.degenerate);
}

TEST_CASE("evaluate_models on identical stores marks nothing significant") {
  Rng rng(23);
  const Index segments = 24;
  std::vector<std::string> ids;
  std::map<std::string, std::string> seg2person;
  OutcomeTable outcomes;
  for (Index i = 0; i < segments; ++i) {
    ids.push_back("s" + std::to_string(i));
    const std::string person = "p" + std::to_string(i / 2);
    seg2person[ids.back()] = person;
    outcomes[person]["score"] = rng.normal();
  }
  const Matrix embeddings = rng.normal_matrix(segments, 3);
  const EmbeddingStore store = store_from(ids, embeddings);

  EvalConfig config;
  config.cv.folds = 3;
  config.baseline_model = "first";
  const ComparisonReport report = evaluate_models(
      {{"first", store}, {"second", store}}, seg2person, outcomes, config);
  REQUIRE(report.rows.size() == 2);
  CHECK(report.rows[0].pearson_r == report.rows[1].pearson_r);
  CHECK(report.rows[0].mse == report.rows[1].mse);
  for (const auto& row : report.rows) CHECK_FALSE(row.significant);
}

TEST_CASE("informative store beats noise significantly") {
  Rng rng(29);
  const int persons = 30;
  std::vector<std::string> ids;
  std::map<std::string, std::string> seg2person;
  OutcomeTable outcomes;
  Matrix exact(2 * persons, 2);
  const Matrix noise = rng.normal_matrix(2 * persons, 2);
  for (int p = 0; p < persons; ++p) {
    const std::string person = "p" + std::to_string(p);
    const double score = rng.normal();
    outcomes[person]["score"] = score;
    for (int s = 0; s < 2; ++s) {
      const Index row = 2 * p + s;
      ids.push_back("s" + std::to_string(row));
      seg2person[ids.back()] = person;
      exact(row, 0) = score + 0.01 * rng.normal();
      exact(row, 1) = -score;
    }
  }

  EvalConfig config;
  config.cv.folds = 5;
  config.baseline_model = "noise";
  const ComparisonReport report = evaluate_models(
      {{"noise", store_from(ids, noise)}, {"exact", store_from(ids, exact)}},
      seg2person, outcomes, config);

  const auto& exact_row = report.rows[1];
  REQUIRE(exact_row.model == "exact");
  CHECK(exact_row.pearson_r > 0.95);
  CHECK(exact_row.significant);
  CHECK(exact_row.p_vs_baseline < 0.05);
}

TEST_CASE("single model and outcome produce a one-row table") {
  Rng rng(31);
  std::vector<std::string> ids;
  std::map<std::string, std::string> seg2person;
  OutcomeTable outcomes;
  for (int i = 0; i < 6; ++i) {
    ids.push_back("s" + std::to_string(i));
    seg2person[ids.back()] = "p" + std::to_string(i);
    outcomes["p" + std::to_string(i)]["score"] = rng.normal();
  }
  EvalConfig config;
  config.cv.folds = 2;
  const ComparisonReport report = evaluate_models(
      {{"only", store_from(ids, rng.normal_matrix(6, 2))}}, seg2person,
      outcomes, config);
  REQUIRE(report.rows.size() == 1);
  CHECK_FALSE(report.rows[0].has_significance);
}

TEST_CASE("person set mismatch is rejected") {
  Rng rng(37);
  const std::vector<std::string> ids = {"s0", "s1"};
  const std::map<std::string, std::string> seg2person = {{"s0", "p0"},
                                                         {"s1", "p1"}};
  OutcomeTable outcomes;
  outcomes["p0"]["score"] = 1.0;
  outcomes["p1"]["score"] = 2.0;

  const EmbeddingStore full = store_from(ids, rng.normal_matrix(2, 2));
  const EmbeddingStore partial = store_from({"s0"}, rng.normal_matrix(1, 2));
  EvalConfig config;
  config.cv.folds = 2;
  CHECK_THROWS_AS(evaluate_models({{"full", full}, {"partial", partial}},
                                  seg2person, outcomes, config),
                  DataError);
}

TEST_CASE("report renderers write every row") {
  Rng rng(41);
  std::vector<std::string> ids;
  std::map<std::string, std::string> seg2person;
  OutcomeTable outcomes;
  for (int i = 0; i < 8; ++i) {
    ids.push_back("s" + std::to_string(i));
    const std::string person = "p" + std::to_string(i);
    seg2person[ids.back()] = person;
    outcomes[person]["score"] = rng.normal();
    outcomes[person]["anger"] = rng.normal();
  }
  EvalConfig config;
  config.cv.folds = 2;
  config.baseline_model = "a";
  const ComparisonReport report = evaluate_models(
      {{"a", store_from(ids, rng.normal_matrix(8, 2))},
       {"b", store_from(ids, rng.normal_matrix(8, 2))}},
      seg2person, outcomes, config);

  test::TempDir dir("report");
  save_metrics_csv(report, dir / "metrics.csv");
  save_predictions_csv(report, dir / "predictions.csv");
  const std::string metrics = test::slurp(dir / "metrics.csv");
  CHECK(metrics.find("model,outcome,") == 0);
  CHECK(metrics.find("a,anger,") != std::string::npos);
  CHECK(metrics.find("b,score,") != std::string::npos);

  const std::string predictions = test::slurp(dir / "predictions.csv");
  CHECK(predictions.find("b,score,p7,") != std::string::npos);

  const std::string table = render_report_table(report);
  CHECK(table.find("anger r") != std::string::npos);
  CHECK(table.find("score mse") != std::string::npos);
}

}  // TEST_SUITE
