#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "xmal/data_model.hpp"
#include "xmal/stats.hpp"
#include "xmal/types.hpp"

namespace xmal {

struct PersonEmbedding {
  std::string person_id;
  Vector vector;  // arithmetic mean of the person's segment embeddings
  int n_segments = 0;
};

// Groups segment embeddings by person and averages them. Output is sorted by
// person_id. Every segment id must appear in the segment -> person map.
std::vector<PersonEmbedding> aggregate_person(
    const EmbeddingStore& segments,
    const std::map<std::string, std::string>& segment_to_person);

// Plain ridge solution beta = (X^T X + lambda I)^-1 X^T y, no centering or
// scaling. The building block under ridge_cv and a direct oracle hook.
Vector ridge_solve(const Matrix& X, const Vector& y, double lambda);

struct RidgeCvConfig {
  int folds = 10;
  std::vector<double> lambda_grid = {1e-6, 1e-4, 1e-2, 1.0, 100.0, 10000.0};
  std::uint64_t seed = 0;
};

struct CVResult {
  Vector predictions;  // out-of-fold, aligned to the input rows
  double pearson_r = 0.0;
  double mse = 0.0;
  bool degenerate = false;            // constant outcome
  std::vector<double> chosen_lambda;  // per fold
};

// K-fold cross-validated ridge regression. Fold assignment is keyed on the
// ids (shuffled by the seed), so permuting the input rows together with their
// ids does not change the result. Per fold, y is centered and X columns are
// standardized with training-fold statistics (population stds; constant
// columns fall back to a unit scale), and lambda is picked from the grid on a
// 90/10 validation split of the training ids. Lambdas must be positive.
CVResult ridge_cv(const Matrix& X, const Vector& y,
                  const std::vector<std::string>& ids,
                  const RidgeCvConfig& config);

struct EvalConfig {
  RidgeCvConfig cv;
  std::string baseline_model;  // empty disables significance testing
  double significance_alpha = 0.05;
};

struct OutcomeMetrics {
  std::string model;
  std::string outcome;
  double pearson_r = 0.0;
  double mse = 0.0;
  bool degenerate = false;
  bool has_significance = false;  // baseline comparison was performed
  double p_vs_baseline = 1.0;     // paired t-test on squared errors
  bool significant = false;       // p < alpha and mse below the baseline's
};

struct OutcomeEval {
  std::vector<std::string> persons;  // sorted, common to every model
  Vector y_true;
  std::map<std::string, CVResult> per_model;
};

struct ComparisonReport {
  std::vector<std::string> model_order;
  std::string baseline_model;
  std::vector<OutcomeMetrics> rows;  // model-major, outcomes sorted
  std::map<std::string, OutcomeEval> per_outcome;
};

// The full person-level evaluation: mean-aggregate each model's segment
// embeddings, run ridge_cv per outcome, and mark models whose squared errors
// improve significantly on the named baseline. All stores must cover the
// same persons.
ComparisonReport evaluate_models(
    const std::vector<std::pair<std::string, EmbeddingStore>>& stores,
    const std::map<std::string, std::string>& segment_to_person,
    const OutcomeTable& outcomes, const EvalConfig& config);

// metrics.csv: model,outcome,pearson_r,mse,degenerate,p_vs_baseline,significant
void save_metrics_csv(const ComparisonReport& report,
                      const std::filesystem::path& path);
// predictions.csv: model,outcome,person_id,y_true,y_pred
void save_predictions_csv(const ComparisonReport& report,
                          const std::filesystem::path& path);
// Human-readable model x outcome table with r / mse columns and significance
// daggers next to r.
std::string render_report_table(const ComparisonReport& report);

}  // namespace xmal
