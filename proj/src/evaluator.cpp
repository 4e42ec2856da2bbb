#include "xmal/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include "xmal/rng.hpp"

namespace xmal {

namespace {

struct FoldStats {
  Vector mean;
  Vector scale;  // population std, zero replaced by one
  double y_mean = 0.0;
};

FoldStats fit_fold_stats(const Matrix& X, const Vector& y,
                         const std::vector<Index>& rows) {
  FoldStats stats;
  stats.mean = Vector::Zero(X.cols());
  for (Index r : rows) stats.mean += X.row(r).transpose();
  stats.mean /= static_cast<double>(rows.size());

  Vector var = Vector::Zero(X.cols());
  for (Index r : rows)
    var += (X.row(r).transpose() - stats.mean).array().square().matrix();
  var /= static_cast<double>(rows.size());
  stats.scale = var.array().sqrt();
  for (Index j = 0; j < stats.scale.size(); ++j)
    if (stats.scale(j) == 0.0) stats.scale(j) = 1.0;

  double sum = 0.0;
  for (Index r : rows) sum += y(r);
  stats.y_mean = sum / static_cast<double>(rows.size());
  return stats;
}

Matrix standardized_rows(const Matrix& X, const std::vector<Index>& rows,
                         const FoldStats& stats) {
  Matrix out(static_cast<Index>(rows.size()), X.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out.row(static_cast<Index>(k)) =
        ((X.row(rows[k]).transpose() - stats.mean).array() /
         stats.scale.array())
            .transpose();
  }
  return out;
}

Vector centered_y(const Vector& y, const std::vector<Index>& rows,
                  const FoldStats& stats) {
  Vector out(static_cast<Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k)
    out(static_cast<Index>(k)) = y(rows[k]) - stats.y_mean;
  return out;
}

double fit_predict_mse(const Matrix& X, const Vector& y,
                       const std::vector<Index>& train_rows,
                       const std::vector<Index>& val_rows, double lambda) {
  const FoldStats stats = fit_fold_stats(X, y, train_rows);
  const Vector beta = ridge_solve(standardized_rows(X, train_rows, stats),
                                  centered_y(y, train_rows, stats), lambda);
  const Matrix xv = standardized_rows(X, val_rows, stats);
  double mse = 0.0;
  for (std::size_t k = 0; k < val_rows.size(); ++k) {
    const double pred = xv.row(static_cast<Index>(k)).dot(beta) + stats.y_mean;
    const double err = pred - y(val_rows[k]);
    mse += err * err;
  }
  return mse / static_cast<double>(val_rows.size());
}

std::string format_real(double v) {
  std::ostringstream out;
  out << std::setprecision(12) << v;
  return out.str();
}

}  // namespace

std::vector<PersonEmbedding> aggregate_person(
    const EmbeddingStore& segments,
    const std::map<std::string, std::string>& segment_to_person) {
  std::map<std::string, PersonEmbedding> by_person;
  for (std::size_t i = 0; i < segments.ids.size(); ++i) {
    const auto it = segment_to_person.find(segments.ids[i]);
    if (it == segment_to_person.end())
      throw DataError("aggregate_person: segment '" + segments.ids[i] +
                      "' has no person mapping");
    auto& entry = by_person[it->second];
    if (entry.n_segments == 0) {
      entry.person_id = it->second;
      entry.vector = Vector::Zero(segments.matrix.cols());
    }
    entry.vector += segments.matrix.row(static_cast<Index>(i)).transpose();
    ++entry.n_segments;
  }
  if (by_person.empty()) throw DataError("aggregate_person: no segments");

  std::vector<PersonEmbedding> out;
  out.reserve(by_person.size());
  for (auto& [person, entry] : by_person) {
    (void)person;
    entry.vector /= static_cast<double>(entry.n_segments);
    out.push_back(std::move(entry));
  }
  return out;  // std::map iteration is already sorted by person_id
}

Vector ridge_solve(const Matrix& X, const Vector& y, double lambda) {
  if (X.rows() != y.size())
    throw DataError("ridge_solve: row count mismatch");
  if (X.rows() == 0) throw DataError("ridge_solve: empty system");
  if (lambda <= 0.0) throw ConfigError("ridge_solve: lambda must be positive");
  Matrix gram = X.transpose() * X;
  gram.diagonal().array() += lambda;
  return gram.ldlt().solve(X.transpose() * y);
}

CVResult ridge_cv(const Matrix& X, const Vector& y,
                  const std::vector<std::string>& ids,
                  const RidgeCvConfig& config) {
  const Index n = X.rows();
  if (n != y.size() || static_cast<Index>(ids.size()) != n)
    throw DataError("ridge_cv: rows, outcomes, and ids must align");
  if (config.folds < 2) throw ConfigError("ridge_cv: need at least 2 folds");
  if (n < config.folds)
    throw DataError("ridge_cv: more folds than observations");
  if (config.lambda_grid.empty())
    throw ConfigError("ridge_cv: empty lambda grid");
  for (double lambda : config.lambda_grid)
    if (lambda <= 0.0)
      throw ConfigError("ridge_cv: lambda grid must be strictly positive");
  if (!X.allFinite() || !y.allFinite())
    throw NumericError("ridge_cv: non-finite input");

  std::map<std::string, Index> row_of;
  for (Index i = 0; i < n; ++i) {
    if (!row_of.emplace(ids[i], i).second)
      throw DataError("ridge_cv: duplicate id '" + ids[i] + "'");
  }

  // Fold assignment is a function of the id set and the seed, never of the
  // row order: shuffle the sorted ids, then cut into contiguous folds.
  std::vector<std::string> shuffled;
  shuffled.reserve(ids.size());
  for (const auto& [id, row] : row_of) {
    (void)row;
    shuffled.push_back(id);
  }
  Rng rng(config.seed);
  rng.shuffle(shuffled);

  CVResult result;
  result.predictions = Vector::Zero(n);

  const std::size_t k = static_cast<std::size_t>(config.folds);
  const std::size_t base = shuffled.size() / k;
  const std::size_t extra = shuffled.size() % k;
  std::size_t cursor = 0;
  for (std::size_t fold = 0; fold < k; ++fold) {
    const std::size_t fold_size = base + (fold < extra ? 1 : 0);
    std::vector<Index> test_rows, train_rows;
    std::vector<std::string> train_ids;
    for (std::size_t i = 0; i < shuffled.size(); ++i) {
      const bool in_fold = i >= cursor && i < cursor + fold_size;
      if (in_fold) {
        test_rows.push_back(row_of[shuffled[i]]);
      } else {
        train_rows.push_back(row_of[shuffled[i]]);
        train_ids.push_back(shuffled[i]);
      }
    }
    cursor += fold_size;

    // Inner 90/10 split of the training ids (in shuffled order) picks the
    // penalty; ties keep the first grid entry.
    double chosen = config.lambda_grid.front();
    if (train_rows.size() >= 2) {
      const std::size_t n_inner_val =
          std::max<std::size_t>(1, train_rows.size() / 10);
      std::vector<Index> inner_train(train_rows.begin(),
                                     train_rows.end() - n_inner_val);
      std::vector<Index> inner_val(train_rows.end() - n_inner_val,
                                   train_rows.end());
      double best_mse = std::numeric_limits<double>::infinity();
      for (double lambda : config.lambda_grid) {
        const double mse =
            fit_predict_mse(X, y, inner_train, inner_val, lambda);
        if (mse < best_mse) {
          best_mse = mse;
          chosen = lambda;
        }
      }
    }
    result.chosen_lambda.push_back(chosen);

    const FoldStats stats = fit_fold_stats(X, y, train_rows);
    const Vector beta = ridge_solve(standardized_rows(X, train_rows, stats),
                                    centered_y(y, train_rows, stats), chosen);
    const Matrix xt = standardized_rows(X, test_rows, stats);
    for (std::size_t i = 0; i < test_rows.size(); ++i) {
      result.predictions(test_rows[i]) =
          xt.row(static_cast<Index>(i)).dot(beta) + stats.y_mean;
    }
  }

  const PearsonResult corr = pearson(result.predictions, y);
  result.pearson_r = corr.r;
  result.degenerate = corr.degenerate;
  result.mse = mean_squared_error(result.predictions, y);
  return result;
}

ComparisonReport evaluate_models(
    const std::vector<std::pair<std::string, EmbeddingStore>>& stores,
    const std::map<std::string, std::string>& segment_to_person,
    const OutcomeTable& outcomes, const EvalConfig& config) {
  if (stores.empty()) throw DataError("evaluate_models: no stores");
  if (!config.baseline_model.empty()) {
    const bool known = std::any_of(
        stores.begin(), stores.end(),
        [&](const auto& s) { return s.first == config.baseline_model; });
    if (!known)
      throw ConfigError("evaluate_models: baseline model '" +
                        config.baseline_model + "' is not among the stores");
  }

  // Person-level aggregation per model, with a shared person set.
  std::map<std::string, std::vector<PersonEmbedding>> aggregated;
  std::set<std::string> person_set;
  for (const auto& [name, store] : stores) {
    auto people = aggregate_person(store, segment_to_person);
    std::set<std::string> persons;
    for (const auto& p : people) persons.insert(p.person_id);
    if (aggregated.empty()) {
      person_set = std::move(persons);
    } else if (persons != person_set) {
      throw DataError("evaluate_models: store '" + name +
                      "' covers a different person set");
    }
    aggregated[name] = std::move(people);
  }

  std::set<std::string> outcome_names;
  for (const auto& [person, scores] : outcomes) {
    (void)person;
    for (const auto& [name, value] : scores) {
      (void)value;
      outcome_names.insert(name);
    }
  }
  if (outcome_names.empty())
    throw DataError("evaluate_models: no outcomes");

  ComparisonReport report;
  report.baseline_model = config.baseline_model;
  for (const auto& [name, store] : stores) {
    (void)store;
    report.model_order.push_back(name);
  }

  for (const auto& outcome : outcome_names) {
    OutcomeEval eval;
    for (const auto& person : person_set) {
      const auto pit = outcomes.find(person);
      if (pit == outcomes.end()) continue;
      const auto oit = pit->second.find(outcome);
      if (oit == pit->second.end()) continue;
      eval.persons.push_back(person);
    }
    if (eval.persons.size() < static_cast<std::size_t>(config.cv.folds))
      throw DataError("evaluate_models: outcome '" + outcome +
                      "' has fewer persons than folds");
    eval.y_true.resize(static_cast<Index>(eval.persons.size()));
    for (std::size_t i = 0; i < eval.persons.size(); ++i)
      eval.y_true(static_cast<Index>(i)) =
          outcomes.at(eval.persons[i]).at(outcome);

    for (const auto& name : report.model_order) {
      const auto& people = aggregated[name];
      std::map<std::string, const PersonEmbedding*> by_id;
      for (const auto& p : people) by_id[p.person_id] = &p;
      Matrix X(static_cast<Index>(eval.persons.size()),
               people.front().vector.size());
      for (std::size_t i = 0; i < eval.persons.size(); ++i)
        X.row(static_cast<Index>(i)) =
            by_id.at(eval.persons[i])->vector.transpose();
      eval.per_model[name] = ridge_cv(X, eval.y_true, eval.persons, config.cv);
    }
    report.per_outcome[outcome] = std::move(eval);
  }

  for (const auto& model : report.model_order) {
    for (const auto& [outcome, eval] : report.per_outcome) {
      const CVResult& cv = eval.per_model.at(model);
      OutcomeMetrics row;
      row.model = model;
      row.outcome = outcome;
      row.pearson_r = cv.pearson_r;
      row.mse = cv.mse;
      row.degenerate = cv.degenerate;
      if (!config.baseline_model.empty() && model != config.baseline_model) {
        const CVResult& base = eval.per_model.at(config.baseline_model);
        const Vector err_model =
            (cv.predictions - eval.y_true).array().square();
        const Vector err_base =
            (base.predictions - eval.y_true).array().square();
        const TTestResult tt = paired_ttest(err_model, err_base);
        row.has_significance = true;
        row.p_vs_baseline = tt.p;
        row.significant =
            !tt.degenerate && tt.p < config.significance_alpha && cv.mse < base.mse;
      }
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

void save_metrics_csv(const ComparisonReport& report,
                      const std::filesystem::path& path) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write metrics: " + path.string());
  out << "model,outcome,pearson_r,mse,degenerate,p_vs_baseline,significant\n";
  for (const auto& row : report.rows) {
    out << row.model << ',' << row.outcome << ',' << format_real(row.pearson_r)
        << ',' << format_real(row.mse) << ',' << (row.degenerate ? 1 : 0) << ',';
    if (row.has_significance) out << format_real(row.p_vs_baseline);
    out << ',' << (row.significant ? 1 : 0) << '\n';
  }
}

void save_predictions_csv(const ComparisonReport& report,
                          const std::filesystem::path& path) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write predictions: " + path.string());
  out << "model,outcome,person_id,y_true,y_pred\n";
  for (const auto& model : report.model_order) {
    for (const auto& [outcome, eval] : report.per_outcome) {
      const CVResult& cv = eval.per_model.at(model);
      for (std::size_t i = 0; i < eval.persons.size(); ++i) {
        out << model << ',' << outcome << ',' << eval.persons[i] << ','
            << format_real(eval.y_true(static_cast<Index>(i))) << ','
            << format_real(cv.predictions(static_cast<Index>(i))) << '\n';
      }
    }
  }
}

std::string render_report_table(const ComparisonReport& report) {
  std::vector<std::string> outcomes;
  for (const auto& [name, eval] : report.per_outcome) {
    (void)eval;
    outcomes.push_back(name);
  }

  std::ostringstream out;
  out << std::left << std::setw(20) << "model";
  for (const auto& o : outcomes) {
    out << std::right << std::setw(12) << (o + " r") << std::setw(12)
        << (o + " mse");
  }
  out << '\n';

  for (const auto& model : report.model_order) {
    out << std::left << std::setw(20) << model;
    for (const auto& o : outcomes) {
      const CVResult& cv = report.per_outcome.at(o).per_model.at(model);
      bool significant = false;
      for (const auto& row : report.rows) {
        if (row.model == model && row.outcome == o) significant = row.significant;
      }
      std::ostringstream r_cell;
      r_cell << std::fixed << std::setprecision(3) << cv.pearson_r
             << (significant ? "*" : " ");
      std::ostringstream mse_cell;
      mse_cell << std::fixed << std::setprecision(4) << cv.mse;
      out << std::right << std::setw(12) << r_cell.str() << std::setw(12)
          << mse_cell.str();
    }
    out << '\n';
  }
  if (!report.baseline_model.empty()) {
    out << "(* marks p < 0.05 on squared errors vs " << report.baseline_model
        << ")\n";
  }
  return out.str();
}

}  // namespace xmal
