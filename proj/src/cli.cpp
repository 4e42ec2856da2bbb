#include "xmal/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "xmal/analysis.hpp"
#include "xmal/data_model.hpp"
#include "xmal/evaluator.hpp"
#include "xmal/losses.hpp"
#include "xmal/psych_features.hpp"
#include "xmal/run_config.hpp"
#include "xmal/stats.hpp"
#include "xmal/student.hpp"
#include "xmal/synthetic.hpp"
#include "xmal/teacher_targets.hpp"
#include "xmal/trainer.hpp"
#include "xmal/types.hpp"

namespace xmal::cli {

namespace {

namespace fs = std::filesystem;

enum class LogLevel { Silent = 0, Error = 1, Warn = 2, Info = 3, Debug = 4 };

LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("XMAL_LOG");
    if (!env) return LogLevel::Info;
    const std::string value(env);
    if (value == "silent") return LogLevel::Silent;
    if (value == "error") return LogLevel::Error;
    if (value == "warn") return LogLevel::Warn;
    if (value == "debug") return LogLevel::Debug;
    return LogLevel::Info;
  }();
  return level;
}

void log_info(const std::string& message) {
  if (log_level() >= LogLevel::Info) std::cerr << "[info] " << message << '\n';
}

void log_warn(const std::string& message) {
  if (log_level() >= LogLevel::Warn) std::cerr << "[warn] " << message << '\n';
}

struct Options {
  std::string config_path;
  std::string out_dir;
  std::int64_t seed = 0;
  bool seed_set = false;
};

RunConfig effective_config(const Options& options) {
  RunConfig config;
  if (!options.config_path.empty()) {
    if (!fs::exists(options.config_path))
      throw ConfigError("config file does not exist: " + options.config_path);
    config = load_run_config(options.config_path);
  }
  if (options.seed_set) {
    config.seed = static_cast<std::uint64_t>(options.seed);
    config.synth.seed = static_cast<std::uint64_t>(options.seed);
  }
  if (!options.out_dir.empty()) config.paths.out_dir = options.out_dir;
  config.train.seed = config.seed;
  config.eval.cv.seed = config.seed;
  return config;
}

// Output paths fall back to <out_dir>/<name>; inputs must be configured.
std::string resolve_output(const RunConfig& config, const std::string& configured,
                           const std::string& fallback_name) {
  if (!configured.empty()) return configured;
  if (config.paths.out_dir.empty())
    throw ConfigError("no path configured for " + fallback_name +
                      " and no --out / paths.out_dir to place it under");
  return (fs::path(config.paths.out_dir) / fallback_name).string();
}

std::string require_input(const std::string& path, const std::string& what) {
  if (path.empty())
    throw ConfigError("config is missing the " + what + " path");
  if (!fs::exists(path)) throw DataError("missing " + what + ": " + path);
  return path;
}

// Pipeline intermediates default to the same <out_dir>/<name> location on the
// read side that they were written to.
std::string resolve_intermediate(const RunConfig& config,
                                 const std::string& configured,
                                 const std::string& fallback_name,
                                 const std::string& what) {
  if (!configured.empty()) return require_input(configured, what);
  if (config.paths.out_dir.empty())
    throw ConfigError("config is missing the " + what + " path");
  return require_input(
      (fs::path(config.paths.out_dir) / fallback_name).string(), what);
}

// Like resolve_intermediate, but returns "" when nothing is configured and
// the fallback does not exist. For optional analysis inputs.
std::string try_intermediate(const RunConfig& config,
                             const std::string& configured,
                             const std::string& fallback_name,
                             const std::string& what) {
  if (!configured.empty()) return require_input(configured, what);
  if (config.paths.out_dir.empty()) return "";
  const auto fallback = fs::path(config.paths.out_dir) / fallback_name;
  return fs::exists(fallback) ? fallback.string() : "";
}

std::map<std::string, std::string> segment_person_map(
    const std::vector<SegmentRecord>& records) {
  std::map<std::string, std::string> out;
  for (const auto& rec : records) out[rec.segment_id] = rec.person_id;
  return out;
}

Matrix rows_for_ids(const EmbeddingStore& store,
                    const std::vector<std::string>& ids) {
  std::map<std::string, Index> row_of;
  for (std::size_t i = 0; i < store.ids.size(); ++i)
    row_of[store.ids[i]] = static_cast<Index>(i);
  Matrix out(static_cast<Index>(ids.size()), store.matrix.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto it = row_of.find(ids[i]);
    if (it == row_of.end())
      throw DataError("store is missing segment '" + ids[i] + "'");
    out.row(static_cast<Index>(i)) = store.matrix.row(it->second);
  }
  return out;
}

std::string format_real(double v) {
  std::ostringstream out;
  out << std::setprecision(12) << v;
  return out.str();
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

void cmd_synth(const RunConfig& config) {
  if (config.paths.out_dir.empty())
    throw ConfigError("synth needs --out or paths.out_dir");
  const SyntheticDataset dataset = generate_synthetic(config.synth);
  write_synthetic(dataset, config.paths.out_dir);
  log_info("synth: wrote " + std::to_string(dataset.records.size()) +
           " segments to " + config.paths.out_dir);
}

void cmd_extract_psych(const RunConfig& config) {
  const auto manifest_path = require_input(config.paths.manifest, "manifest");
  const auto lexicon_path = require_input(config.paths.lexicon, "lexicon");
  const auto records = load_manifest(manifest_path);
  const Lexicon lexicon = load_lexicon(lexicon_path);

  EmbeddingStore store;
  std::vector<std::string> texts;
  for (const auto& rec : records) {
    store.ids.push_back(rec.segment_id);
    texts.push_back(rec.text);
  }
  store.matrix = extract_psych_matrix(texts, lexicon);
  const auto out = resolve_output(config, config.paths.psych_store, "psych.bin");
  write_store(store, out);
  log_info("extract-psych: wrote " + std::to_string(store.ids.size()) +
           " rows to " + out);
}

void cmd_build_targets(const RunConfig& config) {
  const auto manifest_path = require_input(config.paths.manifest, "manifest");
  const auto teacher_path =
      require_input(config.paths.teacher_store, "teacher store");
  const auto records = load_manifest(manifest_path);
  const EmbeddingStore teacher = read_store(teacher_path);

  std::vector<std::string> ids;
  for (const auto& rec : records) ids.push_back(rec.segment_id);
  const Matrix teacher_rows = rows_for_ids(teacher, ids);

  EmbeddingStore targets;
  targets.ids = ids;
  if (config.target.mode == AlignmentMode::Semantic) {
    targets.matrix = build_target_matrix(teacher_rows, Matrix(), config.target);
  } else {
    const auto psych_path = resolve_intermediate(
        config, config.paths.psych_store, "psych.bin", "psych store");
    const EmbeddingStore psych = read_store(psych_path);
    const Matrix psych_rows = rows_for_ids(psych, ids);

    // The scaler is fit on the training split only, then applied everywhere.
    const DatasetSplit split = split_dataset(ids, config.split, config.seed);
    const Matrix teacher_train = rows_for_ids(teacher, split.train);
    const Matrix psych_train = rows_for_ids(psych, split.train);
    const ScalerParams scaler = fit_scaler(teacher_train, psych_train);
    save_scaler(scaler,
                resolve_output(config, config.paths.scaler, "scaler.json"));

    const Matrix psych_scaled = standardize_psych_matrix(psych_rows, scaler);
    targets.matrix =
        build_target_matrix(teacher_rows, psych_scaled, config.target);
  }

  const auto out =
      resolve_output(config, config.paths.targets_store, "targets.bin");
  write_store(targets, out);
  log_info("build-targets: mode " + to_string(config.target.mode) + ", wrote " +
           out);
}

StudentModel model_for_targets(const RunConfig& config, Index feature_dim,
                               Index target_dim_value) {
  Index d_model = target_dim_value;
  if (config.target.mode == AlignmentMode::Projection) {
    d_model -= kPsychDims;
    if (d_model < 1)
      throw DataError("targets store dim is too small for projection mode");
  }
  auto backbone = std::make_shared<SyntheticBackbone>(
      feature_dim, d_model, config.model.backbone_init_scale);
  return StudentModel(std::move(backbone), config.target,
                      config.model.tanh_scope);
}

std::vector<TrainExample> pairs_for_ids(
    const std::vector<SegmentRecord>& records, const EmbeddingStore& targets,
    const std::vector<std::string>& ids) {
  std::map<std::string, const SegmentRecord*> by_id;
  for (const auto& rec : records) by_id[rec.segment_id] = &rec;
  std::map<std::string, Index> target_row;
  for (std::size_t i = 0; i < targets.ids.size(); ++i)
    target_row[targets.ids[i]] = static_cast<Index>(i);

  std::vector<TrainExample> pairs;
  for (const auto& id : ids) {
    const auto rec = by_id.find(id);
    const auto row = target_row.find(id);
    if (rec == by_id.end()) throw DataError("manifest is missing segment " + id);
    if (row == target_row.end())
      throw DataError("targets store is missing segment " + id);
    pairs.push_back({rec->second->acoustic_features,
                     targets.matrix.row(row->second).transpose()});
  }
  return pairs;
}

void cmd_train(const RunConfig& config) {
  const auto manifest_path = require_input(config.paths.manifest, "manifest");
  const auto targets_path = resolve_intermediate(
      config, config.paths.targets_store, "targets.bin", "targets store");
  const auto records = load_manifest(manifest_path);
  if (records.empty()) throw DataError("manifest has no segments");
  const EmbeddingStore targets = read_store(targets_path);

  std::vector<std::string> ids;
  for (const auto& rec : records) ids.push_back(rec.segment_id);
  const DatasetSplit split = split_dataset(ids, config.split, config.seed);
  if (split.train.empty() || split.val.empty())
    throw DataError("split produced an empty train or val bucket");

  StudentModel model = model_for_targets(
      config, records.front().acoustic_features.cols(), targets.matrix.cols());
  model.init_parameters(config.seed);

  const auto train_pairs = pairs_for_ids(records, targets, split.train);
  const auto val_pairs = pairs_for_ids(records, targets, split.val);
  const TrainHistory history = train(model, train_pairs, val_pairs, config.train);

  const auto checkpoint_dir =
      resolve_output(config, config.paths.checkpoint_dir, "checkpoint");
  save_checkpoint(model, checkpoint_dir);
  save_history(history,
               resolve_output(config, config.paths.history, "history.csv"));
  std::ostringstream summary;
  summary << "train: " << history.train_loss.size() << " epochs";
  if (!history.val_cosine.empty())
    summary << ", best val cosine "
            << format_real(history.val_cosine[history.best_epoch]) << " at epoch "
            << history.best_epoch + 1;
  log_info(summary.str());
}

void cmd_embed(const RunConfig& config) {
  const auto manifest_path = require_input(config.paths.manifest, "manifest");
  const auto checkpoint_dir = resolve_intermediate(
      config, config.paths.checkpoint_dir, "checkpoint", "checkpoint directory");
  const auto records = load_manifest(manifest_path);
  const StudentModel model = load_checkpoint(checkpoint_dir);

  EmbeddingStore store;
  store.matrix.resize(static_cast<Index>(records.size()), model.output_dim());
  for (std::size_t i = 0; i < records.size(); ++i) {
    store.ids.push_back(records[i].segment_id);
    store.matrix.row(static_cast<Index>(i)) =
        model.encode(records[i].acoustic_features).transpose();
  }
  const auto out =
      resolve_output(config, config.paths.student_store, "student.bin");
  write_store(store, out);
  log_info("embed: wrote " + std::to_string(store.ids.size()) + " rows to " +
           out);
}

ComparisonReport run_eval(const RunConfig& config,
                          const std::vector<SegmentRecord>& records,
                          const std::vector<std::pair<std::string, EmbeddingStore>>&
                              stores) {
  const auto outcomes_path = require_input(config.paths.outcomes, "outcomes");
  const OutcomeTable outcomes = load_outcomes(outcomes_path);

  // Persons with outcomes but no segments cannot enter the evaluation.
  std::set<std::string> covered;
  for (const auto& rec : records) covered.insert(rec.person_id);
  for (const PersonRecord& person : outcome_records(outcomes)) {
    if (!covered.count(person.person_id))
      log_warn("outcomes person '" + person.person_id +
               "' has no segment in the manifest; skipped");
  }

  return evaluate_models(stores, segment_person_map(records), outcomes,
                         config.eval);
}

void cmd_eval(const RunConfig& config) {
  const auto manifest_path = require_input(config.paths.manifest, "manifest");
  if (config.paths.eval_stores.empty())
    throw ConfigError("eval needs paths.eval_stores entries");
  const auto records = load_manifest(manifest_path);

  std::vector<std::pair<std::string, EmbeddingStore>> stores;
  for (const auto& ref : config.paths.eval_stores) {
    stores.emplace_back(ref.name,
                        read_store(require_input(ref.store, ref.name + " store")));
  }

  const ComparisonReport report = run_eval(config, records, stores);
  save_metrics_csv(report, resolve_output(config, "", "metrics.csv"));
  save_predictions_csv(
      report, resolve_output(config, config.paths.predictions, "predictions.csv"));
  const std::string table = render_report_table(report);
  {
    const auto path = resolve_output(config, "", "report.txt");
    std::ofstream out(path);
    if (!out) throw DataError("cannot write report: " + path);
    out << table;
  }
  std::cout << table;
}

std::map<std::string, double> predictions_by_person(
    const fs::path& predictions_path, const std::string& model,
    const std::string& outcome) {
  std::ifstream in(predictions_path);
  if (!in)
    throw DataError("cannot open predictions: " + predictions_path.string());
  std::map<std::string, double> out;
  std::set<std::string> models_seen;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream stream(line);
    std::string field;
    while (std::getline(stream, field, ',')) fields.push_back(field);
    if (fields.size() != 5)
      throw DataError("malformed predictions line: " + line);
    models_seen.insert(fields[0]);
    if (!model.empty() && fields[0] != model) continue;
    if (fields[1] != outcome) continue;
    out[fields[2]] = std::stod(fields[4]);
  }
  if (model.empty() && models_seen.size() > 1)
    throw ConfigError(
        "predictions cover several models; set analysis.prediction_model");
  if (out.empty())
    throw DataError("no predictions for outcome '" + outcome + "'" +
                    (model.empty() ? "" : " and model '" + model + "'"));
  return out;
}

void cmd_analyze(const RunConfig& config) {
  const auto student_path = resolve_intermediate(
      config, config.paths.student_store, "student.bin", "student store");
  const auto teacher_path =
      require_input(config.paths.teacher_store, "teacher store");
  const EmbeddingStore student = read_store(student_path);
  const EmbeddingStore teacher = read_store(teacher_path);
  if (student.matrix.cols() != teacher.matrix.cols())
    throw DataError(
        "student and teacher stores have different dims; for projection-mode "
        "students point teacher_store at the targets store");

  // Modality overlap (embedding geometry before/after alignment).
  const OverlapReport overlap = overlap_report(
      student.matrix, teacher.matrix, config.analysis.normalize_overlap);
  {
    const auto path = resolve_output(config, "", "overlap_coords.csv");
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "set,x,y\n";
    for (Index i = 0; i < overlap.pca_coords_a.rows(); ++i)
      out << "student," << format_real(overlap.pca_coords_a(i, 0)) << ','
          << format_real(overlap.pca_coords_a(i, 1)) << '\n';
    for (Index i = 0; i < overlap.pca_coords_b.rows(); ++i)
      out << "teacher," << format_real(overlap.pca_coords_b(i, 0)) << ','
          << format_real(overlap.pca_coords_b(i, 1)) << '\n';
  }
  {
    nlohmann::json obj;
    obj["overlap_coefficient"] = overlap.overlap_coefficient;
    obj["grid"] = {{"xmin", overlap.grid.xmin}, {"xmax", overlap.grid.xmax},
                   {"ymin", overlap.grid.ymin}, {"ymax", overlap.grid.ymax},
                   {"nx", overlap.grid.nx},     {"ny", overlap.grid.ny}};
    const auto path = resolve_output(config, "", "overlap.json");
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << obj.dump(2) << '\n';
  }
  log_info("analyze: overlap coefficient " +
           format_real(overlap.overlap_coefficient));

  // Teacher-dimension x psych-dimension correlation heatmap.
  const std::string psych_path = try_intermediate(
      config, config.paths.psych_store, "psych.bin", "psych store");
  if (!psych_path.empty()) {
    const EmbeddingStore psych = read_store(psych_path);
    const Matrix heatmap = dim_psych_heatmap(
        teacher.matrix, rows_for_ids(psych, teacher.ids));
    const auto path = resolve_output(config, "", "heatmap.csv");
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    for (int j = 0; j < kPsychDims; ++j)
      out << (j ? "," : "") << kPsychDimNames[j];
    out << '\n';
    for (Index i = 0; i < heatmap.rows(); ++i) {
      for (Index j = 0; j < heatmap.cols(); ++j)
        out << (j ? "," : "") << format_real(heatmap(i, j));
      out << '\n';
    }
  }

  // N-gram correlations against predicted scores (or true outcomes).
  if (!config.paths.manifest.empty()) {
    const auto records =
        load_manifest(require_input(config.paths.manifest, "manifest"));
    std::map<std::string, std::vector<std::string>> texts_by_person;
    for (const auto& rec : records)
      texts_by_person[rec.person_id].push_back(rec.text);

    std::map<std::string, double> scores_by_person;
    if (config.analysis.use_predictions) {
      const auto predictions_path = resolve_intermediate(
          config, config.paths.predictions, "predictions.csv", "predictions");
      scores_by_person = predictions_by_person(
          predictions_path, config.analysis.prediction_model,
          config.analysis.prediction_outcome);
    } else {
      const OutcomeTable outcomes =
          load_outcomes(require_input(config.paths.outcomes, "outcomes"));
      for (const auto& [person, values] : outcomes) {
        const auto it = values.find(config.analysis.prediction_outcome);
        if (it != values.end()) scores_by_person[person] = it->second;
      }
    }

    std::vector<std::vector<std::string>> texts;
    std::vector<double> score_list;
    for (const auto& [person, person_texts] : texts_by_person) {
      const auto it = scores_by_person.find(person);
      if (it == scores_by_person.end()) continue;
      texts.push_back(person_texts);
      score_list.push_back(it->second);
    }
    Vector scores = Eigen::Map<Vector>(score_list.data(),
                                       static_cast<Index>(score_list.size()));

    NgramConfig ngram_config{config.analysis.n_max,
                             config.analysis.min_person_freq};
    const NgramReport ngrams = ngram_correlation(texts, scores, ngram_config);
    const auto write_rows = [&](const std::vector<NgramRow>& rows,
                                const std::string& name) {
      const auto path = resolve_output(config, "", name);
      std::ofstream out(path);
      if (!out) throw DataError("cannot write " + path);
      out << "ngram,r,p_raw,p_bh\n";
      for (const auto& row : rows)
        out << row.ngram << ',' << format_real(row.r) << ','
            << format_real(row.p_raw) << ',' << format_real(row.p_bh) << '\n';
    };
    write_rows(ngrams.positive, "ngrams_positive.csv");
    write_rows(ngrams.negative, "ngrams_negative.csv");
  }
}

void cmd_report(const RunConfig& config) {
  const auto manifest_path = require_input(config.paths.manifest, "manifest");
  const auto targets_path = resolve_intermediate(
      config, config.paths.targets_store, "targets.bin", "targets store");
  const auto outcomes_path = require_input(config.paths.outcomes, "outcomes");
  const auto records = load_manifest(manifest_path);
  if (records.empty()) throw DataError("manifest has no segments");
  const EmbeddingStore targets = read_store(targets_path);
  const OutcomeTable outcomes = load_outcomes(outcomes_path);

  std::vector<std::string> ids;
  for (const auto& rec : records) ids.push_back(rec.segment_id);
  const DatasetSplit split = split_dataset(ids, config.split, config.seed);
  if (split.train.empty() || split.val.empty())
    throw DataError("split produced an empty train or val bucket");
  const auto train_pairs = pairs_for_ids(records, targets, split.train);
  const auto val_pairs = pairs_for_ids(records, targets, split.val);

  struct LossRow {
    std::string loss;
    double val_cosine = 0.0;
    double mean_r = 0.0;
    double mean_mse = 0.0;
  };
  std::vector<LossRow> summary;

  for (const LossKind kind : {LossKind::CosineSimilarity, LossKind::Nce}) {
    StudentModel model =
        model_for_targets(config, records.front().acoustic_features.cols(),
                          targets.matrix.cols());
    model.init_parameters(config.seed);
    TrainConfig train_config = config.train;
    train_config.loss = kind;
    const TrainHistory history =
        train(model, train_pairs, val_pairs, train_config);
    (void)history;

    EmbeddingStore store;
    store.ids = ids;
    store.matrix.resize(static_cast<Index>(records.size()), model.output_dim());
    for (std::size_t i = 0; i < records.size(); ++i)
      store.matrix.row(static_cast<Index>(i)) =
          model.encode(records[i].acoustic_features).transpose();

    EvalConfig eval_config = config.eval;
    eval_config.baseline_model.clear();
    const ComparisonReport report =
        evaluate_models({{to_string(kind), store}}, segment_person_map(records),
                        outcomes, eval_config);

    LossRow row;
    row.loss = to_string(kind);
    row.val_cosine = validate(model, val_pairs);
    for (const auto& metrics : report.rows) {
      row.mean_r += metrics.pearson_r;
      row.mean_mse += metrics.mse;
    }
    row.mean_r /= static_cast<double>(report.rows.size());
    row.mean_mse /= static_cast<double>(report.rows.size());
    summary.push_back(row);
    log_info("report: finished " + row.loss);
  }

  std::ostringstream table;
  table << std::left << std::setw(8) << "loss" << std::right << std::setw(14)
        << "val_cosine" << std::setw(12) << "mean_r" << std::setw(12)
        << "mean_mse" << '\n';
  for (const auto& row : summary) {
    table << std::left << std::setw(8) << row.loss << std::right << std::fixed
          << std::setprecision(4) << std::setw(14) << row.val_cosine
          << std::setw(12) << row.mean_r << std::setw(12) << row.mean_mse
          << '\n';
  }

  const auto csv_path = resolve_output(config, "", "loss_comparison.csv");
  std::ofstream csv(csv_path);
  if (!csv) throw DataError("cannot write " + csv_path);
  csv << "loss,val_cosine,mean_pearson_r,mean_mse\n";
  for (const auto& row : summary)
    csv << row.loss << ',' << format_real(row.val_cosine) << ','
        << format_real(row.mean_r) << ',' << format_real(row.mean_mse) << '\n';

  std::cout << table.str();
}

}  // namespace

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("xmal");
  for (const auto& arg : args) argv.push_back(arg.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

int run(int argc, const char* const* argv) {
  CLI::App app{"Cross-modal alignment distillation toolkit"};
  app.require_subcommand(1);

  Options options;
  app.add_option("--config", options.config_path, "JSON run configuration");
  app.add_option("--seed", options.seed, "Override every configured seed")
      ->each([&options](const std::string&) { options.seed_set = true; });
  app.add_option("--out", options.out_dir, "Output directory override");

  const std::map<std::string, std::pair<std::string, void (*)(const RunConfig&)>>
      commands = {
          {"synth", {"Generate a synthetic dataset", cmd_synth}},
          {"extract-psych",
           {"Extract the ten psych dimensions from manifest texts",
            cmd_extract_psych}},
          {"build-targets",
           {"Construct alignment targets from teacher embeddings",
            cmd_build_targets}},
          {"train", {"Align the student encoder to the targets", cmd_train}},
          {"embed", {"Encode a manifest with a trained checkpoint", cmd_embed}},
          {"eval",
           {"Person-level ridge evaluation of embedding stores", cmd_eval}},
          {"analyze",
           {"Overlap, heatmap, and n-gram correlation reports", cmd_analyze}},
          {"report", {"CS-vs-NCE loss comparison harness", cmd_report}},
      };
  for (const auto& [name, entry] : commands) {
    app.add_subcommand(name, entry.first)->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const RunConfig config = effective_config(options);
    for (const auto& [name, entry] : commands) {
      if (app.got_subcommand(name)) {
        entry.second(config);
        return 0;
      }
    }
    throw ConfigError("no command given");
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace xmal::cli
