#include "xmal/run_config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

namespace xmal {

namespace {

using nlohmann::json;

void require_keys(const json& obj, const std::set<std::string>& allowed,
                  const std::string& where) {
  if (!obj.is_object())
    throw ConfigError("config: '" + where + "' must be an object");
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!allowed.count(key))
      throw ConfigError("config: unknown key '" + where + "." + key + "'");
  }
}

template <typename T>
void read_into(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config: bad value for '") + key + "'");
  }
}

void parse_paths(const json& obj, PathsConfig& paths) {
  require_keys(obj,
               {"manifest", "teacher_store", "lexicon", "outcomes",
                "psych_store", "targets_store", "scaler", "checkpoint_dir",
                "history", "student_store", "predictions", "out_dir",
                "eval_stores"},
               "paths");
  read_into(obj, "manifest", paths.manifest);
  read_into(obj, "teacher_store", paths.teacher_store);
  read_into(obj, "lexicon", paths.lexicon);
  read_into(obj, "outcomes", paths.outcomes);
  read_into(obj, "psych_store", paths.psych_store);
  read_into(obj, "targets_store", paths.targets_store);
  read_into(obj, "scaler", paths.scaler);
  read_into(obj, "checkpoint_dir", paths.checkpoint_dir);
  read_into(obj, "history", paths.history);
  read_into(obj, "student_store", paths.student_store);
  read_into(obj, "predictions", paths.predictions);
  read_into(obj, "out_dir", paths.out_dir);
  if (obj.contains("eval_stores")) {
    if (!obj.at("eval_stores").is_array())
      throw ConfigError("config: paths.eval_stores must be an array");
    for (const auto& entry : obj.at("eval_stores")) {
      require_keys(entry, {"name", "store"}, "paths.eval_stores[]");
      EvalStoreRef ref;
      read_into(entry, "name", ref.name);
      read_into(entry, "store", ref.store);
      if (ref.name.empty() || ref.store.empty())
        throw ConfigError("config: eval_stores entries need name and store");
      paths.eval_stores.push_back(std::move(ref));
    }
  }
}

}  // namespace

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path.string());
  json root = json::parse(in, nullptr, false);
  if (root.is_discarded())
    throw ConfigError("config is not valid JSON: " + path.string());
  require_keys(root,
               {"seed", "paths", "split", "target", "model", "train", "eval",
                "analysis", "synth"},
               "<root>");

  RunConfig config;
  read_into(root, "seed", config.seed);

  if (root.contains("paths")) parse_paths(root.at("paths"), config.paths);

  if (root.contains("split")) {
    const json& obj = root.at("split");
    require_keys(obj, {"train", "val", "test"}, "split");
    read_into(obj, "train", config.split.train);
    read_into(obj, "val", config.split.val);
    read_into(obj, "test", config.split.test);
  }

  if (root.contains("target")) {
    const json& obj = root.at("target");
    require_keys(obj, {"mode", "replace_count", "replace_offset"}, "target");
    std::string mode = to_string(config.target.mode);
    read_into(obj, "mode", mode);
    config.target.mode = parse_alignment_mode(mode);
    read_into(obj, "replace_count", config.target.replace_count);
    read_into(obj, "replace_offset", config.target.replace_offset);
  }

  if (root.contains("model")) {
    const json& obj = root.at("model");
    require_keys(obj, {"backbone", "backbone_init_scale", "tanh_scope"},
                 "model");
    read_into(obj, "backbone", config.model.backbone);
    read_into(obj, "backbone_init_scale", config.model.backbone_init_scale);
    std::string scope = to_string(config.model.tanh_scope);
    read_into(obj, "tanh_scope", scope);
    config.model.tanh_scope = parse_tanh_scope(scope);
    if (config.model.backbone != "synthetic")
      throw ConfigError("config: no backbone adapter registered for '" +
                        config.model.backbone + "'");
  }

  if (root.contains("train")) {
    const json& obj = root.at("train");
    require_keys(obj,
                 {"learning_rate", "weight_decay", "batch_size", "epochs",
                  "temperature", "loss", "nce_include_positive", "optimizer",
                  "momentum"},
                 "train");
    read_into(obj, "learning_rate", config.train.learning_rate);
    read_into(obj, "weight_decay", config.train.weight_decay);
    read_into(obj, "batch_size", config.train.batch_size);
    read_into(obj, "epochs", config.train.epochs);
    read_into(obj, "temperature", config.train.temperature);
    std::string loss = to_string(config.train.loss);
    read_into(obj, "loss", loss);
    config.train.loss = parse_loss_kind(loss);
    read_into(obj, "nce_include_positive", config.train.nce_include_positive);
    std::string optimizer = to_string(config.train.optimizer);
    read_into(obj, "optimizer", optimizer);
    config.train.optimizer = parse_optimizer_kind(optimizer);
    read_into(obj, "momentum", config.train.momentum);
  }

  if (root.contains("eval")) {
    const json& obj = root.at("eval");
    require_keys(obj,
                 {"folds", "lambda_grid", "baseline_model",
                  "significance_alpha"},
                 "eval");
    read_into(obj, "folds", config.eval.cv.folds);
    read_into(obj, "lambda_grid", config.eval.cv.lambda_grid);
    read_into(obj, "baseline_model", config.eval.baseline_model);
    read_into(obj, "significance_alpha", config.eval.significance_alpha);
  }

  if (root.contains("analysis")) {
    const json& obj = root.at("analysis");
    require_keys(obj,
                 {"n_max", "min_person_freq", "use_predictions",
                  "prediction_model", "prediction_outcome",
                  "normalize_overlap"},
                 "analysis");
    read_into(obj, "n_max", config.analysis.n_max);
    read_into(obj, "min_person_freq", config.analysis.min_person_freq);
    read_into(obj, "use_predictions", config.analysis.use_predictions);
    read_into(obj, "prediction_model", config.analysis.prediction_model);
    read_into(obj, "prediction_outcome", config.analysis.prediction_outcome);
    read_into(obj, "normalize_overlap", config.analysis.normalize_overlap);
  }

  if (root.contains("synth")) {
    const json& obj = root.at("synth");
    require_keys(obj,
                 {"latent_dim", "teacher_dim", "feature_dim", "frames",
                  "persons", "segments_per_person", "noise_std",
                  "outcome_weights", "seed"},
                 "synth");
    read_into(obj, "latent_dim", config.synth.latent_dim);
    read_into(obj, "teacher_dim", config.synth.teacher_dim);
    read_into(obj, "feature_dim", config.synth.feature_dim);
    read_into(obj, "frames", config.synth.frames);
    read_into(obj, "persons", config.synth.persons);
    read_into(obj, "segments_per_person", config.synth.segments_per_person);
    read_into(obj, "noise_std", config.synth.noise_std);
    read_into(obj, "outcome_weights", config.synth.outcome_weights);
    read_into(obj, "seed", config.synth.seed);
  }

  return config;
}

}  // namespace xmal
