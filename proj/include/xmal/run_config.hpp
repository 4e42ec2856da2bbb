#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "xmal/data_model.hpp"
#include "xmal/evaluator.hpp"
#include "xmal/student.hpp"
#include "xmal/synthetic.hpp"
#include "xmal/teacher_targets.hpp"
#include "xmal/trainer.hpp"

namespace xmal {

struct ModelConfig {
  std::string backbone = "synthetic";
  double backbone_init_scale = 1.0;
  TanhScope tanh_scope = TanhScope::PsychOnly;
};

struct AnalysisConfig {
  int n_max = 3;
  int min_person_freq = 2;
  // Correlate n-grams with model predictions (the predictions csv written by
  // eval) rather than true outcomes.
  bool use_predictions = true;
  std::string prediction_model;  // empty: the only / first model
  std::string prediction_outcome = "score";
  bool normalize_overlap = true;
};

struct EvalStoreRef {
  std::string name;
  std::string store;
};

struct PathsConfig {
  std::string manifest;
  std::string teacher_store;
  std::string lexicon;
  std::string outcomes;
  std::string psych_store;
  std::string targets_store;
  std::string scaler;
  std::string checkpoint_dir;
  std::string history;
  std::string student_store;
  std::string predictions;
  std::string out_dir;
  std::vector<EvalStoreRef> eval_stores;
};

// One declarative config file drives every command; command-line flags
// (--seed, --out) override the corresponding keys. Unknown keys anywhere in
// the file are rejected.
struct RunConfig {
  std::uint64_t seed = 0;
  PathsConfig paths;
  SplitRatios split;
  TargetMode target;
  ModelConfig model;
  TrainConfig train;
  EvalConfig eval;
  AnalysisConfig analysis;
  SyntheticSpec synth;
};

RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace xmal
