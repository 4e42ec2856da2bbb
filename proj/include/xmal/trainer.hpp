#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "xmal/losses.hpp"
#include "xmal/student.hpp"
#include "xmal/types.hpp"

namespace xmal {

enum class OptimizerKind { Sgd, Adam };

OptimizerKind parse_optimizer_kind(const std::string& name);
std::string to_string(OptimizerKind kind);

struct TrainConfig {
  double learning_rate = 1e-5;
  double weight_decay = 1e-2;  // decoupled: p *= (1 - lr * wd) each step
  int batch_size = 32;
  int epochs = 50;
  double temperature = 0.1;
  LossKind loss = LossKind::Nce;
  bool nce_include_positive = true;
  OptimizerKind optimizer = OptimizerKind::Sgd;
  double momentum = 0.0;  // SGD only
  std::uint64_t seed = 0;
};

struct TrainHistory {
  std::vector<double> train_loss;  // mean per-segment loss per epoch
  std::vector<double> val_cosine;  // mean cosine to target per epoch
  int best_epoch = -1;             // 0-based index into the vectors
};

// One (acoustic features, alignment target) pair.
struct TrainExample {
  Matrix features;
  Vector target;
};

// Mean cosine similarity between encode outputs and targets.
double validate(const StudentModel& model, const std::vector<TrainExample>& pairs);

// Gradient-descent alignment training. Deterministic given the seed: fixed
// shuffle order and fixed update order. Targets are never modified. The model
// is left at the parameters of the best validation epoch. With NCE the last
// incomplete batch of each epoch is dropped; with CS it is kept.
TrainHistory train(StudentModel& model, const std::vector<TrainExample>& train_set,
                   const std::vector<TrainExample>& val_set,
                   const TrainConfig& config);

// History file: "epoch,train_loss,val_cosine" lines, epochs 1-based.
void save_history(const TrainHistory& history, const std::filesystem::path& path);

}  // namespace xmal
