#include "xmal/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "xmal/rng.hpp"

namespace xmal {

namespace {

// Gradient-descent update with decoupled weight decay. The Adam variant keeps
// per-tensor first/second moments with bias correction.
class Optimizer {
 public:
  Optimizer(const TrainConfig& config, const std::vector<Tensor*>& params)
      : config_(config) {
    if (config.optimizer == OptimizerKind::Adam ||
        config.momentum > 0.0) {
      for (const Tensor* t : params) {
        first_.emplace_back(Matrix::Zero(t->value.rows(), t->value.cols()));
        second_.emplace_back(Matrix::Zero(t->value.rows(), t->value.cols()));
      }
    }
  }

  void step(const std::vector<Tensor*>& params) {
    ++steps_;
    const double lr = config_.learning_rate;
    const double decay = 1.0 - lr * config_.weight_decay;
    for (std::size_t k = 0; k < params.size(); ++k) {
      Tensor& t = *params[k];
      t.value *= decay;
      if (config_.optimizer == OptimizerKind::Adam) {
        constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
        first_[k] = beta1 * first_[k] + (1.0 - beta1) * t.grad;
        second_[k] = (beta2 * second_[k].array() +
                      (1.0 - beta2) * t.grad.array().square())
                         .matrix();
        const double c1 = 1.0 - std::pow(beta1, steps_);
        const double c2 = 1.0 - std::pow(beta2, steps_);
        t.value.array() -= lr * (first_[k].array() / c1) /
                           ((second_[k].array() / c2).sqrt() + eps);
      } else if (config_.momentum > 0.0) {
        first_[k] = config_.momentum * first_[k] + t.grad;
        t.value -= lr * first_[k];
      } else {
        t.value -= lr * t.grad;
      }
    }
  }

 private:
  TrainConfig config_;
  std::vector<Matrix> first_;
  std::vector<Matrix> second_;
  long steps_ = 0;
};

void check_config(const TrainConfig& config) {
  if (config.learning_rate < 0.0)
    throw ConfigError("train: learning_rate must be nonnegative");
  if (config.weight_decay < 0.0)
    throw ConfigError("train: weight_decay must be nonnegative");
  if (config.batch_size < 1)
    throw ConfigError("train: batch_size must be positive");
  if (config.epochs < 0) throw ConfigError("train: epochs must be nonnegative");
  if (config.temperature <= 0.0)
    throw ConfigError("train: temperature must be positive");
  if (config.loss == LossKind::Nce && config.batch_size < 2)
    throw ConfigError("train: NCE needs batch_size >= 2");
  if (config.momentum < 0.0 || config.momentum >= 1.0)
    throw ConfigError("train: momentum must be in [0, 1)");
}

}  // namespace

OptimizerKind parse_optimizer_kind(const std::string& name) {
  if (name == "sgd") return OptimizerKind::Sgd;
  if (name == "adam") return OptimizerKind::Adam;
  throw ConfigError("unknown optimizer '" + name + "' (expected sgd or adam)");
}

std::string to_string(OptimizerKind kind) {
  return kind == OptimizerKind::Sgd ? "sgd" : "adam";
}

double validate(const StudentModel& model,
                const std::vector<TrainExample>& pairs) {
  if (pairs.empty()) throw DataError("validate: empty pair list");
  double total = 0.0;
  for (const auto& pair : pairs) {
    const Vector embedding = model.encode(pair.features);
    total += cosine_similarity(embedding, pair.target);
  }
  return total / static_cast<double>(pairs.size());
}

TrainHistory train(StudentModel& model,
                   const std::vector<TrainExample>& train_set,
                   const std::vector<TrainExample>& val_set,
                   const TrainConfig& config) {
  check_config(config);
  if (train_set.empty()) throw DataError("train: empty training set");
  if (val_set.empty()) throw DataError("train: empty validation set");
  for (const auto& pair : train_set) {
    if (pair.target.size() != model.output_dim())
      throw DataError("train: target dim " + std::to_string(pair.target.size()) +
                      " does not match model output dim " +
                      std::to_string(model.output_dim()));
  }
  if (config.loss == LossKind::Nce &&
      static_cast<std::size_t>(config.batch_size) > train_set.size())
    throw ConfigError("train: NCE batch_size exceeds the training set");

  TrainHistory history;
  if (config.epochs == 0) return history;

  LossConfig loss_config{config.loss, config.temperature,
                         config.nce_include_positive};
  auto params = model.parameters();
  Optimizer optimizer(config, params);
  Rng rng(config.seed);

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  double best_cosine = -std::numeric_limits<double>::infinity();
  std::vector<Matrix> best_params;

  const Index out_dim = model.output_dim();
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);

    double epoch_loss = 0.0;
    std::size_t epoch_count = 0;
    std::vector<EncodeTrace> traces(config.batch_size);

    for (std::size_t start = 0; start < order.size();
         start += config.batch_size) {
      const std::size_t n =
          std::min<std::size_t>(config.batch_size, order.size() - start);
      if (config.loss == LossKind::Nce &&
          n < static_cast<std::size_t>(config.batch_size)) {
        break;  // contrastive statistics need the full batch
      }

      Matrix students(n, out_dim);
      Matrix targets(n, out_dim);
      for (std::size_t k = 0; k < n; ++k) {
        const TrainExample& example = train_set[order[start + k]];
        students.row(static_cast<Index>(k)) =
            model.encode_traced(example.features, traces[k]).transpose();
        targets.row(static_cast<Index>(k)) = example.target.transpose();
      }

      const LossResult loss = evaluate_loss(loss_config, students, targets);
      if (!std::isfinite(loss.value))
        throw NumericError("train: non-finite loss at epoch " +
                           std::to_string(epoch + 1) + ", batch " +
                           std::to_string(start / config.batch_size + 1));
      epoch_loss += loss.value;
      epoch_count += n;

      model.zero_grad();
      const double inv_n = 1.0 / static_cast<double>(n);
      for (std::size_t k = 0; k < n; ++k) {
        const TrainExample& example = train_set[order[start + k]];
        const Vector grad =
            loss.grad_wrt_students.row(static_cast<Index>(k)).transpose() *
            inv_n;
        model.accumulate_gradients(example.features, traces[k], grad);
      }
      optimizer.step(params);
    }

    if (epoch_count == 0)
      throw ConfigError("train: no full batch available for NCE");
    history.train_loss.push_back(epoch_loss /
                                 static_cast<double>(epoch_count));
    const double cosine = validate(model, val_set);
    history.val_cosine.push_back(cosine);
    if (cosine > best_cosine) {
      best_cosine = cosine;
      history.best_epoch = epoch;
      best_params.clear();
      for (const Tensor* t : params) best_params.push_back(t->value);
    }
  }

  if (!best_params.empty()) {
    for (std::size_t k = 0; k < params.size(); ++k)
      params[k]->value = best_params[k];
  }
  return history;
}

void save_history(const TrainHistory& history,
                  const std::filesystem::path& path) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write history: " + path.string());
  out.precision(12);
  out << "epoch,train_loss,val_cosine\n";
  for (std::size_t i = 0; i < history.train_loss.size(); ++i) {
    out << (i + 1) << ',' << history.train_loss[i] << ','
        << history.val_cosine[i] << '\n';
  }
}

}  // namespace xmal
