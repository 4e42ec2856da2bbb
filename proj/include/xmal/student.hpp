#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "xmal/teacher_targets.hpp"
#include "xmal/types.hpp"

namespace xmal {

class Rng;

// Named parameter matrix with its gradient accumulator.
struct Tensor {
  std::string name;
  Matrix value;
  Matrix grad;

  Tensor(std::string n, Index rows, Index cols)
      : name(std::move(n)), value(Matrix::Zero(rows, cols)),
        grad(Matrix::Zero(rows, cols)) {}
};

// Produces a hidden-state sequence (L x d_model) from a segment's acoustic
// features. token_context carries decoder prompt ids for backbones that use
// one; the synthetic backbone ignores it.
class Backbone {
 public:
  virtual ~Backbone() = default;
  virtual Index feature_dim() const = 0;
  virtual Index model_dim() const = 0;
  virtual Matrix forward(const Matrix& features,
                         std::span<const int> token_context = {}) const = 0;
  // Accumulates parameter gradients given d(loss)/d(hidden).
  virtual void backward(const Matrix& features, const Matrix& hidden,
                        const Matrix& grad_hidden) = 0;
  virtual void init_parameters(Rng& rng) = 0;
  virtual std::vector<Tensor*> parameters() = 0;
  virtual std::string kind() const = 0;
};

// Desk-scale stand-in for a speech backbone: each frame is mapped
// independently through one linear layer and an elementwise tanh.
class SyntheticBackbone final : public Backbone {
 public:
  SyntheticBackbone(Index feature_dim, Index model_dim, double init_scale = 1.0);

  Index feature_dim() const override { return weight_.value.rows(); }
  Index model_dim() const override { return weight_.value.cols(); }
  Matrix forward(const Matrix& features,
                 std::span<const int> token_context = {}) const override;
  void backward(const Matrix& features, const Matrix& hidden,
                const Matrix& grad_hidden) override;
  void init_parameters(Rng& rng) override;
  std::vector<Tensor*> parameters() override { return {&weight_}; }
  std::string kind() const override { return "synthetic"; }

  double init_scale() const { return init_scale_; }

 private:
  Tensor weight_;  // feature_dim x d_model
  double init_scale_;
};

// Column-wise arithmetic mean over the hidden-state sequence.
Vector mean_pool(const Matrix& hidden);

// W * e + b, no activation.
Vector dense_pool(const Vector& e, const Matrix& weight, const Vector& bias);

// tanh(P^T * e), ten values strictly inside (-1, 1).
Vector project_psych(const Vector& e, const Matrix& projection);

// Where the tanh sits in projection mode: on the ten projected coordinates
// only (default), or on the whole d_model+10 output.
enum class TanhScope { PsychOnly, All };

TanhScope parse_tanh_scope(const std::string& name);
std::string to_string(TanhScope scope);

// Intermediate values cached by encode for the backward pass.
struct EncodeTrace {
  Matrix hidden;
  Vector pooled;
  Vector dense;   // pre-projection embedding
  Vector output;  // final embedding
};

// Backbone + mean pooling + learnable dense head + optional psych projection
// head. Semantic and replacement modes emit d_model values; projection mode
// emits d_model + 10.
class StudentModel {
 public:
  StudentModel(std::shared_ptr<Backbone> backbone, TargetMode mode,
               TanhScope tanh_scope = TanhScope::PsychOnly);

  Index model_dim() const { return backbone_->model_dim(); }
  Index feature_dim() const { return backbone_->feature_dim(); }
  Index output_dim() const;
  const TargetMode& mode() const { return mode_; }
  TanhScope tanh_scope() const { return tanh_scope_; }
  Backbone& backbone() { return *backbone_; }
  const Backbone& backbone() const { return *backbone_; }

  // Deterministic given the seed: backbone first, then the dense head from
  // uniform(-1/sqrt(d_model), +1/sqrt(d_model)) with a zero bias, then the
  // projection head likewise.
  void init_parameters(std::uint64_t seed);

  Vector encode(const Matrix& features,
                std::span<const int> token_context = {}) const;
  Vector encode_traced(const Matrix& features, EncodeTrace& trace,
                       std::span<const int> token_context = {}) const;

  // Accumulates d(loss)/d(parameters) into every tensor's grad given
  // d(loss)/d(output) for one traced encode.
  void accumulate_gradients(const Matrix& features, const EncodeTrace& trace,
                            const Vector& grad_output);

  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
  void zero_grad();

 private:
  std::shared_ptr<Backbone> backbone_;
  TargetMode mode_;
  TanhScope tanh_scope_;
  Tensor dense_weight_;  // d_model x d_model
  Tensor dense_bias_;    // d_model x 1
  Tensor projection_;    // d_model x 10, projection mode only (else 0x0)
};

// Checkpoint directory: manifest.json describing the architecture plus one
// binary matrix file per tensor (data_model's matrix format).
void save_checkpoint(const StudentModel& model, const std::filesystem::path& dir);
StudentModel load_checkpoint(const std::filesystem::path& dir);

}  // namespace xmal
