#include "xmal/student.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "xmal/data_model.hpp"
#include "xmal/psych_features.hpp"
#include "xmal/rng.hpp"

namespace xmal {

SyntheticBackbone::SyntheticBackbone(Index feature_dim, Index model_dim,
                                     double init_scale)
    : weight_("backbone.weight", feature_dim, model_dim),
      init_scale_(init_scale) {
  if (feature_dim < 1 || model_dim < 1)
    throw ConfigError("SyntheticBackbone: dimensions must be positive");
  if (init_scale <= 0.0)
    throw ConfigError("SyntheticBackbone: init_scale must be positive");
}

Matrix SyntheticBackbone::forward(const Matrix& features,
                                  std::span<const int> token_context) const {
  (void)token_context;
  if (features.cols() != weight_.value.rows())
    throw DataError("SyntheticBackbone: feature_dim " +
                    std::to_string(features.cols()) + " != expected " +
                    std::to_string(weight_.value.rows()));
  if (features.rows() < 1)
    throw DataError("SyntheticBackbone: empty frame sequence");
  return (features * weight_.value).array().tanh();
}

void SyntheticBackbone::backward(const Matrix& features, const Matrix& hidden,
                                 const Matrix& grad_hidden) {
  // d tanh(u) = (1 - tanh(u)^2) du
  const Matrix grad_pre =
      (grad_hidden.array() * (1.0 - hidden.array().square())).matrix();
  weight_.grad.noalias() += features.transpose() * grad_pre;
}

void SyntheticBackbone::init_parameters(Rng& rng) {
  const double bound = init_scale_ / std::sqrt(
      static_cast<double>(weight_.value.rows()));
  weight_.value = rng.uniform_matrix(weight_.value.rows(), weight_.value.cols(),
                                     -bound, bound);
}

Vector mean_pool(const Matrix& hidden) {
  if (hidden.rows() < 1) throw DataError("mean_pool: empty hidden sequence");
  return hidden.colwise().mean().transpose();
}

Vector dense_pool(const Vector& e, const Matrix& weight, const Vector& bias) {
  if (weight.cols() != e.size() || weight.rows() != bias.size())
    throw DataError("dense_pool: shape mismatch");
  return weight * e + bias;
}

Vector project_psych(const Vector& e, const Matrix& projection) {
  if (projection.rows() != e.size() || projection.cols() != kPsychDims)
    throw DataError("project_psych: shape mismatch");
  return (projection.transpose() * e).array().tanh();
}

TanhScope parse_tanh_scope(const std::string& name) {
  if (name == "psych") return TanhScope::PsychOnly;
  if (name == "all") return TanhScope::All;
  throw ConfigError("unknown tanh_scope '" + name + "' (expected psych or all)");
}

std::string to_string(TanhScope scope) {
  return scope == TanhScope::PsychOnly ? "psych" : "all";
}

StudentModel::StudentModel(std::shared_ptr<Backbone> backbone, TargetMode mode,
                           TanhScope tanh_scope)
    : backbone_(std::move(backbone)), mode_(mode), tanh_scope_(tanh_scope),
      dense_weight_("dense.weight", backbone_->model_dim(),
                    backbone_->model_dim()),
      dense_bias_("dense.bias", backbone_->model_dim(), 1),
      projection_("projection.weight",
                  mode.mode == AlignmentMode::Projection ? backbone_->model_dim()
                                                         : 0,
                  mode.mode == AlignmentMode::Projection ? kPsychDims : 0) {}

Index StudentModel::output_dim() const {
  return mode_.mode == AlignmentMode::Projection ? model_dim() + kPsychDims
                                                 : model_dim();
}

void StudentModel::init_parameters(std::uint64_t seed) {
  Rng rng(seed);
  backbone_->init_parameters(rng);
  const double bound = 1.0 / std::sqrt(static_cast<double>(model_dim()));
  dense_weight_.value =
      rng.uniform_matrix(model_dim(), model_dim(), -bound, bound);
  dense_bias_.value.setZero();
  if (mode_.mode == AlignmentMode::Projection) {
    projection_.value =
        rng.uniform_matrix(model_dim(), kPsychDims, -bound, bound);
  }
  zero_grad();
}

Vector StudentModel::encode(const Matrix& features,
                            std::span<const int> token_context) const {
  EncodeTrace trace;
  return encode_traced(features, trace, token_context);
}

Vector StudentModel::encode_traced(const Matrix& features, EncodeTrace& trace,
                                   std::span<const int> token_context) const {
  trace.hidden = backbone_->forward(features, token_context);
  trace.pooled = mean_pool(trace.hidden);
  trace.dense =
      dense_pool(trace.pooled, dense_weight_.value, dense_bias_.value);
  if (mode_.mode != AlignmentMode::Projection) {
    trace.output = trace.dense;
    return trace.output;
  }

  trace.output.resize(output_dim());
  if (tanh_scope_ == TanhScope::PsychOnly) {
    trace.output.head(model_dim()) = trace.dense;
    trace.output.tail(kPsychDims) =
        project_psych(trace.dense, projection_.value);
  } else {
    trace.output.head(model_dim()) = trace.dense;
    trace.output.tail(kPsychDims) = projection_.value.transpose() * trace.dense;
    trace.output = trace.output.array().tanh().matrix();
  }
  return trace.output;
}

void StudentModel::accumulate_gradients(const Matrix& features,
                                        const EncodeTrace& trace,
                                        const Vector& grad_output) {
  if (grad_output.size() != output_dim())
    throw DataError("accumulate_gradients: gradient size mismatch");

  Vector grad_dense(model_dim());
  if (mode_.mode != AlignmentMode::Projection) {
    grad_dense = grad_output;
  } else if (tanh_scope_ == TanhScope::PsychOnly) {
    const Vector q = trace.output.tail(kPsychDims);
    const Vector grad_pre =
        (grad_output.tail(kPsychDims).array() * (1.0 - q.array().square()))
            .matrix();
    projection_.grad.noalias() += trace.dense * grad_pre.transpose();
    grad_dense = grad_output.head(model_dim()) + projection_.value * grad_pre;
  } else {
    const Vector grad_pre =
        (grad_output.array() * (1.0 - trace.output.array().square())).matrix();
    const Vector grad_psych_pre = grad_pre.tail(kPsychDims);
    projection_.grad.noalias() += trace.dense * grad_psych_pre.transpose();
    grad_dense = grad_pre.head(model_dim()) + projection_.value * grad_psych_pre;
  }

  dense_weight_.grad.noalias() += grad_dense * trace.pooled.transpose();
  dense_bias_.grad += grad_dense;
  const Vector grad_pooled = dense_weight_.value.transpose() * grad_dense;

  const double inv_frames = 1.0 / static_cast<double>(trace.hidden.rows());
  Matrix grad_hidden(trace.hidden.rows(), trace.hidden.cols());
  grad_hidden.rowwise() = (grad_pooled * inv_frames).transpose();
  backbone_->backward(features, trace.hidden, grad_hidden);
}

std::vector<Tensor*> StudentModel::parameters() {
  std::vector<Tensor*> params = backbone_->parameters();
  params.push_back(&dense_weight_);
  params.push_back(&dense_bias_);
  if (mode_.mode == AlignmentMode::Projection) params.push_back(&projection_);
  return params;
}

std::vector<const Tensor*> StudentModel::parameters() const {
  auto* self = const_cast<StudentModel*>(this);
  std::vector<const Tensor*> params;
  for (Tensor* t : self->parameters()) params.push_back(t);
  return params;
}

void StudentModel::zero_grad() {
  for (Tensor* t : parameters()) t->grad.setZero();
}

void save_checkpoint(const StudentModel& model,
                     const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["backbone"] = model.backbone().kind();
  manifest["feature_dim"] = model.feature_dim();
  manifest["d_model"] = model.model_dim();
  manifest["mode"] = to_string(model.mode().mode);
  manifest["replace_count"] = model.mode().replace_count;
  manifest["replace_offset"] = model.mode().replace_offset;
  manifest["tanh_scope"] = to_string(model.tanh_scope());
  if (const auto* synthetic =
          dynamic_cast<const SyntheticBackbone*>(&model.backbone())) {
    manifest["backbone_init_scale"] = synthetic->init_scale();
  }

  nlohmann::json tensors = nlohmann::json::array();
  for (const Tensor* t : model.parameters()) {
    nlohmann::json entry;
    entry["name"] = t->name;
    entry["rows"] = t->value.rows();
    entry["cols"] = t->value.cols();
    entry["file"] = t->name + ".bin";
    tensors.push_back(entry);
    write_matrix(t->value, dir / (t->name + ".bin"));
  }
  manifest["tensors"] = tensors;

  std::ofstream out(dir / "manifest.json");
  if (!out) throw DataError("cannot write checkpoint manifest in " + dir.string());
  out << manifest.dump(2) << '\n';
}

StudentModel load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw DataError("missing checkpoint manifest: " +
                           (dir / "manifest.json").string());
  nlohmann::json manifest = nlohmann::json::parse(in, nullptr, false);
  if (manifest.is_discarded() || !manifest.is_object())
    throw DataError("malformed checkpoint manifest in " + dir.string());

  try {
    const std::string backbone_kind = manifest.at("backbone").get<std::string>();
    if (backbone_kind != "synthetic")
      throw DataError("no backbone adapter registered for '" + backbone_kind +
                      "'");
    const auto feature_dim = manifest.at("feature_dim").get<Index>();
    const auto d_model = manifest.at("d_model").get<Index>();
    const double init_scale =
        manifest.value("backbone_init_scale", 1.0);
    TargetMode mode;
    mode.mode = parse_alignment_mode(manifest.at("mode").get<std::string>());
    mode.replace_count = manifest.at("replace_count").get<int>();
    mode.replace_offset = manifest.at("replace_offset").get<int>();
    const TanhScope scope =
        parse_tanh_scope(manifest.at("tanh_scope").get<std::string>());

    StudentModel model(
        std::make_shared<SyntheticBackbone>(feature_dim, d_model, init_scale),
        mode, scope);
    for (const auto& entry : manifest.at("tensors")) {
      const std::string name = entry.at("name").get<std::string>();
      const Matrix value = read_matrix(dir / entry.at("file").get<std::string>());
      if (value.rows() != entry.at("rows").get<Index>() ||
          value.cols() != entry.at("cols").get<Index>())
        throw DataError("checkpoint tensor shape mismatch for " + name);
      bool found = false;
      for (Tensor* t : model.parameters()) {
        if (t->name == name) {
          if (t->value.rows() != value.rows() || t->value.cols() != value.cols())
            throw DataError("checkpoint tensor " + name +
                            " does not fit the declared architecture");
          t->value = value;
          found = true;
          break;
        }
      }
      if (!found) throw DataError("unexpected checkpoint tensor " + name);
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed checkpoint manifest in " + dir.string() + ": " +
                    e.what());
  }
}

}  // namespace xmal
