#include "xmal/teacher_targets.hpp"

#include "xmal/psych_features.hpp"

namespace xmal {

AlignmentMode parse_alignment_mode(const std::string& name) {
  if (name == "semantic") return AlignmentMode::Semantic;
  if (name == "replacement") return AlignmentMode::Replacement;
  if (name == "projection") return AlignmentMode::Projection;
  throw ConfigError("unknown alignment mode '" + name +
                    "' (expected semantic, replacement, or projection)");
}

std::string to_string(AlignmentMode mode) {
  switch (mode) {
    case AlignmentMode::Semantic: return "semantic";
    case AlignmentMode::Replacement: return "replacement";
    case AlignmentMode::Projection: return "projection";
  }
  throw ConfigError("invalid alignment mode");
}

TargetVector build_semantic_target(const Vector& teacher_emb, Index expected_dim) {
  if (!teacher_emb.allFinite())
    throw NumericError("build_semantic_target: non-finite teacher embedding");
  if (expected_dim >= 0 && teacher_emb.size() != expected_dim)
    throw DataError("build_semantic_target: teacher dim " +
                    std::to_string(teacher_emb.size()) + " != configured " +
                    std::to_string(expected_dim));
  return {teacher_emb, {AlignmentMode::Semantic, 10, 0}};
}

TargetVector build_replacement_target(const Vector& teacher_emb,
                                      const Vector& psych_scaled,
                                      const TargetMode& mode) {
  if (!teacher_emb.allFinite() || !psych_scaled.allFinite())
    throw NumericError("build_replacement_target: non-finite input");
  if (mode.replace_count <= 0 || mode.replace_offset < 0)
    throw ConfigError("build_replacement_target: invalid replace block");
  if (psych_scaled.size() != mode.replace_count)
    throw DataError("build_replacement_target: psych vector has " +
                    std::to_string(psych_scaled.size()) + " entries, expected " +
                    std::to_string(mode.replace_count));
  if (mode.replace_offset + mode.replace_count > teacher_emb.size())
    throw DataError("build_replacement_target: block [" +
                    std::to_string(mode.replace_offset) + ", " +
                    std::to_string(mode.replace_offset + mode.replace_count) +
                    ") exceeds teacher dim " + std::to_string(teacher_emb.size()));
  TargetVector out{teacher_emb, mode};
  out.mode.mode = AlignmentMode::Replacement;
  out.values.segment(mode.replace_offset, mode.replace_count) = psych_scaled;
  return out;
}

TargetVector build_projection_target(const Vector& teacher_emb,
                                     const Vector& psych_scaled) {
  if (!teacher_emb.allFinite() || !psych_scaled.allFinite())
    throw NumericError("build_projection_target: non-finite input");
  if (psych_scaled.size() != kPsychDims)
    throw DataError("build_projection_target: psych vector has " +
                    std::to_string(psych_scaled.size()) + " entries, expected " +
                    std::to_string(kPsychDims));
  TargetVector out;
  out.mode = {AlignmentMode::Projection, 10, 0};
  out.values.resize(teacher_emb.size() + kPsychDims);
  out.values.head(teacher_emb.size()) = teacher_emb;
  out.values.tail(kPsychDims) = psych_scaled;
  return out;
}

Matrix build_target_matrix(const Matrix& teacher_matrix,
                           const Matrix& psych_scaled, const TargetMode& mode) {
  if (mode.mode != AlignmentMode::Semantic) {
    if (psych_scaled.rows() != teacher_matrix.rows())
      throw DataError("build_target_matrix: teacher and psych row counts differ");
    if (psych_scaled.cols() != kPsychDims)
      throw DataError("build_target_matrix: psych matrix must have 10 columns");
    if (mode.mode == AlignmentMode::Replacement &&
        mode.replace_count > kPsychDims)
      throw ConfigError("build_target_matrix: replace_count exceeds 10");
  }

  Matrix out(teacher_matrix.rows(), target_dim(teacher_matrix.cols(), mode));
  for (Index i = 0; i < teacher_matrix.rows(); ++i) {
    const Vector teacher = teacher_matrix.row(i).transpose();
    switch (mode.mode) {
      case AlignmentMode::Semantic:
        out.row(i) = build_semantic_target(teacher).values.transpose();
        break;
      case AlignmentMode::Replacement: {
        const Vector psych = psych_scaled.row(i)
                                 .segment(0, mode.replace_count)
                                 .transpose();
        out.row(i) =
            build_replacement_target(teacher, psych, mode).values.transpose();
        break;
      }
      case AlignmentMode::Projection:
        out.row(i) = build_projection_target(
                         teacher, psych_scaled.row(i).transpose())
                         .values.transpose();
        break;
    }
  }
  return out;
}

Index target_dim(Index teacher_dim, const TargetMode& mode) {
  return mode.mode == AlignmentMode::Projection ? teacher_dim + kPsychDims
                                                : teacher_dim;
}

}  // namespace xmal
