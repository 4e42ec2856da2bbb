#pragma once

#include <string>

#include "xmal/types.hpp"

namespace xmal {

// The three alignment target constructions. Semantic uses the teacher
// embedding as-is; replacement overwrites a block of teacher dimensions with
// scaled psych scores; projection appends the ten psych scores.
enum class AlignmentMode { Semantic, Replacement, Projection };

AlignmentMode parse_alignment_mode(const std::string& name);
std::string to_string(AlignmentMode mode);

struct TargetMode {
  AlignmentMode mode = AlignmentMode::Semantic;
  int replace_count = 10;  // block width, replacement mode only
  int replace_offset = 0;  // first replaced dimension
};

struct TargetVector {
  Vector values;
  TargetMode mode;
};

// Returns the teacher embedding unchanged. expected_dim >= 0 enforces the
// configured teacher dimensionality.
TargetVector build_semantic_target(const Vector& teacher_emb,
                                   Index expected_dim = -1);

// output[offset .. offset+count) = psych_scaled, the rest is the teacher
// embedding untouched. psych_scaled must have exactly replace_count entries
// and the block must fit inside the teacher dimensionality.
TargetVector build_replacement_target(const Vector& teacher_emb,
                                      const Vector& psych_scaled,
                                      const TargetMode& mode = {
                                          AlignmentMode::Replacement, 10, 0});

// output = teacher_emb ++ psych_scaled, length d + 10.
TargetVector build_projection_target(const Vector& teacher_emb,
                                     const Vector& psych_scaled);

// Row-wise application over a whole dataset; psych_scaled is ignored for
// semantic mode and may be empty there.
Matrix build_target_matrix(const Matrix& teacher_matrix,
                           const Matrix& psych_scaled, const TargetMode& mode);

// Target dimensionality produced for a teacher of dimension d.
Index target_dim(Index teacher_dim, const TargetMode& mode);

}  // namespace xmal
