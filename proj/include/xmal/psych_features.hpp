#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "xmal/types.hpp"

namespace xmal {

inline constexpr int kPsychDims = 10;

// Canonical dimension order. All ten-vectors in this project follow it.
inline constexpr std::array<const char*, kPsychDims> kPsychDimNames = {
    "VAL", "ARO", "OPE", "CON", "EXT", "AGR", "NEU", "ANG", "ANX", "DEP"};

using PsychDims = Eigen::Matrix<double, kPsychDims, 1>;

// Index of a dimension name in kPsychDimNames, or -1.
int psych_dim_index(const std::string& name);

// Per-dimension token weights plus an intercept. Tokens are stored lowercase.
struct Lexicon {
  std::array<std::map<std::string, double>, kPsychDims> weights;
  std::array<double, kPsychDims> intercepts{};
};

// Lowercases ASCII letters and splits on anything that is not alphanumeric
// or an apostrophe ("can't" stays one token). Bytes >= 0x80 are kept, so
// UTF-8 words pass through unharmed.
std::vector<std::string> tokenize(const std::string& text);

// Joins tokens[start .. start+n) with single spaces.
std::string join_ngram(const std::vector<std::string>& tokens, std::size_t start,
                       std::size_t n);

// score_d = intercept_d + sum_token weight_d(token) * relfreq(token), where
// relfreq is the token count over the total token count. Unknown tokens
// contribute nothing; empty text yields the intercepts.
PsychDims extract_psych(const std::string& text, const Lexicon& lexicon);

// One row of extract_psych per input text.
Matrix extract_psych_matrix(const std::vector<std::string>& texts,
                            const Lexicon& lexicon);

// Rescaling parameters that move raw psych scores onto the teacher
// embedding's value distribution. teacher_mean/teacher_std are pooled over
// every entry of the teacher matrix (one scalar pair); per-dimension stats
// are column-wise. Population standard deviations throughout.
struct ScalerParams {
  double teacher_mean = 0.0;
  double teacher_std = 1.0;
  PsychDims per_dim_mean = PsychDims::Zero();
  PsychDims per_dim_std = PsychDims::Ones();
};

// Requires N >= 2 rows and nonzero variance in every psych column; a
// degenerate column is reported by dimension name.
ScalerParams fit_scaler(const Matrix& teacher_matrix, const Matrix& psych_matrix);

// out_d = ((in_d - per_dim_mean_d) / per_dim_std_d) * teacher_std + teacher_mean
PsychDims standardize_psych(const PsychDims& psych, const ScalerParams& scaler);
Matrix standardize_psych_matrix(const Matrix& psych, const ScalerParams& scaler);

// Lexicon file: line-delimited "dimension,token,weight" rows plus
// "dimension,_intercept,value" rows.
Lexicon load_lexicon(const std::filesystem::path& path);
void save_lexicon(const Lexicon& lexicon, const std::filesystem::path& path);

// Scaler params persisted as JSON for pipeline reproducibility.
void save_scaler(const ScalerParams& scaler, const std::filesystem::path& path);
ScalerParams load_scaler(const std::filesystem::path& path);

}  // namespace xmal
