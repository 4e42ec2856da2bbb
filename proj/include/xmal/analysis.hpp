#pragma once

#include <string>
#include <vector>

#include "xmal/types.hpp"

namespace xmal {

struct Pca2dResult {
  Matrix coords;  // N x 2 projection onto the top two principal axes
  Eigen::Vector2d explained_variance_ratio;
};

// Mean-centered projection onto the top two principal axes, eigenvalues in
// descending order. Sign convention: each axis's largest-magnitude loading
// is positive. Needs N >= 3 rows, d >= 2 columns, and nonzero total variance.
Pca2dResult pca_2d(const Matrix& X);

struct GridSpec {
  double xmin = 0.0, xmax = 0.0, ymin = 0.0, ymax = 0.0;
  int nx = 64, ny = 64;
};

// Overlapping coefficient of two Gaussian kernel density estimates fitted
// with Scott's-rule bandwidths, integrated as sum(min(p_a, p_b)) * cell_area
// over a 64x64 grid spanning the joint bounding box padded by 10% per side.
// Both coordinate sets need at least 2 points and nonzero spread per axis.
double kde_overlap(const Matrix& coords_a, const Matrix& coords_b,
                   GridSpec* grid_used = nullptr);

struct OverlapReport {
  Matrix pca_coords_a;
  Matrix pca_coords_b;
  double overlap_coefficient = 0.0;
  GridSpec grid;
};

// The modality-overlap analysis: optionally L2-normalize every embedding row
// (alignment geometry is cosine, so scale is meaningless), fit one PCA on
// the stacked embeddings, split the 2-d coordinates back apart, and measure
// their KDE overlap.
OverlapReport overlap_report(const Matrix& embeddings_a,
                             const Matrix& embeddings_b,
                             bool normalize_rows = true);

// Entry (i, j) = pearson(teacher column i, psych column j). Degenerate
// columns yield zero entries.
Matrix dim_psych_heatmap(const Matrix& teacher_matrix,
                         const Matrix& psych_matrix);

// Benjamini-Hochberg step-up adjusted p-values, clipped at 1, in the input
// order. Adjusted values are monotone in the raw values and never smaller.
std::vector<double> benjamini_hochberg(const std::vector<double>& p_raw);

struct NgramRow {
  std::string ngram;
  double r = 0.0;
  double p_raw = 1.0;
  double p_bh = 1.0;
};

struct NgramReport {
  std::vector<NgramRow> positive;  // r > 0, sorted by |r| descending
  std::vector<NgramRow> negative;  // r < 0, sorted by |r| descending
};

struct NgramConfig {
  int n_max = 3;            // 1..3-token n-grams
  int min_person_freq = 2;  // persons an n-gram must occur for
};

// Correlates each qualifying n-gram's per-person relative frequency with the
// given per-person scores (predictions or true outcomes, the caller's
// choice) and applies BH correction across every tested n-gram. Tokenization
// matches psych feature extraction.
NgramReport ngram_correlation(
    const std::vector<std::vector<std::string>>& texts_per_person,
    const Vector& scores, const NgramConfig& config);

}  // namespace xmal
