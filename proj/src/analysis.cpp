#include "xmal/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <utility>

#include "xmal/psych_features.hpp"
#include "xmal/stats.hpp"

namespace xmal {

namespace {

// Scott's rule bandwidth per axis for a 2-d sample: n^(-1/6) * sample std.
Eigen::Vector2d scott_bandwidth(const Matrix& coords, const char* label) {
  const double n = static_cast<double>(coords.rows());
  Eigen::Vector2d bw;
  for (int j = 0; j < 2; ++j) {
    const auto col = coords.col(j).array();
    const double mean = col.mean();
    const double var = (col - mean).square().sum() / (n - 1.0);
    if (var <= 0.0)
      throw DataError(std::string("kde_overlap: ") + label +
                      " set has zero spread on axis " + std::to_string(j));
    bw(j) = std::pow(n, -1.0 / 6.0) * std::sqrt(var);
  }
  return bw;
}

// Density of a diagonal-bandwidth Gaussian KDE on the grid's cell centers.
Matrix kde_on_grid(const Matrix& coords, const Eigen::Vector2d& bw,
                   const GridSpec& grid) {
  const double dx = (grid.xmax - grid.xmin) / grid.nx;
  const double dy = (grid.ymax - grid.ymin) / grid.ny;
  Matrix density = Matrix::Zero(grid.nx, grid.ny);
  const double norm = 1.0 / (static_cast<double>(coords.rows()) * 2.0 *
                             std::numbers::pi * bw(0) * bw(1));
  for (Index p = 0; p < coords.rows(); ++p) {
    const double px = coords(p, 0);
    const double py = coords(p, 1);
    for (int i = 0; i < grid.nx; ++i) {
      const double x = grid.xmin + (i + 0.5) * dx;
      const double zx = (x - px) / bw(0);
      const double ex = std::exp(-0.5 * zx * zx);
      for (int j = 0; j < grid.ny; ++j) {
        const double y = grid.ymin + (j + 0.5) * dy;
        const double zy = (y - py) / bw(1);
        density(i, j) += ex * std::exp(-0.5 * zy * zy);
      }
    }
  }
  return density * norm;
}

}  // namespace

Pca2dResult pca_2d(const Matrix& X) {
  if (X.rows() < 3) throw DataError("pca_2d: need at least 3 rows");
  if (X.cols() < 2) throw DataError("pca_2d: need at least 2 columns");
  if (!X.allFinite()) throw NumericError("pca_2d: non-finite input");

  const Matrix centered = X.rowwise() - X.colwise().mean();
  const Matrix cov = centered.transpose() * centered /
                     static_cast<double>(X.rows() - 1);
  if (cov.trace() <= 0.0) throw DataError("pca_2d: input has rank 0");

  Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
  if (solver.info() != Eigen::Success)
    throw NumericError("pca_2d: eigendecomposition failed");

  // Eigen returns eigenvalues in increasing order; take the last two.
  const Index d = X.cols();
  Matrix axes(d, 2);
  Eigen::Vector2d eigenvalues;
  for (int k = 0; k < 2; ++k) {
    axes.col(k) = solver.eigenvectors().col(d - 1 - k);
    eigenvalues(k) = std::max(0.0, solver.eigenvalues()(d - 1 - k));
    Index argmax = 0;
    axes.col(k).cwiseAbs().maxCoeff(&argmax);
    if (axes(argmax, k) < 0.0) axes.col(k) = -axes.col(k);
  }

  Pca2dResult result;
  result.coords = centered * axes;
  const double total = solver.eigenvalues().cwiseMax(0.0).sum();
  result.explained_variance_ratio = eigenvalues / total;
  return result;
}

double kde_overlap(const Matrix& coords_a, const Matrix& coords_b,
                   GridSpec* grid_used) {
  if (coords_a.cols() != 2 || coords_b.cols() != 2)
    throw DataError("kde_overlap: expected N x 2 coordinates");
  if (coords_a.rows() < 2 || coords_b.rows() < 2)
    throw DataError("kde_overlap: need at least 2 points per set");

  const Eigen::Vector2d bw_a = scott_bandwidth(coords_a, "first");
  const Eigen::Vector2d bw_b = scott_bandwidth(coords_b, "second");

  GridSpec grid;
  for (int j = 0; j < 2; ++j) {
    const double lo = std::min(coords_a.col(j).minCoeff(),
                               coords_b.col(j).minCoeff());
    const double hi = std::max(coords_a.col(j).maxCoeff(),
                               coords_b.col(j).maxCoeff());
    const double pad = 0.10 * (hi - lo);
    if (j == 0) {
      grid.xmin = lo - pad;
      grid.xmax = hi + pad;
    } else {
      grid.ymin = lo - pad;
      grid.ymax = hi + pad;
    }
  }
  if (grid_used) *grid_used = grid;

  const Matrix density_a = kde_on_grid(coords_a, bw_a, grid);
  const Matrix density_b = kde_on_grid(coords_b, bw_b, grid);
  const double cell_area = (grid.xmax - grid.xmin) / grid.nx *
                           (grid.ymax - grid.ymin) / grid.ny;
  return density_a.cwiseMin(density_b).sum() * cell_area;
}

OverlapReport overlap_report(const Matrix& embeddings_a,
                             const Matrix& embeddings_b, bool normalize_rows) {
  if (embeddings_a.cols() != embeddings_b.cols())
    throw DataError("overlap_report: embedding dims differ");

  Matrix stacked(embeddings_a.rows() + embeddings_b.rows(),
                 embeddings_a.cols());
  stacked << embeddings_a, embeddings_b;
  if (normalize_rows) {
    for (Index i = 0; i < stacked.rows(); ++i) {
      const double norm = stacked.row(i).norm();
      if (norm == 0.0)
        throw NumericError("overlap_report: zero-norm embedding row " +
                           std::to_string(i));
      stacked.row(i) /= norm;
    }
  }

  const Pca2dResult pca = pca_2d(stacked);
  OverlapReport report;
  report.pca_coords_a = pca.coords.topRows(embeddings_a.rows());
  report.pca_coords_b = pca.coords.bottomRows(embeddings_b.rows());
  report.overlap_coefficient =
      kde_overlap(report.pca_coords_a, report.pca_coords_b, &report.grid);
  return report;
}

Matrix dim_psych_heatmap(const Matrix& teacher_matrix,
                         const Matrix& psych_matrix) {
  if (teacher_matrix.rows() != psych_matrix.rows())
    throw DataError("dim_psych_heatmap: row count mismatch");
  if (teacher_matrix.rows() < 3)
    throw DataError("dim_psych_heatmap: need at least 3 rows");

  Matrix heatmap(teacher_matrix.cols(), psych_matrix.cols());
  for (Index i = 0; i < teacher_matrix.cols(); ++i) {
    for (Index j = 0; j < psych_matrix.cols(); ++j) {
      heatmap(i, j) = pearson(teacher_matrix.col(i), psych_matrix.col(j)).r;
    }
  }
  return heatmap;
}

std::vector<double> benjamini_hochberg(const std::vector<double>& p_raw) {
  const std::size_t m = p_raw.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return p_raw[a] != p_raw[b] ? p_raw[a] < p_raw[b] : a < b;
  });

  std::vector<double> adjusted(m, 1.0);
  double running = 1.0;
  for (std::size_t k = m; k-- > 0;) {
    const double scaled =
        std::min(1.0, p_raw[order[k]] * static_cast<double>(m) /
                          static_cast<double>(k + 1));
    running = std::min(running, scaled);
    adjusted[order[k]] = running;
  }
  return adjusted;
}

NgramReport ngram_correlation(
    const std::vector<std::vector<std::string>>& texts_per_person,
    const Vector& scores, const NgramConfig& config) {
  const std::size_t persons = texts_per_person.size();
  if (persons < 3)
    throw DataError("ngram_correlation: need at least 3 persons");
  if (static_cast<Index>(persons) != scores.size())
    throw DataError("ngram_correlation: persons and scores must align");
  if (!scores.allFinite())
    throw NumericError("ngram_correlation: non-finite scores");
  if (config.n_max < 1 || config.n_max > 3)
    throw ConfigError("ngram_correlation: n_max must be 1..3");
  if (config.min_person_freq < 1)
    throw ConfigError("ngram_correlation: min_person_freq must be positive");

  // counts[ngram] = per-person occurrence counts; totals per n-gram order.
  std::map<std::string, std::pair<int, std::vector<double>>> counts;
  std::vector<std::array<double, 4>> totals(persons, {0.0, 0.0, 0.0, 0.0});
  for (std::size_t p = 0; p < persons; ++p) {
    for (const auto& text : texts_per_person[p]) {
      const auto tokens = tokenize(text);
      for (int n = 1; n <= config.n_max; ++n) {
        if (tokens.size() < static_cast<std::size_t>(n)) continue;
        const std::size_t windows = tokens.size() - n + 1;
        totals[p][n] += static_cast<double>(windows);
        for (std::size_t s = 0; s < windows; ++s) {
          auto& entry = counts[join_ngram(tokens, s, n)];
          if (entry.second.empty()) {
            entry.first = n;
            entry.second.assign(persons, 0.0);
          }
          entry.second[p] += 1.0;
        }
      }
    }
  }

  std::vector<NgramRow> rows;
  std::vector<double> p_values;
  for (const auto& [ngram, entry] : counts) {
    const auto& [order_n, per_person] = entry;
    int present = 0;
    for (double c : per_person)
      if (c > 0.0) ++present;
    if (present < config.min_person_freq) continue;

    Vector relfreq(static_cast<Index>(persons));
    for (std::size_t p = 0; p < persons; ++p) {
      const double total = totals[p][order_n];
      relfreq(static_cast<Index>(p)) =
          total > 0.0 ? per_person[p] / total : 0.0;
    }

    const PearsonResult corr = pearson(relfreq, scores);
    NgramRow row;
    row.ngram = ngram;
    row.r = corr.degenerate ? 0.0 : corr.r;
    if (corr.degenerate) {
      row.p_raw = 1.0;
    } else if (std::abs(row.r) >= 1.0) {
      row.p_raw = 0.0;
    } else {
      const double dof = static_cast<double>(persons - 2);
      const double t = row.r * std::sqrt(dof / (1.0 - row.r * row.r));
      row.p_raw = student_t_two_sided_p(t, dof);
    }
    rows.push_back(std::move(row));
    p_values.push_back(rows.back().p_raw);
  }
  if (rows.empty())
    throw DataError("ngram_correlation: no n-gram meets min_person_freq");

  const std::vector<double> adjusted = benjamini_hochberg(p_values);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].p_bh = adjusted[i];

  const auto by_abs_r = [](const NgramRow& a, const NgramRow& b) {
    const double aa = std::abs(a.r), bb = std::abs(b.r);
    return aa != bb ? aa > bb : a.ngram < b.ngram;
  };
  NgramReport report;
  for (auto& row : rows) {
    if (row.r > 0.0) {
      report.positive.push_back(std::move(row));
    } else if (row.r < 0.0) {
      report.negative.push_back(std::move(row));
    }
  }
  std::sort(report.positive.begin(), report.positive.end(), by_abs_r);
  std::sort(report.negative.begin(), report.negative.end(), by_abs_r);
  return report;
}

}  // namespace xmal
