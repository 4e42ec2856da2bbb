#include "xmal/synthetic.hpp"

#include <cmath>
#include <sstream>

#include "xmal/rng.hpp"

namespace xmal {

namespace {

// The acoustic features express the outcome-aligned latent direction weakly
// (still well above the noise floor) while the remaining directions are
// strong enough to saturate a fresh tanh backbone. The teacher expresses all
// directions equally, which is what makes alignment pay off downstream.
constexpr double kOutcomeDirectionScale = 0.5;
constexpr double kOtherDirectionScale = 3.0;

constexpr int kTokensMin = 10;
constexpr int kTokensSpread = 6;

const std::vector<std::string>& vocabulary() {
  static const std::vector<std::string> words = {
      "alpha",  "bravo",  "charlie", "delta",  "echo",   "foxtrot",
      "golf",   "hotel",  "india",   "juliett", "kilo",  "lima",
      "mike",   "november", "oscar", "papa",   "quebec", "romeo",
      "sierra", "tango",  "uniform", "victor", "whiskey", "yankee"};
  return words;
}

std::string person_id_for(int p) {
  std::ostringstream out;
  out << 'p';
  out.width(4);
  out.fill('0');
  out << p;
  return out.str();
}

std::string segment_id_for(const std::string& person, int s) {
  std::ostringstream out;
  out << person << "_s";
  out.width(2);
  out.fill('0');
  out << s;
  return out.str();
}

void check_spec(const SyntheticSpec& spec) {
  if (spec.latent_dim < 1 || spec.teacher_dim < 1 || spec.feature_dim < 1 ||
      spec.frames < 1 || spec.persons < 1 || spec.segments_per_person < 1)
    throw ConfigError("synthetic: all dimensions must be at least 1");
  if (spec.noise_std < 0.0)
    throw ConfigError("synthetic: noise_std must be nonnegative");
  if (!spec.outcome_weights.empty() &&
      static_cast<int>(spec.outcome_weights.size()) != spec.latent_dim)
    throw ConfigError("synthetic: outcome_weights must have latent_dim entries");
}

}  // namespace

SyntheticDataset generate_synthetic(const SyntheticSpec& spec) {
  check_spec(spec);
  Rng rng(spec.seed);

  const Index latent = spec.latent_dim;
  SyntheticDataset dataset;

  dataset.outcome_direction = Vector::Constant(latent, 1.0);
  if (!spec.outcome_weights.empty()) {
    for (Index i = 0; i < latent; ++i)
      dataset.outcome_direction(i) = spec.outcome_weights[i];
  }
  const double w_norm = dataset.outcome_direction.norm();
  if (w_norm == 0.0)
    throw ConfigError("synthetic: outcome_weights must be nonzero");
  dataset.outcome_direction /= w_norm;

  // Structural draws, in fixed order: teacher map, basis completion,
  // feature mixing matrix, token emission matrix, lexicon.
  const double latent_scale = 1.0 / std::sqrt(static_cast<double>(latent));
  dataset.teacher_map =
      rng.normal_matrix(spec.teacher_dim, latent, latent_scale);

  Matrix basis_seed(latent, latent);
  basis_seed.col(0) = dataset.outcome_direction;
  basis_seed.rightCols(latent - 1) =
      rng.normal_matrix(latent, latent - 1, 1.0);
  Matrix basis = Eigen::HouseholderQR<Matrix>(basis_seed)
                     .householderQ() *
                 Matrix::Identity(latent, latent);
  if (basis.col(0).dot(dataset.outcome_direction) < 0.0) basis = -basis;

  Vector direction_scales = Vector::Constant(latent, kOtherDirectionScale);
  direction_scales(0) = kOutcomeDirectionScale;
  const Matrix mixing =
      rng.normal_matrix(spec.feature_dim, latent, latent_scale);
  dataset.acoustic_map =
      mixing * direction_scales.asDiagonal() * basis.transpose();

  const auto& vocab = vocabulary();
  const Matrix token_logits_map =
      rng.normal_matrix(static_cast<Index>(vocab.size()), latent, latent_scale);

  for (int d = 0; d < kPsychDims; ++d) {
    dataset.lexicon.intercepts[d] = 0.0;
    for (const auto& word : vocab)
      dataset.lexicon.weights[d][word] = rng.normal();
  }

  const int total_segments = spec.persons * spec.segments_per_person;
  dataset.latents.resize(total_segments, latent);
  dataset.teacher.matrix.resize(total_segments, spec.teacher_dim);

  int segment_index = 0;
  for (int p = 0; p < spec.persons; ++p) {
    const std::string person = person_id_for(p);
    for (int s = 0; s < spec.segments_per_person; ++s, ++segment_index) {
      const Vector z = rng.normal_vector(latent);
      dataset.latents.row(segment_index) = z.transpose();

      Vector teacher = dataset.teacher_map * z +
                       rng.normal_vector(spec.teacher_dim, spec.noise_std);
      const double norm = teacher.norm();
      if (norm == 0.0)
        throw NumericError("synthetic: degenerate teacher embedding");
      teacher /= norm;
      dataset.teacher.matrix.row(segment_index) = teacher.transpose();

      SegmentRecord rec;
      rec.segment_id = segment_id_for(person, s);
      rec.person_id = person;
      rec.duration_s = spec.frames / 100.0;
      const Vector clean = dataset.acoustic_map * z;
      rec.acoustic_features.resize(spec.frames, spec.feature_dim);
      for (int f = 0; f < spec.frames; ++f) {
        rec.acoustic_features.row(f) =
            (clean + rng.normal_vector(spec.feature_dim, spec.noise_std))
                .transpose();
      }

      // Token stream from a softmax over latent-driven logits.
      Vector logits = token_logits_map * z;
      logits.array() -= logits.maxCoeff();
      Vector probs = logits.array().exp();
      probs /= probs.sum();
      const int n_tokens =
          kTokensMin + static_cast<int>(rng.below(kTokensSpread));
      std::string text;
      for (int t = 0; t < n_tokens; ++t) {
        double u = rng.uniform();
        Index pick = probs.size() - 1;
        for (Index v = 0; v < probs.size(); ++v) {
          u -= probs(v);
          if (u < 0.0) {
            pick = v;
            break;
          }
        }
        if (t > 0) text.push_back(' ');
        text += vocab[static_cast<std::size_t>(pick)];
      }
      rec.text = std::move(text);

      dataset.teacher.ids.push_back(rec.segment_id);
      dataset.records.push_back(std::move(rec));
    }
  }

  // Person outcomes: linear readout of the mean latent plus noise.
  segment_index = 0;
  for (int p = 0; p < spec.persons; ++p) {
    Vector mean_latent = Vector::Zero(latent);
    for (int s = 0; s < spec.segments_per_person; ++s, ++segment_index)
      mean_latent += dataset.latents.row(segment_index).transpose();
    mean_latent /= static_cast<double>(spec.segments_per_person);
    const double outcome = dataset.outcome_direction.dot(mean_latent) +
                           rng.normal(0.0, spec.noise_std);
    dataset.outcomes[person_id_for(p)]["score"] = outcome;
  }

  return dataset;
}

void write_synthetic(const SyntheticDataset& dataset,
                     const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  save_manifest(dataset.records, out_dir / "manifest.jsonl", "features");
  write_store(dataset.teacher, out_dir / "teacher.bin");
  save_outcomes(dataset.outcomes, out_dir / "outcomes.csv");
  save_lexicon(dataset.lexicon, out_dir / "lexicon.csv");
}

}  // namespace xmal
