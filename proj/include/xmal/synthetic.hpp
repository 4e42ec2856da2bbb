#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "xmal/data_model.hpp"
#include "xmal/psych_features.hpp"
#include "xmal/types.hpp"

namespace xmal {

// Desk-scale generative stand-in for the clinical interview corpora. Every
// segment shares one latent vector z between its teacher embedding, its
// acoustic features, and its token stream; the person-level outcome is a
// linear readout of the mean latent plus noise, so the value of aligning
// student embeddings to the teacher is measurable downstream.
struct SyntheticSpec {
  int latent_dim = 8;
  int teacher_dim = 32;
  int feature_dim = 16;
  int frames = 10;
  int persons = 200;
  int segments_per_person = 5;
  double noise_std = 0.1;
  // Linear outcome readout of the mean latent; empty means all-ones scaled
  // to unit norm.
  std::vector<double> outcome_weights;
  std::uint64_t seed = 0;
};

struct SyntheticDataset {
  std::vector<SegmentRecord> records;
  EmbeddingStore teacher;  // one row per segment, unit norm
  OutcomeTable outcomes;   // one "score" per person
  Lexicon lexicon;         // toy lexicon over the synthetic vocabulary
  // Generative internals kept for verification.
  Matrix teacher_map;      // teacher_dim x latent
  Matrix acoustic_map;     // feature_dim x latent
  Matrix latents;          // segments x latent
  Vector outcome_direction;
};

SyntheticDataset generate_synthetic(const SyntheticSpec& spec);

// Writes manifest.jsonl (+ features/), teacher.bin (+ .ids), outcomes.csv,
// and lexicon.csv under out_dir.
void write_synthetic(const SyntheticDataset& dataset,
                     const std::filesystem::path& out_dir);

}  // namespace xmal
