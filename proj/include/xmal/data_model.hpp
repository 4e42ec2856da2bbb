#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "xmal/types.hpp"

namespace xmal {

// One transcribed audio segment paired with its acoustic feature matrix.
struct SegmentRecord {
  std::string segment_id;
  std::string person_id;
  std::string text;
  Matrix acoustic_features;  // frames x feature_dim, at least one frame
  double duration_s = 0.0;
};

struct PersonRecord {
  std::string person_id;
  std::map<std::string, double> outcome_scores;
};

struct DatasetSplit {
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;
};

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

// Ordered id list plus one embedding row per id.
struct EmbeddingStore {
  std::vector<std::string> ids;
  Matrix matrix;  // ids.size() x dim
};

// person_id -> outcome name -> value
using OutcomeTable = std::map<std::string, std::map<std::string, double>>;

// One PersonRecord per table entry, sorted by person_id.
std::vector<PersonRecord> outcome_records(const OutcomeTable& outcomes);

// ---------------------------------------------------------------------------
// Manifest: one JSON object per line, UTF-8, with exactly the fields
// {segment_id, person_id, text, features_path, duration_s}. features_path
// names a matrix file (write_matrix below) holding that segment's
// frames x feature_dim acoustic features and is resolved relative to the
// manifest's directory.
// ---------------------------------------------------------------------------

// Parses a manifest and loads each referenced feature matrix. Records come
// back in file order. Malformed lines and duplicate segment ids are reported
// with their 1-based line number.
std::vector<SegmentRecord> load_manifest(const std::filesystem::path& path);

// Writes manifest lines to `path` and one feature matrix per segment under
// `features_dir` (created if needed), named "<segment_id>.fbin".
void save_manifest(const std::vector<SegmentRecord>& records,
                   const std::filesystem::path& path,
                   const std::filesystem::path& features_dir);

// ---------------------------------------------------------------------------
// Dataset split: shuffle ids with the seed, then partition. Bucket sizes are
// floor(n * ratio) with the remainder going to train.
// ---------------------------------------------------------------------------
DatasetSplit split_dataset(const std::vector<std::string>& ids,
                           const SplitRatios& ratios, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Binary matrix file: 16-byte header (magic "XMAL", version u32 = 1,
// count u32, dim u32, all little-endian) followed by count*dim IEEE-754
// binary32 values, row-major, little-endian. Values are rounded to binary32
// on write; read(write(m)) is bit-exact for matrices whose entries are
// binary32-representable.
//
// An embedding store is a matrix file plus a "<path>.ids" sidecar holding one
// id per row in row order.
// ---------------------------------------------------------------------------
void write_matrix(const Matrix& m, const std::filesystem::path& path);
Matrix read_matrix(const std::filesystem::path& path);

void write_store(const EmbeddingStore& store, const std::filesystem::path& path);
EmbeddingStore read_store(const std::filesystem::path& path);

// Row lookup helper; throws DataError when an id is absent.
Index store_row(const EmbeddingStore& store, const std::string& id);

// ---------------------------------------------------------------------------
// Outcome tables: one "person_id,outcome_name,value" line per entry.
// ---------------------------------------------------------------------------
OutcomeTable load_outcomes(const std::filesystem::path& path);
void save_outcomes(const OutcomeTable& outcomes, const std::filesystem::path& path);

}  // namespace xmal
