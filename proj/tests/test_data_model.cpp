#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "xmal/data_model.hpp"
#include "xmal/rng.hpp"
#include "testutil.hpp"

using namespace xmal;
using test::TempDir;

TEST_SUITE("data_model") {

TEST_CASE("manifest round trip preserves order and fields") {
  TempDir dir("manifest");
  std::vector<SegmentRecord> records(2);
  records[0] = {"s1", "p1", "hello there", Matrix::Constant(2, 3, 1.5), 2.5};
  records[1] = {"s2", "p1", "second one", Matrix::Constant(1, 3, -0.25), 0.0};
  save_manifest(records, dir / "manifest.jsonl", "features");

  const auto loaded = load_manifest(dir / "manifest.jsonl");
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].segment_id == "s1");
  CHECK(loaded[1].segment_id == "s2");
  CHECK(loaded[0].person_id == "p1");
  CHECK(loaded[0].text == "hello there");
  CHECK(loaded[0].duration_s == 2.5);
  CHECK(loaded[0].acoustic_features == records[0].acoustic_features);
  CHECK(loaded[1].acoustic_features == records[1].acoustic_features);
}

TEST_CASE("empty manifest gives an empty list") {
  TempDir dir("manifest_empty");
  std::ofstream(dir / "manifest.jsonl").close();
  CHECK(load_manifest(dir / "manifest.jsonl").empty());
}

TEST_CASE("duplicate segment id names the offending line") {
  TempDir dir("manifest_dup");
  write_matrix(Matrix::Constant(1, 2, 1.0), dir / "f.fbin");
  std::ofstream out(dir / "manifest.jsonl");
  const char* line =
      R"({"segment_id":"%s","person_id":"p","text":"t","features_path":"f.fbin","duration_s":1.0})";
  char buf[256];
  for (const char* id : {"s1", "s2", "s1"}) {
    std::snprintf(buf, sizeof buf, line, id);
    out << buf << '\n';
  }
  out.close();
  try {
    load_manifest(dir / "manifest.jsonl");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string message = e.what();
    CHECK(message.find("line 3") != std::string::npos);
    CHECK(message.find("duplicate") != std::string::npos);
  }
}

TEST_CASE("malformed manifest line reports its line number") {
  TempDir dir("manifest_bad");
  write_matrix(Matrix::Constant(1, 2, 1.0), dir / "f.fbin");
  std::ofstream out(dir / "manifest.jsonl");
  out << R"({"segment_id":"s1","person_id":"p","text":"t","features_path":"f.fbin","duration_s":1.0})"
      << "\nnot json at all\n";
  out.close();
  try {
    load_manifest(dir / "manifest.jsonl");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("manifest rejects unknown fields and missing files") {
  TempDir dir("manifest_unknown");
  std::ofstream out(dir / "manifest.jsonl");
  out << R"({"segment_id":"s1","person_id":"p","text":"t","features_path":"f.fbin","duration_s":1.0,"extra":1})"
      << '\n';
  out.close();
  CHECK_THROWS_AS(load_manifest(dir / "manifest.jsonl"), DataError);
  CHECK_THROWS_AS(load_manifest(dir / "nope.jsonl"), DataError);
}

TEST_CASE("split sizes follow floor allocation with remainder to train") {
  std::vector<std::string> ids;
  for (int i = 0; i < 10; ++i) ids.push_back("id" + std::to_string(i));
  const DatasetSplit split = split_dataset(ids, {0.8, 0.1, 0.1}, 7);
  CHECK(split.train.size() == 8);
  CHECK(split.val.size() == 1);
  CHECK(split.test.size() == 1);
}

TEST_CASE("degenerate ratios put everything in train") {
  const DatasetSplit split = split_dataset({"a", "b", "c"}, {1.0, 0.0, 0.0}, 99);
  CHECK(split.train.size() == 3);
  CHECK(split.val.empty());
  CHECK(split.test.empty());
}

TEST_CASE("split is deterministic and partitions the ids") {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng.below(40);
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back("x" + std::to_string(i));
    double a = rng.uniform(), b = rng.uniform(), c = rng.uniform();
    const double total = a + b + c;
    const SplitRatios ratios{a / total, b / total, c / total};
    const std::uint64_t seed = rng.next_u64();

    const DatasetSplit split = split_dataset(ids, ratios, seed);
    const DatasetSplit again = split_dataset(ids, ratios, seed);
    CHECK(split.train == again.train);
    CHECK(split.val == again.val);
    CHECK(split.test == again.test);

    CHECK(split.val.size() ==
          static_cast<std::size_t>(std::floor(ratios.val * n)));
    CHECK(split.test.size() ==
          static_cast<std::size_t>(std::floor(ratios.test * n)));

    std::vector<std::string> all;
    for (const auto* bucket : {&split.train, &split.val, &split.test})
      all.insert(all.end(), bucket->begin(), bucket->end());
    CHECK(all.size() == n);
    std::sort(all.begin(), all.end());
    std::vector<std::string> sorted_ids = ids;
    std::sort(sorted_ids.begin(), sorted_ids.end());
    CHECK(all == sorted_ids);
  }
}

TEST_CASE("split input validation") {
  CHECK_THROWS_AS(split_dataset({}, {0.8, 0.1, 0.1}, 0), DataError);
  CHECK_THROWS_AS(split_dataset({"a"}, {0.8, 0.1, 0.2}, 0), ConfigError);
  CHECK_THROWS_AS(split_dataset({"a"}, {1.2, -0.1, -0.1}, 0), ConfigError);
}

TEST_CASE("store file layout matches the declared format") {
  TempDir dir("store_layout");
  EmbeddingStore store;
  store.ids = {"a"};
  store.matrix = Matrix(1, 2);
  store.matrix << 1.0, 2.0;
  write_store(store, dir / "s.bin");

  const std::string bytes = test::slurp(dir / "s.bin");
  REQUIRE(bytes.size() == 16 + 8);
  const unsigned char expected[24] = {
      'X', 'M', 'A', 'L',       // magic
      1,   0,   0,   0,         // version
      1,   0,   0,   0,         // count
      2,   0,   0,   0,         // dim
      0,   0,   0x80, 0x3f,     // 1.0f little-endian
      0,   0,   0,   0x40};     // 2.0f little-endian
  for (int i = 0; i < 24; ++i)
    CHECK(static_cast<unsigned char>(bytes[i]) == expected[i]);

  const std::string ids = test::slurp(dir / "s.bin.ids");
  CHECK(ids == "a\n");
}

TEST_CASE("store round trip is exact") {
  TempDir dir("store_rt");
  Rng rng(11);
  EmbeddingStore store;
  store.ids = {"s1", "s2", "s3", "s4", "s5"};
  store.matrix = test::random_f32_matrix(rng, 5, 3);
  write_store(store, dir / "s.bin");
  const EmbeddingStore loaded = read_store(dir / "s.bin");
  CHECK(loaded.ids == store.ids);
  CHECK(loaded.matrix == store.matrix);
}

TEST_CASE("truncated payload is rejected") {
  TempDir dir("store_trunc");
  EmbeddingStore store;
  store.ids = {"a", "b"};
  store.matrix = Matrix::Constant(2, 2, 3.0);
  write_store(store, dir / "s.bin");
  std::filesystem::resize_file(dir / "s.bin", 16 + 4 * 3);
  try {
    read_store(dir / "s.bin");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("payload length mismatch") !=
          std::string::npos);
  }
}

TEST_CASE("wrong magic bytes are rejected") {
  TempDir dir("store_magic");
  EmbeddingStore store;
  store.ids = {"a"};
  store.matrix = Matrix::Constant(1, 1, 1.0);
  write_store(store, dir / "s.bin");
  {
    std::fstream f(dir / "s.bin",
                   std::ios::in | std::ios::out | std::ios::binary);
    f.put('Y');
  }
  try {
    read_store(dir / "s.bin");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("magic") != std::string::npos);
  }
}

TEST_CASE("id sidecar mismatch and duplicate ids are rejected") {
  TempDir dir("store_ids");
  EmbeddingStore store;
  store.ids = {"a", "b"};
  store.matrix = Matrix::Constant(2, 2, 1.0);
  write_store(store, dir / "s.bin");
  std::ofstream(dir / "s.bin.ids") << "a\n";
  CHECK_THROWS_AS(read_store(dir / "s.bin"), DataError);

  store.ids = {"a", "a"};
  CHECK_THROWS_AS(write_store(store, dir / "dup.bin"), DataError);
}

TEST_CASE("non-finite values are refused on write") {
  TempDir dir("store_nan");
  Matrix m = Matrix::Constant(1, 2, 1.0);
  m(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(write_matrix(m, dir / "m.bin"), NumericError);
}

TEST_CASE("outcome_records flattens the table sorted by person") {
  OutcomeTable table;
  table["p2"]["score"] = 1.0;
  table["p1"]["score"] = 2.0;
  table["p1"]["anger"] = 3.0;
  const auto records = outcome_records(table);
  REQUIRE(records.size() == 2);
  CHECK(records[0].person_id == "p1");
  CHECK(records[0].outcome_scores.size() == 2);
  CHECK(records[1].person_id == "p2");
  CHECK(records[1].outcome_scores.at("score") == 1.0);
}

TEST_CASE("outcome table round trip") {
  TempDir dir("outcomes");
  OutcomeTable table;
  table["p1"]["score"] = 1.25;
  table["p1"]["other"] = -3.0;
  table["p2"]["score"] = 0.5;
  save_outcomes(table, dir / "o.csv");
  CHECK(load_outcomes(dir / "o.csv") == table);

  std::ofstream(dir / "bad.csv") << "p1,score\n";
  CHECK_THROWS_AS(load_outcomes(dir / "bad.csv"), DataError);
}

}  // TEST_SUITE
