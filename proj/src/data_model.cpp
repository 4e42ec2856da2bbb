#include "xmal/data_model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "xmal/rng.hpp"

namespace xmal {

namespace {

constexpr char kMagic[4] = {'X', 'M', 'A', 'L'};
constexpr std::uint32_t kFormatVersion = 1;

void put_u32_le(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xff),
                         static_cast<char>((v >> 8) & 0xff),
                         static_cast<char>((v >> 16) & 0xff),
                         static_cast<char>((v >> 24) & 0xff)};
  out.write(bytes, 4);
}

std::uint32_t get_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 |
         static_cast<std::uint32_t>(p[3]) << 24;
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

double json_number(const nlohmann::json& obj, const std::string& key,
                   const std::string& where) {
  if (!obj.contains(key) || !obj[key].is_number())
    throw DataError(where + ": missing or non-numeric field '" + key + "'");
  return obj[key].get<double>();
}

std::string json_string(const nlohmann::json& obj, const std::string& key,
                        const std::string& where) {
  if (!obj.contains(key) || !obj[key].is_string())
    throw DataError(where + ": missing or non-string field '" + key + "'");
  return obj[key].get<std::string>();
}

}  // namespace

std::vector<SegmentRecord> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest: " + path.string());
  const auto base = path.has_parent_path() ? path.parent_path()
                                           : std::filesystem::path(".");

  std::vector<SegmentRecord> records;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = "manifest " + path.string() + " line " +
                              std::to_string(line_no);
    nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object())
      throw DataError(where + ": malformed record");
    static const std::set<std::string> kFields = {
        "segment_id", "person_id", "text", "features_path", "duration_s"};
    for (const auto& [key, value] : obj.items()) {
      (void)value;
      if (!kFields.count(key))
        throw DataError(where + ": unknown field '" + key + "'");
    }

    SegmentRecord rec;
    rec.segment_id = json_string(obj, "segment_id", where);
    rec.person_id = json_string(obj, "person_id", where);
    rec.text = json_string(obj, "text", where);
    rec.duration_s = json_number(obj, "duration_s", where);
    if (rec.duration_s < 0.0)
      throw DataError(where + ": negative duration_s");
    if (!seen.insert(rec.segment_id).second)
      throw DataError(where + ": duplicate segment_id '" + rec.segment_id + "'");

    const std::filesystem::path features =
        base / json_string(obj, "features_path", where);
    rec.acoustic_features = read_matrix(features);
    if (rec.acoustic_features.rows() < 1)
      throw DataError(where + ": feature matrix has no frames");
    if (!records.empty() &&
        rec.acoustic_features.cols() != records.front().acoustic_features.cols())
      throw DataError(where + ": feature_dim differs from earlier records");
    records.push_back(std::move(rec));
  }
  return records;
}

void save_manifest(const std::vector<SegmentRecord>& records,
                   const std::filesystem::path& path,
                   const std::filesystem::path& features_dir) {
  const auto base = path.has_parent_path() ? path.parent_path()
                                           : std::filesystem::path(".");
  std::filesystem::create_directories(base / features_dir);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest: " + path.string());
  for (const auto& rec : records) {
    const auto rel = features_dir / (rec.segment_id + ".fbin");
    write_matrix(rec.acoustic_features, base / rel);
    nlohmann::json obj;
    obj["segment_id"] = rec.segment_id;
    obj["person_id"] = rec.person_id;
    obj["text"] = rec.text;
    obj["features_path"] = rel.generic_string();
    obj["duration_s"] = rec.duration_s;
    out << obj.dump() << '\n';
  }
}

DatasetSplit split_dataset(const std::vector<std::string>& ids,
                           const SplitRatios& ratios, std::uint64_t seed) {
  if (ids.empty()) throw DataError("split_dataset: empty id list");
  if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0)
    throw ConfigError("split_dataset: negative ratio");
  const double sum = ratios.train + ratios.val + ratios.test;
  if (std::abs(sum - 1.0) > 1e-9)
    throw ConfigError("split_dataset: ratios sum to " + std::to_string(sum) +
                      ", expected 1");

  std::vector<std::string> shuffled = ids;
  Rng rng(seed);
  rng.shuffle(shuffled);

  const std::size_t n = shuffled.size();
  const auto n_val = static_cast<std::size_t>(std::floor(ratios.val * n));
  const auto n_test = static_cast<std::size_t>(std::floor(ratios.test * n));
  const std::size_t n_train = n - n_val - n_test;  // remainder goes to train

  DatasetSplit split;
  split.train.assign(shuffled.begin(), shuffled.begin() + n_train);
  split.val.assign(shuffled.begin() + n_train, shuffled.begin() + n_train + n_val);
  split.test.assign(shuffled.begin() + n_train + n_val, shuffled.end());
  return split;
}

void write_matrix(const Matrix& m, const std::filesystem::path& path) {
  if (!m.allFinite())
    throw NumericError("write_matrix: non-finite value in " + path.string());
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write matrix file: " + path.string());
  out.write(kMagic, 4);
  put_u32_le(out, kFormatVersion);
  put_u32_le(out, static_cast<std::uint32_t>(m.rows()));
  put_u32_le(out, static_cast<std::uint32_t>(m.cols()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(m(i, j)));
      put_u32_le(out, bits);
    }
  }
  if (!out) throw DataError("write failed: " + path.string());
}

Matrix read_matrix(const std::filesystem::path& path) {
  const std::string bytes = read_file_bytes(path);
  if (bytes.size() < 16)
    throw DataError("matrix file too short: " + path.string());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (std::memcmp(p, kMagic, 4) != 0)
    throw DataError("wrong magic bytes in " + path.string());
  const std::uint32_t version = get_u32_le(p + 4);
  if (version != kFormatVersion)
    throw DataError("unsupported matrix file version " + std::to_string(version) +
                    " in " + path.string());
  const std::uint32_t count = get_u32_le(p + 8);
  const std::uint32_t dim = get_u32_le(p + 12);
  const std::size_t expected =
      16 + static_cast<std::size_t>(count) * dim * 4;
  if (bytes.size() != expected)
    throw DataError("payload length mismatch in " + path.string() + ": header " +
                    std::to_string(count) + "x" + std::to_string(dim) +
                    " needs " + std::to_string(expected) + " bytes, file has " +
                    std::to_string(bytes.size()));

  Matrix m(count, dim);
  const unsigned char* q = p + 16;
  for (std::uint32_t i = 0; i < count; ++i) {
    for (std::uint32_t j = 0; j < dim; ++j, q += 4) {
      const float v = std::bit_cast<float>(get_u32_le(q));
      if (!std::isfinite(v))
        throw NumericError("non-finite value at row " + std::to_string(i) +
                           " in " + path.string());
      m(i, j) = static_cast<double>(v);
    }
  }
  return m;
}

void write_store(const EmbeddingStore& store, const std::filesystem::path& path) {
  if (static_cast<Index>(store.ids.size()) != store.matrix.rows())
    throw DataError("write_store: id count " + std::to_string(store.ids.size()) +
                    " does not match row count " +
                    std::to_string(store.matrix.rows()));
  {
    std::set<std::string> unique(store.ids.begin(), store.ids.end());
    if (unique.size() != store.ids.size())
      throw DataError("write_store: duplicate ids");
  }
  write_matrix(store.matrix, path);
  std::ofstream ids(path.string() + ".ids");
  if (!ids) throw DataError("cannot write id sidecar for " + path.string());
  for (const auto& id : store.ids) ids << id << '\n';
}

EmbeddingStore read_store(const std::filesystem::path& path) {
  EmbeddingStore store;
  store.matrix = read_matrix(path);
  std::ifstream ids(path.string() + ".ids");
  if (!ids) throw DataError("missing id sidecar: " + path.string() + ".ids");
  std::string line;
  while (std::getline(ids, line)) {
    if (!line.empty()) store.ids.push_back(line);
  }
  if (static_cast<Index>(store.ids.size()) != store.matrix.rows())
    throw DataError("id sidecar row count mismatch for " + path.string());
  return store;
}

Index store_row(const EmbeddingStore& store, const std::string& id) {
  for (std::size_t i = 0; i < store.ids.size(); ++i) {
    if (store.ids[i] == id) return static_cast<Index>(i);
  }
  throw DataError("id not found in store: " + id);
}

OutcomeTable load_outcomes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open outcomes: " + path.string());
  OutcomeTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw DataError("outcomes " + path.string() + " line " +
                      std::to_string(line_no) + ": expected person,outcome,value");
    const std::string person = line.substr(0, c1);
    const std::string outcome = line.substr(c1 + 1, c2 - c1 - 1);
    double value = 0.0;
    try {
      std::size_t used = 0;
      value = std::stod(line.substr(c2 + 1), &used);
    } catch (const std::exception&) {
      throw DataError("outcomes " + path.string() + " line " +
                      std::to_string(line_no) + ": bad value");
    }
    if (!std::isfinite(value))
      throw NumericError("outcomes " + path.string() + " line " +
                         std::to_string(line_no) + ": non-finite value");
    table[person][outcome] = value;
  }
  return table;
}

std::vector<PersonRecord> outcome_records(const OutcomeTable& outcomes) {
  std::vector<PersonRecord> records;
  records.reserve(outcomes.size());
  for (const auto& [person, scores] : outcomes)
    records.push_back({person, scores});
  return records;
}

void save_outcomes(const OutcomeTable& outcomes, const std::filesystem::path& path) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write outcomes: " + path.string());
  out.precision(17);
  for (const auto& [person, scores] : outcomes) {
    for (const auto& [name, value] : scores) {
      out << person << ',' << name << ',' << value << '\n';
    }
  }
}

}  // namespace xmal
