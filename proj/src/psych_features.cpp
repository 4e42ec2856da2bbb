#include "xmal/psych_features.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace xmal {

int psych_dim_index(const std::string& name) {
  for (int i = 0; i < kPsychDims; ++i) {
    if (name == kPsychDimNames[i]) return i;
  }
  return -1;
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    const bool token_char = c >= 0x80 || std::isalnum(c) || c == '\'';
    if (token_char) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::string join_ngram(const std::vector<std::string>& tokens, std::size_t start,
                       std::size_t n) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) out.push_back(' ');
    out += tokens[start + i];
  }
  return out;
}

PsychDims extract_psych(const std::string& text, const Lexicon& lexicon) {
  PsychDims scores;
  for (int d = 0; d < kPsychDims; ++d) scores(d) = lexicon.intercepts[d];

  const auto tokens = tokenize(text);
  if (tokens.empty()) return scores;

  std::map<std::string, int> counts;
  for (const auto& t : tokens) ++counts[t];
  const double total = static_cast<double>(tokens.size());

  for (const auto& [token, count] : counts) {
    const double relfreq = count / total;
    for (int d = 0; d < kPsychDims; ++d) {
      const auto it = lexicon.weights[d].find(token);
      if (it != lexicon.weights[d].end()) scores(d) += it->second * relfreq;
    }
  }
  return scores;
}

Matrix extract_psych_matrix(const std::vector<std::string>& texts,
                            const Lexicon& lexicon) {
  Matrix out(static_cast<Index>(texts.size()), kPsychDims);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    out.row(static_cast<Index>(i)) = extract_psych(texts[i], lexicon).transpose();
  }
  return out;
}

ScalerParams fit_scaler(const Matrix& teacher_matrix, const Matrix& psych_matrix) {
  if (teacher_matrix.rows() < 2)
    throw DataError("fit_scaler: need at least 2 rows");
  if (psych_matrix.rows() != teacher_matrix.rows())
    throw DataError("fit_scaler: teacher and psych row counts differ");
  if (psych_matrix.cols() != kPsychDims)
    throw DataError("fit_scaler: psych matrix must have 10 columns");
  if (!teacher_matrix.allFinite() || !psych_matrix.allFinite())
    throw NumericError("fit_scaler: non-finite input");

  ScalerParams scaler;
  scaler.teacher_mean = teacher_matrix.mean();
  scaler.teacher_std = std::sqrt(
      (teacher_matrix.array() - scaler.teacher_mean).square().mean());
  if (scaler.teacher_std <= 0.0)
    throw DataError("fit_scaler: teacher matrix has zero variance");

  for (int d = 0; d < kPsychDims; ++d) {
    const auto col = psych_matrix.col(d).array();
    const double mean = col.mean();
    const double stddev = std::sqrt((col - mean).square().mean());
    if (stddev <= 0.0)
      throw DataError(std::string("fit_scaler: zero-variance psych dimension ") +
                      kPsychDimNames[d]);
    scaler.per_dim_mean(d) = mean;
    scaler.per_dim_std(d) = stddev;
  }
  return scaler;
}

PsychDims standardize_psych(const PsychDims& psych, const ScalerParams& scaler) {
  return ((psych - scaler.per_dim_mean).array() / scaler.per_dim_std.array() *
          scaler.teacher_std +
          scaler.teacher_mean)
      .matrix();
}

Matrix standardize_psych_matrix(const Matrix& psych, const ScalerParams& scaler) {
  if (psych.cols() != kPsychDims)
    throw DataError("standardize_psych_matrix: expected 10 columns");
  Matrix out(psych.rows(), kPsychDims);
  for (Index i = 0; i < psych.rows(); ++i) {
    out.row(i) =
        standardize_psych(PsychDims(psych.row(i).transpose()), scaler).transpose();
  }
  return out;
}

Lexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open lexicon: " + path.string());
  Lexicon lexicon;
  bool any_entry = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw DataError("lexicon " + path.string() + " line " +
                      std::to_string(line_no) + ": expected dimension,token,weight");
    const std::string dim_name = line.substr(0, c1);
    const std::string token = line.substr(c1 + 1, c2 - c1 - 1);
    const int dim = psych_dim_index(dim_name);
    if (dim < 0)
      throw DataError("lexicon " + path.string() + " line " +
                      std::to_string(line_no) + ": unknown dimension '" +
                      dim_name + "'");
    double value = 0.0;
    try {
      value = std::stod(line.substr(c2 + 1));
    } catch (const std::exception&) {
      throw DataError("lexicon " + path.string() + " line " +
                      std::to_string(line_no) + ": bad weight");
    }
    if (!std::isfinite(value))
      throw NumericError("lexicon " + path.string() + " line " +
                         std::to_string(line_no) + ": non-finite weight");
    if (token == "_intercept") {
      lexicon.intercepts[dim] = value;
    } else {
      lexicon.weights[dim][token] = value;
      any_entry = true;
    }
  }
  if (!any_entry)
    throw DataError("lexicon " + path.string() + " has no token entries");
  return lexicon;
}

void save_lexicon(const Lexicon& lexicon, const std::filesystem::path& path) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write lexicon: " + path.string());
  out.precision(17);
  for (int d = 0; d < kPsychDims; ++d) {
    out << kPsychDimNames[d] << ",_intercept," << lexicon.intercepts[d] << '\n';
    for (const auto& [token, weight] : lexicon.weights[d]) {
      out << kPsychDimNames[d] << ',' << token << ',' << weight << '\n';
    }
  }
}

void save_scaler(const ScalerParams& scaler, const std::filesystem::path& path) {
  nlohmann::json obj;
  obj["teacher_mean"] = scaler.teacher_mean;
  obj["teacher_std"] = scaler.teacher_std;
  obj["per_dim_mean"] = std::vector<double>(scaler.per_dim_mean.data(),
                                            scaler.per_dim_mean.data() + kPsychDims);
  obj["per_dim_std"] = std::vector<double>(scaler.per_dim_std.data(),
                                           scaler.per_dim_std.data() + kPsychDims);
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write scaler: " + path.string());
  out << obj.dump(2) << '\n';
}

ScalerParams load_scaler(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open scaler: " + path.string());
  nlohmann::json obj = nlohmann::json::parse(in, nullptr, false);
  if (obj.is_discarded() || !obj.is_object())
    throw DataError("malformed scaler file: " + path.string());
  ScalerParams scaler;
  try {
    scaler.teacher_mean = obj.at("teacher_mean").get<double>();
    scaler.teacher_std = obj.at("teacher_std").get<double>();
    const auto mean = obj.at("per_dim_mean").get<std::vector<double>>();
    const auto stddev = obj.at("per_dim_std").get<std::vector<double>>();
    if (mean.size() != kPsychDims || stddev.size() != kPsychDims)
      throw DataError("scaler arrays must have 10 entries");
    for (int d = 0; d < kPsychDims; ++d) {
      scaler.per_dim_mean(d) = mean[d];
      scaler.per_dim_std(d) = stddev[d];
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed scaler file " + path.string() + ": " + e.what());
  }
  if (scaler.teacher_std <= 0.0 || (scaler.per_dim_std.array() <= 0.0).any())
    throw DataError("scaler file has non-positive std: " + path.string());
  return scaler;
}

}  // namespace xmal
