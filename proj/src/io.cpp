#include "semshield/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "semshield/knowledge_base.hpp"

namespace semshield {

using nlohmann::json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    fn(line, line_no);
  }
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = line.find(',');
    out.push_back(trim(line.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    line.remove_prefix(comma + 1);
  }
  return out;
}

std::string at(std::string_view where, std::size_t line) {
  return std::string(where) + ":" + std::to_string(line);
}

}  // namespace

double parse_double(std::string_view text, std::string_view where) {
  text = trim(text);
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto res = std::from_chars(text.data(), end, v);
  if (text.empty() || res.ec != std::errc() || res.ptr != end) {
    throw validation_error("cannot parse number \"" + std::string(text) + "\"", std::string(where));
  }
  return v;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw validation_error("cannot open " + path.string(), path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw validation_error("cannot write " + path.string(), path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw validation_error("write failed for " + path.string(), path.string());
}

Matrix parse_matrix_csv(std::string_view text, std::string_view where) {
  std::vector<double> values;
  std::size_t cols = 0, rows = 0;
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    const auto fields = split_commas(line);
    if (rows == 0) {
      cols = fields.size();
    } else if (fields.size() != cols) {
      throw validation_error("expected " + std::to_string(cols) + " columns, found " + std::to_string(fields.size()),
                             at(where, line_no));
    }
    for (auto f : fields) {
      const double v = parse_double(f, at(where, line_no));
      if (!std::isfinite(v)) throw validation_error("non-finite value", at(where, line_no));
      values.push_back(v);
    }
    ++rows;
  });
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::copy(values.begin(), values.end(), m.data());
  return m;
}

std::string matrix_to_csv(const Matrix& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

Matrix read_matrix_csv(const std::filesystem::path& path) { return parse_matrix_csv(read_text(path), path.string()); }

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) { write_text(path, matrix_to_csv(m)); }

std::vector<std::size_t> parse_index_csv(std::string_view text, std::string_view where) {
  std::vector<std::size_t> out;
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    std::size_t v = 0;
    const char* end = line.data() + line.size();
    auto res = std::from_chars(line.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end) {
      throw validation_error("expected a nonnegative integer, found \"" + std::string(line) + "\"",
                             at(where, line_no));
    }
    out.push_back(v);
  });
  return out;
}

std::string index_to_csv(const std::vector<std::size_t>& v) {
  std::string out;
  for (auto x : v) out += std::to_string(x) + '\n';
  return out;
}

std::vector<std::size_t> read_index_csv(const std::filesystem::path& path) {
  return parse_index_csv(read_text(path), path.string());
}

void write_index_csv(const std::filesystem::path& path, const std::vector<std::size_t>& v) {
  write_text(path, index_to_csv(v));
}

std::vector<Matrix> parse_mcd_csv(std::string_view text, std::string_view where) {
  const Matrix raw = parse_matrix_csv(text, where);
  std::vector<Matrix> out;
  if (raw.rows() == 0) return out;
  if (raw.cols() < 3) throw validation_error("mcd rows need example_id, pass_id and probabilities", std::string(where));
  const Eigen::Index classes = raw.cols() - 2;

  // Rows are grouped by example id, passes 0..T-1 in order.
  Eigen::Index passes = 0;
  while (passes < raw.rows() && raw(passes, 0) == 0.0) ++passes;
  if (passes == 0) throw validation_error("mcd: first row must belong to example 0", std::string(where));
  if (raw.rows() % passes != 0) {
    throw validation_error("mcd: every example must have the same number of passes", std::string(where));
  }
  const Eigen::Index examples = raw.rows() / passes;
  for (Eigen::Index e = 0; e < examples; ++e) {
    Matrix block(passes, classes);
    for (Eigen::Index t = 0; t < passes; ++t) {
      const Eigen::Index r = e * passes + t;
      if (raw(r, 0) != static_cast<double>(e) || raw(r, 1) != static_cast<double>(t)) {
        throw validation_error("mcd: expected example " + std::to_string(e) + " pass " + std::to_string(t),
                               at(where, static_cast<std::size_t>(r + 1)));
      }
      block.row(t) = raw.row(r).tail(classes);
    }
    validate_probability_rows(block, where);
    out.push_back(std::move(block));
  }
  return out;
}

std::string mcd_to_csv(const std::vector<Matrix>& samples) {
  std::string out;
  for (std::size_t e = 0; e < samples.size(); ++e) {
    const Matrix& block = samples[e];
    for (Eigen::Index t = 0; t < block.rows(); ++t) {
      out += std::to_string(e) + ',' + std::to_string(t);
      for (Eigen::Index j = 0; j < block.cols(); ++j) out += ',' + format_double(block(t, j));
      out += '\n';
    }
  }
  return out;
}

std::vector<Matrix> read_mcd_csv(const std::filesystem::path& path) {
  return parse_mcd_csv(read_text(path), path.string());
}

void write_mcd_csv(const std::filesystem::path& path, const std::vector<Matrix>& samples) {
  write_text(path, mcd_to_csv(samples));
}

void validate_probability_rows(const Matrix& probs, std::string_view where, double tol) {
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    if ((probs.row(i).array() < 0.0).any()) {
      throw validation_error("negative probability in row " + std::to_string(i), std::string(where));
    }
    if (std::abs(probs.row(i).sum() - 1.0) > tol) {
      throw validation_error("probabilities in row " + std::to_string(i) + " do not sum to 1", std::string(where));
    }
  }
}

namespace {

nlohmann::ordered_json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from_json(const json& j, const char* what) {
  if (!j.is_array()) throw validation_error(std::string("model: ") + what + " must be an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw validation_error(std::string("model: ") + what + " holds a non-number");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

}  // namespace

std::string model_to_json(const ProjectionModel& model) {
  nlohmann::ordered_json doc;
  doc["format"] = "semshield-projection";
  doc["version"] = 1;
  doc["semantic_dim"] = model.semantic_dim();
  doc["feature_dim"] = model.feature_dim();
  doc["lambda"] = model.lambda;
  doc["kb_fingerprint"] = model.kb_fingerprint;
  if (model.standardized()) {
    doc["standardize"] = {{"mean", vector_json(model.feature_mean)}, {"scale", vector_json(model.feature_scale)}};
  } else {
    doc["standardize"] = nullptr;
  }
  auto rows = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < model.w.rows(); ++i) rows.push_back(vector_json(model.w.row(i).transpose()));
  doc["w"] = std::move(rows);
  return doc.dump() + "\n";
}

ProjectionModel model_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw validation_error(std::string("model is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != "semshield-projection") {
    throw validation_error("not a projection model document");
  }
  try {
    ProjectionModel m;
    const auto k = doc.at("semantic_dim").get<Eigen::Index>();
    const auto n = doc.at("feature_dim").get<Eigen::Index>();
    m.lambda = doc.at("lambda").get<double>();
    m.kb_fingerprint = doc.at("kb_fingerprint").get<std::string>();
    if (!(m.lambda > 0.0)) throw validation_error("model: lambda must be > 0");
    const json& rows = doc.at("w");
    if (!rows.is_array() || static_cast<Eigen::Index>(rows.size()) != k) {
      throw shape_error("model: w must have semantic_dim rows");
    }
    m.w.resize(k, n);
    for (Eigen::Index i = 0; i < k; ++i) {
      const Vector row = vector_from_json(rows[static_cast<std::size_t>(i)], "w row");
      if (row.size() != n) throw shape_error("model: w row " + std::to_string(i) + " has wrong length");
      m.w.row(i) = row.transpose();
    }
    const json& st = doc.at("standardize");
    if (!st.is_null()) {
      m.feature_mean = vector_from_json(st.at("mean"), "standardize.mean");
      m.feature_scale = vector_from_json(st.at("scale"), "standardize.scale");
      if (m.feature_mean.size() != n || m.feature_scale.size() != n) {
        throw shape_error("model: standardisation vectors must have feature_dim entries");
      }
    }
    require_finite(m.w, "model w");
    return m;
  } catch (const json::exception& e) {
    throw validation_error(std::string("malformed model: ") + e.what());
  }
}

ProjectionModel read_model(const std::filesystem::path& path) { return model_from_json(read_text(path)); }

std::string model_fingerprint(const ProjectionModel& model) { return fnv1a_hex(model_to_json(model)); }

}  // namespace semshield
