#include "semshield/commands.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>

#include <json.hpp>

#include "semshield/confidence.hpp"
#include "semshield/embedding.hpp"
#include "semshield/evaluation.hpp"
#include "semshield/io.hpp"
#include "semshield/knowledge_base.hpp"
#include "semshield/synthetic.hpp"

namespace semshield::cli {

namespace {

void check_indices(const std::vector<std::size_t>& v, std::size_t classes, const fs::path& where) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] >= classes) {
      throw index_error("class index " + std::to_string(v[i]) + " at row " + std::to_string(i) +
                            " exceeds class count " + std::to_string(classes),
                        where.string());
    }
  }
}

void check_rows(std::size_t got, std::size_t expected, const fs::path& where) {
  if (got != expected) {
    throw shape_error("row count mismatch: " + where.string() + " has " + std::to_string(got) + " rows, expected " +
                          std::to_string(expected),
                      where.string());
  }
}

// An empty file is an empty matrix; otherwise the column count must match.
Matrix read_features(const fs::path& path, std::optional<Eigen::Index> cols) {
  Matrix f = read_matrix_csv(path);
  if (f.rows() > 0 && cols && f.cols() != *cols) {
    throw shape_error("features in " + path.string() + " have " + std::to_string(f.cols()) + " columns, model expects " +
                          std::to_string(*cols),
                      path.string());
  }
  return f;
}

class OutputSink {
 public:
  OutputSink(const std::optional<fs::path>& path, std::ostream& fallback) {
    if (path) {
      file_.open(*path, std::ios::binary | std::ios::trunc);
      if (!file_) throw validation_error("cannot write " + path->string(), path->string());
      stream_ = &file_;
    } else {
      stream_ = &fallback;
    }
  }
  std::ostream& stream() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

}  // namespace

FitSummary cmd_fit(const FitArgs& args, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  const KnowledgeBase kb = KnowledgeBase::from_file(args.kb);
  const Matrix features = read_matrix_csv(args.features);
  const auto labels = read_index_csv(args.labels);
  check_rows(labels.size(), static_cast<std::size_t>(features.rows()), args.labels);
  check_indices(labels, kb.num_classes(), args.labels);
  if (!(args.lambda > 0.0)) throw validation_error("lambda must be > 0", "--lambda");

  const Matrix annotations = annotate(kb, labels);
  FitOptions opts;
  opts.lambda = args.lambda;
  opts.standardize = args.standardize;
  opts.solver.ridge = args.ridge;
  opts.kb_fingerprint = kb.fingerprint();
  const ProjectionModel model = fit(features, annotations, opts);
  write_text(args.out, model_to_json(model));

  FitSummary summary;
  summary.residual = fit_residual(features, annotations, model);
  summary.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  log << "fit: " << features.rows() << " examples, n=" << features.cols() << ", k=" << kb.dim()
      << ", lambda=" << args.lambda << "\n"
      << "residual " << std::scientific << std::setprecision(3) << summary.residual << "\n"
      << "wall time " << std::fixed << std::setprecision(3) << summary.seconds << " s\n";
  log.unsetf(std::ios::floatfield);
  return summary;
}

void cmd_detect(const DetectArgs& args, std::ostream& out) {
  const KnowledgeBase kb = KnowledgeBase::from_file(args.kb);
  const ProjectionModel model = read_model(args.model);
  if (!model.kb_fingerprint.empty() && model.kb_fingerprint != kb.fingerprint()) {
    throw validation_error("model was fitted against a different knowledge base", args.kb.string());
  }
  const PrototypeSet protos = build_prototypes(kb);
  const Matrix features = read_features(args.features, model.feature_dim());
  const auto predictions = read_index_csv(args.predictions);
  check_rows(predictions.size(), static_cast<std::size_t>(features.rows()), args.predictions);
  check_indices(predictions, kb.num_classes(), args.predictions);

  OutputSink sink(args.out, out);
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    const std::size_t pred = predictions[static_cast<std::size_t>(i)];
    const SemanticVector s = project(model, features.row(i).transpose());
    const Explanation ex = detect_error(s, pred, kb, protos);
    nlohmann::ordered_json line;
    line["example_id"] = i;
    line["predicted"] = pred;
    line["predicted_label"] = kb.classes()[pred].label;
    nlohmann::ordered_json attrs = nlohmann::ordered_json::object();
    nlohmann::ordered_json weights = nlohmann::ordered_json::object();
    for (const auto& g : ex.groups) {
      attrs[g.group] = g.value;
      weights[g.group] = g.weight;
    }
    line["explanation"] = std::move(attrs);
    line["weights"] = std::move(weights);
    line["summary"] = ex.summary();
    line["valid"] = ex.valid;
    line["match"] = ex.matches;
    line["matched_label"] = ex.valid ? nlohmann::ordered_json(kb.classes()[static_cast<std::size_t>(ex.matched_class)].label)
                                     : nlohmann::ordered_json(nullptr);
    line["semantic_distance"] = semantic_distance(s, protos[pred]);
    sink.stream() << line.dump() << "\n";
  }
}

void cmd_bench(const BenchArgs& args, std::ostream& out) {
  std::vector<Method> methods;
  for (const auto& name : args.methods) methods.push_back(parse_method(name));
  if (methods.empty()) throw configuration_error("no methods requested", "--methods");

  // Report every missing artifact before touching any file.
  std::string missing;
  auto need = [&](bool present, const char* flag) {
    if (!present) missing += (missing.empty() ? "" : ", ") + std::string(flag);
  };
  for (Method m : methods) {
    if (m == Method::Softmax) need(args.probs.has_value(), "--probs");
    if (m == Method::Mcd) need(args.mcd.has_value(), "--mcd");
    if (m == Method::Nnd) need(args.train_features.has_value(), "--train-features");
  }
  if (!missing.empty()) throw configuration_error("requested methods need " + missing, missing);

  const KnowledgeBase kb = KnowledgeBase::from_file(args.kb);
  const ProjectionModel model = read_model(args.model);
  const PrototypeSet protos = build_prototypes(kb);
  const Matrix features = read_features(args.features, model.feature_dim());
  const auto m = static_cast<std::size_t>(features.rows());
  const auto labels = read_index_csv(args.labels);
  const auto predictions = read_index_csv(args.predictions);
  check_rows(labels.size(), m, args.labels);
  check_rows(predictions.size(), m, args.predictions);
  check_indices(labels, kb.num_classes(), args.labels);
  check_indices(predictions, kb.num_classes(), args.predictions);

  std::optional<Matrix> probs, train;
  std::optional<std::vector<Matrix>> mcd;
  if (args.probs) {
    probs = read_matrix_csv(*args.probs);
    check_rows(static_cast<std::size_t>(probs->rows()), m, *args.probs);
    if (probs->rows() > 0 && probs->cols() != static_cast<Eigen::Index>(kb.num_classes())) {
      throw shape_error("probs must have one column per class", args.probs->string());
    }
    validate_probability_rows(*probs, args.probs->string());
  }
  if (args.mcd) {
    mcd = read_mcd_csv(*args.mcd);
    check_rows(mcd->size(), m, *args.mcd);
  }
  if (args.train_features) train = read_features(*args.train_features, features.cols());

  ScoringInputs in;
  in.model = &model;
  in.kb = &kb;
  in.protos = &protos;
  in.features = &features;
  in.predictions = predictions;
  in.labels = labels;
  in.probs = probs ? &*probs : nullptr;
  in.mcd = mcd ? &*mcd : nullptr;
  in.train_features = train ? &*train : nullptr;
  in.nnd_k = args.nnd_k;
  in.threads = args.threads;

  const BenchReport report = bench(in, methods);
  write_text(args.out, report_to_json(report));
  if (args.emit_csv) write_text(*args.emit_csv, report_to_csv(report));

  out << "method     AUC\n";
  for (const auto& [method, curve] : report.methods) {
    out << std::left << std::setw(10) << to_string(method) << " " << std::fixed << std::setprecision(4) << curve.auc
        << "\n";
  }
  out << "examples " << report.counts.total << ", mispredicted " << report.counts.mispredicted << "\n";
  out.unsetf(std::ios::floatfield | std::ios::adjustfield);
}

void cmd_gen(const GenArgs& args, std::ostream& log) {
  nlohmann::json cfg_json;
  try {
    cfg_json = nlohmann::json::parse(read_text(args.config));
  } catch (const nlohmann::json::parse_error& e) {
    throw validation_error(std::string("config is not valid JSON: ") + e.what(), args.config.string());
  }
  fs::path kb_path;
  if (args.kb) {
    kb_path = *args.kb;
  } else if (cfg_json.is_object() && cfg_json.contains("kb") && cfg_json["kb"].is_string()) {
    kb_path = cfg_json["kb"].get<std::string>();
    if (kb_path.is_relative()) kb_path = args.config.parent_path() / kb_path;
  } else {
    throw configuration_error("no knowledge base: set \"kb\" in the config or pass --kb", "kb");
  }
  const KnowledgeBase kb = KnowledgeBase::from_file(kb_path);
  SynthConfig cfg = SynthConfig::from_json(cfg_json);
  if (cfg.classes == 0) cfg.classes = kb.num_classes();

  const SynthData data = generate(cfg, kb);
  fs::create_directories(args.out_dir);
  const auto& d = args.out_dir;
  write_matrix_csv(d / "train_features.csv", data.train_features);
  write_index_csv(d / "train_labels.csv", data.train_labels);
  write_matrix_csv(d / "features.csv", data.test_features);
  write_index_csv(d / "labels.csv", data.test_labels);
  write_index_csv(d / "predictions.csv", data.predictions);
  write_matrix_csv(d / "probs.csv", data.probs);
  write_mcd_csv(d / "mcd.csv", data.mcd);
  write_text(d / "kb.json", kb.to_json() + "\n");
  auto meta = data.meta;
  meta["files"] = {"train_features.csv", "train_labels.csv", "features.csv", "labels.csv",
                   "predictions.csv",    "probs.csv",        "mcd.csv",      "kb.json"};
  write_text(d / "meta.json", meta.dump(2) + "\n");
  log << "gen: " << data.train_labels.size() << " train / " << data.test_labels.size() << " test examples, "
      << meta["mispredictions"].get<std::size_t>() << " mispredictions -> " << d.string() << "\n";
}

void cmd_score(const ScoreArgs& args, std::ostream& out) {
  const KnowledgeBase kb = KnowledgeBase::from_file(args.kb);
  const ProjectionModel model = read_model(args.model);
  const PrototypeSet protos = build_prototypes(kb);
  const Matrix features = read_features(args.features, model.feature_dim());
  const auto predictions = read_index_csv(args.predictions);
  check_rows(predictions.size(), static_cast<std::size_t>(features.rows()), args.predictions);
  check_indices(predictions, kb.num_classes(), args.predictions);

  ScoringInputs in;
  in.model = &model;
  in.kb = &kb;
  in.protos = &protos;
  in.features = &features;
  in.predictions = predictions;
  in.threads = args.threads;
  const auto records = score_batch(Method::Semantic, in);

  OutputSink sink(args.out, out);
  for (const auto& r : records) sink.stream() << r.example_id << ',' << format_double(r.score) << '\n';
}

std::string error_json(const std::string& code, const std::string& message, const std::string& context) {
  return nlohmann::ordered_json{{"code", code}, {"message", message}, {"context", context}}.dump();
}

unsigned threads_from_env() {
  const char* v = std::getenv("SEMSHIELD_THREADS");
  if (!v || !*v) return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1) return 1;
  return static_cast<unsigned>(std::min<long>(n, 256));
}

}  // namespace semshield::cli
