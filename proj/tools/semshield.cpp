// semshield: fit semantic projections, score and explain classifier outputs,
// benchmark confidence scores, generate synthetic data.

#include <iostream>

#include <CLI11.hpp>

#include "semshield/commands.hpp"

namespace cli = semshield::cli;

int main(int argc, char** argv) {
  CLI::App app{"Semantic-embedding confidence scoring and error detection"};
  app.require_subcommand(1);

  cli::FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit the projection from training features and labels");
  fit_cmd->add_option("--features", fit.features, "Training features CSV (m x n)")->required();
  fit_cmd->add_option("--labels", fit.labels, "Training labels CSV")->required();
  fit_cmd->add_option("--kb", fit.kb, "Knowledge base JSON")->required();
  fit_cmd->add_option("--lambda", fit.lambda, "Regularisation weight (> 0)")->capture_default_str();
  fit_cmd->add_option("--ridge", fit.ridge, "Shift applied when the system is singular")->capture_default_str();
  fit_cmd->add_flag("--standardize", fit.standardize, "Standardise features before fitting");
  fit_cmd->add_option("--out", fit.out, "Model JSON output")->required();

  cli::DetectArgs detect;
  auto* detect_cmd = app.add_subcommand("detect", "Binarise projections and explain each prediction");
  detect_cmd->add_option("--model", detect.model)->required();
  detect_cmd->add_option("--kb", detect.kb)->required();
  detect_cmd->add_option("--features", detect.features)->required();
  detect_cmd->add_option("--predictions", detect.predictions)->required();
  detect_cmd->add_option("--out", detect.out, "JSON lines output (default stdout)");

  cli::BenchArgs bench;
  std::string methods = "semantic,softmax";
  auto* bench_cmd = app.add_subcommand("bench", "ROC/AUC comparison of confidence scores");
  bench_cmd->add_option("--model", bench.model)->required();
  bench_cmd->add_option("--kb", bench.kb)->required();
  bench_cmd->add_option("--features", bench.features)->required();
  bench_cmd->add_option("--labels", bench.labels)->required();
  bench_cmd->add_option("--predictions", bench.predictions)->required();
  bench_cmd->add_option("--probs", bench.probs);
  bench_cmd->add_option("--mcd", bench.mcd, "Monte-Carlo dropout samples, long format");
  bench_cmd->add_option("--train-features", bench.train_features, "Training features for nnd");
  bench_cmd->add_option("--nnd-k", bench.nnd_k)->capture_default_str();
  bench_cmd->add_option("--methods", methods, "Comma-separated: semantic,softmax,nnd,mcd")->capture_default_str();
  bench_cmd->add_option("--out", bench.out, "Report JSON output")->required();
  bench_cmd->add_option("--emit-csv", bench.emit_csv, "Also write method,fpr,tpr,threshold CSV");

  cli::GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a seeded synthetic data set");
  gen_cmd->add_option("--config", gen.config)->required();
  gen_cmd->add_option("--out-dir", gen.out_dir)->required();
  gen_cmd->add_option("--kb", gen.kb, "Knowledge base (overrides the config)");

  cli::ScoreArgs score;
  auto* score_cmd = app.add_subcommand("score", "Print example_id,semantic_distance per example");
  score_cmd->add_option("--model", score.model)->required();
  score_cmd->add_option("--kb", score.kb)->required();
  score_cmd->add_option("--features", score.features)->required();
  score_cmd->add_option("--predictions", score.predictions)->required();
  score_cmd->add_option("--out", score.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << cli::error_json("usage_error", e.what(), "") << "\n";
    return 2;
  }

  try {
    const unsigned threads = cli::threads_from_env();
    if (*fit_cmd) {
      cli::cmd_fit(fit, std::cout);
    } else if (*detect_cmd) {
      cli::cmd_detect(detect, std::cout);
    } else if (*bench_cmd) {
      bench.methods.clear();
      for (std::size_t pos = 0; pos <= methods.size();) {
        const auto comma = methods.find(',', pos);
        const auto end = comma == std::string::npos ? methods.size() : comma;
        if (end > pos) bench.methods.push_back(methods.substr(pos, end - pos));
        pos = end + 1;
      }
      bench.threads = threads;
      cli::cmd_bench(bench, std::cout);
    } else if (*gen_cmd) {
      cli::cmd_gen(gen, std::cout);
    } else if (*score_cmd) {
      score.threads = threads;
      cli::cmd_score(score, std::cout);
    }
  } catch (const semshield::Error& e) {
    std::cerr << cli::error_json(e.code(), e.what(), e.context()) << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << cli::error_json("error", e.what(), "") << "\n";
    return 2;
  }
  return 0;
}
