// proloc: batch front end for the ProLoc location-proof engine.
//
// Subcommands: simulate, trustrank, calibrate, prove, eval.
// Exit codes: 0 success (including proofs that return false), 2 malformed
// config or arguments, 3 missing input file, 1 anything else.

#include <proloc/proloc.h>

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

namespace {

int exit_code_for(proloc_status status) {
  switch (status) {
  case PROLOC_OK:
    return 0;
  case PROLOC_ERR_PARSE:
  case PROLOC_ERR_CONFIG:
  case PROLOC_ERR_INVALID_ARGUMENT:
  case PROLOC_ERR_INVALID_DIMENSIONS:
    return 2;
  case PROLOC_ERR_IO:
    return 3;
  default:
    return 1;
  }
}

int finish(proloc_status status) {
  if (status != PROLOC_OK) {
    std::fprintf(stderr, "error: %s\n", proloc_last_error());
  }
  return exit_code_for(status);
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"ProLoc: retroactive location proofs over encounter histories"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
  std::string out_dir = ".";
  app.add_option("--seed", seed, "Override the dataset RNG seed")
      ->each([&seed_set](const std::string&) { seed_set = true; });
  app.add_option("--threads", threads, "Worker threads for eval sweeps");
  app.add_option("--out-dir", out_dir, "Output directory");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic dataset");
  std::string sim_config;
  sim->add_option("config", sim_config, "Simulation config JSON")->required();

  // trustrank
  auto* tr = app.add_subcommand("trustrank", "Compute TrustRank scores");
  std::string tr_dataset, tr_labels, tr_anchors, tr_params, tr_scores_out = "scores.csv",
              tr_graph_out;
  std::uint32_t tr_anchor_count = 10;
  std::uint64_t tr_anchor_seed = 1;
  tr->add_option("dataset", tr_dataset, "Dataset JSONL file")->required();
  tr->add_option("--labels", tr_labels, "Labels CSV (restricts anchors to honest devices)");
  tr->add_option("--anchors", tr_anchors, "Comma-separated anchor device ids");
  tr->add_option("--anchor-count", tr_anchor_count, "Anchors to pick when none given");
  tr->add_option("--anchor-seed", tr_anchor_seed, "Seed for anchor selection");
  tr->add_option("--params", tr_params,
                 "Trust params JSON (alpha, L, epoch_len, window, variant, ...)");
  tr->add_option("--scores-out", tr_scores_out, "Scores CSV output path");
  tr->add_option("--graph-out", tr_graph_out, "Optional graph CSV output path");

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "Calibrate the classification threshold");
  std::vector<std::string> cal_scenarios;
  std::string cal_out = "threshold.json";
  cal->add_option("--scenario", cal_scenarios,
                  "scores.csv:labels.csv pair (repeatable)")
      ->required();
  cal->add_option("--out", cal_out, "Threshold JSON output path");

  // prove
  auto* prove = app.add_subcommand("prove", "Run a location proof");
  std::string prove_dataset, prove_request, prove_threshold_file, prove_params,
      prove_out = "proof.json";
  double prove_threshold = 0.0;
  prove->add_option("dataset", prove_dataset, "Dataset directory")->required();
  prove->add_option("request", prove_request, "Proof request JSON file")->required();
  prove->add_option("--threshold-file", prove_threshold_file, "Calibrated threshold JSON");
  prove->add_option("--threshold", prove_threshold,
                    "Score threshold (used without --threshold-file; default 0)");
  prove->add_option("--params", prove_params, "Trust params JSON");
  prove->add_option("--out", prove_out, "Proof result output path");

  // eval
  auto* eval = app.add_subcommand("eval", "Run the evaluation sweeps");
  std::string eval_config;
  eval->add_option("config", eval_config, "Eval config JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (sim->parsed()) {
    return finish(proloc_run_simulate(sim_config.c_str(), out_dir.c_str(),
                                      seed_set ? 1 : 0, seed));
  }

  if (tr->parsed()) {
    return finish(proloc_run_trustrank(
        tr_dataset.c_str(), tr_labels.empty() ? nullptr : tr_labels.c_str(),
        tr_anchors.empty() ? nullptr : tr_anchors.c_str(), tr_anchor_count,
        tr_anchor_seed, tr_params.empty() ? nullptr : tr_params.c_str(),
        tr_scores_out.c_str(), tr_graph_out.empty() ? nullptr : tr_graph_out.c_str()));
  }

  if (cal->parsed()) {
    std::vector<std::string> scores, labels;
    for (const std::string& pair : cal_scenarios) {
      const auto colon = pair.find(':');
      if (colon == std::string::npos) {
        std::fprintf(stderr, "error: --scenario expects scores.csv:labels.csv\n");
        return 2;
      }
      scores.push_back(pair.substr(0, colon));
      labels.push_back(pair.substr(colon + 1));
    }
    std::vector<const char*> scores_ptrs, labels_ptrs;
    for (const auto& s : scores) scores_ptrs.push_back(s.c_str());
    for (const auto& s : labels) labels_ptrs.push_back(s.c_str());
    double threshold = 0.0;
    const proloc_status status =
        proloc_run_calibrate(scores_ptrs.data(), labels_ptrs.data(),
                             scores_ptrs.size(), cal_out.c_str(), &threshold);
    if (status == PROLOC_OK) std::printf("threshold %.12g\n", threshold);
    return finish(status);
  }

  if (prove->parsed()) {
    int ok = 0;
    const proloc_status status = proloc_run_prove(
        prove_dataset.c_str(), prove_request.c_str(),
        prove_threshold_file.empty() ? nullptr : prove_threshold_file.c_str(),
        prove_threshold, prove_params.empty() ? nullptr : prove_params.c_str(),
        prove_out.c_str(), &ok);
    if (status == PROLOC_OK) std::printf("ok %s\n", ok ? "true" : "false");
    return finish(status);
  }

  if (eval->parsed()) {
    return finish(proloc_run_eval(eval_config.c_str(), out_dir.c_str(),
                                  seed_set ? 1 : 0, seed, threads));
  }

  return 2;
}
