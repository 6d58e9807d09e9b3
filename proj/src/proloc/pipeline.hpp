#pragma once

#include "proloc/geo.hpp"
#include "proloc/history.hpp"
#include "proloc/proof.hpp"
#include "proloc/sim.hpp"
#include "proloc/trust.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace proloc {

// Caches TrustRank results per anchor set; repeated proof calls from the same
// verifier reuse the cached scores.
class TrustCache {
public:
  TrustCache(const EncounterGraph& graph, double alpha, double tolerance)
      : graph_(graph), alpha_(alpha), tolerance_(tolerance) {}

  const TrustScores& scores_for(std::vector<DeviceId> anchors);

private:
  const EncounterGraph& graph_;
  double alpha_;
  double tolerance_;
  std::mutex mutex_;
  std::map<std::vector<DeviceId>, std::unique_ptr<TrustScores>> cache_;
};

struct NetworkConfig {
  // Either grid parameters or a file path.
  std::uint32_t grid_width = 64;
  std::uint32_t grid_height = 64;
  double grid_pitch = 40.0;
  double grid_speed = 1.4;
  std::string file; // wins when non-empty
};

MapNetwork make_network(const NetworkConfig& cfg);

struct SimulateJob {
  NetworkConfig network;
  SimConfig sim;
  std::optional<AttackConfig> attack;
  HistoryParams history;
};

SimulateJob parse_simulate_config(const std::string& json_text);

struct SimulateOutput {
  std::string network_path;
  std::string dataset_path;
  std::string ground_truth_path;
  std::string visits_path;
  std::string labels_path;
  std::size_t n_reports = 0;
  std::size_t n_adverts = 0;
  std::size_t n_visits = 0;
  std::size_t n_devices = 0;
};

// Generates the dataset files under out_dir: network.json, dataset.jsonl,
// ground_truth.jsonl, visits.jsonl, labels.csv, meta.json.
SimulateOutput run_simulate(const SimulateJob& job, const std::string& out_dir,
                            std::optional<std::uint64_t> seed_override);

enum class WeightVariant { discrete, continuous };

struct TrustJob {
  std::string dataset_path;
  std::vector<DeviceId> anchors; // explicit; empty -> pick anchor_count
  std::uint32_t anchor_count = 10;
  std::uint64_t anchor_seed = 1;
  TrustParams params;
  WeightVariant variant = WeightVariant::discrete;
  HistoryParams history;
  std::string labels_path; // optional, for labeled score export
};

struct TrustOutput {
  TrustScores scores;
  std::vector<DeviceId> anchors;
  std::size_t graph_nodes = 0;
  std::size_t graph_edges = 0;
};

TrustOutput run_trustrank(const TrustJob& job, const std::string& scores_csv_path,
                          const std::string& graph_csv_path = "");

TrustScores load_scores_csv(const std::string& path);

struct CalibrateJob {
  // Pairs of (scores csv, labels csv).
  std::vector<std::pair<std::string, std::string>> scenarios;
};

ThresholdResult run_calibrate(const CalibrateJob& job, const std::string& out_json_path);
ThresholdResult load_threshold_json(const std::string& path);

struct ProveJob {
  std::string dataset_dir; // expects network.json + dataset.jsonl (+ meta.json)
  ProofRequest request;
  double threshold = 0.0; // devices with score <= T are suspicious
  TrustParams trust;
  WeightVariant variant = WeightVariant::discrete;
};

ProofResult run_prove(const ProveJob& job, const std::string& out_json_path);

// -------- Evaluation sweeps --------

struct EvalSetting {
  std::string name;
  double report_interval = 180.0;
  double adoption_rate = 1.0;
};

struct EvalConfig {
  NetworkConfig network;
  SimConfig base_sim;
  // World for the attack/TrustRank sweep. Defaults to base_sim spread over
  // more POIs: smaller co-location groups sharpen the per-epoch Sybil
  // dilution, mirroring the sparser real-world dataset the attack analysis
  // runs on.
  std::optional<SimConfig> trust_sim;
  HistoryParams history;
  std::vector<EvalSetting> settings;
  std::uint32_t sample_visits = 500;
  std::uint32_t n_max = 10;
  double window = 300.0;
  double r_ble = 50.0;
  std::uint32_t m_cap = 32;
  std::uint64_t eval_seed = 99;
  // Attack grid.
  std::vector<std::uint32_t> corrupt_counts{1, 2, 4};
  std::vector<std::uint32_t> sybil_counts{1, 8, 16};
  std::uint32_t anchor_count = 10;
  TrustParams trust;
  int threads = 1;
};

EvalConfig parse_eval_config(const std::string& json_text);

struct VisitProfile {
  DeviceId device = 0;
  double t = 0.0;
  NodeId truth_node = 0;
  bool valid = false;                // false if the proof errored (e.g. no self report)
  std::vector<double> min_radius;    // index N-1; +inf when < N candidates
};

struct PrecisionSetting {
  EvalSetting setting;
  std::vector<VisitProfile> profiles; // aligned with the shared sample order
};

struct PrecisionResult {
  std::vector<PrecisionSetting> settings;
  std::uint32_t n_max = 10;
};

PrecisionResult run_precision_sweep(const MapNetwork& net, const EvalConfig& cfg);

struct AttackScenarioResult {
  std::uint32_t c = 0;
  std::uint32_t m = 0;
  double tp = 0.0;
  double tn_sybil = 0.0;
  double tn_fictitious = 0.0;
  double median_honest = 0.0;
  double median_fictitious = 0.0;
  double sum_attacker = 0.0;      // corrupt + sybil + fictitious scores
  double sum_corrupt_host = 0.0;  // corrupt devices plus their hosted sybils
  double sum_corrupt = 0.0;       // corrupt devices alone
  double sum_sybil = 0.0;
  double sum_fictitious = 0.0;
};

struct TrustEvalResult {
  std::vector<AttackScenarioResult> scenarios;
  ThresholdResult threshold;
  double s_over_T = 0.0;
};

TrustEvalResult run_trust_eval(const MapNetwork& net, const EvalConfig& cfg);

struct EvalOutput {
  std::string precision_csv;
  std::string trustrank_csv;
  std::string summary_json;
};

EvalOutput run_eval(const EvalConfig& cfg, const std::string& out_dir);

// Nearest-rank percentile (p in [0,100]) of a non-empty sorted sample.
double percentile_nearest_rank(const std::vector<double>& sorted_values, double p);

} // namespace proloc
