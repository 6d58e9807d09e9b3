#pragma once

#include "proloc/history.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace proloc {

// Directed advert-reception graph: edge receiver -> sender, weight >= 0.
class EncounterGraph {
public:
  void add_edge(DeviceId receiver, DeviceId sender, double weight);
  void add_node(DeviceId d);
  void finalize();
  bool finalized() const { return finalized_; }

  const std::vector<DeviceId>& nodes() const { return nodes_; }
  std::size_t node_count() const { return nodes_.size(); }
  bool has_node(DeviceId d) const { return index_.count(d) > 0; }

  double edge_weight(DeviceId receiver, DeviceId sender) const;
  std::size_t edge_count() const;

  struct OutArc {
    std::uint32_t to; // node index
    double weight;
  };
  const std::vector<OutArc>& out_arcs(std::uint32_t node_index) const {
    return arcs_[node_index];
  }
  double out_weight(std::uint32_t node_index) const { return out_weight_[node_index]; }
  std::uint32_t index_of(DeviceId d) const { return index_.at(d); }
  DeviceId device_at(std::uint32_t idx) const { return nodes_[idx]; }

private:
  bool finalized_ = false;
  std::unordered_map<std::uint64_t, double> accum_;
  std::unordered_set<DeviceId> pending_nodes_;
  std::vector<DeviceId> nodes_; // sorted after finalize
  std::unordered_map<DeviceId, std::uint32_t> index_;
  std::vector<std::vector<OutArc>> arcs_;
  std::vector<double> out_weight_;
};

struct TrustParams {
  double alpha = 0.85;            // walk continuation probability, in (0,1)
  double L = 3.0;                 // concurrency penalty exponent, > 1
  double epoch_len = 480.0;       // s, discrete variant
  double window = 480.0;          // s, continuous variant
  double weight_cap_discrete = 10.0;
  double weight_cap_continuous = 4800.0; // 10 * window
  double solver_tolerance = 1e-12;
};

// Discrete epoch weighting: epochs are fixed-width bins from t=0. For each
// epoch where g received adverts from k distinct senders, each of those
// senders gains 1/k^L on the edge g -> sender.
EncounterGraph edge_weights_discrete(
    const std::vector<Advert>& adverts, double epoch_len, double L,
    double weight_cap = std::numeric_limits<double>::infinity());

// Continuous-time weighting: e(g,d) = min(cap, integral over t of
// [g received from d within t +- w/2] / (#senders in that window)^L dt),
// evaluated exactly on the piecewise-constant segments induced by advert
// times +- w/2.
EncounterGraph edge_weights_continuous(const std::vector<Advert>& adverts,
                                       double window, double L, double weight_cap);

class TrustScores {
public:
  TrustScores() = default;
  explicit TrustScores(std::vector<std::pair<DeviceId, double>> scores);

  // Score of a device; 0 for devices outside the graph.
  double score(DeviceId d) const;
  const std::vector<std::pair<DeviceId, double>>& entries() const { return entries_; }
  double sum() const;

private:
  std::vector<std::pair<DeviceId, double>> entries_; // sorted by device
};

// Halting distribution of the seeded random walk: start at a uniformly random
// anchor; at each node either halt with probability 1-alpha or move along an
// outgoing edge with probability proportional to its weight. At a node with
// zero out-weight the continuing walker restarts from a random anchor, the
// original TrustRank treatment of dangling nodes. Solved by fixed-point
// iteration on the visit mass until the L1 residual drops below `tolerance`.
TrustScores trustrank(const EncounterGraph& graph,
                      const std::vector<DeviceId>& anchors, double alpha,
                      double tolerance);

enum class TrustLabel { suspicious, non_suspicious };

// score > T -> non_suspicious; score <= T -> suspicious.
std::unordered_map<DeviceId, TrustLabel> classify(const TrustScores& scores, double T);

struct ThresholdScenario {
  TrustScores scores;
  std::unordered_set<DeviceId> honest;   // includes corrupt devices
  std::unordered_set<DeviceId> attacker; // Sybil and fictitious devices
};

struct ThresholdResult {
  double T = 0.0;
  double tp_rate = 0.0; // mean over scenarios
  double tn_rate = 0.0;
  double s = 0.0; // mean honest score, pooled across scenarios
};

// Uniform threshold maximizing the sum over scenarios of TP(T) + TN(T).
// Candidates are midpoints between consecutive distinct observed scores
// (pooled over scenarios); ties break to the smallest T.
ThresholdResult calibrate_threshold(const std::vector<ThresholdScenario>& scenarios);

void write_graph_csv(const EncounterGraph& graph, const std::string& path);
void write_scores_csv(const TrustScores& scores,
                      const std::unordered_map<DeviceId, std::string>& labels,
                      const std::string& path);

} // namespace proloc
