#include "proloc/trust.hpp"

#include "proloc/error.hpp"
#include "proloc/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

namespace proloc {

namespace {

std::uint64_t edge_key(DeviceId receiver, DeviceId sender) {
  return (static_cast<std::uint64_t>(receiver) << 32) | sender;
}

} // namespace

void EncounterGraph::add_edge(DeviceId receiver, DeviceId sender, double weight) {
  if (finalized_) fail(ErrorCode::invalid_argument, "graph is finalized");
  if (receiver == sender) fail(ErrorCode::invalid_argument, "self-edges are not allowed");
  if (weight < 0.0) fail(ErrorCode::invalid_argument, "edge weight must be >= 0");
  accum_[edge_key(receiver, sender)] += weight;
  pending_nodes_.insert(receiver);
  pending_nodes_.insert(sender);
}

void EncounterGraph::add_node(DeviceId d) {
  if (finalized_) fail(ErrorCode::invalid_argument, "graph is finalized");
  pending_nodes_.insert(d);
}

void EncounterGraph::finalize() {
  if (finalized_) return;
  nodes_.assign(pending_nodes_.begin(), pending_nodes_.end());
  std::sort(nodes_.begin(), nodes_.end());
  for (std::uint32_t i = 0; i < nodes_.size(); ++i) index_[nodes_[i]] = i;
  arcs_.assign(nodes_.size(), {});
  out_weight_.assign(nodes_.size(), 0.0);
  std::vector<std::pair<std::uint64_t, double>> edges(accum_.begin(), accum_.end());
  std::sort(edges.begin(), edges.end());
  for (const auto& [key, w] : edges) {
    const auto receiver = static_cast<DeviceId>(key >> 32);
    const auto sender = static_cast<DeviceId>(key & 0xffffffffu);
    const std::uint32_t from = index_[receiver];
    arcs_[from].push_back({index_[sender], w});
    out_weight_[from] += w;
  }
  for (auto& v : arcs_) {
    std::sort(v.begin(), v.end(), [](const OutArc& a, const OutArc& b) { return a.to < b.to; });
  }
  accum_.clear();
  pending_nodes_.clear();
  finalized_ = true;
}

double EncounterGraph::edge_weight(DeviceId receiver, DeviceId sender) const {
  auto rit = index_.find(receiver);
  auto sit = index_.find(sender);
  if (rit == index_.end() || sit == index_.end()) return 0.0;
  for (const OutArc& arc : arcs_[rit->second]) {
    if (arc.to == sit->second) return arc.weight;
  }
  return 0.0;
}

std::size_t EncounterGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& v : arcs_) n += v.size();
  return n;
}

EncounterGraph edge_weights_discrete(const std::vector<Advert>& adverts,
                                     double epoch_len, double L, double weight_cap) {
  if (!(epoch_len > 0.0)) fail(ErrorCode::invalid_argument, "epoch_len must be > 0");
  if (!(L > 1.0)) fail(ErrorCode::invalid_argument, "exponent L must be > 1");

  struct Rec {
    DeviceId receiver;
    std::int64_t epoch;
    DeviceId sender;
    bool operator<(const Rec& o) const {
      if (receiver != o.receiver) return receiver < o.receiver;
      if (epoch != o.epoch) return epoch < o.epoch;
      return sender < o.sender;
    }
    bool operator==(const Rec& o) const {
      return receiver == o.receiver && epoch == o.epoch && sender == o.sender;
    }
  };
  std::vector<Rec> recs;
  recs.reserve(adverts.size());
  EncounterGraph g;
  for (const Advert& a : adverts) {
    recs.push_back({a.receiver, static_cast<std::int64_t>(std::floor(a.t / epoch_len)), a.sender});
    g.add_node(a.receiver);
    g.add_node(a.sender);
  }
  // Duplicate adverts from the same sender within an epoch count once.
  std::sort(recs.begin(), recs.end());
  recs.erase(std::unique(recs.begin(), recs.end()), recs.end());

  std::map<std::pair<DeviceId, DeviceId>, double> weights;
  std::size_t i = 0;
  while (i < recs.size()) {
    std::size_t j = i;
    while (j < recs.size() && recs[j].receiver == recs[i].receiver &&
           recs[j].epoch == recs[i].epoch) {
      ++j;
    }
    const double share = 1.0 / std::pow(static_cast<double>(j - i), L);
    for (std::size_t k = i; k < j; ++k) {
      weights[{recs[k].receiver, recs[k].sender}] += share;
    }
    i = j;
  }
  for (const auto& [edge, w] : weights) {
    g.add_edge(edge.first, edge.second, std::min(w, weight_cap));
  }
  g.finalize();
  return g;
}

EncounterGraph edge_weights_continuous(const std::vector<Advert>& adverts,
                                       double window, double L, double weight_cap) {
  if (!(window > 0.0)) fail(ErrorCode::invalid_argument, "window must be > 0");
  if (!(L > 1.0)) fail(ErrorCode::invalid_argument, "exponent L must be > 1");

  std::map<DeviceId, std::map<DeviceId, std::vector<double>>> by_receiver;
  EncounterGraph g;
  for (const Advert& a : adverts) {
    by_receiver[a.receiver][a.sender].push_back(a.t);
    g.add_node(a.receiver);
    g.add_node(a.sender);
  }

  const double half = window / 2.0;
  for (auto& [receiver, senders] : by_receiver) {
    // Per sender: merge advert coverage intervals [t - w/2, t + w/2].
    struct Interval {
      double lo, hi;
      DeviceId sender;
    };
    std::vector<Interval> intervals;
    for (auto& [sender, times] : senders) {
      std::sort(times.begin(), times.end());
      double lo = times[0] - half, hi = times[0] + half;
      for (std::size_t i = 1; i < times.size(); ++i) {
        if (times[i] - half <= hi) {
          hi = times[i] + half;
        } else {
          intervals.push_back({lo, hi, sender});
          lo = times[i] - half;
          hi = times[i] + half;
        }
      }
      intervals.push_back({lo, hi, sender});
    }

    // Sweep the elementary segments between breakpoints; each active sender
    // collects segment_length / k^L where k is the active sender count.
    // Running accumulator A = integral of 1/k^L so far lets each interval
    // collect A(exit) - A(entry) without per-segment scans.
    struct Event {
      double t;
      int delta; // -1 processed before +1 at equal t (intervals are half-open)
      std::size_t interval;
    };
    std::vector<Event> events;
    events.reserve(intervals.size() * 2);
    for (std::size_t i = 0; i < intervals.size(); ++i) {
      events.push_back({intervals[i].lo, +1, i});
      events.push_back({intervals[i].hi, -1, i});
    }
    std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
      if (a.t != b.t) return a.t < b.t;
      return a.delta < b.delta;
    });

    std::map<DeviceId, double> integral;
    std::vector<double> entry_accum(intervals.size(), 0.0);
    double accum = 0.0;
    double prev_t = events.empty() ? 0.0 : events.front().t;
    int active = 0;
    for (const Event& ev : events) {
      if (active > 0 && ev.t > prev_t) {
        accum += (ev.t - prev_t) / std::pow(static_cast<double>(active), L);
      }
      prev_t = ev.t;
      if (ev.delta > 0) {
        entry_accum[ev.interval] = accum;
        ++active;
      } else {
        --active;
        integral[intervals[ev.interval].sender] += accum - entry_accum[ev.interval];
      }
    }
    for (const auto& [sender, w] : integral) {
      g.add_edge(receiver, sender, std::min(w, weight_cap));
    }
  }
  g.finalize();
  return g;
}

TrustScores::TrustScores(std::vector<std::pair<DeviceId, double>> scores)
    : entries_(std::move(scores)) {
  std::sort(entries_.begin(), entries_.end());
}

double TrustScores::score(DeviceId d) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), d,
                             [](const auto& e, DeviceId v) { return e.first < v; });
  if (it == entries_.end() || it->first != d) return 0.0;
  return it->second;
}

double TrustScores::sum() const {
  double s = 0.0;
  for (const auto& [_, v] : entries_) s += v;
  return s;
}

TrustScores trustrank(const EncounterGraph& graph,
                      const std::vector<DeviceId>& anchors, double alpha,
                      double tolerance) {
  if (!graph.finalized()) fail(ErrorCode::invalid_argument, "graph must be finalized");
  if (anchors.empty()) fail(ErrorCode::no_anchors, "anchor set must be non-empty");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    fail(ErrorCode::invalid_argument, "alpha must be in (0,1)");
  }
  for (DeviceId a : anchors) {
    if (!graph.has_node(a)) {
      fail(ErrorCode::unknown_anchor, "anchor " + std::to_string(a) + " not in graph");
    }
  }

  const std::size_t n = graph.node_count();
  std::vector<double> start(n, 0.0);
  for (DeviceId a : anchors) {
    start[graph.index_of(a)] += 1.0 / static_cast<double>(anchors.size());
  }

  // Visit mass satisfies m = start + alpha * P^T m. A node without outgoing
  // weight falls back to the anchor distribution (the walker restarts from a
  // random trusted node), matching the original TrustRank treatment of
  // dangling nodes. The contraction factor alpha guarantees geometric
  // convergence.
  std::vector<double> mass = start;
  std::vector<double> next(n, 0.0);
  for (int iter = 0; iter < 100000; ++iter) {
    std::fill(next.begin(), next.end(), 0.0);
    double dangling_mass = 0.0;
    for (std::size_t u = 0; u < n; ++u) {
      if (mass[u] == 0.0) continue;
      const double ow = graph.out_weight(static_cast<std::uint32_t>(u));
      if (ow <= 0.0) {
        dangling_mass += mass[u];
        continue;
      }
      const double push = alpha * mass[u] / ow;
      for (const auto& arc : graph.out_arcs(static_cast<std::uint32_t>(u))) {
        next[arc.to] += push * arc.weight;
      }
    }
    double residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      next[i] += start[i] + alpha * dangling_mass * start[i];
      residual += std::abs(next[i] - mass[i]);
    }
    mass.swap(next);
    if (residual < tolerance) break;
  }

  std::vector<std::pair<DeviceId, double>> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.emplace_back(graph.device_at(static_cast<std::uint32_t>(i)),
                     (1.0 - alpha) * mass[i]);
  }
  return TrustScores(std::move(out));
}

std::unordered_map<DeviceId, TrustLabel> classify(const TrustScores& scores, double T) {
  std::unordered_map<DeviceId, TrustLabel> out;
  for (const auto& [d, s] : scores.entries()) {
    out[d] = s > T ? TrustLabel::non_suspicious : TrustLabel::suspicious;
  }
  return out;
}

ThresholdResult calibrate_threshold(const std::vector<ThresholdScenario>& scenarios) {
  if (scenarios.empty()) fail(ErrorCode::no_scenarios, "no calibration scenarios");

  struct Entry {
    double score;
    std::uint32_t scenario;
    bool honest; // false -> attacker
  };
  std::vector<Entry> entries;
  std::vector<std::size_t> honest_count(scenarios.size(), 0);
  std::vector<std::size_t> attacker_count(scenarios.size(), 0);
  std::vector<double> observed;
  double honest_sum = 0.0;
  std::size_t honest_n = 0;
  for (std::uint32_t si = 0; si < scenarios.size(); ++si) {
    const auto& sc = scenarios[si];
    for (const auto& [d, s] : sc.scores.entries()) {
      observed.push_back(s);
      const bool honest = sc.honest.count(d) > 0;
      const bool attacker = sc.attacker.count(d) > 0;
      if (!honest && !attacker) {
        fail(ErrorCode::invalid_argument,
             "scenario " + std::to_string(si) + " leaves device " +
                 std::to_string(d) + " unlabeled");
      }
      entries.push_back({s, si, honest});
      if (honest) {
        ++honest_count[si];
        honest_sum += s;
        ++honest_n;
      } else {
        ++attacker_count[si];
      }
    }
  }
  std::sort(observed.begin(), observed.end());
  observed.erase(std::unique(observed.begin(), observed.end()), observed.end());
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.score < b.score; });

  // Objective(T) = sum over scenarios of TP(T) + TN(T). Sweeping T upward,
  // each entry crossing below the threshold moves the objective by -1/hn
  // (honest) or +1/an (attacker), so the whole sweep is a prefix walk.
  double objective = 0.0;
  for (std::uint32_t si = 0; si < scenarios.size(); ++si) {
    objective += 1.0;                            // TP at T below min score
    objective += attacker_count[si] ? 0.0 : 1.0; // TN vacuous without attackers
  }

  double best_T = observed.empty() ? 0.0 : observed[0];
  double best_obj = -std::numeric_limits<double>::infinity();
  std::size_t next_entry = 0;
  if (observed.size() < 2) {
    // Degenerate input: all scores identical; the single value classifies
    // everything suspicious under the strict > rule.
    for (const Entry& e : entries) {
      objective += e.honest ? -1.0 / honest_count[e.scenario]
                            : 1.0 / attacker_count[e.scenario];
    }
    best_obj = objective;
  } else {
    for (std::size_t i = 0; i + 1 < observed.size(); ++i) {
      const double T = (observed[i] + observed[i + 1]) / 2.0;
      while (next_entry < entries.size() && entries[next_entry].score <= T) {
        const Entry& e = entries[next_entry];
        objective += e.honest ? -1.0 / honest_count[e.scenario]
                              : 1.0 / attacker_count[e.scenario];
        ++next_entry;
      }
      if (objective > best_obj) {
        best_obj = objective;
        best_T = T;
      }
    }
  }

  double tp_total = 0.0, tn_total = 0.0;
  {
    std::vector<std::size_t> tp(scenarios.size(), 0), tn(scenarios.size(), 0);
    for (const Entry& e : entries) {
      if (e.honest && e.score > best_T) ++tp[e.scenario];
      if (!e.honest && e.score <= best_T) ++tn[e.scenario];
    }
    for (std::uint32_t si = 0; si < scenarios.size(); ++si) {
      tp_total += honest_count[si] ? static_cast<double>(tp[si]) / honest_count[si] : 1.0;
      tn_total += attacker_count[si] ? static_cast<double>(tn[si]) / attacker_count[si] : 1.0;
    }
  }

  ThresholdResult r;
  r.T = best_T;
  r.tp_rate = tp_total / static_cast<double>(scenarios.size());
  r.tn_rate = tn_total / static_cast<double>(scenarios.size());
  r.s = honest_n ? honest_sum / static_cast<double>(honest_n) : 0.0;
  return r;
}

void write_graph_csv(const EncounterGraph& graph, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io_error, "cannot write graph csv: " + path);
  out << "receiver,sender,weight\n";
  for (std::uint32_t i = 0; i < graph.node_count(); ++i) {
    for (const auto& arc : graph.out_arcs(i)) {
      out << graph.device_at(i) << "," << graph.device_at(arc.to) << ","
          << format_double(arc.weight) << "\n";
    }
  }
}

void write_scores_csv(const TrustScores& scores,
                      const std::unordered_map<DeviceId, std::string>& labels,
                      const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io_error, "cannot write scores csv: " + path);
  out << "device,score,label\n";
  for (const auto& [d, s] : scores.entries()) {
    auto it = labels.find(d);
    out << d << "," << format_double(s) << ","
        << (it == labels.end() ? "unknown" : it->second) << "\n";
  }
}

} // namespace proloc
