#include "proloc/proof.hpp"

#include "proloc/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace proloc {

namespace {

void validate_request(const ProofRequest& req) {
  if (req.n_witnesses < 1) fail(ErrorCode::invalid_argument, "N must be >= 1");
  if (!(req.radius > 0.0)) fail(ErrorCode::invalid_argument, "target radius must be > 0");
  if (!(req.window > 0.0)) fail(ErrorCode::invalid_argument, "window a must be > 0");
  if (!(req.r_ble > 0.0)) fail(ErrorCode::invalid_argument, "r_ble must be > 0");
  if (req.m_cap < req.n_witnesses) {
    fail(ErrorCode::invalid_argument, "m_cap must be >= N");
  }
}

} // namespace

LocationReport self_report_near(const HistoryStore& store, DeviceId d, double t,
                                double window) {
  const auto report = store.nearest_location_report(d, t);
  if (!report || std::abs(report->t - t) > window) {
    fail(ErrorCode::missing_self_report,
         "device " + std::to_string(d) + " has no location report within " +
             std::to_string(window) + "s of t");
  }
  return *report;
}

std::vector<CandidateEncounter> encs_select(
    const HistoryStore& store, DeviceId d, const GeoPoint& theta, double t,
    double window, const std::unordered_set<DeviceId>& suspicious,
    std::uint32_t m_cap, double avg_speed) {
  if (!(avg_speed > 0.0)) fail(ErrorCode::invalid_argument, "avg_speed must be > 0");
  // The prover must have committed a position near t for the spatial term.
  (void)self_report_near(store, d, t, window);

  std::vector<CandidateEncounter> best_per_peer;
  for (const Encounter& e : store.encounters_in_window(d, t, window)) {
    const DeviceId w = e.other_peer(d);
    if (suspicious.count(w)) continue;
    const auto prev = store.prev_location_report(w, e.t_e);
    const auto next = store.next_location_report(w, e.t_e);
    if (!prev && !next) continue; // f undefined without any witness report

    double dt = std::numeric_limits<double>::infinity();
    double dist_m = std::numeric_limits<double>::infinity();
    if (prev) {
      dt = std::min(dt, std::abs(e.t_e - prev->t));
      dist_m = std::min(dist_m, distance(theta, prev->pos));
    }
    if (next) {
      dt = std::min(dt, std::abs(e.t_e - next->t));
      dist_m = std::min(dist_m, distance(theta, next->pos));
    }
    const double f = std::abs(e.t_e - t) + dt + dist_m / avg_speed;

    auto it = std::find_if(best_per_peer.begin(), best_per_peer.end(),
                           [w](const CandidateEncounter& c) { return c.witness == w; });
    if (it == best_per_peer.end()) {
      best_per_peer.push_back({e, w, f});
    } else if (f < it->f_value || (f == it->f_value && e.t_e < it->encounter.t_e)) {
      *it = {e, w, f};
    }
  }

  std::sort(best_per_peer.begin(), best_per_peer.end(),
            [](const CandidateEncounter& a, const CandidateEncounter& b) {
              if (a.f_value != b.f_value) return a.f_value < b.f_value;
              return a.witness < b.witness;
            });
  if (best_per_peer.size() > m_cap) best_per_peer.resize(m_cap);
  return best_per_peer;
}

Region r_peer_loc(const MapNetwork& net, double t_e, double t_w,
                  const GeoPoint& theta_w, double r_ble, double t) {
  const NodeId snapped = net.nearest_node(theta_w);
  const Region witness_at_te =
      isochrone(net, net.region_of({snapped}), std::abs(t_e - t_w));
  const Region prover_at_te = grow_region(net, witness_at_te, r_ble);
  return isochrone(net, prover_at_te, std::abs(t - t_e));
}

EncounterRegion r_encounter(const MapNetwork& net, const HistoryStore& store,
                            const Encounter& e, DeviceId d, double r_ble,
                            double t, bool require_both_reports) {
  const DeviceId w = e.other_peer(d);
  const auto prev = store.prev_location_report(w, e.t_e);
  const auto next = store.next_location_report(w, e.t_e);
  if (!prev && !next) {
    fail(ErrorCode::witness_without_reports,
         "witness " + std::to_string(w) + " has no location reports");
  }
  if (require_both_reports && (!prev || !next)) {
    fail(ErrorCode::witness_without_reports,
         "witness " + std::to_string(w) + " lacks a bracketing report");
  }
  if (prev && next) {
    const Region a = r_peer_loc(net, e.t_e, prev->t, prev->pos, r_ble, t);
    const Region b = r_peer_loc(net, e.t_e, next->t, next->pos, r_ble, t);
    return {region_intersect(a, b), w};
  }
  const LocationReport& only = prev ? *prev : *next;
  return {r_peer_loc(net, e.t_e, only.t, only.pos, r_ble, t), w};
}

ProofResult prove_loc(const MapNetwork& net, const HistoryStore& store,
                      const ProofRequest& req,
                      const std::unordered_set<DeviceId>& suspicious) {
  validate_request(req);
  const LocationReport self = self_report_near(store, req.d, req.t, req.window);
  const auto candidates = encs_select(store, req.d, self.pos, req.t, req.window,
                                      suspicious, req.m_cap, net.avg_speed());

  const Region target = net.region_around(req.center, req.radius);

  ProofResult result;
  result.feasible_region = net.region_of({});
  std::uint32_t accepted = 0;
  for (const CandidateEncounter& c : candidates) {
    const EncounterRegion er =
        r_encounter(net, store, c.encounter, req.d, req.r_ble, req.t,
                    req.require_both_reports);
    WitnessRegion wr;
    wr.witness = er.witness;
    wr.max_distance = region_max_distance(net, er.region, req.center);
    // Quorum accumulation stops at N accepted witnesses; regions are still
    // computed for every candidate so min_radius is stable under early stop.
    if (accepted < req.n_witnesses && region_contains(target, er.region)) {
      wr.accepted = true;
      ++accepted;
      result.quorum.push_back(er.witness);
      result.feasible_region = region_union(result.feasible_region, er.region);
    }
    wr.region = std::move(er.region);
    result.per_witness.push_back(std::move(wr));
  }
  result.ok = accepted >= req.n_witnesses;

  // Smallest target radius at which this proof would succeed: the N-th
  // smallest candidate max-distance from the center.
  std::vector<double> dists;
  dists.reserve(result.per_witness.size());
  for (const auto& wr : result.per_witness) dists.push_back(wr.max_distance);
  std::sort(dists.begin(), dists.end());
  result.min_radius = dists.size() >= req.n_witnesses
                          ? dists[req.n_witnesses - 1]
                          : std::numeric_limits<double>::infinity();
  return result;
}

RefinedRegion refine_region(const MapNetwork& net, const HistoryStore& store,
                            DeviceId d, double t, double r_ble,
                            const std::vector<std::vector<CandidateEncounter>>& quorums,
                            bool require_both_reports) {
  if (quorums.empty()) fail(ErrorCode::invalid_argument, "need at least one quorum");
  std::vector<std::pair<DeviceId, double>> seen;
  for (const auto& quorum : quorums) {
    for (const auto& c : quorum) {
      const std::pair<DeviceId, double> key{c.witness, c.encounter.t_e};
      if (std::find(seen.begin(), seen.end(), key) != seen.end()) {
        fail(ErrorCode::invalid_argument, "quorums must not share encounters");
      }
      seen.push_back(key);
    }
  }

  RefinedRegion out;
  bool first = true;
  for (const auto& quorum : quorums) {
    Region feasible = net.region_of({});
    for (const auto& c : quorum) {
      const EncounterRegion er =
          r_encounter(net, store, c.encounter, d, r_ble, t, require_both_reports);
      feasible = region_union(feasible, er.region);
    }
    out.region = first ? feasible : region_intersect(out.region, feasible);
    first = false;
  }
  out.empty_warning = out.region.empty();
  return out;
}

std::string proof_result_to_json(const ProofResult& result) {
  nlohmann::json j;
  j["ok"] = result.ok;
  j["quorum"] = result.quorum;
  j["min_radius"] = result.min_radius;
  j["feasible_region_nodes"] = result.feasible_region.size();
  auto& pw = j["per_witness"] = nlohmann::json::array();
  for (const auto& wr : result.per_witness) {
    pw.push_back({{"witness", wr.witness},
                  {"region_nodes", wr.region.size()},
                  {"max_distance", wr.max_distance},
                  {"accepted", wr.accepted}});
  }
  return j.dump(2);
}

ProofRequest parse_proof_request_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse_error, std::string("proof request: ") + e.what());
  }
  try {
    ProofRequest req;
    req.d = j.at("device").get<DeviceId>();
    req.center = {j.at("center_x").get<double>(), j.at("center_y").get<double>()};
    req.radius = j.at("radius").get<double>();
    req.t = j.at("t").get<double>();
    req.trust_anchors = j.value("anchors", std::vector<DeviceId>{});
    req.n_witnesses = j.at("n").get<std::uint32_t>();
    req.window = j.value("window", 300.0);
    req.r_ble = j.value("r_ble", 50.0);
    req.m_cap = j.value("m_cap", 32u);
    req.require_both_reports = j.value("require_both_reports", false);
    return req;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse_error, std::string("proof request: ") + e.what());
  }
}

} // namespace proloc
