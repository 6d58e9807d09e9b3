#pragma once

#include "proloc/geo.hpp"
#include "proloc/history.hpp"

#include <string>
#include <unordered_set>
#include <vector>

namespace proloc {

struct ProofRequest {
  DeviceId d = 0;
  GeoPoint center;        // target circle center
  double radius = 0.0;    // target circle radius, meters
  double t = 0.0;         // instant to prove
  std::vector<DeviceId> trust_anchors;
  std::uint32_t n_witnesses = 1; // required quorum size N
  double window = 300.0;         // half-width a of the encounter window
  double r_ble = 50.0;
  std::uint32_t m_cap = 32;      // max candidate encounters considered
  // If true, witnesses with a report on only one side of t_e are rejected
  // instead of contributing a one-sided region.
  bool require_both_reports = false;
};

struct CandidateEncounter {
  Encounter encounter;
  DeviceId witness = 0;
  double f_value = 0.0;
};

struct WitnessRegion {
  DeviceId witness = 0;
  Region region;
  double max_distance = 0.0; // from the request center
  bool accepted = false;     // region contained in the target region
};

struct ProofResult {
  bool ok = false;
  std::vector<DeviceId> quorum;
  Region feasible_region;
  std::vector<WitnessRegion> per_witness;
  double min_radius = 0.0; // +inf when fewer than N candidates exist
};

// Self-reported location of d nearest to t; fails with missing_self_report if
// none lies within the window.
LocationReport self_report_near(const HistoryStore& store, DeviceId d, double t,
                                double window);

// Candidate encounters of d around t: timely, non-suspicious peers with at
// least one bracketing report, one per distinct peer (lowest f), sorted
// ascending by f (ties by peer id), truncated to m_cap.
// f = |t_e - t| + min(|t_e - t_w|, |t_e - t_w'|) + min(|th - th_w|, |th - th_w'|) / v
std::vector<CandidateEncounter> encs_select(
    const HistoryStore& store, DeviceId d, const GeoPoint& theta, double t,
    double window, const std::unordered_set<DeviceId>& suspicious,
    std::uint32_t m_cap, double avg_speed);

// Region for d at time t derived from one peer report: isochrone from the
// report, grown by the radio range, then isochrone to the proof instant.
Region r_peer_loc(const MapNetwork& net, double t_e, double t_w,
                  const GeoPoint& theta_w, double r_ble, double t);

// Region for d at time t from one encounter: intersection of r_peer_loc over
// the witness's bracketing reports (single region if only one side exists and
// the relaxation is enabled).
struct EncounterRegion {
  Region region;
  DeviceId witness = 0;
};
EncounterRegion r_encounter(const MapNetwork& net, const HistoryStore& store,
                            const Encounter& e, DeviceId d, double r_ble,
                            double t, bool require_both_reports = false);

ProofResult prove_loc(const MapNetwork& net, const HistoryStore& store,
                      const ProofRequest& req,
                      const std::unordered_set<DeviceId>& suspicious);

// Intersection of the per-quorum feasible regions; each quorum is a list of
// candidates whose regions are unioned as in prove_loc. Quorums must not share
// encounters.
struct RefinedRegion {
  Region region;
  bool empty_warning = false; // inconsistent data or adversarial reports
};
RefinedRegion refine_region(const MapNetwork& net, const HistoryStore& store,
                            DeviceId d, double t, double r_ble,
                            const std::vector<std::vector<CandidateEncounter>>& quorums,
                            bool require_both_reports = false);

std::string proof_result_to_json(const ProofResult& result);
ProofRequest parse_proof_request_json(const std::string& text);

} // namespace proloc
