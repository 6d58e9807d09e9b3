#pragma once

#include "proloc/geo.hpp"
#include "proloc/history.hpp"

#include <cstdint>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace proloc {

// Id layout for injected devices. Real device ids stay below doppel_id_base;
// labeling is a pure id-range rule.
constexpr DeviceId doppel_id_base = 1u << 23;
constexpr DeviceId sybil_id_base = 1u << 24;
constexpr DeviceId max_sybils_per_host = 256;

inline DeviceId doppel_id(DeviceId real) { return real + doppel_id_base; }
inline DeviceId sybil_id(DeviceId host, std::uint32_t k) {
  return sybil_id_base + host * max_sybils_per_host + k;
}

struct SimConfig {
  std::uint32_t n_users = 420;
  std::uint32_t n_pois = 8;
  std::uint32_t days = 2;
  double adoption_rate = 1.0;
  double report_interval = 180.0; // s, mean Poisson spacing while at a POI
  double r_ble = 50.0;
  double min_colocation = 300.0;  // s
  std::uint64_t rng_seed = 1;

  // Visit model.
  std::uint32_t min_visits_per_day = 2;
  std::uint32_t max_visits_per_day = 5;
  double min_visit_duration = 1200.0;
  double max_visit_duration = 3600.0;
  double advert_cadence = 60.0;      // s between mutual adverts while co-located
  double max_upload_delay = 120.0;   // s, uniform upload lag for honest devices
};

struct Visit {
  DeviceId device = 0;
  std::uint32_t poi = 0;
  NodeId node = 0;
  double t_start = 0.0;
  double t_end = 0.0;
};

struct GroundTruthSample {
  DeviceId device = 0;
  double t = 0.0;
  GeoPoint pos;
};

struct World {
  std::vector<Visit> visits; // participating devices only
  std::vector<LocationReport> reports;
  std::vector<Advert> adverts;
  std::vector<GroundTruthSample> ground_truth;
  std::vector<NodeId> poi_nodes;
  std::vector<DeviceId> participants; // sorted
};

struct AttackConfig {
  std::uint32_t corrupt_count = 0; // c
  std::uint32_t sybils_per_corrupt = 0; // m
  bool doppelganger = false;
  std::uint64_t rng_seed = 1;
};

enum class DeviceLabel { honest, corrupt, sybil, fictitious };
const char* device_label_name(DeviceLabel label);

class Rng;

// Gravity model pieces: POI selection weight is inversely proportional to the
// home-POI distance (floored at 1 m).
std::vector<double> gravity_weights(const MapNetwork& net, const GeoPoint& home,
                                    const std::vector<NodeId>& pois);
std::uint32_t gravity_pick(Rng& rng, const std::vector<double>& weights);

// Synthesizes visits, location reports and adverts over the network.
// Deterministic under rng_seed; trajectory, report and advert randomness use
// independent substreams so e.g. changing report_interval leaves the visit
// schedule untouched. Visit schedules respect shortest-path travel times, so
// honest trajectories never outrun the network.
World generate_world(const MapNetwork& net, const SimConfig& cfg);

// Picks the corrupt devices deterministically from the participants.
std::vector<DeviceId> pick_corrupt(const World& world, const AttackConfig& attack);

// Replicates every advert with a corrupt sender to each of the host's m
// Sybils, keeping receiver and timestamps; originals are retained.
std::vector<Advert> inject_corrupt_and_sybils(const std::vector<Advert>& adverts,
                                              const std::unordered_set<DeviceId>& corrupt,
                                              std::uint32_t m);

// Mirrors the whole honest world into a fictitious doppelganger world and
// bridges it into the real one: whenever a corrupt device receives an advert
// from a real device, it also receives one from that device's doppelganger.
void inject_doppelganger_world(std::vector<LocationReport>& reports,
                               std::vector<Advert>& adverts,
                               const std::unordered_set<DeviceId>& corrupt);

std::unordered_map<DeviceId, DeviceLabel> label_devices(
    const std::vector<DeviceId>& all_devices,
    const std::unordered_set<DeviceId>& corrupt);

void write_ground_truth_jsonl(const World& world, const std::string& path);
void write_visits_jsonl(const World& world, const std::string& path);
std::vector<Visit> load_visits_jsonl(const std::string& path);
void write_labels_csv(const std::unordered_map<DeviceId, DeviceLabel>& labels,
                      const std::string& path);
std::unordered_map<DeviceId, DeviceLabel> load_labels_csv(const std::string& path);

} // namespace proloc
