#include "proloc/sim.hpp"

#include "proloc/error.hpp"
#include "proloc/io.hpp"
#include "proloc/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>

namespace proloc {

namespace {

constexpr double day_seconds = 86400.0;
constexpr double day_start_lo = 6.0 * 3600.0;  // earliest first departure
constexpr double day_start_hi = 9.0 * 3600.0;
constexpr double day_end = 22.0 * 3600.0;      // no visit starts after this

// Travel-time table from each POI to every node (graph is undirected, so the
// same table serves home->POI legs).
std::vector<std::vector<double>> poi_travel_times(const MapNetwork& net,
                                                  const std::vector<NodeId>& pois) {
  std::vector<std::vector<double>> out;
  out.reserve(pois.size());
  for (NodeId poi : pois) {
    std::vector<double> dist(net.node_count(), std::numeric_limits<double>::infinity());
    using Item = std::pair<double, NodeId>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist[poi] = 0.0;
    heap.push({0.0, poi});
    while (!heap.empty()) {
      const auto [d, u] = heap.top();
      heap.pop();
      if (d > dist[u]) continue;
      for (const auto& arc : net.arcs(u)) {
        const double nd = d + arc.travel_time;
        if (nd < dist[arc.to]) {
          dist[arc.to] = nd;
          heap.push({nd, arc.to});
        }
      }
    }
    out.push_back(std::move(dist));
  }
  return out;
}

void validate_config(const MapNetwork& net, const SimConfig& cfg) {
  if (cfg.n_users < 1) fail(ErrorCode::config_error, "n_users must be >= 1");
  if (cfg.n_pois < 1 || cfg.n_pois > net.node_count()) {
    fail(ErrorCode::config_error, "n_pois must be in [1, node_count]");
  }
  if (cfg.days < 1) fail(ErrorCode::config_error, "days must be >= 1");
  if (!(cfg.adoption_rate > 0.0) || cfg.adoption_rate > 1.0) {
    fail(ErrorCode::config_error, "adoption_rate must be in (0,1]");
  }
  if (!(cfg.report_interval > 0.0)) {
    fail(ErrorCode::config_error, "report_interval must be > 0");
  }
  if (!(cfg.min_visit_duration > 0.0) || cfg.max_visit_duration < cfg.min_visit_duration) {
    fail(ErrorCode::config_error, "invalid visit duration range");
  }
  if (cfg.min_visits_per_day < 1 || cfg.max_visits_per_day < cfg.min_visits_per_day) {
    fail(ErrorCode::config_error, "invalid visits-per-day range");
  }
  if (!(cfg.advert_cadence > 0.0)) {
    fail(ErrorCode::config_error, "advert_cadence must be > 0");
  }
}

} // namespace

const char* device_label_name(DeviceLabel label) {
  switch (label) {
  case DeviceLabel::honest: return "honest";
  case DeviceLabel::corrupt: return "corrupt";
  case DeviceLabel::sybil: return "sybil";
  case DeviceLabel::fictitious: return "fictitious";
  }
  return "unknown";
}

std::vector<double> gravity_weights(const MapNetwork& net, const GeoPoint& home,
                                    const std::vector<NodeId>& pois) {
  std::vector<double> weights(pois.size());
  for (std::size_t p = 0; p < pois.size(); ++p) {
    weights[p] = 1.0 / std::max(distance(home, net.position(pois[p])), 1.0);
  }
  return weights;
}

std::uint32_t gravity_pick(Rng& rng, const std::vector<double>& weights) {
  double sum = 0.0;
  for (double w : weights) sum += w;
  double x = rng.next_double() * sum;
  for (std::size_t p = 0; p < weights.size(); ++p) {
    x -= weights[p];
    if (x < 0.0) return static_cast<std::uint32_t>(p);
  }
  return static_cast<std::uint32_t>(weights.size() - 1);
}

World generate_world(const MapNetwork& net, const SimConfig& cfg) {
  validate_config(net, cfg);
  World world;

  // POIs: distinct random nodes.
  {
    Rng rng = substream(cfg.rng_seed, "pois");
    std::vector<NodeId> all(net.node_count());
    for (NodeId i = 0; i < net.node_count(); ++i) all[i] = i;
    rng.shuffle(all);
    world.poi_nodes.assign(all.begin(), all.begin() + cfg.n_pois);
  }

  // Homes.
  std::vector<NodeId> homes(cfg.n_users);
  {
    Rng rng = substream(cfg.rng_seed, "homes");
    for (auto& h : homes) h = static_cast<NodeId>(rng.below(net.node_count()));
  }

  // Adopters: leading slice of a seed-fixed permutation, so raising the
  // adoption rate only ever adds participants.
  std::vector<DeviceId> order(cfg.n_users);
  for (DeviceId i = 0; i < cfg.n_users; ++i) order[i] = i;
  {
    Rng rng = substream(cfg.rng_seed, "adoption");
    rng.shuffle(order);
  }
  const auto n_adopters = static_cast<std::uint32_t>(
      std::ceil(cfg.adoption_rate * cfg.n_users));
  std::vector<bool> adopts(cfg.n_users, false);
  for (std::uint32_t i = 0; i < n_adopters; ++i) adopts[order[i]] = true;

  const auto travel = poi_travel_times(net, world.poi_nodes);

  // Per-user visit schedules. Gravity model: POI choice weight is inversely
  // proportional to the home-POI distance.
  for (DeviceId u = 0; u < cfg.n_users; ++u) {
    if (!adopts[u]) continue;
    Rng rng = substream(cfg.rng_seed, "schedule", u);
    const auto weights = gravity_weights(net, net.position(homes[u]), world.poi_nodes);
    auto pick_poi = [&]() { return gravity_pick(rng, weights); };

    for (std::uint32_t day = 0; day < cfg.days; ++day) {
      const double day_base = day * day_seconds;
      const std::uint32_t visits_today =
          cfg.min_visits_per_day +
          static_cast<std::uint32_t>(rng.below(cfg.max_visits_per_day - cfg.min_visits_per_day + 1));
      double cursor = day_base + rng.uniform(day_start_lo, day_start_hi);
      NodeId at = homes[u];
      for (std::uint32_t v = 0; v < visits_today; ++v) {
        const std::uint32_t poi = pick_poi();
        const NodeId poi_node = world.poi_nodes[poi];
        // Leave time for the trip so the trajectory never outruns the map.
        cursor += travel[poi][at];
        if (cursor > day_base + day_end) break;
        const double duration =
            rng.uniform(cfg.min_visit_duration, cfg.max_visit_duration);
        world.visits.push_back({u, poi, poi_node, cursor, cursor + duration});
        cursor += duration + rng.uniform(60.0, 600.0);
        at = poi_node;
      }
    }
    world.participants.push_back(u);
  }

  std::sort(world.visits.begin(), world.visits.end(), [](const Visit& a, const Visit& b) {
    if (a.t_start != b.t_start) return a.t_start < b.t_start;
    return a.device < b.device;
  });

  // Location reports: Poisson-spaced while at a POI, exact POI position.
  // Unit-exponential draws are scaled by the mean, so different report
  // intervals reuse the same underlying sequence per device.
  {
    std::unordered_map<DeviceId, Rng> rngs;
    for (const Visit& v : world.visits) {
      auto it = rngs.find(v.device);
      if (it == rngs.end()) {
        it = rngs.emplace(v.device, substream(cfg.rng_seed, "reports", v.device)).first;
      }
      Rng& rng = it->second;
      const GeoPoint pos = net.position(v.node);
      double t = v.t_start + cfg.report_interval * rng.exponential(1.0);
      while (t <= v.t_end) {
        world.reports.push_back({v.device, t, pos});
        t += cfg.report_interval * rng.exponential(1.0);
      }
    }
  }

  // Ground truth: device position is pinned to the POI for the whole visit.
  for (const Visit& v : world.visits) {
    const GeoPoint pos = net.position(v.node);
    world.ground_truth.push_back({v.device, v.t_start, pos});
    world.ground_truth.push_back({v.device, (v.t_start + v.t_end) / 2.0, pos});
    world.ground_truth.push_back({v.device, v.t_end, pos});
  }
  for (const LocationReport& r : world.reports) {
    world.ground_truth.push_back({r.device, r.t, r.pos});
  }
  std::sort(world.ground_truth.begin(), world.ground_truth.end(),
            [](const GroundTruthSample& a, const GroundTruthSample& b) {
              if (a.t != b.t) return a.t < b.t;
              return a.device < b.device;
            });

  // Adverts: mutual exchanges at a fixed cadence while two participants are
  // co-located at the same POI for at least min_colocation.
  {
    std::vector<std::vector<const Visit*>> by_poi(cfg.n_pois);
    for (const Visit& v : world.visits) by_poi[v.poi].push_back(&v);
    Rng rng = substream(cfg.rng_seed, "adverts");
    for (const auto& group : by_poi) {
      for (std::size_t i = 0; i < group.size(); ++i) {
        for (std::size_t j = i + 1; j < group.size(); ++j) {
          const Visit& a = *group[i];
          const Visit& b = *group[j];
          if (a.device == b.device) continue;
          const double lo = std::max(a.t_start, b.t_start);
          const double hi = std::min(a.t_end, b.t_end);
          if (hi - lo < cfg.min_colocation) continue;
          for (double t = lo; t <= hi; t += cfg.advert_cadence) {
            world.adverts.push_back(
                {a.device, b.device, t, t + rng.uniform(0.0, cfg.max_upload_delay)});
            world.adverts.push_back(
                {b.device, a.device, t, t + rng.uniform(0.0, cfg.max_upload_delay)});
          }
        }
      }
    }
  }
  std::sort(world.adverts.begin(), world.adverts.end(), [](const Advert& a, const Advert& b) {
    if (a.t != b.t) return a.t < b.t;
    if (a.receiver != b.receiver) return a.receiver < b.receiver;
    return a.sender < b.sender;
  });
  std::sort(world.reports.begin(), world.reports.end(),
            [](const LocationReport& a, const LocationReport& b) {
              if (a.t != b.t) return a.t < b.t;
              return a.device < b.device;
            });

  return world;
}

std::vector<DeviceId> pick_corrupt(const World& world, const AttackConfig& attack) {
  if (attack.corrupt_count > world.participants.size()) {
    fail(ErrorCode::config_error, "corrupt_count exceeds participant count");
  }
  if (attack.sybils_per_corrupt > max_sybils_per_host) {
    fail(ErrorCode::config_error, "sybils_per_corrupt exceeds id-space limit");
  }
  std::vector<DeviceId> pool = world.participants;
  Rng rng = substream(attack.rng_seed, "corrupt");
  rng.shuffle(pool);
  pool.resize(attack.corrupt_count);
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::vector<Advert> inject_corrupt_and_sybils(const std::vector<Advert>& adverts,
                                              const std::unordered_set<DeviceId>& corrupt,
                                              std::uint32_t m) {
  std::vector<Advert> out = adverts;
  if (m == 0) return out;
  for (const Advert& a : adverts) {
    if (!corrupt.count(a.sender)) continue;
    for (std::uint32_t k = 0; k < m; ++k) {
      out.push_back({a.receiver, sybil_id(a.sender, k), a.t, a.upload_t});
    }
  }
  return out;
}

void inject_doppelganger_world(std::vector<LocationReport>& reports,
                               std::vector<Advert>& adverts,
                               const std::unordered_set<DeviceId>& corrupt) {
  const std::size_t n_reports = reports.size();
  const std::size_t n_adverts = adverts.size();
  reports.reserve(2 * n_reports);
  adverts.reserve(3 * n_adverts);
  for (std::size_t i = 0; i < n_reports; ++i) {
    const LocationReport r = reports[i];
    reports.push_back({doppel_id(r.device), r.t, r.pos});
  }
  for (std::size_t i = 0; i < n_adverts; ++i) {
    const Advert a = adverts[i];
    // Mirrored advert inside the fictitious world.
    adverts.push_back({doppel_id(a.receiver), doppel_id(a.sender), a.t, a.upload_t});
    // Bridge: a corrupt receiver also hears the sender's doppelganger.
    if (corrupt.count(a.receiver)) {
      adverts.push_back({a.receiver, doppel_id(a.sender), a.t, a.upload_t});
    }
  }
}

std::unordered_map<DeviceId, DeviceLabel> label_devices(
    const std::vector<DeviceId>& all_devices,
    const std::unordered_set<DeviceId>& corrupt) {
  std::unordered_map<DeviceId, DeviceLabel> out;
  for (DeviceId d : all_devices) {
    if (d >= sybil_id_base) {
      out[d] = DeviceLabel::sybil;
    } else if (d >= doppel_id_base) {
      out[d] = DeviceLabel::fictitious;
    } else if (corrupt.count(d)) {
      out[d] = DeviceLabel::corrupt;
    } else {
      out[d] = DeviceLabel::honest;
    }
  }
  return out;
}

void write_ground_truth_jsonl(const World& world, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io_error, "cannot write ground truth file: " + path);
  for (const auto& g : world.ground_truth) {
    nlohmann::json j{{"device", g.device}, {"t", g.t}, {"x", g.pos.x}, {"y", g.pos.y}};
    out << j.dump() << "\n";
  }
}

void write_visits_jsonl(const World& world, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io_error, "cannot write visits file: " + path);
  for (const auto& v : world.visits) {
    nlohmann::json j{{"device", v.device}, {"poi", v.poi}, {"node", v.node},
                     {"t_start", v.t_start}, {"t_end", v.t_end}};
    out << j.dump() << "\n";
  }
}

std::vector<Visit> load_visits_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot open visits file: " + path);
  std::vector<Visit> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back({j.at("device").get<DeviceId>(), j.at("poi").get<std::uint32_t>(),
                     j.at("node").get<NodeId>(), j.at("t_start").get<double>(),
                     j.at("t_end").get<double>()});
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::parse_error, "visits line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_labels_csv(const std::unordered_map<DeviceId, DeviceLabel>& labels,
                      const std::string& path) {
  std::vector<std::pair<DeviceId, DeviceLabel>> rows(labels.begin(), labels.end());
  std::sort(rows.begin(), rows.end());
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io_error, "cannot write labels file: " + path);
  out << "device,label\n";
  for (const auto& [d, label] : rows) {
    out << d << "," << device_label_name(label) << "\n";
  }
}

std::unordered_map<DeviceId, DeviceLabel> load_labels_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot open labels file: " + path);
  std::unordered_map<DeviceId, DeviceLabel> out;
  std::string line;
  std::getline(in, line); // header
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      fail(ErrorCode::parse_error, "labels line " + std::to_string(lineno) + ": missing comma");
    }
    const std::string name = line.substr(comma + 1);
    DeviceLabel label;
    if (name == "honest") label = DeviceLabel::honest;
    else if (name == "corrupt") label = DeviceLabel::corrupt;
    else if (name == "sybil") label = DeviceLabel::sybil;
    else if (name == "fictitious") label = DeviceLabel::fictitious;
    else fail(ErrorCode::parse_error, "labels line " + std::to_string(lineno) + ": bad label");
    out[static_cast<DeviceId>(std::stoul(line.substr(0, comma)))] = label;
  }
  return out;
}

} // namespace proloc
