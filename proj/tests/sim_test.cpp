#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "proloc/error.hpp"
#include "proloc/rng.hpp"
#include "proloc/sim.hpp"
#include "test_util.hpp"

#include <algorithm>
#include <map>
#include <set>

using namespace proloc;

namespace {

SimConfig small_config(std::uint64_t seed = 11) {
  SimConfig cfg;
  cfg.n_users = 30;
  cfg.n_pois = 4;
  cfg.days = 2;
  cfg.adoption_rate = 1.0;
  cfg.report_interval = 120.0;
  cfg.rng_seed = seed;
  return cfg;
}

MapNetwork sim_net() { return build_grid_network(16, 16, 50.0, 1.5); }

bool same_world(const World& a, const World& b) {
  if (a.visits.size() != b.visits.size()) return false;
  if (a.reports.size() != b.reports.size()) return false;
  if (a.adverts.size() != b.adverts.size()) return false;
  for (std::size_t i = 0; i < a.visits.size(); ++i) {
    if (a.visits[i].device != b.visits[i].device || a.visits[i].node != b.visits[i].node ||
        a.visits[i].t_start != b.visits[i].t_start || a.visits[i].t_end != b.visits[i].t_end) {
      return false;
    }
  }
  for (std::size_t i = 0; i < a.adverts.size(); ++i) {
    if (a.adverts[i].receiver != b.adverts[i].receiver ||
        a.adverts[i].sender != b.adverts[i].sender || a.adverts[i].t != b.adverts[i].t ||
        a.adverts[i].upload_t != b.adverts[i].upload_t) {
      return false;
    }
  }
  for (std::size_t i = 0; i < a.reports.size(); ++i) {
    if (a.reports[i].device != b.reports[i].device || a.reports[i].t != b.reports[i].t ||
        a.reports[i].pos.x != b.reports[i].pos.x || a.reports[i].pos.y != b.reports[i].pos.y) {
      return false;
    }
  }
  return true;
}

} // namespace

TEST_CASE("generate_world is deterministic per seed") {
  const MapNetwork net = sim_net();
  const World a = generate_world(net, small_config(42));
  const World b = generate_world(net, small_config(42));
  CHECK(same_world(a, b));
  const World c = generate_world(net, small_config(43));
  CHECK_FALSE(same_world(a, c));
}

TEST_CASE("visits are ordered, non-overlapping, and honor travel times") {
  const MapNetwork net = sim_net();
  const World world = generate_world(net, small_config());
  REQUIRE_FALSE(world.visits.empty());

  std::map<DeviceId, std::vector<const Visit*>> by_device;
  for (const Visit& v : world.visits) {
    CHECK(v.t_start < v.t_end);
    by_device[v.device].push_back(&v);
  }

  // Oracle travel times over the flat edge list.
  test::FlatGraph flat;
  flat.n = net.node_count();
  for (NodeId i = 0; i < net.node_count(); ++i) {
    for (const auto& arc : net.arcs(i)) {
      if (arc.to > i) flat.edges.emplace_back(i, arc.to, arc.travel_time);
    }
  }

  for (const auto& [d, visits] : by_device) {
    for (std::size_t i = 1; i < visits.size(); ++i) {
      const Visit& prev = *visits[i - 1];
      const Visit& cur = *visits[i];
      CHECK(cur.t_start >= prev.t_end);
      const auto dist = test::oracle_dijkstra(flat, {prev.node});
      CHECK(cur.t_start - prev.t_end >= dist[cur.node] - 1e-9);
    }
  }
}

TEST_CASE("every report matches the device's ground-truth position") {
  const MapNetwork net = sim_net();
  const World world = generate_world(net, small_config());
  REQUIRE_FALSE(world.reports.empty());
  for (const LocationReport& r : world.reports) {
    bool inside = false;
    for (const Visit& v : world.visits) {
      if (v.device == r.device && v.t_start <= r.t && r.t <= v.t_end) {
        CHECK(r.pos.x == net.position(v.node).x);
        CHECK(r.pos.y == net.position(v.node).y);
        inside = true;
        break;
      }
    }
    CHECK(inside); // no reports at home or in transit
  }
}

TEST_CASE("adverts are mutual and only between co-located participants") {
  const MapNetwork net = sim_net();
  SimConfig cfg = small_config();
  const World world = generate_world(net, cfg);
  REQUIRE_FALSE(world.adverts.empty());

  std::set<std::tuple<DeviceId, DeviceId, double>> advert_set;
  for (const Advert& a : world.adverts) {
    advert_set.insert({a.receiver, a.sender, a.t});
    CHECK(a.upload_t >= a.t);
    CHECK(a.upload_t - a.t <= cfg.max_upload_delay);
  }
  for (const Advert& a : world.adverts) {
    // Mirrored transmission exists.
    CHECK(advert_set.count({a.sender, a.receiver, a.t}) == 1);
    // Both peers are at the same POI at time t with enough shared dwell.
    bool cofound = false;
    for (const Visit& v : world.visits) {
      if (v.device != a.receiver || !(v.t_start <= a.t && a.t <= v.t_end)) continue;
      for (const Visit& w : world.visits) {
        if (w.device != a.sender || w.poi != v.poi) continue;
        const double lo = std::max(v.t_start, w.t_start);
        const double hi = std::min(v.t_end, w.t_end);
        if (lo <= a.t && a.t <= hi && hi - lo >= cfg.min_colocation) cofound = true;
      }
    }
    CHECK(cofound);
  }
}

TEST_CASE("single user produces no adverts") {
  const MapNetwork net = sim_net();
  SimConfig cfg = small_config();
  cfg.n_users = 1;
  const World world = generate_world(net, cfg);
  CHECK(world.adverts.empty());
  CHECK_FALSE(world.visits.empty());
}

TEST_CASE("two users at one POI produce a derivable encounter") {
  const MapNetwork net = sim_net();
  SimConfig cfg = small_config();
  cfg.n_users = 2;
  cfg.n_pois = 1;
  cfg.days = 1;
  cfg.min_visits_per_day = 2;
  cfg.max_visits_per_day = 2;
  cfg.min_visit_duration = 20000.0; // long dwell forces an overlap >= 10 min
  cfg.max_visit_duration = 21000.0;
  const World world = generate_world(net, cfg);
  REQUIRE_FALSE(world.adverts.empty());
  HistoryParams params;
  params.min_duration = 300.0;
  const auto encounters = derive_encounters(world.adverts, params);
  REQUIRE_FALSE(encounters.empty());
  CHECK(encounters[0].peer_a == 0);
  CHECK(encounters[0].peer_b == 1);
  CHECK(encounters[0].timely);
}

TEST_CASE("gravity pick frequency is inversely proportional to distance") {
  // POIs at 1 km and 2 km: expect a selection ratio of about 2:1.
  const MapNetwork net({{0, 0}, {1000, 0}, {2000, 0}},
                       {{0, 1, 100.0}, {1, 2, 100.0}}, 10.0);
  const auto weights = gravity_weights(net, net.position(0), {1, 2});
  REQUIRE(weights.size() == 2);
  CHECK(weights[0] / weights[1] == doctest::Approx(2.0));

  Rng rng(7);
  int first = 0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    if (gravity_pick(rng, weights) == 0) ++first;
  }
  const double frac = static_cast<double>(first) / draws;
  CHECK(frac == doctest::Approx(2.0 / 3.0).epsilon(0.05));
}

TEST_CASE("adoption rate adds participants monotonically") {
  const MapNetwork net = sim_net();
  SimConfig half = small_config();
  half.adoption_rate = 0.5;
  SimConfig full = small_config();
  const World w_half = generate_world(net, half);
  const World w_full = generate_world(net, full);
  CHECK(w_full.participants.size() == 30);
  CHECK(w_half.participants.size() == 15);
  CHECK(std::includes(w_full.participants.begin(), w_full.participants.end(),
                      w_half.participants.begin(), w_half.participants.end()));
  // Schedules of shared participants are identical.
  std::map<DeviceId, std::vector<Visit>> full_visits;
  for (const Visit& v : w_full.visits) full_visits[v.device].push_back(v);
  std::map<DeviceId, std::vector<Visit>> half_visits;
  for (const Visit& v : w_half.visits) half_visits[v.device].push_back(v);
  for (const auto& [d, visits] : half_visits) {
    REQUIRE(full_visits.count(d) == 1);
    REQUIRE(full_visits[d].size() == visits.size());
    for (std::size_t i = 0; i < visits.size(); ++i) {
      CHECK(full_visits[d][i].node == visits[i].node);
      CHECK(full_visits[d][i].t_start == visits[i].t_start);
      CHECK(full_visits[d][i].t_end == visits[i].t_end);
    }
  }
}

TEST_CASE("inject_corrupt_and_sybils replicates corrupt-sourced adverts") {
  std::vector<Advert> adverts{
      {1, 2, 100.0, 110.0}, {2, 1, 100.0, 115.0}, {3, 2, 200.0, 230.0}};
  // m = 0 leaves the log untouched.
  CHECK(inject_corrupt_and_sybils(adverts, {2}, 0).size() == adverts.size());

  const auto out = inject_corrupt_and_sybils(adverts, {2}, 3);
  // |adverts'| = |adverts| + m * (corrupt-sent count)
  CHECK(out.size() == adverts.size() + 3 * 2);

  std::size_t at_100 = 0;
  for (const Advert& a : out) {
    if (a.receiver == 1 && a.t == 100.0) ++at_100;
  }
  CHECK(at_100 == 4); // original plus three sybil copies

  for (const Advert& a : out) {
    if (a.sender >= sybil_id_base) {
      CHECK(a.sender >= sybil_id(2, 0));
      CHECK(a.sender <= sybil_id(2, 2));
      CHECK((a.receiver == 1 || a.receiver == 3));
      CHECK((a.t == 100.0 || a.t == 200.0));
    }
  }
}

TEST_CASE("inject_doppelganger_world mirrors and bridges") {
  std::vector<LocationReport> reports{{1, 10.0, {5, 5}}, {2, 20.0, {9, 9}}};
  std::vector<Advert> adverts{{2, 1, 100.0, 110.0}, {1, 2, 100.0, 120.0}};

  // Empty corrupt set: fictitious world fully disconnected from honest ids.
  {
    auto r = reports;
    auto a = adverts;
    inject_doppelganger_world(r, a, {});
    CHECK(r.size() == 2 * reports.size());
    for (const Advert& x : a) {
      const bool real_r = x.receiver < doppel_id_base;
      const bool real_s = x.sender < doppel_id_base;
      CHECK(real_r == real_s); // no cross edges at all
    }
  }

  // Device 2 corrupt: one bridge per advert received by 2 from a real device.
  {
    auto r = reports;
    auto a = adverts;
    inject_doppelganger_world(r, a, {2});
    // original 2 + mirrored 2 + one bridge (2 received from 1)
    CHECK(a.size() == 5);
    std::size_t bridges = 0;
    for (const Advert& x : a) {
      if (x.receiver == 2 && x.sender == doppel_id(1)) {
        ++bridges;
        CHECK(x.t == 100.0);
        CHECK(x.upload_t == 110.0);
      }
    }
    CHECK(bridges == 1);
  }
}

TEST_CASE("intra-fictitious advert multigraph is isomorphic under the doppel map") {
  const MapNetwork net = sim_net();
  const World world = generate_world(net, small_config());
  auto reports = world.reports;
  auto adverts = world.adverts;
  const std::size_t original = adverts.size();
  inject_doppelganger_world(reports, adverts, {world.participants[0]});

  std::multiset<std::tuple<DeviceId, DeviceId, double>> honest, fict;
  for (const Advert& a : adverts) {
    if (a.receiver < doppel_id_base && a.sender < doppel_id_base) {
      honest.insert({a.receiver, a.sender, a.t});
    } else if (a.receiver >= doppel_id_base && a.sender >= doppel_id_base) {
      fict.insert({a.receiver - doppel_id_base, a.sender - doppel_id_base, a.t});
    }
  }
  CHECK(honest.size() == original);
  CHECK(honest == fict);
}

TEST_CASE("label_devices follows the id ranges") {
  const std::vector<DeviceId> devices{1, 2, doppel_id(1), doppel_id(2), sybil_id(2, 0)};
  const auto labels = label_devices(devices, {2});
  CHECK(labels.at(1) == DeviceLabel::honest);
  CHECK(labels.at(2) == DeviceLabel::corrupt);
  CHECK(labels.at(doppel_id(1)) == DeviceLabel::fictitious);
  // Doppelganger of a corrupt device is still fictitious.
  CHECK(labels.at(doppel_id(2)) == DeviceLabel::fictitious);
  CHECK(labels.at(sybil_id(2, 0)) == DeviceLabel::sybil);
}

TEST_CASE("infeasible configs are rejected") {
  const MapNetwork net = sim_net();
  SimConfig cfg = small_config();
  cfg.n_pois = 100000;
  CHECK_THROWS_AS(generate_world(net, cfg), Error);
  cfg = small_config();
  cfg.adoption_rate = 0.0;
  CHECK_THROWS_AS(generate_world(net, cfg), Error);
  cfg = small_config();
  cfg.report_interval = -5.0;
  CHECK_THROWS_AS(generate_world(net, cfg), Error);

  const World world = generate_world(net, small_config());
  AttackConfig attack;
  attack.corrupt_count = 100000;
  CHECK_THROWS_AS(pick_corrupt(world, attack), Error);
  attack.corrupt_count = 1;
  attack.sybils_per_corrupt = 100000;
  CHECK_THROWS_AS(pick_corrupt(world, attack), Error);
}
