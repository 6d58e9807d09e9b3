#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "proloc/error.hpp"
#include "proloc/history.hpp"
#include "proloc/rng.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

using namespace proloc;

namespace {

Advert adv(DeviceId receiver, DeviceId sender, double t, double upload_delay = 0.0) {
  return {receiver, sender, t, t + upload_delay};
}

// Brute-force interval scan over one device pair: walk the merged advert
// stream, split on gaps, keep mutual periods of sufficient length. Written
// from the period definition directly, independent of derive_encounters.
std::vector<double> oracle_pair_midpoints(std::vector<Advert> adverts, DeviceId a,
                                          DeviceId b, double min_duration,
                                          double gap_tolerance) {
  std::vector<Advert> stream;
  for (const Advert& x : adverts) {
    if ((x.receiver == a && x.sender == b) || (x.receiver == b && x.sender == a)) {
      stream.push_back(x);
    }
  }
  std::sort(stream.begin(), stream.end(),
            [](const Advert& x, const Advert& y) { return x.t < y.t; });
  std::vector<double> out;
  std::size_t i = 0;
  while (i < stream.size()) {
    std::size_t j = i;
    while (j + 1 < stream.size() && stream[j + 1].t - stream[j].t <= gap_tolerance) ++j;
    bool to_a = false, to_b = false;
    for (std::size_t k = i; k <= j; ++k) {
      if (stream[k].receiver == a) to_a = true;
      if (stream[k].receiver == b) to_b = true;
    }
    if (to_a && to_b && stream[j].t - stream[i].t >= min_duration) {
      out.push_back((stream[i].t + stream[j].t) / 2.0);
    }
    i = j + 1;
  }
  return out;
}

HistoryStore store_with_reports() {
  HistoryStore store;
  store.add_report({1, 10.0, {0, 0}});
  store.add_report({1, 20.0, {100, 0}});
  store.add_report({1, 30.0, {200, 0}});
  store.freeze();
  return store;
}

} // namespace

TEST_CASE("prev/next location report bracketing") {
  const HistoryStore store = store_with_reports();

  const auto p = store.prev_location_report(1, 15.0);
  REQUIRE(p.has_value());
  CHECK(p->t == doctest::Approx(10.0));
  CHECK(p->pos.x == doctest::Approx(0.0));

  const auto n = store.next_location_report(1, 15.0);
  REQUIRE(n.has_value());
  CHECK(n->t == doctest::Approx(20.0));

  CHECK_FALSE(store.prev_location_report(1, 5.0).has_value());
  CHECK_FALSE(store.next_location_report(1, 35.0).has_value());

  // A report exactly at t serves as both prev and next.
  CHECK(store.prev_location_report(1, 20.0)->t == doctest::Approx(20.0));
  CHECK(store.next_location_report(1, 20.0)->t == doctest::Approx(20.0));

  CHECK_THROWS_AS(store.prev_location_report(99, 10.0), Error);
}

TEST_CASE("nearest report prefers the earlier side on ties") {
  const HistoryStore store = store_with_reports();
  CHECK(store.nearest_location_report(1, 15.0)->t == doctest::Approx(10.0));
  CHECK(store.nearest_location_report(1, 16.0)->t == doctest::Approx(20.0));
}

TEST_CASE("derive_encounters: mutual cadence becomes one midpoint encounter") {
  std::vector<Advert> adverts;
  for (double t = 0.0; t <= 600.0; t += 60.0) {
    adverts.push_back(adv(1, 2, t));
    adverts.push_back(adv(2, 1, t));
  }
  HistoryParams params;
  params.min_duration = 300.0;
  params.gap_tolerance = 120.0;
  const auto encounters = derive_encounters(adverts, params);
  REQUIRE(encounters.size() == 1);
  CHECK(encounters[0].peer_a == 1);
  CHECK(encounters[0].peer_b == 2);
  CHECK(encounters[0].t_e == doctest::Approx(300.0));
  CHECK(encounters[0].timely);
  CHECK(oracle_pair_midpoints(adverts, 1, 2, 300.0, 120.0) ==
        std::vector<double>{300.0});
}

TEST_CASE("derive_encounters: one-directional adverts never form an encounter") {
  std::vector<Advert> adverts;
  for (double t = 0.0; t <= 600.0; t += 60.0) adverts.push_back(adv(1, 2, t));
  CHECK(derive_encounters(adverts, {}).empty());
}

TEST_CASE("derive_encounters: short bursts split by a gap do not qualify") {
  std::vector<Advert> adverts;
  for (double t = 0.0; t <= 120.0; t += 60.0) {
    adverts.push_back(adv(1, 2, t));
    adverts.push_back(adv(2, 1, t));
  }
  for (double t = 500.0; t <= 620.0; t += 60.0) {
    adverts.push_back(adv(1, 2, t));
    adverts.push_back(adv(2, 1, t));
  }
  HistoryParams params;
  params.min_duration = 300.0;
  params.gap_tolerance = 120.0;
  CHECK(derive_encounters(adverts, params).empty());
  CHECK(oracle_pair_midpoints(adverts, 1, 2, 300.0, 120.0).empty());
}

TEST_CASE("derive_encounters matches the interval-scan oracle on random streams") {
  Rng rng(555);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<Advert> adverts;
    const int n = 3 + static_cast<int>(rng.below(4)); // devices 1..n
    const int count = 30 + static_cast<int>(rng.below(120));
    for (int i = 0; i < count; ++i) {
      const auto a = static_cast<DeviceId>(1 + rng.below(n));
      auto b = static_cast<DeviceId>(1 + rng.below(n));
      if (a == b) continue;
      adverts.push_back(adv(a, b, std::floor(rng.uniform(0.0, 3000.0))));
    }
    HistoryParams params;
    params.min_duration = 200.0;
    params.gap_tolerance = 90.0;
    const auto encounters = derive_encounters(adverts, params);

    std::map<std::pair<DeviceId, DeviceId>, std::vector<double>> got;
    for (const auto& e : encounters) {
      CHECK(e.peer_a < e.peer_b);
      got[{e.peer_a, e.peer_b}].push_back(e.t_e);
    }
    for (DeviceId a = 1; a <= static_cast<DeviceId>(n); ++a) {
      for (DeviceId b = a + 1; b <= static_cast<DeviceId>(n); ++b) {
        const auto expected =
            oracle_pair_midpoints(adverts, a, b, params.min_duration, params.gap_tolerance);
        const auto it = got.find({a, b});
        const std::vector<double> actual = it == got.end() ? std::vector<double>{} : it->second;
        CHECK(actual == expected);
      }
    }
  }
}

TEST_CASE("derive_encounters is symmetric in input order") {
  Rng rng(99);
  std::vector<Advert> adverts;
  for (int i = 0; i < 200; ++i) {
    const auto a = static_cast<DeviceId>(1 + rng.below(4));
    auto b = static_cast<DeviceId>(1 + rng.below(4));
    if (a == b) continue;
    adverts.push_back(adv(a, b, rng.uniform(0.0, 2500.0)));
  }
  auto shuffled = adverts;
  rng.shuffle(shuffled);
  const auto e1 = derive_encounters(adverts, {});
  const auto e2 = derive_encounters(shuffled, {});
  REQUIRE(e1.size() == e2.size());
  for (std::size_t i = 0; i < e1.size(); ++i) {
    CHECK(e1[i].peer_a == e2[i].peer_a);
    CHECK(e1[i].peer_b == e2[i].peer_b);
    CHECK(e1[i].t_e == doctest::Approx(e2[i].t_e));
    CHECK(e1[i].timely == e2[i].timely);
  }
}

TEST_CASE("timeliness: one committed side rescues the encounter") {
  HistoryParams params;
  params.min_duration = 100.0;
  params.gap_tolerance = 120.0;
  params.upload_deadline = 600.0;

  // Device 1's received stream uploads late; device 2's is timely.
  std::vector<Advert> adverts;
  for (double t = 0.0; t <= 180.0; t += 60.0) {
    adverts.push_back(adv(1, 2, t, 100000.0));
    adverts.push_back(adv(2, 1, t, 10.0));
  }
  auto encounters = derive_encounters(adverts, params);
  REQUIRE(encounters.size() == 1);
  CHECK(encounters[0].timely);

  // Both sides late: not timely.
  for (auto& a : adverts) a.upload_t = a.t + 100000.0;
  encounters = derive_encounters(adverts, params);
  REQUIRE(encounters.size() == 1);
  CHECK_FALSE(encounters[0].timely);

  // A single straggler advert spoils its side's stream.
  for (auto& a : adverts) a.upload_t = a.t + 10.0;
  adverts[0].upload_t = adverts[0].t + 100000.0; // receiver 1
  adverts[1].upload_t = adverts[1].t + 100000.0; // receiver 2
  encounters = derive_encounters(adverts, params);
  REQUIRE(encounters.size() == 1);
  CHECK_FALSE(encounters[0].timely);
}

TEST_CASE("encounters_in_window returns only timely encounters, closed window") {
  HistoryParams params;
  params.min_duration = 100.0;

  HistoryStore store;
  store.add_report({1, 0.0, {0, 0}});
  // Timely encounter around t_e = 1090.
  for (double t = 1000.0; t <= 1180.0; t += 60.0) {
    store.add_advert(adv(1, 2, t, 10.0));
    store.add_advert(adv(2, 1, t, 10.0));
  }
  // Non-timely encounter around t_e = 2090.
  for (double t = 2000.0; t <= 2180.0; t += 60.0) {
    store.add_advert(adv(1, 3, t, 99999.0));
    store.add_advert(adv(3, 1, t, 99999.0));
  }
  store.freeze(params);

  CHECK(store.encounters_in_window(1, 500.0, 100.0).empty());

  // Encounter exactly at the window edge is included.
  const auto at_edge = store.encounters_in_window(1, 1000.0, 90.0);
  REQUIRE(at_edge.size() == 1);
  CHECK(at_edge[0].t_e == doctest::Approx(1090.0));
  CHECK(at_edge[0].timely);

  // The non-timely encounter is excluded even though it is in range.
  CHECK(store.encounters_in_window(1, 2090.0, 300.0).empty());

  CHECK_THROWS_AS(store.encounters_in_window(42, 0.0, 10.0), Error);
  for (const auto& e : store.encounters_in_window(1, 1090.0, 5000.0)) {
    CHECK(e.timely);
  }
}

TEST_CASE("store rejects invalid records") {
  HistoryStore store;
  CHECK_THROWS_AS(store.add_advert({1, 1, 0.0, 0.0}), Error);  // self advert
  CHECK_THROWS_AS(store.add_advert({1, 2, 10.0, 5.0}), Error); // upload before t

  HistoryStore dup;
  dup.add_report({1, 10.0, {0, 0}});
  dup.add_report({1, 10.0, {5, 5}});
  CHECK_THROWS_AS(dup.freeze(), Error); // non-increasing report times
}

TEST_CASE("jsonl round trip preserves queries") {
  Rng rng(2024);
  std::vector<LocationReport> reports;
  std::vector<Advert> adverts;
  for (int d = 1; d <= 5; ++d) {
    double t = rng.uniform(0.0, 50.0);
    for (int i = 0; i < 20; ++i) {
      reports.push_back({static_cast<DeviceId>(d), t,
                         {rng.uniform(0.0, 500.0), rng.uniform(0.0, 500.0)}});
      t += rng.uniform(1.0, 120.0);
    }
  }
  for (int i = 0; i < 300; ++i) {
    const auto a = static_cast<DeviceId>(1 + rng.below(5));
    auto b = static_cast<DeviceId>(1 + rng.below(5));
    if (a == b) continue;
    adverts.push_back(adv(a, b, rng.uniform(0.0, 2000.0), rng.uniform(0.0, 50.0)));
  }

  const auto path = std::filesystem::temp_directory_path() / "proloc_hist_test.jsonl";
  write_history_jsonl(path.string(), reports, adverts);
  const HistoryStore store = load_history_jsonl(path.string());
  CHECK(store.report_count() == reports.size());
  CHECK(store.adverts().size() == adverts.size());
  CHECK(store.device_count() == 5);

  // Bracketing invariant on the loaded store: prev.t <= t <= next.t and no
  // report falls strictly between them other than one exactly at t.
  for (int q = 0; q < 50; ++q) {
    const auto d = static_cast<DeviceId>(1 + rng.below(5));
    const double t = rng.uniform(-100.0, 2500.0);
    const auto prev = store.prev_location_report(d, t);
    const auto next = store.next_location_report(d, t);
    if (prev) CHECK(prev->t <= t);
    if (next) CHECK(next->t >= t);
    if (prev && next) {
      for (const LocationReport& r : reports) {
        if (r.device != d || r.t == t) continue;
        const bool strictly_between = prev->t < r.t && r.t < next->t;
        CHECK_FALSE(strictly_between);
      }
    }
  }
  std::filesystem::remove(path);

  CHECK_THROWS_AS(load_history_jsonl("/nonexistent/data.jsonl"), Error);
}
