#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "proloc/error.hpp"
#include "proloc/rng.hpp"
#include "proloc/trust.hpp"
#include "test_util.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <set>

using namespace proloc;

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

Advert adv(DeviceId receiver, DeviceId sender, double t) {
  return {receiver, sender, t, t};
}

} // namespace

TEST_CASE("discrete edge weights: direct substitution cases") {
  // Single sender in one epoch, L=3 -> weight 1.
  {
    const auto g = edge_weights_discrete({adv(1, 2, 100.0)}, 480.0, 3.0);
    CHECK(g.edge_weight(1, 2) == doctest::Approx(1.0));
  }
  // d plus 7 Sybil-like senders in one epoch -> each edge 1/8^3.
  {
    std::vector<Advert> adverts;
    for (DeviceId s = 2; s <= 9; ++s) adverts.push_back(adv(1, s, 100.0));
    const auto g = edge_weights_discrete(adverts, 480.0, 3.0);
    double sybil_total = 0.0;
    for (DeviceId s = 3; s <= 9; ++s) {
      CHECK(g.edge_weight(1, s) == doctest::Approx(1.0 / 512.0));
      sybil_total += g.edge_weight(1, s);
    }
    CHECK(g.edge_weight(1, 2) == doctest::Approx(1.0 / 512.0));
    CHECK(sybil_total == doctest::Approx(7.0 / 512.0));
  }
  // Same sender alone in two epochs -> weight 2.
  {
    const auto g = edge_weights_discrete({adv(1, 2, 100.0), adv(1, 2, 700.0)}, 480.0, 3.0);
    CHECK(g.edge_weight(1, 2) == doctest::Approx(2.0));
  }
  // Duplicate adverts within one epoch count once.
  {
    const auto g = edge_weights_discrete({adv(1, 2, 100.0), adv(1, 2, 150.0)}, 480.0, 3.0);
    CHECK(g.edge_weight(1, 2) == doctest::Approx(1.0));
  }
}

TEST_CASE("discrete edge weights match a per-epoch counting oracle") {
  Rng rng(808);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<Advert> adverts;
    const int n = 4 + static_cast<int>(rng.below(5));
    for (int i = 0; i < 250; ++i) {
      const auto r = static_cast<DeviceId>(rng.below(n));
      const auto s = static_cast<DeviceId>(rng.below(n));
      if (r == s) continue;
      adverts.push_back(adv(r, s, rng.uniform(0.0, 8000.0)));
    }
    const double epoch_len = 480.0;
    const double L = 3.0;
    const auto g = edge_weights_discrete(adverts, epoch_len, L);

    // Oracle: distinct senders per (receiver, epoch) via sets.
    std::map<std::pair<DeviceId, std::int64_t>, std::set<DeviceId>> epochs;
    for (const Advert& a : adverts) {
      epochs[{a.receiver, static_cast<std::int64_t>(std::floor(a.t / epoch_len))}]
          .insert(a.sender);
    }
    std::map<std::pair<DeviceId, DeviceId>, double> expected;
    for (const auto& [key, senders] : epochs) {
      for (DeviceId s : senders) {
        expected[{key.first, s}] += 1.0 / std::pow(double(senders.size()), L);
      }
    }
    std::size_t checked = 0;
    for (const auto& [edge, w] : expected) {
      CHECK(g.edge_weight(edge.first, edge.second) == doctest::Approx(w).epsilon(1e-12));
      ++checked;
    }
    CHECK(g.edge_count() == checked);
  }
}

TEST_CASE("continuous edge weights: isolated advert integrates to the window") {
  const double w = 480.0;
  // No other senders: integrand 1 over an interval of length w.
  auto g = edge_weights_continuous({adv(1, 2, 1000.0)}, w, 3.0, inf);
  CHECK(g.edge_weight(1, 2) == doctest::Approx(w));
  // Cap binds.
  g = edge_weights_continuous({adv(1, 2, 1000.0)}, w, 3.0, w / 2.0);
  CHECK(g.edge_weight(1, 2) == doctest::Approx(w / 2.0));
}

TEST_CASE("continuous edge weights: overlapping windows share at 1/2^L") {
  const double w = 100.0;
  const double L = 3.0;
  // Senders 2 and 3 advert 40 s apart: windows [t-50,t+50] overlap on 60 s.
  const auto g = edge_weights_continuous({adv(1, 2, 500.0), adv(1, 3, 540.0)}, w, L, inf);
  const double shared = 60.0 / std::pow(2.0, L);
  CHECK(g.edge_weight(1, 2) == doctest::Approx(40.0 + shared));
  CHECK(g.edge_weight(1, 3) == doctest::Approx(40.0 + shared));
}

TEST_CASE("continuous edge weights match a fine quadrature oracle") {
  Rng rng(616);
  const double L = 3.0;
  for (int trial = 0; trial < 30; ++trial) {
    const double w = rng.uniform(50.0, 500.0);
    std::vector<Advert> adverts;
    const int senders = 1 + static_cast<int>(rng.below(4));
    for (int s = 0; s < senders; ++s) {
      const int k = 1 + static_cast<int>(rng.below(5));
      for (int i = 0; i < k; ++i) {
        adverts.push_back(adv(1, static_cast<DeviceId>(2 + s), rng.uniform(0.0, 1500.0)));
      }
    }
    const auto g = edge_weights_continuous(adverts, w, L, inf);

    // Quadrature oracle: refine between event breakpoints with steps
    // <= w/1000 and evaluate the integrand by direct counting.
    std::vector<double> breaks;
    for (const Advert& a : adverts) {
      breaks.push_back(a.t - w / 2.0);
      breaks.push_back(a.t + w / 2.0);
    }
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    auto senders_at = [&](double t) {
      std::set<DeviceId> active;
      for (const Advert& a : adverts) {
        if (a.t >= t - w / 2.0 && a.t <= t + w / 2.0) active.insert(a.sender);
      }
      return active;
    };

    std::map<DeviceId, double> expected;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
      const double lo = breaks[i], hi = breaks[i + 1];
      const auto steps = static_cast<std::size_t>(std::ceil((hi - lo) / (w / 1000.0)));
      const double h = (hi - lo) / static_cast<double>(steps);
      for (std::size_t s = 0; s < steps; ++s) {
        const double mid = lo + (static_cast<double>(s) + 0.5) * h;
        const auto active = senders_at(mid);
        if (active.empty()) continue;
        const double share = h / std::pow(static_cast<double>(active.size()), L);
        for (DeviceId d : active) expected[d] += share;
      }
    }
    for (const auto& [sender, want] : expected) {
      CHECK(std::abs(g.edge_weight(1, sender) - want) < 1e-6 * w);
    }
  }
}

TEST_CASE("discrete and continuous agree on isolated adverts up to the factor w") {
  Rng rng(4321);
  const double w = 480.0;
  for (int trial = 0; trial < 10; ++trial) {
    // Isolated adverts: farther apart than both the window and epoch width,
    // and away from epoch boundaries.
    std::vector<Advert> adverts;
    double t = 100.0;
    const int k = 1 + static_cast<int>(rng.below(6));
    for (int i = 0; i < k; ++i) {
      adverts.push_back(adv(1, 2, t));
      t += 2.0 * 480.0 + std::floor(rng.uniform(100.0, 400.0)) + 480.0;
    }
    const auto gd = edge_weights_discrete(adverts, 480.0, 3.0);
    const auto gc = edge_weights_continuous(adverts, w, 3.0, inf);
    CHECK(gc.edge_weight(1, 2) == doctest::Approx(w * gd.edge_weight(1, 2)));
  }
}

TEST_CASE("sybil dilution m/(t+m)^L is unimodal and vanishing") {
  const double L = 3.0;
  for (double t : {1.0, 4.0, 16.0}) {
    auto share = [&](double m) { return m / std::pow(t + m, L); };
    // Unimodal: increases to the peak, decreases after.
    double peak = share(1);
    int peak_at = 1;
    for (int m = 2; m <= 1024; ++m) {
      if (share(m) > peak) {
        peak = share(m);
        peak_at = m;
      }
    }
    for (int m = 2; m <= peak_at; ++m) CHECK(share(m) >= share(m - 1));
    for (int m = peak_at + 1; m <= 1024; ++m) CHECK(share(m) < share(m - 1));
    // Vanishes for large m.
    CHECK(share(1024) < 1e-3);
    // Decreasing from m = 8 at L = 3 for all tested t.
    for (int m = 9; m <= 1024; ++m) CHECK(share(m) < share(m - 1));
  }
}

TEST_CASE("trustrank trivial cases") {
  // Single anchored node halts where it starts.
  {
    EncounterGraph g;
    g.add_node(7);
    g.finalize();
    const auto scores = trustrank(g, {7}, 0.85, 1e-12);
    CHECK(scores.score(7) == doctest::Approx(1.0));
  }
  // A node unreachable from the anchors scores 0.
  {
    EncounterGraph g;
    g.add_edge(1, 2, 1.0);
    g.add_node(3);
    g.finalize();
    const auto scores = trustrank(g, {1}, 0.85, 1e-12);
    CHECK(scores.score(3) == doctest::Approx(0.0));
    CHECK(scores.sum() == doctest::Approx(1.0));
  }
}

TEST_CASE("trustrank on a 2-node cycle matches both oracles") {
  EncounterGraph g;
  g.add_edge(1, 2, 1.0);
  g.add_edge(2, 1, 1.0);
  g.finalize();
  const double alpha = 0.5;
  const auto scores = trustrank(g, {1}, alpha, 1e-14);

  // Closed form: mass(1) = 1/(1-alpha^2), mass(2) = alpha/(1-alpha^2).
  const double m1 = 1.0 / (1.0 - alpha * alpha);
  CHECK(scores.score(1) == doctest::Approx((1.0 - alpha) * m1).epsilon(1e-9));
  CHECK(scores.score(2) == doctest::Approx((1.0 - alpha) * alpha * m1).epsilon(1e-9));

  const auto direct = test::oracle_linear_solve(g, {1}, alpha);
  CHECK(std::abs(scores.score(1) - direct[g.index_of(1)]) < 1e-9);
  CHECK(std::abs(scores.score(2) - direct[g.index_of(2)]) < 1e-9);

  Rng rng(31415);
  const std::size_t walks = 1000000;
  const auto mc = test::oracle_monte_carlo(g, {1}, alpha, walks, rng);
  for (DeviceId d : {1u, 2u}) {
    const double p = mc[g.index_of(d)];
    const double se = std::sqrt(std::max(p * (1.0 - p), 1e-12) / double(walks));
    CHECK(std::abs(scores.score(d) - p) <= 3.0 * se + 1.0 / double(walks));
  }
}

TEST_CASE("trustrank equals the dense solve on random graphs") {
  Rng rng(2718);
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = test::random_trust_graph(rng, 40);
    std::vector<DeviceId> anchors{g.device_at(0)};
    if (g.node_count() > 3) anchors.push_back(g.device_at(2));
    const double alpha = rng.uniform(0.3, 0.95);
    const auto scores = trustrank(g, anchors, alpha, 1e-14);
    const auto direct = test::oracle_linear_solve(g, anchors, alpha);
    for (std::uint32_t i = 0; i < g.node_count(); ++i) {
      CHECK(std::abs(scores.score(g.device_at(i)) - direct[i]) < 1e-9);
    }
    CHECK(scores.sum() == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("trustrank is invariant under uniform edge-weight scaling") {
  Rng rng(5150);
  const auto base = test::random_trust_graph(rng, 30);
  EncounterGraph scaled;
  for (std::uint32_t i = 0; i < base.node_count(); ++i) {
    scaled.add_node(base.device_at(i));
    for (const auto& arc : base.out_arcs(i)) {
      scaled.add_edge(base.device_at(i), base.device_at(arc.to), 37.5 * arc.weight);
    }
  }
  scaled.finalize();
  const std::vector<DeviceId> anchors{base.device_at(0)};
  const auto s1 = trustrank(base, anchors, 0.85, 1e-14);
  const auto s2 = trustrank(scaled, anchors, 0.85, 1e-14);
  for (std::uint32_t i = 0; i < base.node_count(); ++i) {
    CHECK(s1.score(base.device_at(i)) ==
          doctest::Approx(s2.score(base.device_at(i))).epsilon(1e-10));
  }
}

TEST_CASE("trustrank error paths") {
  EncounterGraph g;
  g.add_edge(1, 2, 1.0);
  g.finalize();
  CHECK_THROWS_AS(trustrank(g, {}, 0.85, 1e-12), Error);
  CHECK_THROWS_AS(trustrank(g, {99}, 0.85, 1e-12), Error);
  try {
    trustrank(g, {}, 0.85, 1e-12);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::no_anchors);
  }
  try {
    trustrank(g, {99}, 0.85, 1e-12);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::unknown_anchor);
  }
}

TEST_CASE("classify boundary is strict") {
  TrustScores scores({{1, 0.5}, {2, 0.0}, {3, 1.0}});
  const auto labels = classify(scores, 0.5);
  CHECK(labels.at(1) == TrustLabel::suspicious); // score == T
  CHECK(labels.at(2) == TrustLabel::suspicious);
  CHECK(labels.at(3) == TrustLabel::non_suspicious);
}

TEST_CASE("calibrate_threshold: bimodal scores take the midpoint") {
  ThresholdScenario sc;
  sc.scores = TrustScores({{1, 0.1}, {2, 0.001}});
  sc.honest = {1};
  sc.attacker = {2};
  const auto result = calibrate_threshold({sc});
  CHECK(result.T == doctest::Approx(0.0505));
  CHECK(result.tp_rate == doctest::Approx(1.0));
  CHECK(result.tn_rate == doctest::Approx(1.0));
  CHECK(result.s == doctest::Approx(0.1));
}

namespace {

// Exhaustive sweep over all midpoints, the statement taken literally.
double oracle_best_threshold(const std::vector<ThresholdScenario>& scenarios) {
  std::vector<double> observed;
  for (const auto& sc : scenarios) {
    for (const auto& [_, s] : sc.scores.entries()) observed.push_back(s);
  }
  std::sort(observed.begin(), observed.end());
  observed.erase(std::unique(observed.begin(), observed.end()), observed.end());
  double best_T = observed.empty() ? 0.0 : observed[0];
  double best = -1.0;
  for (std::size_t i = 0; i + 1 < observed.size(); ++i) {
    const double T = (observed[i] + observed[i + 1]) / 2.0;
    double obj = 0.0;
    for (const auto& sc : scenarios) {
      double tp = 0, hn = 0, tn = 0, an = 0;
      for (const auto& [d, s] : sc.scores.entries()) {
        if (sc.honest.count(d)) {
          ++hn;
          if (s > T) ++tp;
        } else {
          ++an;
          if (s <= T) ++tn;
        }
      }
      obj += (hn ? tp / hn : 1.0) + (an ? tn / an : 1.0);
    }
    if (obj > best) {
      best = obj;
      best_T = T;
    }
  }
  return best_T;
}

ThresholdScenario random_scenario(Rng& rng, int devices) {
  ThresholdScenario sc;
  std::vector<std::pair<DeviceId, double>> entries;
  for (int d = 0; d < devices; ++d) {
    const double score = rng.uniform(0.0, 1.0);
    entries.push_back({static_cast<DeviceId>(d), score});
    if (rng.next_double() < 0.5) {
      sc.honest.insert(static_cast<DeviceId>(d));
    } else {
      sc.attacker.insert(static_cast<DeviceId>(d));
    }
  }
  sc.scores = TrustScores(std::move(entries));
  return sc;
}

} // namespace

TEST_CASE("calibrate_threshold matches the exhaustive sweep oracle") {
  Rng rng(14142);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<ThresholdScenario> scenarios;
    const int n_scen = 1 + static_cast<int>(rng.below(3));
    for (int s = 0; s < n_scen; ++s) {
      scenarios.push_back(random_scenario(rng, 10 + static_cast<int>(rng.below(30))));
    }
    const auto result = calibrate_threshold(scenarios);
    CHECK(result.T == doctest::Approx(oracle_best_threshold(scenarios)));
  }
}

TEST_CASE("calibrate_threshold: two scenarios with different gaps") {
  ThresholdScenario a;
  a.scores = TrustScores({{1, 0.9}, {2, 0.2}});
  a.honest = {1};
  a.attacker = {2};
  ThresholdScenario b;
  b.scores = TrustScores({{1, 0.6}, {2, 0.05}});
  b.honest = {1};
  b.attacker = {2};
  const auto result = calibrate_threshold({a, b});
  // Perfect separation needs T in [0.2, 0.6); candidates there: 0.4.
  CHECK(result.T == doctest::Approx(0.4));
  CHECK(result.tp_rate == doctest::Approx(1.0));
  CHECK(result.tn_rate == doctest::Approx(1.0));
  CHECK(result.T == doctest::Approx(oracle_best_threshold({a, b})));
}

TEST_CASE("calibrate_threshold error paths") {
  CHECK_THROWS_AS(calibrate_threshold({}), Error);
  ThresholdScenario sc;
  sc.scores = TrustScores({{1, 0.5}});
  CHECK_THROWS_AS(calibrate_threshold({sc}), Error); // unlabeled device
}
