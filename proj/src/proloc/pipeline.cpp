#include "proloc/pipeline.hpp"

#include "proloc/error.hpp"
#include "proloc/io.hpp"
#include "proloc/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <thread>

namespace proloc {

namespace {

namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot open file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::io_error, "cannot create directory: " + dir);
}

double median_of(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  return percentile_nearest_rank(values, 50.0);
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  const int n = std::min<int>(threads, static_cast<int>(count));
  pool.reserve(n);
  for (int t = 0; t < n; ++t) {
    pool.emplace_back([&]() {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

SimConfig parse_sim_section(const nlohmann::json& j) {
  SimConfig cfg;
  cfg.n_users = j.value("n_users", cfg.n_users);
  cfg.n_pois = j.value("n_pois", cfg.n_pois);
  cfg.days = j.value("days", cfg.days);
  cfg.adoption_rate = j.value("adoption_rate", cfg.adoption_rate);
  cfg.report_interval = j.value("report_interval", cfg.report_interval);
  cfg.r_ble = j.value("r_ble", cfg.r_ble);
  cfg.min_colocation = j.value("min_colocation", cfg.min_colocation);
  cfg.rng_seed = j.value("rng_seed", cfg.rng_seed);
  cfg.min_visits_per_day = j.value("min_visits_per_day", cfg.min_visits_per_day);
  cfg.max_visits_per_day = j.value("max_visits_per_day", cfg.max_visits_per_day);
  cfg.min_visit_duration = j.value("min_visit_duration", cfg.min_visit_duration);
  cfg.max_visit_duration = j.value("max_visit_duration", cfg.max_visit_duration);
  cfg.advert_cadence = j.value("advert_cadence", cfg.advert_cadence);
  cfg.max_upload_delay = j.value("max_upload_delay", cfg.max_upload_delay);
  return cfg;
}

NetworkConfig parse_network_section(const nlohmann::json& j) {
  NetworkConfig cfg;
  if (j.contains("file")) {
    cfg.file = j.at("file").get<std::string>();
    return cfg;
  }
  const auto& g = j.contains("grid") ? j.at("grid") : j;
  cfg.grid_width = g.value("width", cfg.grid_width);
  cfg.grid_height = g.value("height", cfg.grid_height);
  cfg.grid_pitch = g.value("pitch", cfg.grid_pitch);
  cfg.grid_speed = g.value("speed", cfg.grid_speed);
  return cfg;
}

HistoryParams parse_history_section(const nlohmann::json& j) {
  HistoryParams p;
  p.upload_deadline = j.value("upload_deadline", p.upload_deadline);
  p.min_duration = j.value("min_duration", p.min_duration);
  p.gap_tolerance = j.value("gap_tolerance", p.gap_tolerance);
  return p;
}

TrustParams parse_trust_section(const nlohmann::json& j) {
  TrustParams p;
  p.alpha = j.value("alpha", p.alpha);
  p.L = j.value("L", p.L);
  p.epoch_len = j.value("epoch_len", p.epoch_len);
  p.window = j.value("window", p.window);
  p.weight_cap_discrete = j.value("weight_cap_discrete", p.weight_cap_discrete);
  p.weight_cap_continuous = j.value("weight_cap_continuous", 10.0 * p.window);
  p.solver_tolerance = j.value("solver_tolerance", p.solver_tolerance);
  return p;
}

EncounterGraph build_graph(const std::vector<Advert>& adverts, const TrustParams& p,
                           WeightVariant variant) {
  if (variant == WeightVariant::discrete) {
    return edge_weights_discrete(adverts, p.epoch_len, p.L, p.weight_cap_discrete);
  }
  return edge_weights_continuous(adverts, p.window, p.L, p.weight_cap_continuous);
}

std::vector<DeviceId> pick_anchors(const std::vector<DeviceId>& eligible,
                                   std::uint32_t count, std::uint64_t seed,
                                   std::string_view stream) {
  if (eligible.size() < count) {
    fail(ErrorCode::config_error, "not enough eligible devices for anchors");
  }
  std::vector<DeviceId> pool = eligible;
  std::sort(pool.begin(), pool.end());
  Rng rng = substream(seed, stream);
  rng.shuffle(pool);
  pool.resize(count);
  std::sort(pool.begin(), pool.end());
  return pool;
}

} // namespace

double percentile_nearest_rank(const std::vector<double>& sorted_values, double p) {
  if (sorted_values.empty()) {
    fail(ErrorCode::invalid_argument, "percentile of empty sample");
  }
  const auto n = sorted_values.size();
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(n)));
  if (rank < 1) rank = 1;
  if (rank > n) rank = n;
  return sorted_values[rank - 1];
}

const TrustScores& TrustCache::scores_for(std::vector<DeviceId> anchors) {
  std::sort(anchors.begin(), anchors.end());
  anchors.erase(std::unique(anchors.begin(), anchors.end()), anchors.end());
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = cache_.find(anchors);
  if (it == cache_.end()) {
    auto scores = std::make_unique<TrustScores>(
        trustrank(graph_, anchors, alpha_, tolerance_));
    it = cache_.emplace(std::move(anchors), std::move(scores)).first;
  }
  return *it->second;
}

MapNetwork make_network(const NetworkConfig& cfg) {
  if (!cfg.file.empty()) return load_network(cfg.file);
  return build_grid_network(cfg.grid_width, cfg.grid_height, cfg.grid_pitch,
                            cfg.grid_speed);
}

SimulateJob parse_simulate_config(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse_error, std::string("simulate config: ") + e.what());
  }
  try {
    SimulateJob job;
    if (j.contains("network")) job.network = parse_network_section(j.at("network"));
    if (j.contains("sim")) job.sim = parse_sim_section(j.at("sim"));
    if (j.contains("history")) job.history = parse_history_section(j.at("history"));
    if (j.contains("attack")) {
      const auto& a = j.at("attack");
      AttackConfig attack;
      attack.corrupt_count = a.value("corrupt_count", 0u);
      attack.sybils_per_corrupt = a.value("sybils_per_corrupt", 0u);
      attack.doppelganger = a.value("doppelganger", false);
      attack.rng_seed = a.value("rng_seed", std::uint64_t{1});
      job.attack = attack;
    }
    return job;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse_error, std::string("simulate config: ") + e.what());
  }
}

SimulateOutput run_simulate(const SimulateJob& job, const std::string& out_dir,
                            std::optional<std::uint64_t> seed_override) {
  ensure_dir(out_dir);
  SimulateJob effective = job;
  if (seed_override) effective.sim.rng_seed = *seed_override;

  const MapNetwork net = make_network(effective.network);
  const World world = generate_world(net, effective.sim);

  std::vector<LocationReport> reports = world.reports;
  std::vector<Advert> adverts = world.adverts;
  std::unordered_set<DeviceId> corrupt;
  if (effective.attack) {
    const auto corrupt_list = pick_corrupt(world, *effective.attack);
    corrupt.insert(corrupt_list.begin(), corrupt_list.end());
    if (effective.attack->doppelganger) {
      inject_doppelganger_world(reports, adverts, corrupt);
    }
    adverts = inject_corrupt_and_sybils(adverts, corrupt,
                                        effective.attack->sybils_per_corrupt);
  }

  std::vector<DeviceId> all_devices = world.participants;
  for (const auto& r : reports) all_devices.push_back(r.device);
  for (const auto& a : adverts) {
    all_devices.push_back(a.receiver);
    all_devices.push_back(a.sender);
  }
  std::sort(all_devices.begin(), all_devices.end());
  all_devices.erase(std::unique(all_devices.begin(), all_devices.end()), all_devices.end());

  SimulateOutput out;
  out.network_path = (fs::path(out_dir) / "network.json").string();
  out.dataset_path = (fs::path(out_dir) / "dataset.jsonl").string();
  out.ground_truth_path = (fs::path(out_dir) / "ground_truth.jsonl").string();
  out.visits_path = (fs::path(out_dir) / "visits.jsonl").string();
  out.labels_path = (fs::path(out_dir) / "labels.csv").string();

  save_network(net, out.network_path);
  write_history_jsonl(out.dataset_path, reports, adverts);
  write_ground_truth_jsonl(world, out.ground_truth_path);
  write_visits_jsonl(world, out.visits_path);
  write_labels_csv(label_devices(all_devices, corrupt), out.labels_path);

  nlohmann::json meta;
  meta["seed"] = effective.sim.rng_seed;
  meta["history"] = {{"upload_deadline", effective.history.upload_deadline},
                     {"min_duration", effective.history.min_duration},
                     {"gap_tolerance", effective.history.gap_tolerance}};
  meta["sim"] = {{"n_users", effective.sim.n_users},
                 {"n_pois", effective.sim.n_pois},
                 {"days", effective.sim.days},
                 {"adoption_rate", effective.sim.adoption_rate},
                 {"report_interval", effective.sim.report_interval},
                 {"r_ble", effective.sim.r_ble},
                 {"min_colocation", effective.sim.min_colocation}};
  if (effective.attack) {
    meta["attack"] = {{"corrupt_count", effective.attack->corrupt_count},
                      {"sybils_per_corrupt", effective.attack->sybils_per_corrupt},
                      {"doppelganger", effective.attack->doppelganger},
                      {"rng_seed", effective.attack->rng_seed}};
  }
  std::ofstream meta_out(fs::path(out_dir) / "meta.json");
  meta_out << meta.dump(2) << "\n";

  out.n_reports = reports.size();
  out.n_adverts = adverts.size();
  out.n_visits = world.visits.size();
  out.n_devices = all_devices.size();
  return out;
}

TrustOutput run_trustrank(const TrustJob& job, const std::string& scores_csv_path,
                          const std::string& graph_csv_path) {
  const HistoryStore store = load_history_jsonl(job.dataset_path, job.history);
  const EncounterGraph graph = build_graph(store.adverts(), job.params, job.variant);

  std::unordered_map<DeviceId, std::string> labels;
  if (!job.labels_path.empty()) {
    for (const auto& [d, label] : load_labels_csv(job.labels_path)) {
      labels[d] = device_label_name(label);
    }
  }

  std::vector<DeviceId> anchors = job.anchors;
  if (anchors.empty()) {
    // Real-id devices present in the graph, honest when labels are known.
    std::vector<DeviceId> eligible;
    for (DeviceId d : graph.nodes()) {
      if (d >= doppel_id_base) continue;
      auto it = labels.find(d);
      if (it != labels.end() && it->second != "honest") continue;
      eligible.push_back(d);
    }
    anchors = pick_anchors(eligible, job.anchor_count, job.anchor_seed, "anchors");
  }

  TrustOutput out;
  out.scores = trustrank(graph, anchors, job.params.alpha, job.params.solver_tolerance);
  out.anchors = anchors;
  out.graph_nodes = graph.node_count();
  out.graph_edges = graph.edge_count();
  write_scores_csv(out.scores, labels, scores_csv_path);
  if (!graph_csv_path.empty()) write_graph_csv(graph, graph_csv_path);
  return out;
}

TrustScores load_scores_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot open scores file: " + path);
  std::vector<std::pair<DeviceId, double>> entries;
  std::string line;
  std::getline(in, line); // header
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos) {
      fail(ErrorCode::parse_error, "scores line " + std::to_string(lineno));
    }
    const std::string score_field =
        c2 == std::string::npos ? line.substr(c1 + 1) : line.substr(c1 + 1, c2 - c1 - 1);
    entries.emplace_back(static_cast<DeviceId>(std::stoul(line.substr(0, c1))),
                         std::stod(score_field));
  }
  return TrustScores(std::move(entries));
}

ThresholdResult run_calibrate(const CalibrateJob& job, const std::string& out_json_path) {
  if (job.scenarios.empty()) fail(ErrorCode::no_scenarios, "no calibration scenarios");
  std::vector<ThresholdScenario> scenarios;
  for (const auto& [scores_path, labels_path] : job.scenarios) {
    ThresholdScenario sc;
    sc.scores = load_scores_csv(scores_path);
    const auto labels = load_labels_csv(labels_path);
    for (const auto& [d, _] : sc.scores.entries()) {
      auto it = labels.find(d);
      if (it == labels.end()) {
        fail(ErrorCode::config_error,
             "device " + std::to_string(d) + " in scores but not in labels");
      }
      if (it->second == DeviceLabel::honest || it->second == DeviceLabel::corrupt) {
        sc.honest.insert(d);
      } else {
        sc.attacker.insert(d);
      }
    }
    scenarios.push_back(std::move(sc));
  }
  const ThresholdResult result = calibrate_threshold(scenarios);
  nlohmann::json j{{"threshold", result.T},
                   {"tp_rate", result.tp_rate},
                   {"tn_rate", result.tn_rate},
                   {"mean_honest_score", result.s}};
  std::ofstream out(out_json_path);
  if (!out) fail(ErrorCode::io_error, "cannot write threshold file: " + out_json_path);
  out << j.dump(2) << "\n";
  return result;
}

ThresholdResult load_threshold_json(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse_error, std::string("threshold file: ") + e.what());
  }
  ThresholdResult r;
  r.T = j.value("threshold", 0.0);
  r.tp_rate = j.value("tp_rate", 0.0);
  r.tn_rate = j.value("tn_rate", 0.0);
  r.s = j.value("mean_honest_score", 0.0);
  return r;
}

ProofResult run_prove(const ProveJob& job, const std::string& out_json_path) {
  const fs::path dir(job.dataset_dir);
  const MapNetwork net = load_network((dir / "network.json").string());
  HistoryParams history;
  const fs::path meta_path = dir / "meta.json";
  if (fs::exists(meta_path)) {
    const auto meta = nlohmann::json::parse(read_file(meta_path.string()));
    if (meta.contains("history")) history = parse_history_section(meta.at("history"));
  }
  const HistoryStore store =
      load_history_jsonl((dir / "dataset.jsonl").string(), history);

  std::unordered_set<DeviceId> suspicious;
  if (!job.request.trust_anchors.empty()) {
    const EncounterGraph graph = build_graph(store.adverts(), job.trust, job.variant);
    TrustCache cache(graph, job.trust.alpha, job.trust.solver_tolerance);
    const TrustScores& scores = cache.scores_for(job.request.trust_anchors);
    for (const auto& [d, s] : scores.entries()) {
      if (s <= job.threshold) suspicious.insert(d);
    }
  }

  const ProofResult result = prove_loc(net, store, job.request, suspicious);
  if (!out_json_path.empty()) {
    std::ofstream out(out_json_path);
    if (!out) fail(ErrorCode::io_error, "cannot write proof file: " + out_json_path);
    out << proof_result_to_json(result) << "\n";
  }
  return result;
}

EvalConfig parse_eval_config(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse_error, std::string("eval config: ") + e.what());
  }
  try {
    EvalConfig cfg;
    if (j.contains("network")) cfg.network = parse_network_section(j.at("network"));
    if (j.contains("sim")) cfg.base_sim = parse_sim_section(j.at("sim"));
    if (j.contains("trust_sim")) cfg.trust_sim = parse_sim_section(j.at("trust_sim"));
    if (j.contains("history")) cfg.history = parse_history_section(j.at("history"));
    if (j.contains("trust")) cfg.trust = parse_trust_section(j.at("trust"));
    if (j.contains("settings")) {
      cfg.settings.clear();
      for (const auto& s : j.at("settings")) {
        cfg.settings.push_back({s.at("name").get<std::string>(),
                                s.value("report_interval", cfg.base_sim.report_interval),
                                s.value("adoption_rate", cfg.base_sim.adoption_rate)});
      }
    }
    cfg.sample_visits = j.value("sample_visits", cfg.sample_visits);
    cfg.n_max = j.value("n_max", cfg.n_max);
    cfg.window = j.value("window", cfg.window);
    cfg.r_ble = j.value("r_ble", cfg.r_ble);
    cfg.m_cap = j.value("m_cap", cfg.m_cap);
    cfg.eval_seed = j.value("eval_seed", cfg.eval_seed);
    if (j.contains("corrupt_counts")) {
      cfg.corrupt_counts = j.at("corrupt_counts").get<std::vector<std::uint32_t>>();
    }
    if (j.contains("sybil_counts")) {
      cfg.sybil_counts = j.at("sybil_counts").get<std::vector<std::uint32_t>>();
    }
    cfg.anchor_count = j.value("anchor_count", cfg.anchor_count);
    cfg.threads = j.value("threads", cfg.threads);
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse_error, std::string("eval config: ") + e.what());
  }
}

PrecisionResult run_precision_sweep(const MapNetwork& net, const EvalConfig& cfg) {
  if (cfg.settings.empty()) fail(ErrorCode::config_error, "no eval settings");
  PrecisionResult result;
  result.n_max = cfg.n_max;

  struct SettingWorld {
    EvalSetting setting;
    World world;
    HistoryStore store;
    std::unordered_set<DeviceId> suspicious;
  };
  std::vector<SettingWorld> worlds;
  for (const EvalSetting& setting : cfg.settings) {
    SimConfig sim = cfg.base_sim;
    sim.report_interval = setting.report_interval;
    sim.adoption_rate = setting.adoption_rate;
    SettingWorld sw;
    sw.setting = setting;
    sw.world = generate_world(net, sim);
    for (const auto& r : sw.world.reports) sw.store.add_report(r);
    for (const auto& a : sw.world.adverts) sw.store.add_advert(a);
    sw.store.freeze(cfg.history);

    // Trust pass over the honest world: anchors seeded deterministically,
    // threshold 0 so only devices unreachable from the anchors are suspicious.
    const EncounterGraph graph =
        build_graph(sw.world.adverts, cfg.trust, WeightVariant::discrete);
    std::vector<DeviceId> eligible;
    for (DeviceId d : graph.nodes()) {
      if (d < doppel_id_base) eligible.push_back(d);
    }
    const auto anchors =
        pick_anchors(eligible, cfg.anchor_count, cfg.eval_seed, "anchors");
    const TrustScores scores =
        trustrank(graph, anchors, cfg.trust.alpha, cfg.trust.solver_tolerance);
    for (const auto& [d, s] : scores.entries()) {
      if (s <= 0.0) sw.suspicious.insert(d);
    }
    worlds.push_back(std::move(sw));
  }

  // Sample visits from the sparsest setting; those devices participate (and
  // keep identical schedules) in every setting.
  std::size_t pool_idx = 0;
  for (std::size_t i = 1; i < worlds.size(); ++i) {
    if (worlds[i].setting.adoption_rate < worlds[pool_idx].setting.adoption_rate) {
      pool_idx = i;
    }
  }
  const auto& pool = worlds[pool_idx].world.visits;
  if (pool.empty()) fail(ErrorCode::config_error, "simulation produced no visits");
  std::vector<std::size_t> indices(pool.size());
  for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
  {
    Rng rng = substream(cfg.eval_seed, "sample");
    rng.shuffle(indices);
  }
  if (indices.size() > cfg.sample_visits) indices.resize(cfg.sample_visits);
  std::sort(indices.begin(), indices.end());
  std::vector<Visit> sampled;
  sampled.reserve(indices.size());
  for (std::size_t i : indices) sampled.push_back(pool[i]);

  for (SettingWorld& sw : worlds) {
    PrecisionSetting ps;
    ps.setting = sw.setting;
    ps.profiles.assign(sampled.size(), {});
    const HistoryStore& store = sw.store;
    const auto& suspicious = sw.suspicious;
    parallel_for(sampled.size(), cfg.threads, [&](std::size_t i) {
      const Visit& visit = sampled[i];
      VisitProfile profile;
      profile.device = visit.device;
      profile.t = (visit.t_start + visit.t_end) / 2.0;
      profile.truth_node = visit.node;
      profile.min_radius.assign(cfg.n_max, std::numeric_limits<double>::infinity());
      try {
        const GeoPoint center = net.position(visit.node);
        const LocationReport self =
            self_report_near(store, visit.device, profile.t, cfg.window);
        const auto candidates =
            encs_select(store, visit.device, self.pos, profile.t, cfg.window,
                        suspicious, cfg.m_cap, net.avg_speed());
        std::vector<double> dists;
        dists.reserve(candidates.size());
        for (const auto& c : candidates) {
          const EncounterRegion er =
              r_encounter(net, store, c.encounter, visit.device, cfg.r_ble, profile.t);
          dists.push_back(region_max_distance(net, er.region, center));
        }
        std::sort(dists.begin(), dists.end());
        for (std::uint32_t n = 1; n <= cfg.n_max; ++n) {
          if (dists.size() >= n) profile.min_radius[n - 1] = dists[n - 1];
        }
        profile.valid = true;
      } catch (const Error&) {
        profile.valid = false;
      }
      ps.profiles[i] = std::move(profile);
    });
    result.settings.push_back(std::move(ps));
  }
  return result;
}

TrustEvalResult run_trust_eval(const MapNetwork& net, const EvalConfig& cfg) {
  SimConfig sim = cfg.base_sim;
  if (cfg.trust_sim) {
    sim = *cfg.trust_sim;
  } else {
    sim.n_pois *= 3;
  }
  const World world = generate_world(net, sim);
  if (world.participants.empty()) {
    fail(ErrorCode::config_error, "simulation produced no participants");
  }

  std::uint32_t max_c = 0;
  for (std::uint32_t c : cfg.corrupt_counts) max_c = std::max(max_c, c);
  if (max_c > world.participants.size()) {
    fail(ErrorCode::config_error, "corrupt count exceeds participants");
  }

  // Nested corrupt sets: the grid at c reuses the first c of one shuffle.
  std::vector<DeviceId> corrupt_order = world.participants;
  {
    Rng rng = substream(cfg.eval_seed, "corrupt");
    rng.shuffle(corrupt_order);
  }
  std::unordered_set<DeviceId> max_corrupt(corrupt_order.begin(),
                                           corrupt_order.begin() + max_c);
  std::vector<DeviceId> anchor_pool;
  for (DeviceId d : world.participants) {
    if (!max_corrupt.count(d)) anchor_pool.push_back(d);
  }
  const auto anchors =
      pick_anchors(anchor_pool, cfg.anchor_count, cfg.eval_seed, "anchors-attack");

  TrustEvalResult result;
  std::vector<ThresholdScenario> scenarios;
  struct ScenarioInfo {
    std::uint32_t c, m;
    std::unordered_set<DeviceId> corrupt;
  };
  std::vector<ScenarioInfo> infos;

  for (std::uint32_t c : cfg.corrupt_counts) {
    for (std::uint32_t m : cfg.sybil_counts) {
      const std::unordered_set<DeviceId> corrupt(corrupt_order.begin(),
                                                 corrupt_order.begin() + c);
      std::vector<LocationReport> reports = world.reports;
      std::vector<Advert> adverts = world.adverts;
      inject_doppelganger_world(reports, adverts, corrupt);
      adverts = inject_corrupt_and_sybils(adverts, corrupt, m);

      const EncounterGraph graph =
          build_graph(adverts, cfg.trust, WeightVariant::discrete);
      ThresholdScenario sc;
      sc.scores = trustrank(graph, anchors, cfg.trust.alpha, cfg.trust.solver_tolerance);
      for (const auto& [d, _] : sc.scores.entries()) {
        if (d >= doppel_id_base) {
          sc.attacker.insert(d); // sybil or fictitious
        } else {
          sc.honest.insert(d); // corrupt devices count as honest for TP
        }
      }
      scenarios.push_back(std::move(sc));
      infos.push_back({c, m, corrupt});
    }
  }

  result.threshold = calibrate_threshold(scenarios);
  const double T = result.threshold.T;
  result.s_over_T = T > 0.0 ? result.threshold.s / T : 0.0;

  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const ThresholdScenario& sc = scenarios[i];
    const ScenarioInfo& info = infos[i];
    AttackScenarioResult row;
    row.c = info.c;
    row.m = info.m;
    std::size_t honest_n = 0, honest_tp = 0;
    std::size_t sybil_n = 0, sybil_tn = 0;
    std::size_t fict_n = 0, fict_tn = 0;
    std::vector<double> honest_scores, fict_scores;
    for (const auto& [d, s] : sc.scores.entries()) {
      if (d >= sybil_id_base) {
        ++sybil_n;
        if (s <= T) ++sybil_tn;
        row.sum_sybil += s;
        row.sum_attacker += s;
      } else if (d >= doppel_id_base) {
        ++fict_n;
        if (s <= T) ++fict_tn;
        row.sum_fictitious += s;
        row.sum_attacker += s;
        fict_scores.push_back(s);
      } else if (info.corrupt.count(d)) {
        ++honest_n;
        if (s > T) ++honest_tp;
        row.sum_corrupt += s;
        row.sum_attacker += s;
      } else {
        ++honest_n;
        if (s > T) ++honest_tp;
        honest_scores.push_back(s);
      }
    }
    row.sum_corrupt_host = row.sum_corrupt + row.sum_sybil;
    row.tp = honest_n ? static_cast<double>(honest_tp) / honest_n : 1.0;
    row.tn_sybil = sybil_n ? static_cast<double>(sybil_tn) / sybil_n : 1.0;
    row.tn_fictitious = fict_n ? static_cast<double>(fict_tn) / fict_n : 1.0;
    row.median_honest = median_of(std::move(honest_scores));
    row.median_fictitious = median_of(std::move(fict_scores));
    result.scenarios.push_back(row);
  }
  return result;
}

EvalOutput run_eval(const EvalConfig& cfg, const std::string& out_dir) {
  ensure_dir(out_dir);
  const MapNetwork net = make_network(cfg.network);

  const auto t0 = std::chrono::steady_clock::now();
  const PrecisionResult precision = run_precision_sweep(net, cfg);
  const auto t1 = std::chrono::steady_clock::now();
  const TrustEvalResult trust = run_trust_eval(net, cfg);
  const auto t2 = std::chrono::steady_clock::now();

  EvalOutput out;
  out.precision_csv = (fs::path(out_dir) / "precision_radius.csv").string();
  out.trustrank_csv = (fs::path(out_dir) / "trustrank_eval.csv").string();
  out.summary_json = (fs::path(out_dir) / "summary.json").string();

  {
    std::ofstream csv(out.precision_csv);
    if (!csv) fail(ErrorCode::io_error, "cannot write " + out.precision_csv);
    csv << "setting,report_interval,adoption_rate,n,samples,finite,p10,p50,p90\n";
    for (const auto& ps : precision.settings) {
      for (std::uint32_t n = 1; n <= precision.n_max; ++n) {
        std::vector<double> values;
        std::size_t finite = 0;
        for (const auto& profile : ps.profiles) {
          if (!profile.valid) continue;
          const double v = profile.min_radius[n - 1];
          values.push_back(v);
          if (std::isfinite(v)) ++finite;
        }
        std::sort(values.begin(), values.end());
        csv << ps.setting.name << "," << format_double(ps.setting.report_interval)
            << "," << format_double(ps.setting.adoption_rate) << "," << n << ","
            << values.size() << "," << finite;
        if (values.empty()) {
          csv << ",nan,nan,nan\n";
        } else {
          csv << "," << format_double(percentile_nearest_rank(values, 10.0)) << ","
              << format_double(percentile_nearest_rank(values, 50.0)) << ","
              << format_double(percentile_nearest_rank(values, 90.0)) << "\n";
        }
      }
    }
  }

  {
    std::ofstream csv(out.trustrank_csv);
    if (!csv) fail(ErrorCode::io_error, "cannot write " + out.trustrank_csv);
    csv << "c,m,tp,tn_sybil,tn_fictitious,median_honest,median_fictitious,"
           "sum_attacker,sum_corrupt_host,sum_corrupt\n";
    for (const auto& row : trust.scenarios) {
      csv << row.c << "," << row.m << "," << format_double(row.tp) << ","
          << format_double(row.tn_sybil) << "," << format_double(row.tn_fictitious)
          << "," << format_double(row.median_honest) << ","
          << format_double(row.median_fictitious) << ","
          << format_double(row.sum_attacker) << ","
          << format_double(row.sum_corrupt_host) << ","
          << format_double(row.sum_corrupt) << "\n";
    }
  }

  {
    using ms = std::chrono::duration<double, std::milli>;
    nlohmann::json j;
    j["threshold"] = {{"threshold", trust.threshold.T},
                      {"tp_rate", trust.threshold.tp_rate},
                      {"tn_rate", trust.threshold.tn_rate},
                      {"mean_honest_score", trust.threshold.s}};
    j["s_over_T"] = trust.s_over_T;
    j["runtimes_ms"] = {{"precision_sweep", ms(t1 - t0).count()},
                        {"trust_eval", ms(t2 - t1).count()}};
    j["sample_visits"] = cfg.sample_visits;
    std::ofstream js(out.summary_json);
    if (!js) fail(ErrorCode::io_error, "cannot write " + out.summary_json);
    js << j.dump(2) << "\n";
  }
  return out;
}

} // namespace proloc
