#include "proloc/proloc.h"

#include "proloc/error.hpp"
#include "proloc/geo.hpp"
#include "proloc/history.hpp"
#include "proloc/pipeline.hpp"
#include "proloc/proof.hpp"
#include "proloc/trust.hpp"

#include <json.hpp>

#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

struct proloc_network {
  proloc::MapNetwork net;
};
struct proloc_region {
  proloc::Region region;
};
struct proloc_store {
  proloc::HistoryStore store;
};
struct proloc_graph {
  proloc::EncounterGraph graph;
};
struct proloc_scores {
  proloc::TrustScores scores;
};

namespace {

thread_local std::string g_last_error;

proloc_status to_status(proloc::ErrorCode code) {
  using proloc::ErrorCode;
  switch (code) {
  case ErrorCode::ok: return PROLOC_OK;
  case ErrorCode::invalid_argument: return PROLOC_ERR_INVALID_ARGUMENT;
  case ErrorCode::invalid_seed: return PROLOC_ERR_INVALID_SEED;
  case ErrorCode::invalid_budget: return PROLOC_ERR_INVALID_BUDGET;
  case ErrorCode::invalid_radius: return PROLOC_ERR_INVALID_RADIUS;
  case ErrorCode::invalid_dimensions: return PROLOC_ERR_INVALID_DIMENSIONS;
  case ErrorCode::network_mismatch: return PROLOC_ERR_NETWORK_MISMATCH;
  case ErrorCode::unknown_device: return PROLOC_ERR_UNKNOWN_DEVICE;
  case ErrorCode::no_anchors: return PROLOC_ERR_NO_ANCHORS;
  case ErrorCode::unknown_anchor: return PROLOC_ERR_UNKNOWN_ANCHOR;
  case ErrorCode::no_scenarios: return PROLOC_ERR_NO_SCENARIOS;
  case ErrorCode::missing_self_report: return PROLOC_ERR_MISSING_SELF_REPORT;
  case ErrorCode::witness_without_reports: return PROLOC_ERR_WITNESS_WITHOUT_REPORTS;
  case ErrorCode::config_error: return PROLOC_ERR_CONFIG;
  case ErrorCode::io_error: return PROLOC_ERR_IO;
  case ErrorCode::parse_error: return PROLOC_ERR_PARSE;
  case ErrorCode::internal_error: return PROLOC_ERR_INTERNAL;
  }
  return PROLOC_ERR_INTERNAL;
}

template <typename Fn>
proloc_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return PROLOC_OK;
  } catch (const proloc::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return PROLOC_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return PROLOC_ERR_INTERNAL;
  }
}

proloc_status require(bool cond, const char* message) {
  if (cond) return PROLOC_OK;
  g_last_error = message;
  return PROLOC_ERR_INVALID_ARGUMENT;
}

proloc::HistoryParams history_params(double deadline, double min_duration,
                                     double gap_tolerance) {
  proloc::HistoryParams p;
  if (deadline > 0.0) p.upload_deadline = deadline;
  if (min_duration > 0.0) p.min_duration = min_duration;
  if (gap_tolerance > 0.0) p.gap_tolerance = gap_tolerance;
  return p;
}

struct ParsedTrustParams {
  proloc::TrustParams params;
  proloc::WeightVariant variant = proloc::WeightVariant::discrete;
};

ParsedTrustParams parse_trust_params_json(const char* params_json) {
  ParsedTrustParams out;
  out.params.weight_cap_continuous = 10.0 * out.params.window;
  if (!params_json || !*params_json) return out;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(params_json);
  } catch (const nlohmann::json::exception& e) {
    proloc::fail(proloc::ErrorCode::parse_error, std::string("trust params: ") + e.what());
  }
  out.params.alpha = j.value("alpha", out.params.alpha);
  out.params.L = j.value("L", out.params.L);
  out.params.epoch_len = j.value("epoch_len", out.params.epoch_len);
  out.params.window = j.value("window", out.params.window);
  out.params.weight_cap_discrete = j.value("weight_cap_discrete", out.params.weight_cap_discrete);
  out.params.weight_cap_continuous =
      j.value("weight_cap_continuous", 10.0 * out.params.window);
  out.params.solver_tolerance = j.value("solver_tolerance", out.params.solver_tolerance);
  const std::string variant = j.value("variant", std::string("discrete"));
  if (variant == "continuous") {
    out.variant = proloc::WeightVariant::continuous;
  } else if (variant != "discrete") {
    proloc::fail(proloc::ErrorCode::parse_error, "trust params: unknown variant " + variant);
  }
  return out;
}

std::string read_text_file(const char* path) {
  std::ifstream in(path);
  if (!in) proloc::fail(proloc::ErrorCode::io_error, std::string("cannot open file: ") + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace

extern "C" {

const char* proloc_last_error(void) { return g_last_error.c_str(); }

proloc_status proloc_network_grid(uint32_t width, uint32_t height, double pitch_m,
                                  double speed_mps, proloc_network** out) {
  if (auto s = require(out != nullptr, "out must not be null")) return s;
  return guarded([&] {
    *out = new proloc_network{proloc::build_grid_network(width, height, pitch_m, speed_mps)};
  });
}

proloc_status proloc_network_load(const char* path, proloc_network** out) {
  if (auto s = require(out && path, "path and out must not be null")) return s;
  return guarded([&] { *out = new proloc_network{proloc::load_network(path)}; });
}

proloc_status proloc_network_save(const proloc_network* net, const char* path) {
  if (auto s = require(net && path, "net and path must not be null")) return s;
  return guarded([&] { proloc::save_network(net->net, path); });
}

void proloc_network_free(proloc_network* net) { delete net; }

uint32_t proloc_network_node_count(const proloc_network* net) {
  return net ? static_cast<uint32_t>(net->net.node_count()) : 0;
}

double proloc_network_avg_speed(const proloc_network* net) {
  return net ? net->net.avg_speed() : 0.0;
}

proloc_status proloc_network_node_position(const proloc_network* net, uint32_t node,
                                           double* x, double* y) {
  if (auto s = require(net && x && y, "arguments must not be null")) return s;
  if (auto s = require(node < net->net.node_count(), "node id out of range")) return s;
  *x = net->net.position(node).x;
  *y = net->net.position(node).y;
  return PROLOC_OK;
}

proloc_status proloc_region_from_nodes(const proloc_network* net, const uint32_t* nodes,
                                       size_t count, proloc_region** out) {
  if (auto s = require(net && out && (nodes || count == 0), "invalid arguments")) return s;
  return guarded([&] {
    *out = new proloc_region{net->net.region_of({nodes, nodes + count})};
  });
}

proloc_status proloc_isochrone(const proloc_network* net, const proloc_region* seed,
                               double budget_s, proloc_region** out) {
  if (auto s = require(net && seed && out, "arguments must not be null")) return s;
  return guarded([&] {
    *out = new proloc_region{proloc::isochrone(net->net, seed->region, budget_s)};
  });
}

proloc_status proloc_grow_region(const proloc_network* net, const proloc_region* region,
                                 double radius_m, proloc_region** out) {
  if (auto s = require(net && region && out, "arguments must not be null")) return s;
  return guarded([&] {
    *out = new proloc_region{proloc::grow_region(net->net, region->region, radius_m)};
  });
}

proloc_status proloc_region_intersect(const proloc_region* a, const proloc_region* b,
                                      proloc_region** out) {
  if (auto s = require(a && b && out, "arguments must not be null")) return s;
  return guarded([&] {
    *out = new proloc_region{proloc::region_intersect(a->region, b->region)};
  });
}

proloc_status proloc_region_union(const proloc_region* a, const proloc_region* b,
                                  proloc_region** out) {
  if (auto s = require(a && b && out, "arguments must not be null")) return s;
  return guarded([&] {
    *out = new proloc_region{proloc::region_union(a->region, b->region)};
  });
}

proloc_status proloc_region_contains(const proloc_region* outer, const proloc_region* inner,
                                     int* out_contains) {
  if (auto s = require(outer && inner && out_contains, "arguments must not be null")) return s;
  return guarded([&] {
    *out_contains = proloc::region_contains(outer->region, inner->region) ? 1 : 0;
  });
}

proloc_status proloc_region_max_distance(const proloc_network* net,
                                         const proloc_region* region, double x,
                                         double y, double* out_meters) {
  if (auto s = require(net && region && out_meters, "arguments must not be null")) return s;
  return guarded([&] {
    *out_meters = proloc::region_max_distance(net->net, region->region, {x, y});
  });
}

size_t proloc_region_node_count(const proloc_region* region) {
  return region ? region->region.size() : 0;
}

proloc_status proloc_region_nodes(const proloc_region* region, uint32_t* out,
                                  size_t capacity, size_t* out_written) {
  if (auto s = require(region && out_written && (out || capacity == 0),
                       "arguments must not be null")) {
    return s;
  }
  const auto& ids = region->region.node_ids();
  *out_written = ids.size();
  const size_t n = std::min(capacity, ids.size());
  if (n > 0) std::memcpy(out, ids.data(), n * sizeof(uint32_t));
  return PROLOC_OK;
}

void proloc_region_free(proloc_region* region) { delete region; }

proloc_status proloc_store_load(const char* dataset_path, double upload_deadline_s,
                                double min_duration_s, double gap_tolerance_s,
                                proloc_store** out) {
  if (auto s = require(dataset_path && out, "arguments must not be null")) return s;
  return guarded([&] {
    *out = new proloc_store{proloc::load_history_jsonl(
        dataset_path, history_params(upload_deadline_s, min_duration_s, gap_tolerance_s))};
  });
}

void proloc_store_free(proloc_store* store) { delete store; }

size_t proloc_store_device_count(const proloc_store* store) {
  return store ? store->store.device_count() : 0;
}

size_t proloc_store_encounter_count(const proloc_store* store) {
  return store ? store->store.encounters().size() : 0;
}

proloc_status proloc_store_prev_report(const proloc_store* store, uint32_t device,
                                       double t, double* out_t, double* out_x,
                                       double* out_y, int* out_found) {
  if (auto s = require(store && out_t && out_x && out_y && out_found,
                       "arguments must not be null")) {
    return s;
  }
  return guarded([&] {
    const auto r = store->store.prev_location_report(device, t);
    *out_found = r.has_value() ? 1 : 0;
    if (r) {
      *out_t = r->t;
      *out_x = r->pos.x;
      *out_y = r->pos.y;
    }
  });
}

proloc_status proloc_store_next_report(const proloc_store* store, uint32_t device,
                                       double t, double* out_t, double* out_x,
                                       double* out_y, int* out_found) {
  if (auto s = require(store && out_t && out_x && out_y && out_found,
                       "arguments must not be null")) {
    return s;
  }
  return guarded([&] {
    const auto r = store->store.next_location_report(device, t);
    *out_found = r.has_value() ? 1 : 0;
    if (r) {
      *out_t = r->t;
      *out_x = r->pos.x;
      *out_y = r->pos.y;
    }
  });
}

proloc_status proloc_store_encounters_in_window(const proloc_store* store,
                                                uint32_t device, double t, double a,
                                                size_t* out_count) {
  if (auto s = require(store && out_count, "arguments must not be null")) return s;
  return guarded([&] {
    *out_count = store->store.encounters_in_window(device, t, a).size();
  });
}

proloc_status proloc_graph_discrete(const proloc_store* store, double epoch_len_s,
                                    double exponent_l, double weight_cap,
                                    proloc_graph** out) {
  if (auto s = require(store && out, "arguments must not be null")) return s;
  return guarded([&] {
    *out = new proloc_graph{proloc::edge_weights_discrete(
        store->store.adverts(), epoch_len_s, exponent_l,
        weight_cap > 0.0 ? weight_cap : std::numeric_limits<double>::infinity())};
  });
}

proloc_status proloc_graph_continuous(const proloc_store* store, double window_s,
                                      double exponent_l, double weight_cap,
                                      proloc_graph** out) {
  if (auto s = require(store && out, "arguments must not be null")) return s;
  return guarded([&] {
    *out = new proloc_graph{proloc::edge_weights_continuous(
        store->store.adverts(), window_s, exponent_l,
        weight_cap > 0.0 ? weight_cap : std::numeric_limits<double>::infinity())};
  });
}

void proloc_graph_free(proloc_graph* graph) { delete graph; }

size_t proloc_graph_node_count(const proloc_graph* graph) {
  return graph ? graph->graph.node_count() : 0;
}

size_t proloc_graph_edge_count(const proloc_graph* graph) {
  return graph ? graph->graph.edge_count() : 0;
}

proloc_status proloc_graph_edge_weight(const proloc_graph* graph, uint32_t receiver,
                                       uint32_t sender, double* out_weight) {
  if (auto s = require(graph && out_weight, "arguments must not be null")) return s;
  return guarded([&] { *out_weight = graph->graph.edge_weight(receiver, sender); });
}

proloc_status proloc_graph_export_csv(const proloc_graph* graph, const char* path) {
  if (auto s = require(graph && path, "arguments must not be null")) return s;
  return guarded([&] { proloc::write_graph_csv(graph->graph, path); });
}

proloc_status proloc_trustrank(const proloc_graph* graph, const uint32_t* anchors,
                               size_t anchor_count, double alpha, double tolerance,
                               proloc_scores** out) {
  if (auto s = require(graph && out && (anchors || anchor_count == 0),
                       "arguments must not be null")) {
    return s;
  }
  return guarded([&] {
    *out = new proloc_scores{proloc::trustrank(
        graph->graph, {anchors, anchors + anchor_count}, alpha, tolerance)};
  });
}

void proloc_scores_free(proloc_scores* scores) { delete scores; }

proloc_status proloc_scores_get(const proloc_scores* scores, uint32_t device,
                                double* out_score) {
  if (auto s = require(scores && out_score, "arguments must not be null")) return s;
  *out_score = scores->scores.score(device);
  return PROLOC_OK;
}

double proloc_scores_sum(const proloc_scores* scores) {
  return scores ? scores->scores.sum() : 0.0;
}

proloc_status proloc_scores_export_csv(const proloc_scores* scores,
                                       const char* labels_csv_path, const char* path) {
  if (auto s = require(scores && path, "arguments must not be null")) return s;
  return guarded([&] {
    std::unordered_map<proloc::DeviceId, std::string> labels;
    if (labels_csv_path && *labels_csv_path) {
      for (const auto& [d, label] : proloc::load_labels_csv(labels_csv_path)) {
        labels[d] = proloc::device_label_name(label);
      }
    }
    proloc::write_scores_csv(scores->scores, labels, path);
  });
}

proloc_status proloc_run_simulate(const char* config_path, const char* out_dir,
                                  int has_seed_override, uint64_t seed_override) {
  if (auto s = require(config_path && out_dir, "arguments must not be null")) return s;
  return guarded([&] {
    const auto job = proloc::parse_simulate_config(read_text_file(config_path));
    proloc::run_simulate(job, out_dir,
                         has_seed_override ? std::optional<uint64_t>(seed_override)
                                           : std::nullopt);
  });
}

proloc_status proloc_run_trustrank(const char* dataset_path, const char* labels_path,
                                   const char* anchors_csv, uint32_t anchor_count,
                                   uint64_t anchor_seed, const char* params_json,
                                   const char* scores_out_path,
                                   const char* graph_out_path) {
  if (auto s = require(dataset_path && scores_out_path, "arguments must not be null")) {
    return s;
  }
  return guarded([&] {
    const ParsedTrustParams parsed = parse_trust_params_json(params_json);
    proloc::TrustJob job;
    job.dataset_path = dataset_path;
    job.params = parsed.params;
    job.variant = parsed.variant;
    job.anchor_count = anchor_count;
    job.anchor_seed = anchor_seed;
    if (labels_path && *labels_path) job.labels_path = labels_path;
    if (anchors_csv && *anchors_csv) {
      std::stringstream ss(anchors_csv);
      std::string token;
      while (std::getline(ss, token, ',')) {
        if (!token.empty()) {
          job.anchors.push_back(static_cast<proloc::DeviceId>(std::stoul(token)));
        }
      }
    }
    proloc::run_trustrank(job, scores_out_path, graph_out_path ? graph_out_path : "");
  });
}

proloc_status proloc_run_calibrate(const char* const* scores_paths,
                                   const char* const* labels_paths,
                                   size_t scenario_count, const char* out_json_path,
                                   double* out_threshold) {
  if (auto s = require(scores_paths && labels_paths && out_json_path && scenario_count > 0,
                       "arguments must not be null")) {
    return s;
  }
  return guarded([&] {
    proloc::CalibrateJob job;
    for (size_t i = 0; i < scenario_count; ++i) {
      job.scenarios.emplace_back(scores_paths[i], labels_paths[i]);
    }
    const auto result = proloc::run_calibrate(job, out_json_path);
    if (out_threshold) *out_threshold = result.T;
  });
}

proloc_status proloc_run_prove(const char* dataset_dir, const char* request_json_path,
                               const char* threshold_path, double threshold_value,
                               const char* params_json, const char* out_json_path,
                               int* out_ok) {
  if (auto s = require(dataset_dir && request_json_path, "arguments must not be null")) {
    return s;
  }
  return guarded([&] {
    const ParsedTrustParams parsed = parse_trust_params_json(params_json);
    proloc::ProveJob job;
    job.dataset_dir = dataset_dir;
    job.request = proloc::parse_proof_request_json(read_text_file(request_json_path));
    job.trust = parsed.params;
    job.variant = parsed.variant;
    job.threshold = threshold_path && *threshold_path
                        ? proloc::load_threshold_json(threshold_path).T
                        : threshold_value;
    const auto result = proloc::run_prove(job, out_json_path ? out_json_path : "");
    if (out_ok) *out_ok = result.ok ? 1 : 0;
  });
}

proloc_status proloc_run_eval(const char* config_path, const char* out_dir,
                              int has_seed_override, uint64_t seed_override,
                              int threads_override) {
  if (auto s = require(config_path && out_dir, "arguments must not be null")) return s;
  return guarded([&] {
    auto cfg = proloc::parse_eval_config(read_text_file(config_path));
    if (has_seed_override) {
      cfg.base_sim.rng_seed = seed_override;
      cfg.eval_seed = seed_override;
    }
    if (threads_override > 0) cfg.threads = threads_override;
    proloc::run_eval(cfg, out_dir);
  });
}

} // extern "C"
