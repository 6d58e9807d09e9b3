#include "proloc/geo.hpp"

#include "proloc/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>

namespace proloc {

namespace {

std::uint64_t next_network_uid() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1);
}

void require_same_network(const Region& a, const Region& b) {
  if (a.network_uid() != b.network_uid()) {
    fail(ErrorCode::network_mismatch, "regions belong to different networks");
  }
}

} // namespace

const char* error_code_name(ErrorCode code) {
  switch (code) {
  case ErrorCode::ok: return "ok";
  case ErrorCode::invalid_argument: return "invalid_argument";
  case ErrorCode::invalid_seed: return "invalid_seed";
  case ErrorCode::invalid_budget: return "invalid_budget";
  case ErrorCode::invalid_radius: return "invalid_radius";
  case ErrorCode::invalid_dimensions: return "invalid_dimensions";
  case ErrorCode::network_mismatch: return "network_mismatch";
  case ErrorCode::unknown_device: return "unknown_device";
  case ErrorCode::no_anchors: return "no_anchors";
  case ErrorCode::unknown_anchor: return "unknown_anchor";
  case ErrorCode::no_scenarios: return "no_scenarios";
  case ErrorCode::missing_self_report: return "missing_self_report";
  case ErrorCode::witness_without_reports: return "witness_without_reports";
  case ErrorCode::config_error: return "config_error";
  case ErrorCode::io_error: return "io_error";
  case ErrorCode::parse_error: return "parse_error";
  case ErrorCode::internal_error: return "internal_error";
  }
  return "unknown";
}

double distance(const GeoPoint& a, const GeoPoint& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

Region::Region(std::uint64_t network_uid, std::vector<NodeId> ids)
    : uid_(network_uid), ids_(std::move(ids)) {
  std::sort(ids_.begin(), ids_.end());
  ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
}

bool Region::contains_node(NodeId id) const {
  return std::binary_search(ids_.begin(), ids_.end(), id);
}

MapNetwork::MapNetwork(std::vector<GeoPoint> nodes,
                       const std::vector<EdgeSpec>& edges, double avg_speed)
    : uid_(next_network_uid()), coords_(std::move(nodes)), avg_speed_(avg_speed) {
  if (coords_.empty()) {
    fail(ErrorCode::invalid_dimensions, "network must have at least one node");
  }
  if (!(avg_speed_ > 0.0) || !std::isfinite(avg_speed_)) {
    fail(ErrorCode::invalid_argument, "network avg_speed must be positive");
  }
  for (const GeoPoint& p : coords_) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      fail(ErrorCode::invalid_argument, "node coordinates must be finite");
    }
  }
  adjacency_.resize(coords_.size());
  for (const EdgeSpec& e : edges) {
    if (e.a >= coords_.size() || e.b >= coords_.size()) {
      fail(ErrorCode::invalid_argument, "edge endpoint out of range");
    }
    if (e.a == e.b) {
      fail(ErrorCode::invalid_argument, "self-loop edges are not allowed");
    }
    if (!(e.travel_time > 0.0) || !std::isfinite(e.travel_time)) {
      fail(ErrorCode::invalid_argument, "edge travel_time must be positive");
    }
    adjacency_[e.a].push_back({e.b, e.travel_time});
    adjacency_[e.b].push_back({e.a, e.travel_time});
    ++edge_pair_count_;
  }
  build_grid();
}

void MapNetwork::build_grid() {
  double min_x = coords_[0].x, max_x = coords_[0].x;
  double min_y = coords_[0].y, max_y = coords_[0].y;
  for (const GeoPoint& p : coords_) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  const double extent = std::max(max_x - min_x, max_y - min_y);
  // Aim for a few nodes per cell on average.
  const int target = std::max(1, static_cast<int>(std::sqrt(coords_.size() / 4.0)));
  grid_.cell = extent > 0.0 ? extent / target : 1.0;
  grid_.min_x = min_x;
  grid_.min_y = min_y;
  grid_.nx = static_cast<int>((max_x - min_x) / grid_.cell) + 1;
  grid_.ny = static_cast<int>((max_y - min_y) / grid_.cell) + 1;
  grid_.cells.assign(static_cast<std::size_t>(grid_.nx) * grid_.ny, {});
  for (NodeId i = 0; i < coords_.size(); ++i) {
    const int cx = static_cast<int>((coords_[i].x - min_x) / grid_.cell);
    const int cy = static_cast<int>((coords_[i].y - min_y) / grid_.cell);
    grid_.cells[cell_index(cx, cy)].push_back(i);
  }
}

NodeId MapNetwork::nearest_node(const GeoPoint& p) const {
  // Ring search from the clamped cell. A node in ring r is at least
  // (r-1)*cell away, so the search can stop once that bound exceeds the
  // best distance found so far.
  const int cx = std::clamp(static_cast<int>(std::floor((p.x - grid_.min_x) / grid_.cell)), 0, grid_.nx - 1);
  const int cy = std::clamp(static_cast<int>(std::floor((p.y - grid_.min_y) / grid_.cell)), 0, grid_.ny - 1);
  NodeId best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  const int max_ring = std::max(grid_.nx, grid_.ny);
  for (int ring = 0; ring <= max_ring; ++ring) {
    if (std::isfinite(best_d) && (ring - 1) * grid_.cell > best_d) break;
    for (int dy = -ring; dy <= ring; ++dy) {
      for (int dx = -ring; dx <= ring; ++dx) {
        if (std::max(std::abs(dx), std::abs(dy)) != ring) continue;
        const int x = cx + dx, y = cy + dy;
        if (x < 0 || y < 0 || x >= grid_.nx || y >= grid_.ny) continue;
        for (NodeId id : grid_.cells[cell_index(x, y)]) {
          const double d = distance(coords_[id], p);
          if (d < best_d || (d == best_d && id < best)) {
            best_d = d;
            best = id;
          }
        }
      }
    }
  }
  return best;
}

std::vector<NodeId> MapNetwork::nodes_within(const GeoPoint& p, double radius) const {
  std::vector<NodeId> out;
  const int lo_x = std::max(0, static_cast<int>(std::floor((p.x - radius - grid_.min_x) / grid_.cell)));
  const int hi_x = std::min(grid_.nx - 1, static_cast<int>(std::floor((p.x + radius - grid_.min_x) / grid_.cell)));
  const int lo_y = std::max(0, static_cast<int>(std::floor((p.y - radius - grid_.min_y) / grid_.cell)));
  const int hi_y = std::min(grid_.ny - 1, static_cast<int>(std::floor((p.y + radius - grid_.min_y) / grid_.cell)));
  for (int y = lo_y; y <= hi_y; ++y) {
    for (int x = lo_x; x <= hi_x; ++x) {
      for (NodeId id : grid_.cells[cell_index(x, y)]) {
        if (distance(coords_[id], p) <= radius) out.push_back(id);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

Region MapNetwork::region_of(std::vector<NodeId> ids) const {
  for (NodeId id : ids) {
    if (id >= coords_.size()) {
      fail(ErrorCode::invalid_argument, "region node id out of range");
    }
  }
  return Region(uid_, std::move(ids));
}

Region MapNetwork::region_around(const GeoPoint& center, double radius) const {
  if (radius < 0.0) fail(ErrorCode::invalid_radius, "radius must be non-negative");
  return Region(uid_, nodes_within(center, radius));
}

Region MapNetwork::whole_region() const {
  std::vector<NodeId> ids(coords_.size());
  for (NodeId i = 0; i < coords_.size(); ++i) ids[i] = i;
  return Region(uid_, std::move(ids));
}

Region isochrone(const MapNetwork& net, const Region& seed, double budget_s) {
  if (seed.network_uid() != net.uid()) {
    fail(ErrorCode::network_mismatch, "seed region is not from this network");
  }
  if (seed.empty()) fail(ErrorCode::invalid_seed, "isochrone seed must be non-empty");
  if (budget_s < 0.0 || !std::isfinite(budget_s)) {
    fail(ErrorCode::invalid_budget, "isochrone budget must be non-negative");
  }

  // Multi-source Dijkstra, pruned at the budget.
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(net.node_count(), inf);
  using Item = std::pair<double, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  for (NodeId s : seed.node_ids()) {
    dist[s] = 0.0;
    heap.push({0.0, s});
  }
  while (!heap.empty()) {
    const auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[u]) continue;
    for (const MapNetwork::Arc& arc : net.arcs(u)) {
      const double nd = d + arc.travel_time;
      if (nd <= budget_s && nd < dist[arc.to]) {
        dist[arc.to] = nd;
        heap.push({nd, arc.to});
      }
    }
  }
  std::vector<NodeId> out;
  for (NodeId i = 0; i < net.node_count(); ++i) {
    if (dist[i] <= budget_s) out.push_back(i);
  }
  return Region(net.uid(), std::move(out));
}

Region grow_region(const MapNetwork& net, const Region& r, double radius_m) {
  if (r.network_uid() != net.uid() && !r.empty()) {
    fail(ErrorCode::network_mismatch, "region is not from this network");
  }
  if (radius_m < 0.0 || !std::isfinite(radius_m)) {
    fail(ErrorCode::invalid_radius, "grow radius must be non-negative");
  }
  if (radius_m == 0.0) return Region(net.uid(), r.node_ids());
  std::vector<NodeId> out = r.node_ids();
  for (NodeId id : r.node_ids()) {
    auto near = net.nodes_within(net.position(id), radius_m);
    out.insert(out.end(), near.begin(), near.end());
  }
  return Region(net.uid(), std::move(out));
}

Region region_intersect(const Region& a, const Region& b) {
  require_same_network(a, b);
  std::vector<NodeId> out;
  std::set_intersection(a.node_ids().begin(), a.node_ids().end(),
                        b.node_ids().begin(), b.node_ids().end(),
                        std::back_inserter(out));
  return Region(a.network_uid(), std::move(out));
}

Region region_union(const Region& a, const Region& b) {
  require_same_network(a, b);
  std::vector<NodeId> out;
  std::set_union(a.node_ids().begin(), a.node_ids().end(),
                 b.node_ids().begin(), b.node_ids().end(),
                 std::back_inserter(out));
  return Region(a.network_uid(), std::move(out));
}

bool region_contains(const Region& outer, const Region& inner) {
  require_same_network(outer, inner);
  return std::includes(outer.node_ids().begin(), outer.node_ids().end(),
                       inner.node_ids().begin(), inner.node_ids().end());
}

double region_max_distance(const MapNetwork& net, const Region& r, const GeoPoint& p) {
  if (r.network_uid() != net.uid()) {
    fail(ErrorCode::network_mismatch, "region is not from this network");
  }
  double best = 0.0;
  for (NodeId id : r.node_ids()) {
    best = std::max(best, distance(net.position(id), p));
  }
  return best;
}

MapNetwork build_grid_network(std::uint32_t width, std::uint32_t height,
                              double pitch_m, double speed_mps) {
  if (width < 1 || height < 1) {
    fail(ErrorCode::invalid_dimensions, "grid dimensions must be >= 1");
  }
  if (!(pitch_m > 0.0) || !(speed_mps > 0.0)) {
    fail(ErrorCode::invalid_argument, "grid pitch and speed must be positive");
  }
  std::vector<GeoPoint> nodes;
  nodes.reserve(static_cast<std::size_t>(width) * height);
  for (std::uint32_t y = 0; y < height; ++y) {
    for (std::uint32_t x = 0; x < width; ++x) {
      nodes.push_back({x * pitch_m, y * pitch_m});
    }
  }
  const double tt = pitch_m / speed_mps;
  std::vector<MapNetwork::EdgeSpec> edges;
  auto id = [width](std::uint32_t x, std::uint32_t y) { return y * width + x; };
  for (std::uint32_t y = 0; y < height; ++y) {
    for (std::uint32_t x = 0; x < width; ++x) {
      if (x + 1 < width) edges.push_back({id(x, y), id(x + 1, y), tt});
      if (y + 1 < height) edges.push_back({id(x, y), id(x, y + 1), tt});
    }
  }
  return MapNetwork(std::move(nodes), edges, speed_mps);
}

MapNetwork parse_network_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse_error, std::string("network json: ") + e.what());
  }
  try {
    std::vector<GeoPoint> nodes;
    const auto& jn = j.at("nodes");
    nodes.resize(jn.size());
    for (const auto& n : jn) {
      const auto id = n.at("id").get<std::uint64_t>();
      if (id >= nodes.size()) {
        fail(ErrorCode::parse_error, "network json: node ids must be dense 0..n-1");
      }
      nodes[id] = {n.at("x").get<double>(), n.at("y").get<double>()};
    }
    std::vector<MapNetwork::EdgeSpec> edges;
    for (const auto& e : j.at("edges")) {
      edges.push_back({e.at("a").get<NodeId>(), e.at("b").get<NodeId>(),
                       e.at("travel_time").get<double>()});
    }
    double speed;
    if (j.contains("speed")) {
      speed = j.at("speed").get<double>();
    } else {
      // Network-wide mean of edge length over edge travel time.
      if (edges.empty()) {
        fail(ErrorCode::parse_error, "network json: speed required without edges");
      }
      speed = 0.0;
      for (const auto& e : edges) {
        if (e.a >= nodes.size() || e.b >= nodes.size() || !(e.travel_time > 0.0)) {
          fail(ErrorCode::parse_error, "network json: bad edge");
        }
        speed += distance(nodes[e.a], nodes[e.b]) / e.travel_time;
      }
      speed /= static_cast<double>(edges.size());
    }
    return MapNetwork(std::move(nodes), edges, speed);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse_error, std::string("network json: ") + e.what());
  }
}

std::string network_to_json(const MapNetwork& net) {
  nlohmann::json j;
  j["speed"] = net.avg_speed();
  auto& jn = j["nodes"] = nlohmann::json::array();
  for (NodeId i = 0; i < net.node_count(); ++i) {
    jn.push_back({{"id", i}, {"x", net.position(i).x}, {"y", net.position(i).y}});
  }
  auto& je = j["edges"] = nlohmann::json::array();
  for (NodeId i = 0; i < net.node_count(); ++i) {
    for (const auto& arc : net.arcs(i)) {
      if (arc.to > i) {
        je.push_back({{"a", i}, {"b", arc.to}, {"travel_time", arc.travel_time}});
      }
    }
  }
  return j.dump();
}

MapNetwork load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot open network file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_network_json(ss.str());
}

void save_network(const MapNetwork& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io_error, "cannot write network file: " + path);
  out << network_to_json(net) << "\n";
}

} // namespace proloc
