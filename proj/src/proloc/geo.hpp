#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace proloc {

using NodeId = std::uint32_t;

// Planar point, meters in a local frame.
struct GeoPoint {
  double x = 0.0;
  double y = 0.0;
};

double distance(const GeoPoint& a, const GeoPoint& b);

// Set of network nodes, kept sorted and deduplicated. A region is only
// meaningful relative to the network it was built on; `network_uid` guards
// against mixing regions from different networks.
class Region {
public:
  Region() = default;
  Region(std::uint64_t network_uid, std::vector<NodeId> ids);

  const std::vector<NodeId>& node_ids() const { return ids_; }
  std::uint64_t network_uid() const { return uid_; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  bool contains_node(NodeId id) const;

  bool operator==(const Region& other) const {
    return uid_ == other.uid_ && ids_ == other.ids_;
  }

private:
  std::uint64_t uid_ = 0;
  std::vector<NodeId> ids_;
};

// Transport network: nodes with planar coordinates, bidirectional edges with
// travel times in seconds. Immutable after construction; all queries are pure
// and safe for concurrent readers.
class MapNetwork {
public:
  struct EdgeSpec {
    NodeId a = 0;
    NodeId b = 0;
    double travel_time = 0.0; // seconds
  };

  MapNetwork(std::vector<GeoPoint> nodes, const std::vector<EdgeSpec>& edges,
             double avg_speed);

  std::size_t node_count() const { return coords_.size(); }
  const GeoPoint& position(NodeId id) const { return coords_[id]; }
  double avg_speed() const { return avg_speed_; }
  std::uint64_t uid() const { return uid_; }
  std::size_t edge_count() const { return edge_pair_count_; }

  // Nearest node to a point (ties resolved to the lowest id).
  NodeId nearest_node(const GeoPoint& p) const;

  // All nodes within `radius` meters of a point.
  std::vector<NodeId> nodes_within(const GeoPoint& p, double radius) const;

  Region region_of(std::vector<NodeId> ids) const;
  Region region_around(const GeoPoint& center, double radius) const;
  Region whole_region() const;

  struct Arc {
    NodeId to;
    double travel_time;
  };
  const std::vector<Arc>& arcs(NodeId from) const { return adjacency_[from]; }

private:
  std::uint64_t uid_;
  std::vector<GeoPoint> coords_;
  std::vector<std::vector<Arc>> adjacency_;
  double avg_speed_;
  std::size_t edge_pair_count_ = 0;

  // Uniform grid over node positions for radius and nearest-node queries.
  struct SpatialGrid {
    double min_x = 0.0, min_y = 0.0;
    double cell = 1.0;
    int nx = 1, ny = 1;
    std::vector<std::vector<NodeId>> cells;
  };
  SpatialGrid grid_;

  void build_grid();
  std::size_t cell_index(int cx, int cy) const {
    return static_cast<std::size_t>(cy) * grid_.nx + cx;
  }
};

// Nodes reachable from any seed node with total path travel time <= budget.
Region isochrone(const MapNetwork& net, const Region& seed, double budget_s);

// r plus every node whose Euclidean distance to some node of r is <= radius.
Region grow_region(const MapNetwork& net, const Region& r, double radius_m);

Region region_intersect(const Region& a, const Region& b);
Region region_union(const Region& a, const Region& b);
bool region_contains(const Region& outer, const Region& inner);

// Max Euclidean distance from p to any node of r; 0 for a singleton at p.
double region_max_distance(const MapNetwork& net, const Region& r, const GeoPoint& p);

// 4-connected grid; every edge takes pitch/speed seconds.
MapNetwork build_grid_network(std::uint32_t width, std::uint32_t height,
                              double pitch_m, double speed_mps);

MapNetwork load_network(const std::string& path);
void save_network(const MapNetwork& net, const std::string& path);
MapNetwork parse_network_json(const std::string& text);
std::string network_to_json(const MapNetwork& net);

} // namespace proloc
