#pragma once

#include <vector>

#include "spmx/instance.hpp"

namespace spmx {

struct PointInObstacleError : InputError {
  explicit PointInObstacleError(const std::string& m) : InputError(m) {}
};
struct InvalidSegmentError : InputError {
  explicit InvalidSegmentError(const std::string& m) : InputError(m) {}
};

struct PathResult {
  double length = 0.0;
  std::vector<Point> waypoints;  // s .. t
};

// Open segment ab stays out of every obstacle interior; grazing vertices and
// running along boundaries is allowed. `tree` must index the instance's
// obstacle edges.
bool sight_clear(const Instance& inst, const SegmentTree& tree, const Point& a, const Point& b);

// Brute-force ground truth: visibility graph over obstacle vertices + source,
// Dijkstra distances, and geodesic segment-to-segment distances. Test-only
// complexity budget; read-only after construction.
class VisibilityOracle {
 public:
  explicit VisibilityOracle(const Instance& inst);

  const Instance& instance() const { return inst_; }

  // Open segment pq stays out of every obstacle interior (grazing vertices
  // and running along boundaries is allowed).
  bool visible(const Point& p, const Point& q) const;

  double geodesic_distance(const Point& t) const;
  PathResult shortest_path(const Point& t) const;

  // Geodesic distance between two free-space points (t independent of s).
  double point_to_point(const Point& p, const Point& q) const;

  // min over p in e, q in f of d(p,q); sampling plus golden-section refine.
  double segment_geodesic_distance(const Segment& e, const Segment& f) const;

  // d(s, vertex) for every obstacle vertex, in instance order.
  const std::vector<double>& vertex_distances() const { return dist_; }
  const std::vector<Point>& nodes() const { return nodes_; }

 private:
  Instance inst_;
  SegmentTree edges_;
  std::vector<Point> nodes_;    // obstacle vertices, then source (last)
  std::vector<double> dist_;    // Dijkstra distance from source per node
  std::vector<int> parent_;     // predecessor node index (-1 at source)

  void check_free(const Point& p, const char* what) const;
  // distances from an arbitrary point to all nodes it can see
  std::vector<double> distances_from(const Point& p) const;
};

}  // namespace spmx
