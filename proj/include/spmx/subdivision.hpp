#pragma once

#include <limits>
#include <vector>

#include "spmx/instance.hpp"
#include "spmx/visibility.hpp"

namespace spmx {

// Quadtree cell (axis-parallel square). Leaves are the cells of the
// subdivision; interior nodes are kept for point location.
struct SubCell {
  double x0 = 0, y0 = 0, size = 0;
  int depth = 0;
  int parent = -1;
  int children[4] = {-1, -1, -1, -1};  // SW, SE, NW, NE
  int vpoint = -1;                     // index into V (leaves only)
  bool leaf() const { return children[0] < 0; }
  BBox box() const { return BBox{x0, y0, x0 + size, y0 + size, false}; }
  Point center() const { return {x0 + 0.5 * size, y0 + 0.5 * size}; }
};

// Transparent edge of the free-space subdivision S'.
struct TransparentEdge {
  int id = -1;
  Segment seg;          // axis-parallel, lexicographically oriented
  double len = 0;
  int cell_a = -1;      // incident leaf cells (spokes: cell_a == cell_b)
  int cell_b = -1;
  bool spoke = false;   // interior segment incident to a point of V
  int vpoint = -1;      // spoke owner
  std::vector<int> ucells;   // well-covering region U(e), sorted leaf ids
  // expansion-time state (mutated only by the single-threaded main loop)
  double covertime = std::numeric_limits<double>::infinity();
  bool processed = false;
};

struct PropertyWitness {
  std::string property;
  std::string detail;
  int edge_e = -1, edge_f = -1, cell = -1;
};

struct PropertyReport {
  bool cells_shape_ok = true;        // (1)/(3): axis-parallel squares
  bool cell_vertex_ok = true;        // (2): <=1 point of V per cell
  bool vertex_incident_ok = true;    // (4): every point of V touches an edge
  bool well_covering_ok = true;      // (5): clearance, O(1) size, <=1 V point
  bool duality_ok = true;            // input/output bookkeeping
  std::vector<PropertyWitness> witnesses;
  bool pass() const {
    return cells_shape_ok && cell_vertex_ok && vertex_incident_ok && well_covering_ok &&
           duality_ok;
  }
};

// Conforming subdivision of the free space: quad-tree cells over the points
// of V (obstacle vertices + source), balanced and vertex-separated, with
// axis-parallel transparent edges whose well-covering regions satisfy the
// 2*max{|e|,|f|} clearance contract.
class Subdivision {
 public:
  // Frozen constant: max cells per well-covering region.
  static constexpr int kMaxUCells = 32;

  explicit Subdivision(const Instance& inst);

  const Instance& instance() const { return inst_; }
  const std::vector<SubCell>& cells() const { return cells_; }
  const std::vector<TransparentEdge>& edges() const { return edges_; }
  std::vector<TransparentEdge>& mutable_edges() { return edges_; }
  const std::vector<Point>& v_points() const { return vpoints_; }
  const SegmentTree& obstacle_tree() const { return obstacle_tree_; }
  int source_vpoint() const { return static_cast<int>(vpoints_.size()) - 1; }

  std::size_t leaf_count() const;
  int locate_leaf(const Point& p) const;
  void leaves_overlapping(const BBox& box, std::vector<int>& out) const;

  // Obstacle edges overlapping a box (indices into obstacle_tree()).
  void obstacles_in(const BBox& box, std::vector<std::size_t>& out) const;

  // Transparent edges incident to a given point of V.
  std::vector<int> edges_at_vpoint(int vp) const;

  // input(e): transparent edges on the boundary of U(e); output(e) adds the
  // reverse direction {g : e in input(g)}. Both derived on demand from the
  // cell->region index (storing them outright is quadratic-ish in practice).
  std::vector<int> input_of(int eid) const;
  std::vector<int> output_of(int eid) const;
  // True iff e lies on the boundary of U(g).
  bool on_region_boundary(int eid, int gid) const;

  double root_size() const { return cells_[0].size; }

 private:
  // scratch for input_of; stamping beats repeated binary searches
  mutable std::vector<int> region_stamp_;
  mutable int stamp_val_ = 0;

  // coarse bbox grid: point -> candidate obstacle indices
  struct ObstacleGrid {
    BBox extent;
    int nx = 1, ny = 1;
    std::vector<std::vector<int>> bins;
    void build(const Instance& inst);
    const std::vector<int>& candidates(const Point& p) const;
  };

  Instance inst_;
  std::vector<Point> vpoints_;
  std::vector<SubCell> cells_;
  std::vector<TransparentEdge> edges_;
  SegmentTree obstacle_tree_;
  ObstacleGrid ogrid_;
  bool inside_any_obstacle(const Point& p) const;
  // CSR: leaf cell -> edges incident to it / edges whose region contains it
  std::vector<int> cell_edges_off_, cell_edges_;
  std::vector<int> cell_regions_off_, cell_regions_;

  void build_quadtree();
  void balance();
  void split_cell(int id);
  void generate_edges();
  void repair_well_covering();
  void compute_adjacency();
  bool free_space_midpoint(const Segment& s) const;
  std::vector<Segment> clip_to_free_space(const Segment& s) const;
  int count_v_in_cells(const std::vector<int>& cellset) const;
};

// Full S'-property checker. `oracle` supplies geodesic distances for the
// clearance property (Euclidean lower bounds are used as a fast path).
PropertyReport verify_properties(const Subdivision& sub, const VisibilityOracle& oracle);

// Checker variant without geodesic backing (Euclidean clearance only);
// used at scales where the oracle is too slow.
PropertyReport verify_properties_euclidean(const Subdivision& sub);

}  // namespace spmx
