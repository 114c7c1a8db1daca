#pragma once

#include <cstdint>
#include <vector>

#include "spmx/bisector.hpp"
#include "spmx/subdivision.hpp"
#include "spmx/wavefront.hpp"

namespace spmx {

struct AssemblyError : GeometryError {
  explicit AssemblyError(const std::string& m) : GeometryError(m) {}
};

// Vertex of the shortest-path map: a point where at least three predecessor
// labels meet, where a bisector hits an obstacle or the outer frame, a
// polyline joint on a cell boundary, or an obstacle/frame corner.
struct SpmVertex {
  enum Kind : std::uint8_t { kTriple, kObstacleHit, kFrameHit, kJoint, kCorner };
  Point p;
  Kind kind = kJoint;
  double residual = 0.0;  // weighted-equidistance defect of the meeting labels
  bool structural() const { return kind == kTriple || kind == kObstacleHit || kind == kFrameHit; }
};

struct SpmEdge {
  enum Type : std::uint8_t { kBisector, kObstacle, kFrame };
  Type type = kBisector;
  int gen_u = -1, gen_v = -1;  // bisector edges: labels on either side
  int va = -1, vb = -1;        // endpoint vertex ids
  std::vector<Point> pts;      // polyline; conic arcs flattened at 0.5% chord tolerance
};

struct SpmFace {
  // predecessor label; -1 marks an obstacle interior, -2 the outer face
  int gen = -1;
  Point site;
  double weight = 0.0;
  // boundary loops as vertex-id rings (first ring is the outer boundary);
  // parallel flattened geometry for containment tests and rendering
  std::vector<std::vector<int>> loops;
  std::vector<std::vector<Point>> rings;
};

// Per-cell claim summary derived from the mark stream: which generators may
// own territory inside the cell, and whether any of them is marked.
struct ActiveRegion {
  int cell = -1;
  std::vector<WeightedGenerator> gens;  // claimants, deduplicated
  bool active = false;                  // claimed by at least one marked generator
};

struct ShortestPathMap {
  // deduplicated generator table, sorted by (weight, site) for determinism
  std::vector<WeightedGenerator> gens;
  int source_gen = -1;
  // per leaf cell: candidate predecessor labels (indices into gens)
  std::vector<std::vector<int>> cell_gens;
  std::vector<double> vertex_dist;            // geodesic distance per V-point
  std::vector<WeightedGenerator> vertex_pred;  // settling wavelet per V-point

  std::vector<SpmVertex> vertices;
  std::vector<SpmEdge> edges;
  std::vector<SpmFace> faces;
  BBox frame;

  // combinatorial audit of the assembled subdivision
  std::size_t euler_v = 0, euler_e = 0, euler_f_free = 0;
  std::size_t components = 0;  // connected components of the edge graph
  int holes = 0;               // obstacle count
  bool euler_ok = false;       // V - E + F_free == C - holes
  double max_vertex_residual = 0.0;
};

struct SpmBuildOptions {
  bool assemble = true;       // trace bisector edges and assemble faces
  bool parallel_cells = false;
  int threads = 0;            // 0: hardware concurrency
};

// Claim summaries for every leaf cell touched by the mark stream, ordered by
// cell id. Generators are deduplicated with originally-marked status taking
// precedence over neighbor marks.
std::vector<ActiveRegion> compute_active_regions(const Subdivision& sub,
                                                 const std::vector<MarkRecord>& marks);

// Ordered originally-marked claimants of transparent edge `eid` on `side`,
// reconstituting the one-sided wavefront retained for that edge.
std::vector<WeightedGenerator> restore_wavefront(const std::vector<MarkRecord>& marks, int eid,
                                                 int side);

ShortestPathMap build_spm(const Subdivision& sub, const RunResult& run,
                          const SpmBuildOptions& opt = {});

}  // namespace spmx
