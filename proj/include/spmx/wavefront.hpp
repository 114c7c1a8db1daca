#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

#include "spmx/pseq.hpp"
#include "spmx/subdivision.hpp"

namespace spmx {

// Record of a generator marked during the expansion for a particular cell.
// Records carry the claim interval at marking time so the per-edge claimant
// lists can be reconstituted after the wavefront storage has been discarded.
struct MarkRecord {
  WeightedGenerator gen;
  int cell = -1;
  int edge = -1;  // transparent edge whose wavefront triggered the mark
  int side = 0;
  double lo = 0.0, hi = 1.0;  // claim interval on the edge at marking time
  enum Origin : std::uint8_t { kOriginalClaim = 0, kOriginalVertex = 1, kNeighbor = 2 };
  Origin origin = kOriginalClaim;
};

struct PhaseRecord {
  int phase = 0;
  std::uint64_t ops = 0;           // counted propagation edits in this phase
  std::uint64_t allocs = 0;        // persistent nodes allocated in this phase
  std::size_t peak_nodes = 0;      // max live persistent nodes during phase
  std::size_t snapshot_nodes = 0;  // nodes retained at the phase boundary
};

struct EngineStats {
  std::uint64_t propagation_ops = 0;  // persistent sequence edits (counted)
  std::uint64_t bisector_events = 0;  // wavelet eliminations during propagation
  std::uint64_t merge_ops = 0;        // in-place merge steps (not counted)
  std::uint64_t processed_edges = 0;
  std::size_t max_live_nodes = 0;
  std::size_t max_snapshot_nodes = 0;
  int resets = 0;
  std::vector<PhaseRecord> phases;
};

struct RunResult {
  // Geodesic distance per V-point (obstacle vertices in instance order, then
  // the source, which gets 0).
  std::vector<double> vertex_dist;
  // Distances at the two endpoints of each transparent edge (by edge id).
  std::vector<double> endpoint_dist_a, endpoint_dist_b;
  std::vector<MarkRecord> marks;
  // For each V-point, the wavelet that first settled it (arrival == vertex_dist).
  std::vector<WeightedGenerator> vertex_pred;
  // Only with Options::retain_wavefronts: per edge, the merged one-sided
  // wavefronts [input side 0, input side 1] at processing time.
  std::vector<std::array<std::vector<SeqItem>, 2>> wavefronts;
  std::vector<double> processed_covertimes;  // in processing order
  EngineStats stats;
};

class SnapshotManager;

class WavefrontEngine {
 public:
  struct Options {
    // Persistent-node allocation budget per phase. 0 = default
    // max(64, 4 * #transparent edges); UINT64_MAX = never reset.
    std::uint64_t reset_threshold = 0;
    bool collect_marks = true;
    // Keep every processed edge's merged one-sided wavefronts in the result
    // (test support for the wavefront-restoration differential).
    bool retain_wavefronts = false;
  };

  WavefrontEngine(const Subdivision& sub, const Instance& inst, Options opt);
  WavefrontEngine(const Subdivision& sub, const Instance& inst)
      : WavefrontEngine(sub, inst, Options()) {}
  ~WavefrontEngine();

  RunResult run();

  static std::uint64_t default_threshold(std::size_t n);

 private:
  struct Contribution {
    int from = -1;  // source edge id (-1: the source point)
    int side = 0;   // arrival side of the target edge
    VersionHandle wf;
    double tau = std::numeric_limits<double>::infinity();
  };

  struct Candidate {
    WeightedGenerator gen;
    std::vector<std::pair<double, double>> windows;  // feasible params on target
    Point home;                                      // a point on the wavelet's side
    bool from_wavefront = false;                     // came from W(e) (portal-clipped)
  };

  const Subdivision& sub_;
  const Instance& inst_;
  Options opt_;
  SeqStoreManager mgr_;
  SnapshotManager* snap_ = nullptr;

  std::uint32_t store_ = 0;  // current phase store
  std::vector<double> covertime_;
  struct Provider {  // diagnostic: which propagation last lowered covertime
    int from = -1;
    Point site;
    double weight = 0.0;
    bool artificial = false;
    bool is_input = false;
  };
  std::vector<Provider> provider_;
  std::vector<char> processed_;
  std::vector<std::vector<Contribution>> contribs_;  // per target edge
  std::vector<double> dist_a_, dist_b_;              // endpoint distances
  std::vector<double> vdist_;                        // per V-point
  std::vector<WeightedGenerator> vpred_;             // settling wavelet per V-point
  std::vector<std::vector<int>> region_obs_;         // cached obstacle segs per U(e)
  std::vector<char> region_obs_ready_;
  std::vector<int> region_vp_;               // V-point inside U(e), -1 if none
  std::vector<std::vector<int>> vp_edges_;   // reverse: edges whose U holds vp
  std::vector<int> settled_vps_;             // V-points improved by the last merge
  RunResult result_;

  // in-flight propagation context (snapshot category 1/3)
  int cur_edge_ = -1;
  VersionHandle origin_wf_[2];
  VersionHandle inflight_;
  int inflight_target_ = -1;

  const std::vector<int>& region_obs(int eid);
  int region_vp(int eid);
  bool vertex_candidate(int vp, int rid, const Segment& gseg, Candidate& out);
  bool clear_sight(const Point& a, const Point& b) const;

  void initialize_expansion();
  void merge_wavefronts(int eid, std::vector<SeqItem> side_items[2]);
  void propagate_wavefront(int eid, int gid, const std::vector<SeqItem> side_items[2]);
  std::vector<SeqItem> lower_envelope(const Segment& g, std::vector<Candidate>& cands,
                                      std::uint64_t* eliminated);
  void emit_marks(int eid, const std::vector<SeqItem> side_items[2]);
  VersionHandle edit_into_version(const VersionHandle& origin,
                                  const std::vector<SeqItem>& items);

  friend class SnapshotManager;
};

// Convenience: build, run and return the result with default options.
RunResult run_expansion(const Subdivision& sub, const Instance& inst,
                        WavefrontEngine::Options opt = WavefrontEngine::Options());

}  // namespace spmx
