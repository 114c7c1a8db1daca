#pragma once

#include <cstdint>
#include <vector>

#include "spmx/wavefront.hpp"

namespace spmx {

// What survives a space reset: the tree being edited right now, the finished
// outputs of the edge being processed, that edge's merged wavefront, and every
// contribution already handed to a still-unprocessed edge.
struct Snapshot {
  int phase = 0;
  std::uint32_t store = 0;  // the fresh store holding the frozen copies
  int cur_edge = -1;
  int inflight_target = -1;
  std::size_t inflight_nodes = 0;  // (1) tree under edit
  std::size_t sibling_nodes = 0;   // (2) finished outputs of cur_edge
  std::size_t origin_nodes = 0;    // (3) merged wavefront of cur_edge
  std::size_t frontier_nodes = 0;  // (4) pending contributions elsewhere
  std::size_t frontier_count = 0;
  std::size_t nodes() const {
    return inflight_nodes + sibling_nodes + origin_nodes + frontier_nodes;
  }
};

struct SpaceLedger {
  std::vector<PhaseRecord> phases;
  std::size_t peak_live = 0;            // max nodes alive at any point
  std::size_t max_snapshot = 0;         // largest snapshot retained
  std::uint64_t total_counted_ops = 0;  // counted propagation edits
};

class SnapshotManager {
 public:
  SnapshotManager(WavefrontEngine& engine, std::uint64_t threshold);

  // Called after every counted propagation edit; true means a reset is due.
  bool on_operation();

  // Freeze the four categories into a fresh store, drop everything else and
  // re-point the engine's handles at the copies.
  Snapshot construct_snapshot();

  // Sanity-check the frozen handles and open the next phase.
  void restore_and_resume(const Snapshot& snap);

  // Close the trailing phase at the end of the run (nothing is retained).
  void finish();

  const SpaceLedger& ledger() const { return ledger_; }
  std::uint64_t threshold() const { return threshold_; }
  const std::vector<Snapshot>& snapshots() const { return snapshots_; }

 private:
  WavefrontEngine& eng_;
  std::uint64_t threshold_;
  std::uint64_t count_ = 0;              // counted ops in the current phase
  std::uint64_t phase_start_allocs_ = 0;  // node allocations at phase start
  int phase_ = 0;
  std::size_t phase_peak_ = 0;
  SpaceLedger ledger_;
  std::vector<Snapshot> snapshots_;

  void close_phase(std::size_t snapshot_nodes);
};

}  // namespace spmx
