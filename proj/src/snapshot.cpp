#include "spmx/snapshot.hpp"

#include <algorithm>

namespace spmx {

SnapshotManager::SnapshotManager(WavefrontEngine& engine, std::uint64_t threshold)
    : eng_(engine), threshold_(threshold) {
  phase_start_allocs_ = eng_.mgr_.total_allocations();
}

bool SnapshotManager::on_operation() {
  ++count_;
  ++ledger_.total_counted_ops;
  const std::size_t live = eng_.mgr_.store_nodes(eng_.store_);
  phase_peak_ = std::max(phase_peak_, live);
  ledger_.peak_live = std::max(ledger_.peak_live, live);
  // the reset budget is on persistent node allocations since the phase opened
  return threshold_ != std::numeric_limits<std::uint64_t>::max() &&
         eng_.mgr_.total_allocations() - phase_start_allocs_ >= threshold_;
}

Snapshot SnapshotManager::construct_snapshot() {
  Snapshot s;
  s.phase = phase_;
  s.cur_edge = eng_.cur_edge_;
  s.inflight_target = eng_.inflight_target_;
  const std::uint32_t ns = eng_.mgr_.create_store();
  s.store = ns;
  auto freeze = [&](VersionHandle& h, std::size_t& acc) {
    if (h.null()) return;
    const VersionHandle c = eng_.mgr_.freeze_copy(h, ns);
    acc += c.size;
    h = c;
  };
  // (1) the tree currently being edited
  freeze(eng_.inflight_, s.inflight_nodes);
  // (3) the merged wavefront of the edge being processed
  freeze(eng_.origin_wf_[0], s.origin_nodes);
  freeze(eng_.origin_wf_[1], s.origin_nodes);
  // (2) finished outputs of the current edge and (4) the frontier: every
  // contribution already handed to a still-unprocessed edge
  for (std::size_t g = 0; g < eng_.contribs_.size(); ++g) {
    if (eng_.processed_[g]) continue;
    for (auto& c : eng_.contribs_[g]) {
      std::size_t acc = 0;
      freeze(c.wf, acc);
      if (c.from == s.cur_edge) {
        s.sibling_nodes += acc;
      } else {
        s.frontier_nodes += acc;
        ++s.frontier_count;
      }
    }
  }
  eng_.mgr_.drop_store(eng_.store_);
  eng_.store_ = ns;
  snapshots_.push_back(s);
  return s;
}

void SnapshotManager::restore_and_resume(const Snapshot& snap) {
  if (!eng_.mgr_.alive(snap.store))
    throw SufficiencyViolationError("snapshot store is not alive at resume");
  close_phase(snap.nodes());
}

void SnapshotManager::finish() { close_phase(0); }

void SnapshotManager::close_phase(std::size_t snapshot_nodes) {
  PhaseRecord rec;
  rec.phase = phase_;
  rec.ops = count_;
  rec.allocs = eng_.mgr_.total_allocations() - phase_start_allocs_;
  rec.peak_nodes = phase_peak_;
  rec.snapshot_nodes = snapshot_nodes;
  ledger_.phases.push_back(rec);
  ledger_.max_snapshot = std::max(ledger_.max_snapshot, snapshot_nodes);
  ++phase_;
  count_ = 0;
  phase_start_allocs_ = eng_.mgr_.total_allocations();
  phase_peak_ = eng_.mgr_.store_nodes(eng_.store_);
}

}  // namespace spmx
