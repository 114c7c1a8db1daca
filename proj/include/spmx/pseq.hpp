#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "spmx/bisector.hpp"

namespace spmx {

struct SufficiencyViolationError : std::runtime_error {
  explicit SufficiencyViolationError(const std::string& m) : std::runtime_error(m) {}
};

// Element of a wavefront sequence: a wavelet generator plus its current claim
// interval (edge parameters in [0,1]).
struct SeqItem {
  WeightedGenerator gen;
  double lo = 0.0;
  double hi = 1.0;

  bool operator==(const SeqItem& o) const {
    return gen.site == o.gen.site && gen.weight == o.gen.weight &&
           gen.artificial == o.gen.artificial && lo == o.lo && hi == o.hi;
  }
};

struct VersionHandle {
  std::uint32_t store = 0;  // 0 = null store
  std::int32_t root = -1;
  std::uint32_t size = 0;
  bool null() const { return store == 0; }
};

// A collection of persistent balanced sequences (treaps with path copying).
// Versions are immutable; updates return new handles and allocate O(log n)
// nodes. Whole stores can be dropped at once, which is how the space reset
// discards history. Accessing a version of a dropped store throws
// SufficiencyViolationError.
class SeqStoreManager {
 public:
  std::uint32_t create_store();
  void drop_store(std::uint32_t id);
  bool alive(std::uint32_t id) const;

  // When transient, updates mutate nodes in place (the paper's
  // non-path-copying mode for merging / SPM partition work).
  void set_transient(std::uint32_t id, bool on);

  VersionHandle empty(std::uint32_t store);
  VersionHandle insert(VersionHandle v, std::size_t pos, const SeqItem& item);
  VersionHandle erase(VersionHandle v, std::size_t pos);
  VersionHandle replace(VersionHandle v, std::size_t pos, const SeqItem& item);
  std::pair<VersionHandle, VersionHandle> split(VersionHandle v, std::size_t pos);
  VersionHandle concat(VersionHandle a, VersionHandle b);

  const SeqItem& get(VersionHandle v, std::size_t pos);
  std::vector<SeqItem> traverse(VersionHandle v);
  // First position whose item satisfies the (monotone) predicate; v.size if none.
  std::size_t search(VersionHandle v, const std::function<bool(const SeqItem&)>& pred);

  // Standalone balanced copy in `target` store, independent of v's store.
  VersionHandle freeze_copy(VersionHandle v, std::uint32_t target);

  // --- accounting ---
  std::size_t store_nodes(std::uint32_t id) const;      // nodes ever allocated & alive
  std::size_t live_nodes() const;                        // across alive stores
  std::uint64_t total_allocations() const { return total_allocs_; }

 private:
  struct Node {
    SeqItem item;
    std::int32_t left = -1, right = -1;
    std::uint32_t size = 1;
    std::uint64_t prio = 0;
  };
  struct Store {
    std::vector<Node> nodes;
    bool alive = true;
    bool transient_mode = false;
    std::uint64_t prio_counter = 0;
  };
  std::vector<std::unique_ptr<Store>> stores_;  // index+1 == store id
  std::uint64_t total_allocs_ = 0;

  Store& checked_store(std::uint32_t id);
  std::int32_t new_node(Store& st, const SeqItem& item);
  std::int32_t copy_node(Store& st, std::int32_t idx);
  std::uint32_t node_size(const Store& st, std::int32_t idx) const {
    return idx < 0 ? 0u : st.nodes[idx].size;
  }
  void pull(Store& st, std::int32_t idx);
  std::int32_t merge(Store& st, std::int32_t a, std::int32_t b);
  void split_at(Store& st, std::int32_t root, std::uint32_t k, std::int32_t& a, std::int32_t& b);
  std::int32_t build_balanced(Store& st, const std::vector<SeqItem>& items, std::size_t lo,
                              std::size_t hi);
};

}  // namespace spmx
