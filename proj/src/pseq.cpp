#include "spmx/pseq.hpp"

namespace spmx {

std::uint32_t SeqStoreManager::create_store() {
  stores_.push_back(std::make_unique<Store>());
  return static_cast<std::uint32_t>(stores_.size());
}

SeqStoreManager::Store& SeqStoreManager::checked_store(std::uint32_t id) {
  if (id == 0 || id > stores_.size() || !stores_[id - 1]->alive)
    throw SufficiencyViolationError("access to a discarded or invalid sequence store");
  return *stores_[id - 1];
}

void SeqStoreManager::drop_store(std::uint32_t id) {
  if (id == 0 || id > stores_.size()) return;
  stores_[id - 1]->alive = false;
  stores_[id - 1]->nodes.clear();
  stores_[id - 1]->nodes.shrink_to_fit();
}

bool SeqStoreManager::alive(std::uint32_t id) const {
  return id != 0 && id <= stores_.size() && stores_[id - 1]->alive;
}

void SeqStoreManager::set_transient(std::uint32_t id, bool on) {
  checked_store(id).transient_mode = on;
}

std::int32_t SeqStoreManager::new_node(Store& st, const SeqItem& item) {
  Node n;
  n.item = item;
  n.prio = mix64(++st.prio_counter ^ 0x5bf03635);
  st.nodes.push_back(n);
  ++total_allocs_;
  return static_cast<std::int32_t>(st.nodes.size() - 1);
}

std::int32_t SeqStoreManager::copy_node(Store& st, std::int32_t idx) {
  if (st.transient_mode) return idx;
  st.nodes.push_back(st.nodes[idx]);  // keeps priority: same logical node
  ++total_allocs_;
  return static_cast<std::int32_t>(st.nodes.size() - 1);
}

void SeqStoreManager::pull(Store& st, std::int32_t idx) {
  Node& n = st.nodes[idx];
  n.size = 1 + node_size(st, n.left) + node_size(st, n.right);
}

std::int32_t SeqStoreManager::merge(Store& st, std::int32_t a, std::int32_t b) {
  if (a < 0) return b;
  if (b < 0) return a;
  if (st.nodes[a].prio >= st.nodes[b].prio) {
    const std::int32_t c = copy_node(st, a);
    st.nodes[c].right = merge(st, st.nodes[c].right, b);
    pull(st, c);
    return c;
  }
  const std::int32_t c = copy_node(st, b);
  st.nodes[c].left = merge(st, a, st.nodes[c].left);
  pull(st, c);
  return c;
}

void SeqStoreManager::split_at(Store& st, std::int32_t root, std::uint32_t k, std::int32_t& a,
                               std::int32_t& b) {
  if (root < 0) {
    a = b = -1;
    return;
  }
  const std::uint32_t ls = node_size(st, st.nodes[root].left);
  if (k <= ls) {
    const std::int32_t c = copy_node(st, root);
    // recursion may reallocate st.nodes, so never pass a node field by reference
    std::int32_t nl;
    split_at(st, st.nodes[c].left, k, a, nl);
    st.nodes[c].left = nl;
    pull(st, c);
    b = c;
  } else {
    const std::int32_t c = copy_node(st, root);
    std::int32_t nr;
    split_at(st, st.nodes[c].right, k - ls - 1, nr, b);
    st.nodes[c].right = nr;
    pull(st, c);
    a = c;
  }
}

VersionHandle SeqStoreManager::empty(std::uint32_t store) {
  checked_store(store);
  return VersionHandle{store, -1, 0};
}

VersionHandle SeqStoreManager::insert(VersionHandle v, std::size_t pos, const SeqItem& item) {
  Store& st = checked_store(v.store);
  if (pos > v.size) throw std::out_of_range("seq insert position");
  std::int32_t a, b;
  split_at(st, v.root, static_cast<std::uint32_t>(pos), a, b);
  const std::int32_t m = new_node(st, item);
  return VersionHandle{v.store, merge(st, merge(st, a, m), b), v.size + 1};
}

VersionHandle SeqStoreManager::erase(VersionHandle v, std::size_t pos) {
  Store& st = checked_store(v.store);
  if (pos >= v.size) throw std::out_of_range("seq erase position");
  std::int32_t a, b, c, d;
  split_at(st, v.root, static_cast<std::uint32_t>(pos), a, b);
  split_at(st, b, 1u, c, d);
  (void)c;
  return VersionHandle{v.store, merge(st, a, d), v.size - 1};
}

VersionHandle SeqStoreManager::replace(VersionHandle v, std::size_t pos, const SeqItem& item) {
  Store& st = checked_store(v.store);
  if (pos >= v.size) throw std::out_of_range("seq replace position");
  // path-copied descend
  std::int32_t root = copy_node(st, v.root);
  std::int32_t cur = root;
  std::size_t k = pos;
  for (;;) {
    const std::uint32_t ls = node_size(st, st.nodes[cur].left);
    if (k < ls) {
      const std::int32_t nl = copy_node(st, st.nodes[cur].left);
      st.nodes[cur].left = nl;
      cur = nl;
    } else if (k == ls) {
      st.nodes[cur].item = item;
      break;
    } else {
      k -= ls + 1;
      const std::int32_t nr = copy_node(st, st.nodes[cur].right);
      st.nodes[cur].right = nr;
      cur = nr;
    }
  }
  return VersionHandle{v.store, root, v.size};
}

std::pair<VersionHandle, VersionHandle> SeqStoreManager::split(VersionHandle v, std::size_t pos) {
  Store& st = checked_store(v.store);
  if (pos > v.size) throw std::out_of_range("seq split position");
  std::int32_t a, b;
  split_at(st, v.root, static_cast<std::uint32_t>(pos), a, b);
  return {VersionHandle{v.store, a, static_cast<std::uint32_t>(pos)},
          VersionHandle{v.store, b, static_cast<std::uint32_t>(v.size - pos)}};
}

VersionHandle SeqStoreManager::concat(VersionHandle a, VersionHandle b) {
  if (a.store != b.store) throw std::invalid_argument("concat across stores");
  Store& st = checked_store(a.store);
  return VersionHandle{a.store, merge(st, a.root, b.root), a.size + b.size};
}

const SeqItem& SeqStoreManager::get(VersionHandle v, std::size_t pos) {
  Store& st = checked_store(v.store);
  if (pos >= v.size) throw std::out_of_range("seq get position");
  std::int32_t cur = v.root;
  std::size_t k = pos;
  for (;;) {
    const std::uint32_t ls = node_size(st, st.nodes[cur].left);
    if (k < ls) {
      cur = st.nodes[cur].left;
    } else if (k == ls) {
      return st.nodes[cur].item;
    } else {
      k -= ls + 1;
      cur = st.nodes[cur].right;
    }
  }
}

std::vector<SeqItem> SeqStoreManager::traverse(VersionHandle v) {
  Store& st = checked_store(v.store);
  std::vector<SeqItem> out;
  out.reserve(v.size);
  std::vector<std::int32_t> stack;
  std::int32_t cur = v.root;
  while (cur >= 0 || !stack.empty()) {
    while (cur >= 0) {
      stack.push_back(cur);
      cur = st.nodes[cur].left;
    }
    cur = stack.back();
    stack.pop_back();
    out.push_back(st.nodes[cur].item);
    cur = st.nodes[cur].right;
  }
  return out;
}

std::size_t SeqStoreManager::search(VersionHandle v,
                                    const std::function<bool(const SeqItem&)>& pred) {
  std::size_t lo = 0, hi = v.size;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (pred(get(v, mid)))
      hi = mid;
    else
      lo = mid + 1;
  }
  return lo;
}

std::int32_t SeqStoreManager::build_balanced(Store& st, const std::vector<SeqItem>& items,
                                             std::size_t lo, std::size_t hi) {
  if (lo >= hi) return -1;
  const std::size_t mid = (lo + hi) / 2;
  const std::int32_t n = new_node(st, items[mid]);
  st.nodes[n].left = build_balanced(st, items, lo, mid);
  st.nodes[n].right = build_balanced(st, items, mid + 1, hi);
  // heapify priorities so later treap updates stay balanced
  std::uint64_t p = st.nodes[n].prio;
  if (st.nodes[n].left >= 0) p = std::max(p, st.nodes[st.nodes[n].left].prio + 1);
  if (st.nodes[n].right >= 0) p = std::max(p, st.nodes[st.nodes[n].right].prio + 1);
  st.nodes[n].prio = p;
  pull(st, n);
  return n;
}

VersionHandle SeqStoreManager::freeze_copy(VersionHandle v, std::uint32_t target) {
  const std::vector<SeqItem> items = v.null() ? std::vector<SeqItem>{} : traverse(v);
  Store& st = checked_store(target);
  const std::int32_t root = build_balanced(st, items, 0, items.size());
  return VersionHandle{target, root, static_cast<std::uint32_t>(items.size())};
}

std::size_t SeqStoreManager::store_nodes(std::uint32_t id) const {
  if (id == 0 || id > stores_.size() || !stores_[id - 1]->alive) return 0;
  return stores_[id - 1]->nodes.size();
}

std::size_t SeqStoreManager::live_nodes() const {
  std::size_t n = 0;
  for (const auto& st : stores_)
    if (st->alive) n += st->nodes.size();
  return n;
}

}  // namespace spmx
