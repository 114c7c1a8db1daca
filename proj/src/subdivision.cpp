#include "spmx/subdivision.hpp"

#include <algorithm>
#include <chrono>
#include <climits>
#include <cmath>
#include <deque>
#include <limits>
#include <set>

namespace spmx {

namespace {

// Separation factor: a leaf holding a point of V is split while any other
// point of V lies within kSep * size (L-inf) of the cell box.
constexpr double kSep = 8.0;
constexpr int kPiecesPerInterval = 4;
constexpr double kWindowFactor = 2.05;  // clearance window: 2.05 * max(|e|, fmax)
constexpr int kMaxDepth = 50;
constexpr int kMaxRepairPasses = 64;

// Points sorted by x for rectangular range scans.
struct PointIndex {
  std::vector<std::pair<double, int>> by_x;  // (x, original index)
  const std::vector<Point>* pts = nullptr;

  void build(const std::vector<Point>& p) {
    pts = &p;
    by_x.clear();
    by_x.reserve(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) by_x.emplace_back(p[i].x, static_cast<int>(i));
    std::sort(by_x.begin(), by_x.end());
  }

  // Any point with index != exclude inside the closed box?
  bool any_other_in(double x0, double y0, double x1, double y1, int exclude) const {
    auto lo = std::lower_bound(by_x.begin(), by_x.end(), std::make_pair(x0, INT_MIN));
    for (auto it = lo; it != by_x.end() && it->first <= x1; ++it) {
      if (it->second == exclude) continue;
      const Point& p = (*pts)[it->second];
      if (p.y >= y0 && p.y <= y1) return true;
    }
    return false;
  }
};

double seg_param(const Segment& s, const Point& p) {
  const Point d = s.b - s.a;
  const double l2 = dot(d, d);
  return l2 > 0 ? dot(p - s.a, d) / l2 : 0.0;
}

}  // namespace

Subdivision::Subdivision(const Instance& inst) : inst_(inst) {
  inst_.validate();
  vpoints_ = inst_.v_points();
  obstacle_tree_.build(inst_.obstacle_edges());
  ogrid_.build(inst_);
  const bool trace = getenv("SPMX_DEBUG_REPAIR") != nullptr;
  auto tick = [last = std::chrono::steady_clock::now(), trace](const char* what) mutable {
    const auto now = std::chrono::steady_clock::now();
    if (trace)
      fprintf(stderr, "%s: %.2fs\n", what, std::chrono::duration<double>(now - last).count());
    last = now;
  };
  build_quadtree();
  tick("quadtree");
  balance();
  tick("balance");
  generate_edges();
  tick("edges");
  repair_well_covering();
  tick("repair");
  compute_adjacency();
  tick("adjacency");
}

std::size_t Subdivision::leaf_count() const {
  std::size_t n = 0;
  for (const auto& c : cells_)
    if (c.leaf()) ++n;
  return n;
}

void Subdivision::split_cell(int id) {
  const SubCell c = cells_[id];  // copy: push_back below may reallocate
  if (!c.leaf()) return;
  if (c.depth >= kMaxDepth)
    throw GeometryError("subdivision: quadtree depth limit exceeded (degenerate input scale)");
  const double h = 0.5 * c.size;
  const double xm = c.x0 + h, ym = c.y0 + h;
  const int vp = c.vpoint;
  const int base = static_cast<int>(cells_.size());
  for (int k = 0; k < 4; ++k) {
    SubCell ch;
    ch.size = h;
    ch.depth = c.depth + 1;
    ch.parent = id;
    ch.x0 = (k % 2 == 0) ? c.x0 : xm;
    ch.y0 = (k < 2) ? c.y0 : ym;
    cells_.push_back(ch);
  }
  for (int k = 0; k < 4; ++k) cells_[id].children[k] = base + k;
  cells_[id].vpoint = -1;
  if (vp >= 0) {
    const Point& p = vpoints_[vp];
    const int k = (p.x < xm ? 0 : 1) + (p.y < ym ? 0 : 2);
    cells_[base + k].vpoint = vp;
  }
}

void Subdivision::build_quadtree() {
  // Bounding square: 4x the instance extent, with an irrational-ish offset so
  // no point of V lands on a dyadic grid line.
  BBox bb = inst_.bounds();
  const double w = std::max(bb.width(), bb.height());
  const double side = std::max(4.0 * w, 1.0);
  const double cx = 0.5 * (bb.x0 + bb.x1), cy = 0.5 * (bb.y0 + bb.y1);
  SubCell root;
  root.size = side;
  root.x0 = cx - 0.5 * side + side * 0.0137182353217;
  root.y0 = cy - 0.5 * side + side * 0.0093106750021;
  root.depth = 0;
  cells_.clear();
  cells_.push_back(root);

  PointIndex pidx;
  pidx.build(vpoints_);

  // Recursive distribution with explicit stack: (cell id, point indices).
  std::vector<std::pair<int, std::vector<int>>> stack;
  std::vector<int> all(vpoints_.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  stack.emplace_back(0, std::move(all));
  while (!stack.empty()) {
    auto [id, pts] = std::move(stack.back());
    stack.pop_back();
    SubCell& c = cells_[id];
    if (pts.empty()) continue;
    bool split = pts.size() > 1;
    if (!split) {
      const double m = kSep * c.size;
      split = pidx.any_other_in(c.x0 - m, c.y0 - m, c.x0 + c.size + m, c.y0 + c.size + m,
                                pts[0]);
      if (!split) {
        c.vpoint = pts[0];
        continue;
      }
    }
    split_cell(id);
    const SubCell& cc = cells_[id];
    std::vector<int> sub[4];
    const double xm = cc.x0 + 0.5 * cc.size, ym = cc.y0 + 0.5 * cc.size;
    for (int pi : pts) {
      const Point& p = vpoints_[pi];
      sub[(p.x < xm ? 0 : 1) + (p.y < ym ? 0 : 2)].push_back(pi);
    }
    for (int k = 0; k < 4; ++k)
      if (!sub[k].empty()) stack.emplace_back(cc.children[k], std::move(sub[k]));
  }
  // vpoint assignment for single-point leaves happened above; redistribute
  // any still attached to interior nodes (cannot happen, but keep invariant).
}

void Subdivision::leaves_overlapping(const BBox& box, std::vector<int>& out) const {
  out.clear();
  std::vector<int> stk = {0};
  while (!stk.empty()) {
    const int id = stk.back();
    stk.pop_back();
    const SubCell& c = cells_[id];
    if (!c.box().overlaps(box)) continue;
    if (c.leaf()) {
      out.push_back(id);
    } else {
      for (int k = 3; k >= 0; --k) stk.push_back(c.children[k]);
    }
  }
  std::sort(out.begin(), out.end());
}

int Subdivision::locate_leaf(const Point& p) const {
  const SubCell& r = cells_[0];
  if (p.x < r.x0 || p.x > r.x0 + r.size || p.y < r.y0 || p.y > r.y0 + r.size) return -1;
  int id = 0;
  while (!cells_[id].leaf()) {
    const SubCell& c = cells_[id];
    const double xm = c.x0 + 0.5 * c.size, ym = c.y0 + 0.5 * c.size;
    id = c.children[(p.x < xm ? 0 : 1) + (p.y < ym ? 0 : 2)];
  }
  return id;
}

void Subdivision::balance() {
  // 2:1 balance including corner adjacency: touching leaves differ by at
  // most one level.
  std::deque<int> queue;
  for (std::size_t i = 0; i < cells_.size(); ++i)
    if (cells_[i].leaf()) queue.push_back(static_cast<int>(i));
  std::vector<int> touching;
  while (!queue.empty()) {
    const int id = queue.front();
    queue.pop_front();
    if (!cells_[id].leaf()) continue;
    const SubCell c = cells_[id];
    BBox qb = c.box();
    qb.inflate(1e-9 * c.size);
    leaves_overlapping(qb, touching);
    bool requeue = false;
    for (int nb : touching) {
      if (nb == id || !cells_[nb].leaf()) continue;
      if (cells_[nb].depth < c.depth - 1) {
        split_cell(nb);
        for (int k = 0; k < 4; ++k) queue.push_back(cells_[nb].children[k]);
        requeue = true;
      }
    }
    if (requeue) queue.push_back(id);
  }
}

void Subdivision::ObstacleGrid::build(const Instance& inst) {
  extent = inst.bounds();
  extent.inflate(1e-9 * (1.0 + std::max(extent.width(), extent.height())));
  const int n = std::max<int>(1, static_cast<int>(inst.obstacles.size()));
  nx = ny = std::clamp(static_cast<int>(std::ceil(2.0 * std::sqrt(double(n)))), 1, 256);
  bins.assign(static_cast<std::size_t>(nx) * ny, {});
  for (std::size_t oi = 0; oi < inst.obstacles.size(); ++oi) {
    BBox b;
    for (const Point& v : inst.obstacles[oi].vertices) b.expand(v);
    const int i0 = std::clamp(int((b.x0 - extent.x0) / extent.width() * nx), 0, nx - 1);
    const int i1 = std::clamp(int((b.x1 - extent.x0) / extent.width() * nx), 0, nx - 1);
    const int j0 = std::clamp(int((b.y0 - extent.y0) / extent.height() * ny), 0, ny - 1);
    const int j1 = std::clamp(int((b.y1 - extent.y0) / extent.height() * ny), 0, ny - 1);
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i)
        bins[static_cast<std::size_t>(j) * nx + i].push_back(static_cast<int>(oi));
  }
}

const std::vector<int>& Subdivision::ObstacleGrid::candidates(const Point& p) const {
  static const std::vector<int> none;
  if (!extent.contains(p)) return none;
  const int i = std::clamp(int((p.x - extent.x0) / extent.width() * nx), 0, nx - 1);
  const int j = std::clamp(int((p.y - extent.y0) / extent.height() * ny), 0, ny - 1);
  return bins[static_cast<std::size_t>(j) * nx + i];
}

bool Subdivision::inside_any_obstacle(const Point& p) const {
  for (int oi : ogrid_.candidates(p))
    if (inst_.obstacles[oi].contains(p)) return true;
  return false;
}

bool Subdivision::free_space_midpoint(const Segment& s) const {
  const Point m = s.at(0.5);
  if (inside_any_obstacle(m)) return false;
  // exclude segments that run along an obstacle boundary
  BBox qb = bbox_of(s);
  qb.inflate(1e-9 * (1.0 + s.length()));
  std::vector<std::size_t> cand;
  obstacle_tree_.query_box(qb, cand);
  const double eps = 1e-12 * (1.0 + std::abs(m.x) + std::abs(m.y));
  for (std::size_t i : cand)
    if (dist_point_segment(m, obstacle_tree_.segment(i)) < eps) return false;
  return true;
}

std::vector<Segment> Subdivision::clip_to_free_space(const Segment& s) const {
  std::vector<Segment> out;
  BBox qb = bbox_of(s);
  qb.inflate(1e-9 * (1.0 + s.length()));
  std::vector<std::size_t> cand;
  obstacle_tree_.query_box(qb, cand);
  std::vector<double> cuts = {0.0, 1.0};
  const double len = s.length();
  for (std::size_t i : cand) {
    const Segment& o = obstacle_tree_.segment(i);
    Point ip;
    if (line_intersection(s, o, ip)) {
      const double t = seg_param(s, ip);
      const double u = seg_param(o, ip);
      const double slack = 1e-12;
      if (t > -slack && t < 1 + slack && u > -slack && u < 1 + slack)
        cuts.push_back(std::clamp(t, 0.0, 1.0));
    } else {
      // parallel: collinear overlap contributes the projections of o's ends
      for (const Point& q : {o.a, o.b}) {
        if (dist_point_segment(q, s) < 1e-12 * (1.0 + len)) {
          const double t = seg_param(s, q);
          if (t > 0 && t < 1) cuts.push_back(t);
        }
      }
    }
  }
  std::sort(cuts.begin(), cuts.end());
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double t0 = cuts[i], t1 = cuts[i + 1];
    if ((t1 - t0) * len < 1e-11 * (1.0 + len)) continue;
    Segment piece(s.at(t0), s.at(t1));
    if (free_space_midpoint(piece)) out.push_back(piece);
  }
  return out;
}

void Subdivision::generate_edges() {
  edges_.clear();
  auto orient_seg = [](Point a, Point b) {
    if (b < a) std::swap(a, b);
    return Segment(a, b);
  };
  auto emit = [&](const Segment& raw, int ca, int cb, bool spoke, int vp) {
    for (const Segment& piece : clip_to_free_space(raw)) {
      TransparentEdge e;
      e.seg = orient_seg(piece.a, piece.b);
      e.len = e.seg.length();
      e.cell_a = ca;
      e.cell_b = cb;
      e.spoke = spoke;
      e.vpoint = vp;
      edges_.push_back(std::move(e));
    }
  };

  std::vector<int> nbs;
  for (std::size_t ci = 0; ci < cells_.size(); ++ci) {
    const SubCell& c = cells_[ci];
    if (!c.leaf()) continue;
    const double x1 = c.x0 + c.size, y1 = c.y0 + c.size;
    // Coordinates are sums of dyadic offsets taken along different tree
    // paths, so neighbor tests must tolerate 1-ulp drift.
    const double tol = 1e-9 * c.size;
    // right wall
    leaves_overlapping(BBox{x1 - tol, c.y0 - tol, x1 + tol, y1 + tol, false}, nbs);
    for (int nb : nbs) {
      const SubCell& d = cells_[nb];
      if (std::abs(d.x0 - x1) > tol) continue;
      const double lo = std::max(c.y0, d.y0), hi = std::min(y1, d.y0 + d.size);
      if (hi - lo <= 0.25 * std::min(c.size, d.size)) continue;
      for (int k = 0; k < kPiecesPerInterval; ++k) {
        const double a = lo + (hi - lo) * k / kPiecesPerInterval;
        const double b = lo + (hi - lo) * (k + 1) / kPiecesPerInterval;
        emit(Segment({x1, a}, {x1, b}), static_cast<int>(ci), nb, false, -1);
      }
    }
    // top wall
    leaves_overlapping(BBox{c.x0 - tol, y1 - tol, x1 + tol, y1 + tol, false}, nbs);
    for (int nb : nbs) {
      const SubCell& d = cells_[nb];
      if (std::abs(d.y0 - y1) > tol) continue;
      const double lo = std::max(c.x0, d.x0), hi = std::min(x1, d.x0 + d.size);
      if (hi - lo <= 0.25 * std::min(c.size, d.size)) continue;
      for (int k = 0; k < kPiecesPerInterval; ++k) {
        const double a = lo + (hi - lo) * k / kPiecesPerInterval;
        const double b = lo + (hi - lo) * (k + 1) / kPiecesPerInterval;
        emit(Segment({a, y1}, {b, y1}), static_cast<int>(ci), nb, false, -1);
      }
    }
    // spokes from the cell's point of V to its four walls
    if (c.vpoint >= 0) {
      const Point p = vpoints_[c.vpoint];
      const Point targets[4] = {{x1, p.y}, {c.x0, p.y}, {p.x, y1}, {p.x, c.y0}};
      const std::size_t before = edges_.size();
      for (const Point& t : targets) {
        const double len = dist(p, t);
        if (len <= 0) continue;
        const int pieces = std::max(1, static_cast<int>(std::ceil(len / (0.5 * c.size))));
        for (int k = 0; k < pieces; ++k) {
          const Segment whole(p, t);
          emit(Segment(whole.at(double(k) / pieces), whole.at(double(k + 1) / pieces)),
               static_cast<int>(ci), static_cast<int>(ci), true, c.vpoint);
        }
      }
      // A vertex whose free cone avoids all four axis directions still needs
      // an incident edge: probe a fan of short spokes and keep the first hit.
      bool touches = false;
      const double eps = 1e-12 * (1.0 + std::abs(p.x) + std::abs(p.y));
      for (std::size_t i = before; i < edges_.size() && !touches; ++i)
        touches = dist(edges_[i].seg.a, p) < eps || dist(edges_[i].seg.b, p) < eps;
      if (!touches) {
        for (int k = 0; k < 16 && !touches; ++k) {
          const double ang = (2.0 * M_PI * k + M_PI / 16.0) / 16.0;
          const Point q{p.x + (c.size / 8.0) * std::cos(ang),
                        p.y + (c.size / 8.0) * std::sin(ang)};
          if (!c.box().contains(q)) continue;
          const std::size_t b2 = edges_.size();
          emit(Segment(p, q), static_cast<int>(ci), static_cast<int>(ci), true, c.vpoint);
          for (std::size_t i = b2; i < edges_.size(); ++i)
            if (dist(edges_[i].seg.a, p) < eps || dist(edges_[i].seg.b, p) < eps) touches = true;
          if (!touches) edges_.resize(b2);
        }
      }
    }
  }
}

int Subdivision::count_v_in_cells(const std::vector<int>& cellset) const {
  int n = 0;
  for (int id : cellset)
    if (cells_[id].vpoint >= 0) ++n;
  return n;
}

namespace {

// One attempt at a well-covering region: grow the clearance window until the
// boundary-edge lengths fit under the 2*max{|e|,|f|} contract.
struct UCellsResult {
  std::vector<int> ucells;
  std::vector<int> boundary;  // edge pool indices on the region boundary
  double radius = 0;
  bool ok = false;
  double fmax = 0;
};

}  // namespace

void Subdivision::repair_well_covering() {
  // Edge pool with tombstones; cell -> incident edge indices (stale entries
  // filtered through the dead flag).
  std::vector<char> dead(edges_.size(), 0);
  std::vector<std::vector<int>> incident(cells_.size());
  auto attach = [&](int ei) {
    incident[edges_[ei].cell_a].push_back(ei);
    if (edges_[ei].cell_b != edges_[ei].cell_a) incident[edges_[ei].cell_b].push_back(ei);
  };
  for (std::size_t i = 0; i < edges_.size(); ++i) attach(static_cast<int>(i));

  // O(1) membership marks for the current candidate region
  std::vector<std::uint32_t> stamp(cells_.size(), 0);
  std::uint32_t cur_stamp = 0;

  auto region_at = [&](int ei, double rad, UCellsResult& r) {
    const TransparentEdge& e = edges_[ei];
    BBox win = bbox_of(e.seg);
    win.inflate(rad);
    leaves_overlapping(win, r.ucells);
    ++cur_stamp;
    for (int cid : r.ucells) stamp[cid] = cur_stamp;
    // boundary edges: wall edges with exactly one incident cell inside;
    // each is discovered exactly once, via its inside cell
    r.boundary.clear();
    r.fmax = 0;
    for (int cid : r.ucells) {
      for (int fi : incident[cid]) {
        if (dead[fi] || edges_[fi].spoke) continue;
        const bool ain = stamp[edges_[fi].cell_a] == cur_stamp;
        const bool bin = stamp[edges_[fi].cell_b] == cur_stamp;
        if (ain != bin) {
          r.boundary.push_back(fi);
          r.fmax = std::max(r.fmax, edges_[fi].len);
        }
      }
    }
    r.radius = rad;
    r.ok = 2.0 * std::max(e.len, r.fmax) <= rad * (1.0 + 1e-9);
  };

  // Grow the window until the clearance contract holds; with quarter-interval
  // pieces and 2:1 grading this settles within a couple of iterations.
  auto try_ucells = [&](int ei) {
    UCellsResult r;
    double rad = kWindowFactor * edges_[ei].len;
    for (int iter = 0; iter < 24; ++iter) {
      region_at(ei, rad, r);
      // growing past the cell cap cannot produce an acceptable region;
      // leave it to the caller to shorten boundary edges instead
      if (r.ok || static_cast<int>(r.ucells.size()) > kMaxUCells) return r;
      rad = kWindowFactor * std::max(edges_[ei].len, r.fmax);
    }
    return r;
  };

  auto split_edge = [&](int ei) {
    const TransparentEdge e = edges_[ei];
    dead[ei] = 1;
    for (int half = 0; half < 2; ++half) {
      TransparentEdge h = e;
      h.seg = half == 0 ? Segment(e.seg.a, e.seg.at(0.5)) : Segment(e.seg.at(0.5), e.seg.b);
      h.len = h.seg.length();
      h.ucells.clear();
      edges_.push_back(std::move(h));
      dead.push_back(0);
      attach(static_cast<int>(edges_.size()) - 1);
    }
  };

  // cell -> edges whose stored region contains the cell (may hold stale
  // entries; used only to over-approximate the recompute set after splits)
  std::vector<std::vector<int>> region_index(cells_.size());
  std::vector<int> recompute(edges_.size());
  for (std::size_t i = 0; i < edges_.size(); ++i) recompute[i] = static_cast<int>(i);

  for (int pass = 0; pass < kMaxRepairPasses; ++pass) {
    std::vector<int> to_split;
    std::vector<int> next_recompute;
    for (int ei : recompute) {
      if (dead[ei]) continue;
      UCellsResult r = try_ucells(static_cast<int>(ei));
      if (!r.ok) {
        // window growth stalled: shorten the overlong boundary edges
        for (int fi : r.boundary)
          if (2.0 * edges_[fi].len > r.radius * (1.0 + 1e-9)) to_split.push_back(fi);
        next_recompute.push_back(ei);
        continue;
      }
      if (static_cast<int>(r.ucells.size()) > kMaxUCells) {
        // feasible but oversized: shrink whichever term drives the window —
        // halve the longest boundary edges when fmax dominates, else halve e
        if (r.fmax > edges_[ei].len) {
          for (int fi : r.boundary)
            if (edges_[fi].len > 0.5 * r.fmax * (1.0 - 1e-9)) to_split.push_back(fi);
          next_recompute.push_back(ei);
        } else {
          to_split.push_back(ei);
        }
        continue;
      }
      if (count_v_in_cells(r.ucells) > 1) {
        // when the window is driven by a long boundary edge, halving e does
        // not shrink the grown region; shorten the boundary instead
        if (r.fmax > edges_[ei].len) {
          for (int fi : r.boundary)
            if (edges_[fi].len > 0.5 * r.fmax * (1.0 - 1e-9)) to_split.push_back(fi);
          next_recompute.push_back(ei);
        } else {
          to_split.push_back(ei);
        }
        continue;
      }
      for (int cid : r.ucells) region_index[cid].push_back(ei);
      edges_[ei].ucells = std::move(r.ucells);
    }
    std::sort(to_split.begin(), to_split.end());
    to_split.erase(std::unique(to_split.begin(), to_split.end()), to_split.end());
    if (getenv("SPMX_DEBUG_REPAIR")) {
      std::size_t livec = 0;
      for (char d : dead)
        if (!d) ++livec;
      fprintf(stderr, "pass %d: live=%zu split=%zu\n", pass, livec, to_split.size());
      if (to_split.size() < 20)
        for (int ei : to_split)
          fprintf(stderr, "  split e len=%g at (%g,%g)-(%g,%g) spoke=%d\n", edges_[ei].len,
                  edges_[ei].seg.a.x, edges_[ei].seg.a.y, edges_[ei].seg.b.x,
                  edges_[ei].seg.b.y, edges_[ei].spoke);
    }
    if (to_split.empty() && next_recompute.empty()) break;
    if (pass + 1 == kMaxRepairPasses)
      throw GeometryError("subdivision: well-covering repair did not converge");
    for (int ei : to_split) {
      if (dead[ei]) continue;
      // regions containing either incident cell of the split edge must be
      // re-derived against the new edge set
      for (int cid : {edges_[ei].cell_a, edges_[ei].cell_b})
        next_recompute.insert(next_recompute.end(), region_index[cid].begin(),
                              region_index[cid].end());
      split_edge(ei);
      next_recompute.push_back(static_cast<int>(edges_.size()) - 2);
      next_recompute.push_back(static_cast<int>(edges_.size()) - 1);
    }
    std::sort(next_recompute.begin(), next_recompute.end());
    next_recompute.erase(std::unique(next_recompute.begin(), next_recompute.end()),
                         next_recompute.end());
    recompute = std::move(next_recompute);
  }

  // Compact tombstones and renumber deterministically by geometry.
  std::vector<TransparentEdge> live;
  live.reserve(edges_.size());
  for (std::size_t i = 0; i < edges_.size(); ++i)
    if (!dead[i]) live.push_back(std::move(edges_[i]));
  std::sort(live.begin(), live.end(), [](const TransparentEdge& a, const TransparentEdge& b) {
    if (a.seg.a != b.seg.a) return a.seg.a < b.seg.a;
    if (a.seg.b != b.seg.b) return a.seg.b < b.seg.b;
    return a.spoke < b.spoke;
  });
  for (std::size_t i = 0; i < live.size(); ++i) live[i].id = static_cast<int>(i);
  edges_ = std::move(live);
}

void Subdivision::compute_adjacency() {
  // CSR index: cell -> incident edges, and cell -> regions containing it.
  auto build_csr = [this](std::vector<int>& off, std::vector<int>& data, auto&& emit) {
    off.assign(cells_.size() + 1, 0);
    emit([&](int cid, int) { ++off[cid + 1]; });
    for (std::size_t i = 1; i < off.size(); ++i) off[i] += off[i - 1];
    data.resize(off.back());
    std::vector<int> cursor(off.begin(), off.end() - 1);
    emit([&](int cid, int eid) { data[cursor[cid]++] = eid; });
  };
  build_csr(cell_edges_off_, cell_edges_, [this](auto&& put) {
    for (const auto& e : edges_) {
      put(e.cell_a, e.id);
      if (e.cell_b != e.cell_a) put(e.cell_b, e.id);
    }
  });
  build_csr(cell_regions_off_, cell_regions_, [this](auto&& put) {
    for (const auto& e : edges_)
      for (int cid : e.ucells) put(cid, e.id);
  });
}

bool Subdivision::on_region_boundary(int eid, int gid) const {
  const TransparentEdge& e = edges_[eid];
  const TransparentEdge& g = edges_[gid];
  if (e.spoke) return false;
  const bool ain = std::binary_search(g.ucells.begin(), g.ucells.end(), e.cell_a);
  const bool bin = std::binary_search(g.ucells.begin(), g.ucells.end(), e.cell_b);
  return ain != bin;
}

std::vector<int> Subdivision::input_of(int eid) const {
  // stamp U(e)'s cells once so each membership test is O(1)
  if (region_stamp_.size() < cells_.size()) region_stamp_.assign(cells_.size(), 0);
  ++stamp_val_;
  for (int cid : edges_[eid].ucells) region_stamp_[cid] = stamp_val_;
  std::vector<int> out;
  for (int cid : edges_[eid].ucells) {
    for (int k = cell_edges_off_[cid]; k < cell_edges_off_[cid + 1]; ++k) {
      const int fi = cell_edges_[k];
      const TransparentEdge& f = edges_[fi];
      if (f.spoke) continue;
      const bool ain = region_stamp_[f.cell_a] == stamp_val_;
      const bool bin = region_stamp_[f.cell_b] == stamp_val_;
      if (ain == bin) continue;
      // boundary edges are discovered exactly once, via their inside cell
      if ((ain ? f.cell_a : f.cell_b) == cid) out.push_back(fi);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> Subdivision::output_of(int eid) const {
  std::vector<int> out = input_of(eid);
  const TransparentEdge& e = edges_[eid];
  if (!e.spoke) {
    for (int cid : {e.cell_a, e.cell_b}) {
      for (int k = cell_regions_off_[cid]; k < cell_regions_off_[cid + 1]; ++k) {
        const int gi = cell_regions_[k];
        if (gi != eid && on_region_boundary(eid, gi)) out.push_back(gi);
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void Subdivision::obstacles_in(const BBox& box, std::vector<std::size_t>& out) const {
  obstacle_tree_.query_box(box, out);
}

std::vector<int> Subdivision::edges_at_vpoint(int vp) const {
  std::vector<int> out;
  const Point p = vpoints_[vp];
  const double eps = 1e-12 * (1.0 + std::abs(p.x) + std::abs(p.y));
  for (const auto& e : edges_)
    if (e.vpoint == vp && (dist(e.seg.a, p) < eps || dist(e.seg.b, p) < eps))
      out.push_back(e.id);
  return out;
}

namespace {

PropertyReport verify_impl(const Subdivision& sub, const VisibilityOracle* oracle) {
  PropertyReport rep;
  const auto& cells = sub.cells();
  const auto& edges = sub.edges();
  const auto& vp = sub.v_points();
  auto witness = [&](bool& flag, const std::string& prop, const std::string& detail, int e = -1,
                     int f = -1, int c = -1) {
    flag = false;
    if (rep.witnesses.size() < 64) rep.witnesses.push_back({prop, detail, e, f, c});
  };

  // (1)/(3): every non-root node partitions its parent into four squares
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const SubCell& c = cells[i];
    if (c.size <= 0) witness(rep.cells_shape_ok, "cell-shape", "non-positive size", -1, -1,
                             static_cast<int>(i));
    if (!c.leaf()) {
      for (int k = 0; k < 4; ++k) {
        const SubCell& ch = cells[c.children[k]];
        if (ch.size != 0.5 * c.size || ch.parent != static_cast<int>(i))
          witness(rep.cells_shape_ok, "cell-shape", "child not a half-size quadrant", -1, -1,
                  static_cast<int>(i));
      }
    }
  }

  // (2): at most one point of V per leaf, and every point is in its leaf
  std::vector<int> seen(vp.size(), -1);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const SubCell& c = cells[i];
    if (!c.leaf() || c.vpoint < 0) continue;
    if (seen[c.vpoint] >= 0)
      witness(rep.cell_vertex_ok, "cell-vertex", "V point attached to two leaves", -1, -1,
              static_cast<int>(i));
    seen[c.vpoint] = static_cast<int>(i);
    if (!c.box().contains(vp[c.vpoint]))
      witness(rep.cell_vertex_ok, "cell-vertex", "V point outside its leaf", -1, -1,
              static_cast<int>(i));
  }
  for (std::size_t v = 0; v < vp.size(); ++v)
    if (seen[v] < 0)
      witness(rep.cell_vertex_ok, "cell-vertex", "V point not attached to any leaf");

  // (4): every point of V is an endpoint of some transparent edge
  for (std::size_t v = 0; v < vp.size(); ++v)
    if (sub.edges_at_vpoint(static_cast<int>(v)).empty())
      witness(rep.vertex_incident_ok, "vertex-incident", "V point without incident edge");

  // (5): well-covering — size cap, containment, single V point, clearance
  std::vector<std::vector<int>> inputs(edges.size());
  for (const auto& e : edges) inputs[e.id] = sub.input_of(e.id);
  for (const auto& e : edges) {
    if (static_cast<int>(e.ucells.size()) > Subdivision::kMaxUCells)
      witness(rep.well_covering_ok, "well-covering", "region exceeds cell cap", e.id);
    int nv = 0;
    for (int cid : e.ucells)
      if (cells[cid].vpoint >= 0) ++nv;
    if (nv > 1)
      witness(rep.well_covering_ok, "well-covering", "two V points in one region", e.id);
    for (double t : {0.0, 0.5, 1.0}) {
      const Point q = e.seg.at(t);
      bool inside = false;
      for (int cid : e.ucells)
        if (cells[cid].box().contains(q)) inside = true;
      if (!inside)
        witness(rep.well_covering_ok, "well-covering", "edge escapes its region", e.id);
    }
    for (int fi : inputs[e.id]) {
      const TransparentEdge& f = edges[fi];
      const double need = 2.0 * std::max(e.len, f.len);
      const double de = dist_segment_segment(e.seg, f.seg);
      if (de * (1.0 + 1e-9) >= need) continue;  // Euclidean lower bound suffices
      double dg = de;
      if (oracle) dg = oracle->segment_geodesic_distance(e.seg, f.seg);
      if (dg * (1.0 + 1e-9) < need)
        witness(rep.well_covering_ok, "well-covering", "clearance below 2*max(|e|,|f|)", e.id,
                fi);
    }
  }

  // duality of input/output, against an independently built reverse index
  std::vector<std::set<int>> expect(edges.size());
  for (const auto& e : edges) {
    expect[e.id].insert(inputs[e.id].begin(), inputs[e.id].end());
    for (int gi : inputs[e.id]) expect[gi];  // ensure entry
  }
  for (const auto& g : edges)
    for (int ei : inputs[g.id]) expect[ei].insert(g.id);
  for (const auto& e : edges) {
    const std::vector<int> got = sub.output_of(e.id);
    if (std::vector<int>(expect[e.id].begin(), expect[e.id].end()) != got)
      witness(rep.duality_ok, "duality", "output(e) != input(e) U {g : e in input(g)}", e.id);
  }
  return rep;
}

}  // namespace

PropertyReport verify_properties(const Subdivision& sub, const VisibilityOracle& oracle) {
  return verify_impl(sub, &oracle);
}

PropertyReport verify_properties_euclidean(const Subdivision& sub) {
  return verify_impl(sub, nullptr);
}

}  // namespace spmx
