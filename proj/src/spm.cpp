#include "spmx/spm.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <cmath>
#include <map>
#include <mutex>
#include <set>
#include <thread>
#include <tuple>
#include <unordered_map>

#include "spmx/visibility.hpp"

namespace spmx {

namespace {

// chord flattening tolerance for conic arcs (relative to chord length)
constexpr double kChordTol = 0.005;
// deterministic label tie-break: arrival + kTiePerturb * generator id
constexpr double kTiePerturb = 1e-13;

struct GenKey {
  double x, y, w;
  bool operator<(const GenKey& o) const {
    return std::tie(w, x, y) < std::tie(o.w, o.x, o.y);
  }
};

// One traced bisector arc inside a cell.
struct Arc {
  int gu = -1, gv = -1;                 // labels left/right of pts direction
  std::vector<Point> pts;               // first/last are the arc endpoints
  SpmVertex::Kind ka = SpmVertex::kJoint, kb = SpmVertex::kJoint;
  double ra = 0.0, rb = 0.0;            // endpoint residuals
  int obs_a = -1, obs_b = -1;           // obstacle segment hit at endpoint
};

struct CutPoint {
  double theta = 0.0;
  Point p;
  SpmVertex::Kind kind = SpmVertex::kJoint;
  double residual = 0.0;
  int obs = -1;    // obstacle segment index for kObstacleHit
  int third = -1;  // third generator for kTriple
};

}  // namespace

std::vector<ActiveRegion> compute_active_regions(const Subdivision& sub,
                                                 const std::vector<MarkRecord>& marks) {
  std::map<int, ActiveRegion> per_cell;
  for (const MarkRecord& m : marks) {
    if (m.cell < 0) continue;
    ActiveRegion& r = per_cell[m.cell];
    r.cell = m.cell;
    bool seen = false;
    for (const auto& g : r.gens)
      if (g.same_wavelet(m.gen)) seen = true;
    if (!seen) r.gens.push_back(m.gen);
    r.active = true;  // every mark carries a marked claimant
  }
  std::vector<ActiveRegion> out;
  out.reserve(per_cell.size());
  for (auto& [cid, r] : per_cell) {
    std::sort(r.gens.begin(), r.gens.end(), [](const WeightedGenerator& a, const WeightedGenerator& b) {
      return std::tie(a.weight, a.site.x, a.site.y) < std::tie(b.weight, b.site.x, b.site.y);
    });
    out.push_back(std::move(r));
  }
  (void)sub;
  return out;
}

std::vector<WeightedGenerator> restore_wavefront(const std::vector<MarkRecord>& marks, int eid,
                                                 int side) {
  std::vector<const MarkRecord*> claims;
  for (const MarkRecord& m : marks)
    if (m.edge == eid && m.side == side && m.origin != MarkRecord::kNeighbor) claims.push_back(&m);
  std::sort(claims.begin(), claims.end(), [](const MarkRecord* a, const MarkRecord* b) {
    return std::tie(a->lo, a->hi) < std::tie(b->lo, b->hi);
  });
  std::vector<WeightedGenerator> out;
  for (const MarkRecord* m : claims) {
    bool dup = false;
    for (const auto& g : out)
      if (g.same_wavelet(m->gen)) dup = true;
    if (!dup) out.push_back(m->gen);
  }
  return out;
}

namespace {

class Builder {
 public:
  Builder(const Subdivision& sub, const RunResult& run, const SpmBuildOptions& opt)
      : sub_(sub), inst_(sub.instance()), run_(run), opt_(opt) {}

  ShortestPathMap build();

 private:
  const Subdivision& sub_;
  const Instance& inst_;
  const RunResult& run_;
  SpmBuildOptions opt_;
  ShortestPathMap spm_;
  double merge_tol_ = 1e-7;
  BBox frame_;

  std::vector<std::vector<std::pair<int, int>>> cell_pairs_;
  std::vector<std::vector<Arc>> cell_arcs_;  // indexed by leaf cell id

  void build_generators();
  void build_cell_pairs();
  void process_cell(int cid);
  void trace_pair(int cid, int i, int j, std::vector<std::pair<int, int>>& discovered);
  int label(const Point& p) const;
  bool fast_sight(const Point& a, const Point& b) const {
    return !sub_.obstacle_tree().blocked(Segment(a, b));
  }
  bool in_cell_halfopen(int cid, const Point& p) const;
  void flatten_arc(const Bisector& b, const Point& pa, const Point& pb, double ta, double tb,
                   std::vector<Point>& out) const;
  void assemble();
};

void Builder::build_generators() {
  std::map<GenKey, int> ids;
  auto add = [&](const WeightedGenerator& g) {
    if (g.artificial) return;
    ids.emplace(GenKey{g.site.x, g.site.y, g.weight}, 0);
  };
  for (const MarkRecord& m : run_.marks) add(m.gen);
  const auto& vps = sub_.v_points();
  for (std::size_t i = 0; i < vps.size(); ++i)
    if (std::isfinite(run_.vertex_dist[i]))
      add(WeightedGenerator(vps[i], run_.vertex_dist[i]));
  int next = 0;
  for (auto& [k, id] : ids) id = next++;  // deterministic: sorted by (weight, x, y)
  spm_.gens.resize(ids.size());
  for (const auto& [k, id] : ids) spm_.gens[id] = WeightedGenerator(Point{k.x, k.y}, k.w);
  spm_.source_gen = ids.at(GenKey{inst_.source.x, inst_.source.y, 0.0});

  // per-cell candidate labels
  spm_.cell_gens.assign(sub_.cells().size(), {});
  auto gen_id = [&](const WeightedGenerator& g) -> int {
    auto it = ids.find(GenKey{g.site.x, g.site.y, g.weight});
    return it == ids.end() ? -1 : it->second;
  };
  for (const MarkRecord& m : run_.marks) {
    if (m.gen.artificial || m.cell < 0) continue;
    spm_.cell_gens[m.cell].push_back(gen_id(m.gen));
  }
  for (std::size_t cid = 0; cid < sub_.cells().size(); ++cid) {
    const SubCell& c = sub_.cells()[cid];
    if (!c.leaf()) continue;
    if (c.vpoint >= 0 && std::isfinite(run_.vertex_dist[c.vpoint]))
      spm_.cell_gens[cid].push_back(
          gen_id(WeightedGenerator(vps[c.vpoint], run_.vertex_dist[c.vpoint])));
    auto& v = spm_.cell_gens[cid];
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    if (!v.empty() && v.front() < 0) v.erase(v.begin());
  }
}

void Builder::build_cell_pairs() {
  cell_pairs_.assign(sub_.cells().size(), {});
  // claimants per (edge, side), ordered along the edge
  std::map<std::pair<int, int>, std::vector<std::pair<double, int>>> per_edge;
  std::map<GenKey, int> ids;
  for (std::size_t i = 0; i < spm_.gens.size(); ++i) {
    const auto& g = spm_.gens[i];
    ids.emplace(GenKey{g.site.x, g.site.y, g.weight}, static_cast<int>(i));
  }
  for (const MarkRecord& m : run_.marks) {
    if (m.gen.artificial || m.origin == MarkRecord::kNeighbor) continue;
    auto it = ids.find(GenKey{m.gen.site.x, m.gen.site.y, m.gen.weight});
    if (it == ids.end()) continue;
    per_edge[{m.edge, m.side}].push_back({m.lo, it->second});
  }
  auto add_pair = [&](int cid, int a, int b) {
    if (a == b || a < 0 || b < 0 || cid < 0) return;
    cell_pairs_[cid].push_back({std::min(a, b), std::max(a, b)});
  };
  for (auto& [key, claims] : per_edge) {
    std::sort(claims.begin(), claims.end());
    claims.erase(std::unique(claims.begin(), claims.end()), claims.end());
    const TransparentEdge& e = sub_.edges()[key.first];
    for (std::size_t i = 0; i < claims.size(); ++i)
      for (std::size_t j = i + 1; j < claims.size(); ++j)
        for (int cid : {e.cell_a, e.cell_b}) add_pair(cid, claims[i].second, claims[j].second);
  }
  // a settled cell vertex competes with every other candidate of its cell
  for (std::size_t cid = 0; cid < sub_.cells().size(); ++cid) {
    const SubCell& c = sub_.cells()[cid];
    if (!c.leaf() || c.vpoint < 0 || !std::isfinite(run_.vertex_dist[c.vpoint])) continue;
    auto it = ids.find(GenKey{sub_.v_points()[c.vpoint].x, sub_.v_points()[c.vpoint].y,
                              run_.vertex_dist[c.vpoint]});
    if (it == ids.end()) continue;
    for (int g : spm_.cell_gens[cid]) add_pair(static_cast<int>(cid), it->second, g);
  }
  for (auto& v : cell_pairs_) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
}

int Builder::label(const Point& p) const {
  const int cid = sub_.locate_leaf(p);
  if (cid < 0) return -1;
  int best = -1;
  double bestv = std::numeric_limits<double>::infinity();
  for (int g : spm_.cell_gens[cid]) {
    const WeightedGenerator& gen = spm_.gens[g];
    const double v = gen.arrival(p) + kTiePerturb * g;
    if (v < bestv && fast_sight(gen.site, p)) {
      bestv = v;
      best = g;
    }
  }
  return best;
}

bool Builder::in_cell_halfopen(int cid, const Point& p) const {
  // Tiling rule for arcs riding exactly on a shared cell boundary: the cell
  // on the high side owns them, so each such arc is traced exactly once.
  const SubCell& c = sub_.cells()[cid];
  const double tol = 1e-9 * sub_.root_size();
  const bool hix = c.x0 + c.size >= frame_.x1 - tol;  // frame-adjacent sides stay closed
  const bool hiy = c.y0 + c.size >= frame_.y1 - tol;
  if (p.x < c.x0 - tol || p.y < c.y0 - tol) return false;
  if (p.x >= c.x0 + c.size + (hix ? tol : -tol)) return false;
  if (p.y >= c.y0 + c.size + (hiy ? tol : -tol)) return false;
  return true;
}

void Builder::flatten_arc(const Bisector& b, const Point& pa, const Point& pb, double ta,
                          double tb, std::vector<Point>& out) const {
  // recursive chord subdivision against the true conic
  const Point pm = b.at(0.5 * (ta + tb));
  const double chord = dist(pa, pb);
  if (chord < merge_tol_ || dist_point_segment(pm, Segment(pa, pb)) <= kChordTol * chord) {
    out.push_back(pb);
    return;
  }
  flatten_arc(b, pa, pm, ta, 0.5 * (ta + tb), out);
  flatten_arc(b, pm, pb, 0.5 * (ta + tb), tb, out);
}

void Builder::trace_pair(int cid, int i, int j, std::vector<std::pair<int, int>>& discovered) {
  const SubCell& c = sub_.cells()[cid];
  const WeightedGenerator& gi = spm_.gens[i];
  const WeightedGenerator& gj = spm_.gens[j];
  Bisector bij(gi, gj);
  if (bij.empty_locus()) return;

  const BBox box = c.box();
  const Point corners[4] = {{box.x0, box.y0}, {box.x1, box.y0}, {box.x1, box.y1}, {box.x0, box.y1}};
  const Point cm{0.5 * (gi.site.x + gj.site.x), 0.5 * (gi.site.y + gj.site.y)};
  double R = 0.0;
  for (const Point& q : corners) R = std::max(R, dist(cm, q));
  R = 2.0 * R + c.size;
  const double T = bij.theta_bound(R) + 1.0;
  const double in_tol = 1e-9 * sub_.root_size();

  std::vector<CutPoint> cuts;
  auto near_box = [&](const Point& p) {
    return p.x >= box.x0 - in_tol && p.x <= box.x1 + in_tol && p.y >= box.y0 - in_tol &&
           p.y <= box.y1 + in_tol;
  };
  // cell sides
  const bool on_frame[4] = {box.y0 <= frame_.y0 + in_tol, box.x1 >= frame_.x1 - in_tol,
                            box.y1 >= frame_.y1 - in_tol, box.x0 <= frame_.x0 + in_tol};
  for (int s = 0; s < 4; ++s) {
    const Segment side(corners[s], corners[(s + 1) % 4]);
    for (const Point& p : bisector_segment_intersection(bij, side)) {
      CutPoint cp;
      cp.theta = bij.theta_of(p);
      cp.p = p;
      cp.kind = on_frame[s] ? SpmVertex::kFrameHit : SpmVertex::kJoint;
      cp.residual = std::abs(bij.residual(p));
      cuts.push_back(cp);
    }
  }
  // obstacle edges overlapping the cell
  std::vector<std::size_t> obs;
  BBox obox = box;
  obox.inflate(in_tol);
  sub_.obstacles_in(obox, obs);
  for (std::size_t oi : obs) {
    const Segment& w = sub_.obstacle_tree().segment(oi);
    for (const Point& p : bisector_segment_intersection(bij, w)) {
      if (!near_box(p)) continue;
      CutPoint cp;
      cp.theta = bij.theta_of(p);
      cp.p = p;
      cp.kind = SpmVertex::kObstacleHit;
      cp.residual = std::abs(bij.residual(p));
      cp.obs = static_cast<int>(oi);
      cuts.push_back(cp);
    }
  }
  // triple candidates against every other cell label
  for (int k : spm_.cell_gens[cid]) {
    if (k == i || k == j) continue;
    Bisector bik(gi, spm_.gens[k]);
    if (bik.empty_locus()) continue;
    std::vector<Point> pts;
    try {
      pts = bisector_bisector_intersection(bij, bik, R);
    } catch (const DegenerateOverlapError&) {
      continue;
    }
    for (const Point& p : pts) {
      if (!near_box(p)) continue;
      CutPoint cp;
      cp.theta = bij.theta_of(p);
      cp.p = p;
      cp.kind = SpmVertex::kTriple;
      cp.residual = std::max(std::abs(bij.residual(p)), std::abs(bik.residual(p)));
      cp.third = k;
      cuts.push_back(cp);
    }
  }

  if (bij.is_ray()) {
    // the ray's apex is the nearer generator site (an obstacle corner)
    CutPoint cp;
    cp.theta = 0.0;
    cp.p = bij.at(0.0);
    cp.kind = SpmVertex::kCorner;
    cuts.push_back(cp);
  }
  std::sort(cuts.begin(), cuts.end(),
            [](const CutPoint& a, const CutPoint& b) { return a.theta < b.theta; });
  // merge cuts that landed on the same point; structural kinds win
  std::vector<CutPoint> merged;
  for (const CutPoint& cp : cuts) {
    if (!merged.empty() && dist(merged.back().p, cp.p) <= merge_tol_) {
      CutPoint& prev = merged.back();
      if (cp.kind < prev.kind) {  // kTriple < kObstacleHit < kFrameHit < kJoint
        const double r = std::max(prev.residual, cp.residual);
        prev = cp;
        prev.residual = r;
      }
      continue;
    }
    merged.push_back(cp);
  }
  if (merged.empty()) return;

  const double probe = std::max(1e-7 * c.size, 4.0 * in_tol);
  std::vector<double> bounds;
  bounds.push_back(bij.is_ray() ? 0.0 : -T);
  for (const CutPoint& cp : merged) bounds.push_back(cp.theta);
  bounds.push_back(T);
  std::sort(bounds.begin(), bounds.end());

  for (std::size_t bi = 0; bi + 1 < bounds.size(); ++bi) {
    const double ta = bounds[bi], tb = bounds[bi + 1];
    if (tb - ta <= 1e-12) continue;
    const double tm = 0.5 * (ta + tb);
    const Point pm = bij.at(tm);
    if (!in_cell_halfopen(cid, pm)) continue;
    if (inst_.inside_obstacle(pm)) continue;
    // the two sides of the arc must be claimed by exactly this pair
    const Point pm2 = bij.at(tm + 1e-6 * (tb - ta));
    Point tang = pm2 - pm;
    const double tl = norm(tang);
    if (tl <= 0) continue;
    tang = tang * (1.0 / tl);
    const Point nrm{-tang.y, tang.x};
    const int la = label(pm + nrm * probe);
    const int lb = label(pm - nrm * probe);
    if (!((la == i && lb == j) || (la == j && lb == i))) continue;

    // locate endpoint cuts
    auto cut_at = [&](double t) -> const CutPoint* {
      for (const CutPoint& cp : merged)
        if (std::abs(cp.theta - t) <= 1e-12 * (1.0 + std::abs(t))) return &cp;
      return nullptr;
    };
    const CutPoint* ca = cut_at(ta);
    const CutPoint* cb = cut_at(tb);
    if (!ca || !cb) continue;  // dangling at the search window: outside the cell

    Arc arc;
    arc.gu = la;  // left of pts direction
    arc.gv = lb;
    arc.ka = ca->kind;
    arc.kb = cb->kind;
    arc.ra = ca->residual;
    arc.rb = cb->residual;
    arc.obs_a = ca->obs;
    arc.obs_b = cb->obs;
    arc.pts.push_back(ca->p);
    flatten_arc(bij, ca->p, cb->p, ta, tb, arc.pts);
    cell_arcs_[cid].push_back(std::move(arc));

    if (ca->kind == SpmVertex::kTriple && ca->third >= 0) {
      discovered.push_back({std::min(i, ca->third), std::max(i, ca->third)});
      discovered.push_back({std::min(j, ca->third), std::max(j, ca->third)});
    }
    if (cb->kind == SpmVertex::kTriple && cb->third >= 0) {
      discovered.push_back({std::min(i, cb->third), std::max(i, cb->third)});
      discovered.push_back({std::min(j, cb->third), std::max(j, cb->third)});
    }
  }
}

void Builder::process_cell(int cid) {
  std::vector<std::pair<int, int>> todo = cell_pairs_[cid];
  std::set<std::pair<int, int>> done;
  while (!todo.empty()) {
    const auto pr = todo.back();
    todo.pop_back();
    if (!done.insert(pr).second) continue;
    std::vector<std::pair<int, int>> discovered;
    trace_pair(cid, pr.first, pr.second, discovered);
    for (const auto& d : discovered) todo.push_back(d);
  }
}

// ---------------------------------------------------------------------------
// assembly: vertex merging, edge graph, face loops

namespace assembly {

struct VertexPool {
  double tol;
  std::unordered_map<std::int64_t, std::vector<int>> grid;
  std::vector<SpmVertex>* verts;

  std::int64_t key(double x, double y) const {
    const auto qx = static_cast<std::int64_t>(std::floor(x / tol));
    const auto qy = static_cast<std::int64_t>(std::floor(y / tol));
    return qx * 0x100000001LL + qy;
  }
  int find_or_add(const Point& p, SpmVertex::Kind kind, double residual) {
    const auto qx = static_cast<std::int64_t>(std::floor(p.x / tol));
    const auto qy = static_cast<std::int64_t>(std::floor(p.y / tol));
    for (std::int64_t dx = -1; dx <= 1; ++dx)
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        auto it = grid.find((qx + dx) * 0x100000001LL + (qy + dy));
        if (it == grid.end()) continue;
        for (int id : it->second)
          if (dist((*verts)[id].p, p) <= tol) {
            SpmVertex& v = (*verts)[id];
            if (kind < v.kind) v.kind = kind;  // structural kinds take precedence
            v.residual = std::max(v.residual, residual);
            return id;
          }
      }
    const int id = static_cast<int>(verts->size());
    verts->push_back(SpmVertex{p, kind, residual});
    grid[qx * 0x100000001LL + qy].push_back(id);
    return id;
  }
};

struct Half {
  int edge = -1;
  bool fwd = true;  // traverses edge pts in stored order
  int origin = -1, head = -1;
  double angle = 0.0;  // initial direction at origin
  int next = -1;
  int face = -1;
  int gen_left = -3;  // label on the left while traversing (-3: unknown)
};

}  // namespace assembly

void Builder::assemble() {
  using assembly::Half;
  using assembly::VertexPool;

  VertexPool pool{merge_tol_, {}, &spm_.vertices};

  // obstacle corners first so arc endpoints landing on them merge in
  const auto& tree = sub_.obstacle_tree();
  for (const auto& poly : inst_.obstacles)
    for (const auto& v : poly.vertices) pool.find_or_add(v, SpmVertex::kCorner, 0.0);
  const Point fr[4] = {{frame_.x0, frame_.y0}, {frame_.x1, frame_.y0},
                       {frame_.x1, frame_.y1}, {frame_.x0, frame_.y1}};
  int frame_corner[4];
  for (int s = 0; s < 4; ++s) frame_corner[s] = pool.find_or_add(fr[s], SpmVertex::kCorner, 0.0);

  // bisector edges from the traced arcs
  struct PendingSplit {
    int seg = -1;  // obstacle segment index
    int vertex = -1;
  };
  std::vector<PendingSplit> obs_splits;
  std::vector<std::pair<int, int>> frame_splits;  // (side, vertex)

  auto frame_side_of = [&](const Point& p) -> int {
    const double tol = 4.0 * merge_tol_;
    if (std::abs(p.y - frame_.y0) <= tol) return 0;
    if (std::abs(p.x - frame_.x1) <= tol) return 1;
    if (std::abs(p.y - frame_.y1) <= tol) return 2;
    if (std::abs(p.x - frame_.x0) <= tol) return 3;
    return -1;
  };

  for (const auto& arcs : cell_arcs_)
    for (const Arc& a : arcs) {
      SpmEdge e;
      e.type = SpmEdge::kBisector;
      e.gen_u = a.gu;
      e.gen_v = a.gv;
      e.pts = a.pts;
      e.va = pool.find_or_add(a.pts.front(), a.ka, a.ra);
      e.vb = pool.find_or_add(a.pts.back(), a.kb, a.rb);
      if (e.va == e.vb && dist(a.pts.front(), a.pts.back()) <= merge_tol_ && a.pts.size() <= 2)
        continue;  // digest: degenerate sliver
      if (a.ka == SpmVertex::kObstacleHit && a.obs_a >= 0)
        obs_splits.push_back({a.obs_a, e.va});
      if (a.kb == SpmVertex::kObstacleHit && a.obs_b >= 0)
        obs_splits.push_back({a.obs_b, e.vb});
      if (a.ka == SpmVertex::kFrameHit) frame_splits.push_back({frame_side_of(a.pts.front()), e.va});
      if (a.kb == SpmVertex::kFrameHit) frame_splits.push_back({frame_side_of(a.pts.back()), e.vb});
      spm_.edges.push_back(std::move(e));
    }

  // obstacle boundary fragments, split at bisector hits
  std::vector<std::vector<int>> splits_per_seg(tree.size());
  for (const PendingSplit& s : obs_splits)
    if (s.seg >= 0) splits_per_seg[static_cast<std::size_t>(s.seg)].push_back(s.vertex);
  for (std::size_t si = 0; si < tree.size(); ++si) {
    const Segment& w = tree.segment(si);
    const int va = pool.find_or_add(w.a, SpmVertex::kCorner, 0.0);
    const int vb = pool.find_or_add(w.b, SpmVertex::kCorner, 0.0);
    std::vector<std::pair<double, int>> stops{{0.0, va}, {1.0, vb}};
    for (int v : splits_per_seg[si]) {
      const double t = closest_param(w, spm_.vertices[v].p);
      stops.push_back({t, v});
    }
    std::sort(stops.begin(), stops.end());
    for (std::size_t k = 0; k + 1 < stops.size(); ++k) {
      if (stops[k].second == stops[k + 1].second) continue;
      SpmEdge e;
      e.type = SpmEdge::kObstacle;
      e.va = stops[k].second;
      e.vb = stops[k + 1].second;
      e.pts = {spm_.vertices[e.va].p, spm_.vertices[e.vb].p};
      spm_.edges.push_back(std::move(e));
    }
  }

  // frame fragments, split at bisector hits
  for (int s = 0; s < 4; ++s) {
    const Segment side(fr[s], fr[(s + 1) % 4]);
    std::vector<std::pair<double, int>> stops{{0.0, frame_corner[s]},
                                              {1.0, frame_corner[(s + 1) % 4]}};
    for (const auto& [fside, v] : frame_splits)
      if (fside == s) stops.push_back({closest_param(side, spm_.vertices[v].p), v});
    std::sort(stops.begin(), stops.end());
    for (std::size_t k = 0; k + 1 < stops.size(); ++k) {
      if (stops[k].second == stops[k + 1].second) continue;
      SpmEdge e;
      e.type = SpmEdge::kFrame;
      e.va = stops[k].second;
      e.vb = stops[k + 1].second;
      e.pts = {spm_.vertices[e.va].p, spm_.vertices[e.vb].p};
      spm_.edges.push_back(std::move(e));
    }
  }

  // half-edge structure
  std::vector<Half> halves;
  halves.reserve(2 * spm_.edges.size());
  auto dir_angle = [&](const SpmEdge& e, bool fwd) {
    const auto& pts = e.pts;
    Point a = fwd ? pts.front() : pts.back();
    Point b = a;
    if (fwd) {
      for (std::size_t k = 1; k < pts.size() && dist(a, b) <= merge_tol_; ++k) b = pts[k];
    } else {
      for (std::size_t k = pts.size() - 1; k-- > 0 && dist(a, b) <= merge_tol_;) b = pts[k];
    }
    return std::atan2(b.y - a.y, b.x - a.x);
  };
  for (std::size_t ei = 0; ei < spm_.edges.size(); ++ei) {
    const SpmEdge& e = spm_.edges[ei];
    Half h1, h2;
    h1.edge = h2.edge = static_cast<int>(ei);
    h1.fwd = true;
    h2.fwd = false;
    h1.origin = e.va;
    h1.head = e.vb;
    h2.origin = e.vb;
    h2.head = e.va;
    h1.angle = dir_angle(e, true);
    h2.angle = dir_angle(e, false);
    if (e.type == SpmEdge::kBisector) {
      h1.gen_left = e.gen_u;
      h2.gen_left = e.gen_v;
    }
    halves.push_back(h1);
    halves.push_back(h2);
  }
  // obstacle halves: interior side labeled -1; frame halves: exterior side -2
  for (std::size_t ei = 0; ei < spm_.edges.size(); ++ei) {
    const SpmEdge& e = spm_.edges[ei];
    if (e.type == SpmEdge::kBisector) continue;
    const Point a = e.pts.front(), b = e.pts.back();
    const Point mid{0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
    Point nrm{-(b.y - a.y), b.x - a.x};
    const double nl = norm(nrm);
    if (nl <= 0) continue;
    nrm = nrm * (1.0 / nl);
    const double step = std::max(8.0 * merge_tol_, 1e-7 * dist(a, b));
    const Point left = mid + nrm * step;
    const Point right = mid - nrm * step;
    const int tag = (e.type == SpmEdge::kObstacle) ? -1 : -2;
    const bool left_in = (e.type == SpmEdge::kObstacle) ? inst_.inside_obstacle(left)
                                                        : !frame_.contains(left);
    halves[2 * ei].gen_left = left_in ? tag : label(left);
    halves[2 * ei + 1].gen_left = left_in ? label(right) : tag;
  }

  // angular order around each vertex; next(h) = cw-successor of twin(h)
  std::vector<std::vector<int>> out_at(spm_.vertices.size());
  for (std::size_t hi = 0; hi < halves.size(); ++hi)
    out_at[static_cast<std::size_t>(halves[hi].origin)].push_back(static_cast<int>(hi));
  for (auto& v : out_at)
    std::sort(v.begin(), v.end(),
              [&](int a, int b) { return halves[a].angle < halves[b].angle; });
  for (std::size_t hi = 0; hi < halves.size(); ++hi) {
    const int twin = static_cast<int>(hi ^ 1);
    const auto& ring = out_at[static_cast<std::size_t>(halves[hi].head)];
    const std::size_t n = ring.size();
    std::size_t pos = 0;
    while (pos < n && ring[pos] != twin) ++pos;
    if (pos == n) throw AssemblyError("half-edge ring missing twin");
    halves[hi].next = ring[(pos + n - 1) % n];  // ccw-predecessor = cw-successor
  }

  // face loops
  struct Loop {
    std::vector<int> halves;
    double area = 0.0;
    int label = -3;
    Point inner;  // a point just inside (left of) the loop
  };
  std::vector<Loop> loops;
  std::vector<int> loop_of(halves.size(), -1);
  for (std::size_t start = 0; start < halves.size(); ++start) {
    if (loop_of[start] >= 0) continue;
    Loop lp;
    int h = static_cast<int>(start);
    std::size_t guard = 0;
    do {
      loop_of[h] = static_cast<int>(loops.size());
      lp.halves.push_back(h);
      h = halves[h].next;
      if (++guard > halves.size()) throw AssemblyError("face loop failed to close");
    } while (h != static_cast<int>(start));
    // signed area over the flattened geometry
    double area = 0.0;
    for (int hh : lp.halves) {
      const SpmEdge& e = spm_.edges[halves[hh].edge];
      if (halves[hh].fwd) {
        for (std::size_t k = 0; k + 1 < e.pts.size(); ++k)
          area += cross(e.pts[k], e.pts[k + 1]);
      } else {
        for (std::size_t k = e.pts.size(); k-- > 1;) area += cross(e.pts[k], e.pts[k - 1]);
      }
    }
    lp.area = 0.5 * area;
    // label from any half that knows its left side
    for (int hh : lp.halves)
      if (halves[hh].gen_left != -3) {
        lp.label = halves[hh].gen_left;
        break;
      }
    loops.push_back(std::move(lp));
  }

  // group hole loops (negative area) under the positive loop that contains them
  auto ring_points = [&](const Loop& lp) {
    std::vector<Point> pts;
    for (int hh : lp.halves) {
      const SpmEdge& e = spm_.edges[halves[hh].edge];
      if (halves[hh].fwd)
        pts.insert(pts.end(), e.pts.begin(), e.pts.end() - 1);
      else
        pts.insert(pts.end(), e.pts.rbegin(), e.pts.rend() - 1);
    }
    return pts;
  };
  auto inside_ring = [](const std::vector<Point>& ring, const Point& p) {
    bool in = false;
    for (std::size_t k = 0, j = ring.size() - 1; k < ring.size(); j = k++) {
      const Point& a = ring[j];
      const Point& b = ring[k];
      if ((b.y > p.y) != (a.y > p.y) &&
          p.x < (a.x - b.x) * (p.y - b.y) / (a.y - b.y) + b.x)
        in = !in;
    }
    return in;
  };

  std::vector<std::vector<Point>> loop_pts(loops.size());
  for (std::size_t li = 0; li < loops.size(); ++li) loop_pts[li] = ring_points(loops[li]);
  // representative interior point per loop: offset left of its longest segment
  for (auto& lp : loops) {
    double bestlen = -1.0;
    for (int hh : lp.halves) {
      const SpmEdge& e = spm_.edges[halves[hh].edge];
      for (std::size_t k = 0; k + 1 < e.pts.size(); ++k) {
        Point a = e.pts[k], b = e.pts[k + 1];
        if (!halves[hh].fwd) std::swap(a, b);
        const double len = dist(a, b);
        if (len > bestlen) {
          bestlen = len;
          Point n{-(b.y - a.y), b.x - a.x};
          n = n * (1.0 / len);
          lp.inner = Point{0.5 * (a.x + b.x), 0.5 * (a.y + b.y)} + n * std::min(0.25 * len, 16.0 * merge_tol_);
        }
      }
    }
  }

  std::vector<int> parent(loops.size(), -1);  // hole loop -> containing positive loop
  for (std::size_t li = 0; li < loops.size(); ++li) {
    if (loops[li].area >= 0) continue;
    double best_area = std::numeric_limits<double>::infinity();
    for (std::size_t pj = 0; pj < loops.size(); ++pj) {
      if (loops[pj].area <= 0 || pj == li) continue;
      if (loops[pj].area < best_area && inside_ring(loop_pts[pj], loops[li].inner)) {
        best_area = loops[pj].area;
        parent[li] = static_cast<int>(pj);
      }
    }
  }

  // faces: one per positive loop, holes attached; the orphan negative loop is
  // the outer face
  std::vector<int> face_of_loop(loops.size(), -1);
  for (std::size_t li = 0; li < loops.size(); ++li) {
    if (loops[li].area <= 0) continue;
    SpmFace f;
    f.gen = loops[li].label;
    if (f.gen >= 0) {
      f.site = spm_.gens[f.gen].site;
      f.weight = spm_.gens[f.gen].weight;
    }
    face_of_loop[li] = static_cast<int>(spm_.faces.size());
    spm_.faces.push_back(std::move(f));
  }
  int outer_face = -2;
  for (std::size_t li = 0; li < loops.size(); ++li) {
    const int target = loops[li].area > 0 ? face_of_loop[li]
                       : parent[li] >= 0  ? face_of_loop[static_cast<std::size_t>(parent[li])]
                                          : outer_face;
    if (target < 0) continue;  // outer face: not materialized
    SpmFace& f = spm_.faces[static_cast<std::size_t>(target)];
    std::vector<int> ring_ids;
    for (int hh : loops[li].halves) ring_ids.push_back(halves[hh].origin);
    if (loops[li].area > 0) {
      f.loops.insert(f.loops.begin(), ring_ids);
      f.rings.insert(f.rings.begin(), loop_pts[li]);
    } else {
      f.loops.push_back(ring_ids);
      f.rings.push_back(loop_pts[li]);
      if (f.gen == -3) f.gen = loops[li].label;  // label can come from a hole loop
    }
    for (int hh : loops[li].halves) halves[hh].face = target;
  }
  // audit counters
  spm_.euler_v = spm_.vertices.size();
  spm_.euler_e = spm_.edges.size();
  std::size_t f_free = 0;
  for (const SpmFace& f : spm_.faces)
    if (f.gen >= 0) ++f_free;
  spm_.euler_f_free = f_free;
  // connected components over the edge graph
  std::vector<int> uf(spm_.vertices.size());
  for (std::size_t k = 0; k < uf.size(); ++k) uf[k] = static_cast<int>(k);
  std::function<int(int)> find = [&](int x) { return uf[x] == x ? x : uf[x] = find(uf[x]); };
  for (const SpmEdge& e : spm_.edges) uf[find(e.va)] = find(e.vb);
  std::set<int> roots;
  for (const SpmEdge& e : spm_.edges) {
    roots.insert(find(e.va));
  }
  spm_.components = roots.size();
  spm_.holes = static_cast<int>(inst_.obstacles.size());
  const long long lhs = static_cast<long long>(spm_.euler_v) -
                        static_cast<long long>(spm_.euler_e) +
                        static_cast<long long>(spm_.euler_f_free);
  spm_.euler_ok = lhs == static_cast<long long>(spm_.components) - spm_.holes;
  for (const SpmVertex& v : spm_.vertices)
    if (v.structural()) spm_.max_vertex_residual = std::max(spm_.max_vertex_residual, v.residual);
}

ShortestPathMap Builder::build() {
  frame_ = sub_.cells()[0].box();
  spm_.frame = frame_;
  merge_tol_ = 1e-8 * std::max(1.0, sub_.root_size());
  spm_.vertex_dist = run_.vertex_dist;
  spm_.vertex_pred = run_.vertex_pred;
  build_generators();
  if (!opt_.assemble) return std::move(spm_);
  build_cell_pairs();
  cell_arcs_.assign(sub_.cells().size(), {});

  std::vector<int> work;
  for (std::size_t cid = 0; cid < sub_.cells().size(); ++cid)
    if (sub_.cells()[cid].leaf() && !cell_pairs_[cid].empty()) work.push_back(static_cast<int>(cid));
  if (opt_.parallel_cells && work.size() > 1) {
    const unsigned nt = opt_.threads > 0 ? static_cast<unsigned>(opt_.threads)
                                         : std::max(1u, std::thread::hardware_concurrency());
    std::atomic<std::size_t> cursor{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < nt; ++t)
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t k = cursor.fetch_add(1);
          if (k >= work.size()) return;
          process_cell(work[k]);
        }
      });
    for (auto& th : pool) th.join();
  } else {
    for (int cid : work) process_cell(cid);
  }
  assemble();
  return std::move(spm_);
}

}  // namespace

ShortestPathMap build_spm(const Subdivision& sub, const RunResult& run,
                          const SpmBuildOptions& opt) {
  Builder b(sub, run, opt);
  return b.build();
}

}  // namespace spmx
