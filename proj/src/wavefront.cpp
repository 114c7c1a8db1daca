#include "spmx/wavefront.hpp"
#include <cstdlib>
#include <cstdio>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <queue>
#include <stdexcept>

#include "spmx/snapshot.hpp"

namespace spmx {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kParamEps = 1e-12;

using Windows = std::vector<std::pair<double, double>>;

// Keep the part of the windows where v0 + t*(v1 - v0) >= -eps.
void clip_linear(Windows& win, double v0, double v1, double eps) {
  if (win.empty()) return;
  double lo = 0.0, hi = 1.0;
  const double dv = v1 - v0;
  if (std::abs(dv) <= eps) {
    if (v0 >= -eps && v1 >= -eps) return;  // whole range fine
    win.clear();
    return;
  }
  const double t = (-eps - v0) / dv;
  if (dv > 0) {
    lo = t;
  } else {
    hi = t;
  }
  Windows out;
  for (auto& [a, b] : win) {
    const double na = std::max(a, lo), nb = std::min(b, hi);
    if (nb - na > kParamEps) out.emplace_back(na, nb);
  }
  win.swap(out);
}

void subtract_interval(Windows& win, double s0, double s1) {
  if (win.empty() || s1 - s0 <= kParamEps) return;
  Windows out;
  for (auto& [a, b] : win) {
    if (s1 <= a + kParamEps || s0 >= b - kParamEps) {
      out.emplace_back(a, b);
      continue;
    }
    if (s0 - a > kParamEps) out.emplace_back(a, s0);
    if (b - s1 > kParamEps) out.emplace_back(s1, b);
  }
  win.swap(out);
}

// Set of params t on `g` where the segment from `u` to g(t) crosses the
// portal A..B (u strictly off the portal's line). Empty when degenerate.
Windows portal_windows(const Point& u, const Point& A, const Point& B, const Segment& g) {
  Windows win{{0.0, 1.0}};
  const double scale = dist(A, B) * (dist(u, A) + dist(u, B)) + 1e-300;
  const double eps = 1e-12 * scale;
  const double oU = orient_value(A, B, u);
  if (std::abs(oU) <= eps) return {};  // grazing: carried by endpoint wavelets
  const double su = oU > 0 ? 1.0 : -1.0;
  // beyond the portal line (opposite side from u)
  clip_linear(win, -su * orient_value(A, B, g.a), -su * orient_value(A, B, g.b), eps);
  // inside the cone u->A, u->B
  const double sa = orient_value(u, A, B) > 0 ? 1.0 : -1.0;
  clip_linear(win, sa * orient_value(u, A, g.a), sa * orient_value(u, A, g.b), eps);
  const double sb = orient_value(u, B, A) > 0 ? 1.0 : -1.0;
  clip_linear(win, sb * orient_value(u, B, g.a), sb * orient_value(u, B, g.b), eps);
  return win;
}

// Remove from `win` the params shadowed by obstacle segment w1..w2 as seen
// from `u` along `g`. `home` is a point on the wavelet's own side, used when
// `u` lies on the wall itself (e.g. an edge endpoint clipped at the wall).
void subtract_shadow(Windows& win, const Point& u, const Point& w1, const Point& w2,
                     const Segment& g, const Point& home) {
  if (win.empty()) return;
  const double wlen = dist(w1, w2);
  const double scale = wlen * (dist(u, w1) + dist(u, w2)) + 1e-300;
  const double eps = 1e-12 * scale;
  const double oU = orient_value(w1, w2, u);
  if (std::abs(oU) <= eps) {
    // on the wall's line: the interior of the wall blocks the far halfplane,
    // while grazing past an endpoint casts no shadow
    const double t = dot(u - w1, w2 - w1) / (wlen * wlen);
    const double te = 1e-9;
    if (t <= te || t >= 1.0 - te) return;
    const double oh = orient_value(w1, w2, home);
    if (std::abs(oh) <= eps) return;  // no usable side hint
    const double sh = oh > 0 ? 1.0 : -1.0;
    clip_linear(win, sh * orient_value(w1, w2, g.a), sh * orient_value(w1, w2, g.b), eps);
    return;
  }
  Windows sh{{0.0, 1.0}};
  const double su = oU > 0 ? 1.0 : -1.0;
  clip_linear(sh, -su * orient_value(w1, w2, g.a), -su * orient_value(w1, w2, g.b), eps);
  const double s1 = orient_value(u, w1, w2) > 0 ? 1.0 : -1.0;
  clip_linear(sh, s1 * orient_value(u, w1, g.a), s1 * orient_value(u, w1, g.b), eps);
  const double s2 = orient_value(u, w2, w1) > 0 ? 1.0 : -1.0;
  clip_linear(sh, s2 * orient_value(u, w2, g.a), s2 * orient_value(u, w2, g.b), eps);
  for (auto& [a, b] : sh) subtract_interval(win, a, b);
}

double min_arrival_on(const WeightedGenerator& gen, const Segment& g, const Windows& win) {
  double best = kInf;
  if (win.empty()) return best;
  const double tc = closest_param(g, gen.site);
  for (auto& [a, b] : win) {
    const double t = std::min(std::max(tc, a), b);
    best = std::min(best, gen.arrival(g.at(t)));
  }
  return best;
}

bool gen_before(const WeightedGenerator& a, const WeightedGenerator& b) {
  if (a.weight != b.weight) return a.weight < b.weight;
  if (a.site != b.site) return a.site < b.site;
  return a.artificial < b.artificial;
}

int side_index(const Segment& e, const Point& p) {
  return orient_value(e.a, e.b, p) >= 0 ? 0 : 1;
}

}  // namespace

std::uint64_t WavefrontEngine::default_threshold(std::size_t n) {
  // node-allocation budget per phase: proportional to the linear-size
  // subdivision, so the number of resets stays logarithmic
  return std::max<std::uint64_t>(64, 4 * static_cast<std::uint64_t>(n));
}

WavefrontEngine::WavefrontEngine(const Subdivision& sub, const Instance& inst, Options opt)
    : sub_(sub), inst_(inst), opt_(opt) {
  const std::size_t nedges = sub_.edges().size();
  covertime_.assign(nedges, kInf);
  processed_.assign(nedges, 0);
  contribs_.assign(nedges, {});
  dist_a_.assign(nedges, kInf);
  dist_b_.assign(nedges, kInf);
  vdist_.assign(sub_.v_points().size(), kInf);
  vpred_.assign(sub_.v_points().size(), WeightedGenerator());
  region_obs_.assign(nedges, {});
  region_obs_ready_.assign(nedges, 0);
  region_vp_.assign(nedges, -1);
  vp_edges_.assign(sub_.v_points().size(), {});
  for (std::size_t ei = 0; ei < nedges; ++ei)
    for (int cid : sub_.edges()[ei].ucells) {
      const int v = sub_.cells()[cid].vpoint;
      if (v >= 0) {
        region_vp_[ei] = v;
        vp_edges_[v].push_back(static_cast<int>(ei));
        break;
      }
    }
  provider_.assign(nedges, {});
  store_ = mgr_.create_store();
  std::uint64_t thr = opt_.reset_threshold;
  if (thr == 0) thr = default_threshold(nedges);
  snap_ = new SnapshotManager(*this, thr);
}

WavefrontEngine::~WavefrontEngine() { delete snap_; }

const std::vector<int>& WavefrontEngine::region_obs(int eid) {
  if (!region_obs_ready_[eid]) {
    BBox box;
    for (int cid : sub_.edges()[eid].ucells) {
      const BBox cb = sub_.cells()[cid].box();
      box.expand(Point{cb.x0, cb.y0});
      box.expand(Point{cb.x1, cb.y1});
    }
    std::vector<std::size_t> idx;
    sub_.obstacles_in(box, idx);
    region_obs_[eid].assign(idx.begin(), idx.end());
    region_obs_ready_[eid] = 1;
  }
  return region_obs_[eid];
}

int WavefrontEngine::region_vp(int eid) { return region_vp_[eid]; }

bool WavefrontEngine::vertex_candidate(int vp, int rid, const Segment& gseg, Candidate& out) {
  if (vp < 0 || !std::isfinite(vdist_[vp])) return false;
  const Point vpos = sub_.v_points()[vp];
  out.gen = WeightedGenerator(vpos, vdist_[vp]);
  out.home = vpos;
  out.from_wavefront = false;
  out.windows = {{0.0, 1.0}};
  for (int oi : region_obs(rid)) {
    if (out.windows.empty()) break;
    const Segment& w = sub_.obstacle_tree().segment(static_cast<std::size_t>(oi));
    subtract_shadow(out.windows, out.gen.site, w.a, w.b, gseg, out.home);
  }
  return !out.windows.empty();
}

bool WavefrontEngine::clear_sight(const Point& a, const Point& b) const {
  return sight_clear(inst_, sub_.obstacle_tree(), a, b);
}

std::vector<SeqItem> WavefrontEngine::lower_envelope(const Segment& g,
                                                     std::vector<Candidate>& cands,
                                                     std::uint64_t* eliminated) {
  // merge duplicate wavelets (same site+weight reachable through two claims)
  for (std::size_t i = 0; i < cands.size(); ++i)
    for (std::size_t j = i + 1; j < cands.size();) {
      if (cands[i].gen.same_wavelet(cands[j].gen)) {
        cands[i].windows.insert(cands[i].windows.end(), cands[j].windows.begin(),
                                cands[j].windows.end());
        cands[i].from_wavefront = cands[i].from_wavefront || cands[j].from_wavefront;
        cands.erase(cands.begin() + static_cast<std::ptrdiff_t>(j));
      } else {
        ++j;
      }
    }
  for (auto& c : cands) std::sort(c.windows.begin(), c.windows.end());

  std::vector<double> ts{0.0, 1.0};
  for (const auto& c : cands)
    for (auto& [a, b] : c.windows) {
      ts.push_back(a);
      ts.push_back(b);
    }
  // two claims compete only where their windows overlap; restrict the
  // breakpoint search to that span
  std::vector<std::pair<double, double>> spans(cands.size(), {1.0, 0.0});
  for (std::size_t i = 0; i < cands.size(); ++i)
    for (auto& [a, b] : cands[i].windows) {
      spans[i].first = std::min(spans[i].first, a);
      spans[i].second = std::max(spans[i].second, b);
    }
  for (std::size_t i = 0; i < cands.size(); ++i) {
    if (cands[i].windows.empty()) continue;
    for (std::size_t j = i + 1; j < cands.size(); ++j) {
      if (cands[j].windows.empty()) continue;
      const double olo = std::max(spans[i].first, spans[j].first) - kParamEps;
      const double ohi = std::min(spans[i].second, spans[j].second) + kParamEps;
      if (ohi - olo <= kParamEps) continue;
      const double duv = dist(cands[i].gen.site, cands[j].gen.site);
      const double scale = 1.0 + duv + cands[i].gen.weight + cands[j].gen.weight;
      if (duv <= 1e-15 * scale) continue;  // (near-)coincident sites never cross
      Bisector bis(cands[i].gen, cands[j].gen);
      if (bis.empty_locus()) continue;
      const double clo = std::max(0.0, olo), chi = std::min(1.0, ohi);
      if (!(clo < chi) || g.at(clo) == g.at(chi)) continue;
      const Segment sub(g.at(clo), g.at(chi));
      // arrival differences are 2-Lipschitz in arclength, so a crossing in the
      // span forces |f(lo)| + |f(hi)| <= 2 * span length
      const double flo = cands[i].gen.arrival(sub.a) - cands[j].gen.arrival(sub.a);
      const double fhi = cands[i].gen.arrival(sub.b) - cands[j].gen.arrival(sub.b);
      if (std::abs(flo) + std::abs(fhi) > 2.0 * sub.length() + 1e-12) continue;
      for (const Point& p : bisector_segment_intersection(bis, sub))
        ts.push_back(closest_param(g, p));
    }
  }
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end(),
                       [](double a, double b) { return b - a <= kParamEps; }),
           ts.end());

  auto feasible = [](const Candidate& c, double t) {
    for (auto& [a, b] : c.windows)
      if (t >= a - kParamEps && t <= b + kParamEps) return true;
    return false;
  };

  std::vector<SeqItem> items;
  std::vector<char> used(cands.size(), 0);
  for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
    const double t0 = ts[k], t1 = ts[k + 1];
    if (t1 - t0 <= kParamEps) continue;
    const double tm = 0.5 * (t0 + t1);
    const Point pm = g.at(tm);
    int win = -1;
    double best = kInf;
    for (std::size_t i = 0; i < cands.size(); ++i) {
      if (!feasible(cands[i], tm)) continue;
      const double arr = cands[i].gen.arrival(pm);
      if (arr < best - 1e-15 ||
          (arr <= best + 1e-15 && win >= 0 && gen_before(cands[i].gen, cands[win].gen))) {
        best = arr;
        win = static_cast<int>(i);
      }
    }
    if (win < 0) continue;
    used[win] = 1;
    if (!items.empty() && items.back().gen.same_wavelet(cands[win].gen) &&
        std::abs(items.back().hi - t0) <= 2 * kParamEps) {
      items.back().hi = t1;
    } else {
      SeqItem it;
      it.gen = cands[win].gen;
      it.lo = t0;
      it.hi = t1;
      items.push_back(it);
    }
  }
  if (eliminated) {
    for (std::size_t i = 0; i < cands.size(); ++i)
      if (cands[i].from_wavefront && !cands[i].windows.empty() && !used[i]) ++(*eliminated);
  }
  return items;
}

VersionHandle WavefrontEngine::edit_into_version(const VersionHandle& origin,
                                                 const std::vector<SeqItem>& items) {
  // Path-copying edits on the origin version: retire the old claims, then
  // install the new ones. Every edit is a counted operation.
  inflight_ = origin;
  auto counted = [&]() {
    ++result_.stats.propagation_ops;
    if (snap_->on_operation()) {
      Snapshot s = snap_->construct_snapshot();
      snap_->restore_and_resume(s);
    }
  };
  while (inflight_.size > 0) {
    inflight_ = mgr_.erase(inflight_, inflight_.size - 1);
    counted();
  }
  for (const SeqItem& it : items) {
    inflight_ = mgr_.insert(inflight_, inflight_.size, it);
    counted();
  }
  VersionHandle out = inflight_;
  inflight_ = VersionHandle{};
  return out;
}

void WavefrontEngine::initialize_expansion() {
  const int svp = sub_.source_vpoint();
  const Point s = inst_.source;
  if (inst_.inside_obstacle(s)) throw InputError("source lies inside an obstacle");
  vdist_[svp] = 0.0;
  vpred_[svp] = WeightedGenerator(s, 0.0);
  const auto& edges = sub_.edges();
  for (const auto& e : edges) {
    bool has_source = false;
    for (int cid : e.ucells)
      if (sub_.cells()[cid].vpoint == svp) has_source = true;
    if (!has_source) continue;
    Candidate c;
    c.gen = WeightedGenerator(s, 0.0);
    c.windows = {{0.0, 1.0}};
    for (int oi : region_obs(e.id)) {
      const Segment& w = sub_.obstacle_tree().segment(static_cast<std::size_t>(oi));
      subtract_shadow(c.windows, s, w.a, w.b, e.seg, s);
    }
    if (c.windows.empty()) continue;
    const double tau = min_arrival_on(c.gen, e.seg, c.windows);
    std::vector<Candidate> cs{c};
    std::vector<SeqItem> items = lower_envelope(e.seg, cs, nullptr);
    if (items.empty()) continue;
    VersionHandle v = mgr_.empty(store_);
    for (const SeqItem& it : items) v = mgr_.insert(v, v.size, it);
    Contribution contrib;
    contrib.from = -1;
    contrib.side = side_index(e.seg, s);
    contrib.wf = v;
    contrib.tau = tau;
    contribs_[e.id].push_back(contrib);
    covertime_[e.id] = std::min(covertime_[e.id], tau + e.len);
  }
}

void WavefrontEngine::merge_wavefronts(int eid, std::vector<SeqItem> side_items[2]) {
  const TransparentEdge& e = sub_.edges()[eid];
  std::vector<Candidate> cands[2];
  for (const Contribution& c : contribs_[eid]) {
    for (const SeqItem& it : mgr_.traverse(c.wf)) {
      int side;
      const double o = orient_value(e.seg.a, e.seg.b, it.gen.site);
      const double eps = 1e-12 * e.len * (dist(it.gen.site, e.seg.a) + 1e-300);
      side = std::abs(o) <= eps ? c.side : (o > 0 ? 0 : 1);
      Candidate cand;
      cand.gen = it.gen;
      cand.windows = {{it.lo, it.hi}};
      cands[side].push_back(std::move(cand));
      ++result_.stats.merge_ops;
    }
  }
  // a settled vertex in U(e) radiates into both one-sided wavefronts
  {
    Candidate vc;
    if (vertex_candidate(region_vp(eid), eid, e.seg, vc)) {
      cands[0].push_back(vc);
      cands[1].push_back(std::move(vc));
    }
  }
  for (int sdx = 0; sdx < 2; ++sdx) {
    side_items[sdx] = lower_envelope(e.seg, cands[sdx], nullptr);
    VersionHandle v = mgr_.empty(store_);
    for (const SeqItem& it : side_items[sdx]) v = mgr_.insert(v, v.size, it);
    origin_wf_[sdx] = v;
  }
  // endpoint distances: earliest arrival over both one-sided wavefronts
  double da = kInf, db = kInf;
  for (int sdx = 0; sdx < 2; ++sdx)
    for (const SeqItem& it : side_items[sdx]) {
      if (it.lo <= 64 * kParamEps) da = std::min(da, it.gen.arrival(e.seg.a));
      if (it.hi >= 1.0 - 64 * kParamEps) db = std::min(db, it.gen.arrival(e.seg.b));
    }
  dist_a_[eid] = da;
  dist_b_[eid] = db;
  // settle the region's V-point from the merged wavefront
  const int vp = region_vp(eid);
  if (vp >= 0) {
    const Point vpos = sub_.v_points()[vp];
    for (int sdx = 0; sdx < 2; ++sdx)
      for (const SeqItem& it : side_items[sdx]) {
        const double cand = it.gen.arrival(vpos);
        if (cand < vdist_[vp] - 1e-15 && clear_sight(it.gen.site, vpos)) {
          vdist_[vp] = cand;
          vpred_[vp] = it.gen;
          if (settled_vps_.empty() || settled_vps_.back() != vp) settled_vps_.push_back(vp);
          if (getenv("SPMX_DEBUG_VP") && vp == atoi(getenv("SPMX_DEBUG_VP")))
            fprintf(stderr, "vp%d <- %.9f from gen(%.4f,%.4f) w=%.9f art=%d edge=%d claim=[%.4f,%.4f]\n",
                    vp, cand, it.gen.site.x, it.gen.site.y, it.gen.weight, (int)it.gen.artificial,
                    eid, it.lo, it.hi);
        }
      }
  }
}

void WavefrontEngine::propagate_wavefront(int eid, int gid,
                                          const std::vector<SeqItem> side_items[2]) {
  if (processed_[gid]) return;
  const TransparentEdge& e = sub_.edges()[eid];
  const TransparentEdge& g = sub_.edges()[gid];
  const bool is_input = sub_.on_region_boundary(eid, gid);  // e on boundary of U(g)

  const Point gmid = g.seg.at(0.5);
  const Point emid = e.seg.at(0.5);

  // cheap reject for covertime-only propagations
  if (!is_input) {
    double lb = kInf;
    for (int sdx = 0; sdx < 2; ++sdx)
      for (const SeqItem& it : side_items[sdx])
        lb = std::min(lb, it.gen.weight + dist_point_segment(it.gen.site, g.seg));
    lb = std::min(lb, std::min(dist_a_[eid] + dist_point_segment(e.seg.a, g.seg),
                               dist_b_[eid] + dist_point_segment(e.seg.b, g.seg)));
    if (lb + g.len >= covertime_[gid]) return;
  }

  const int rid = is_input ? gid : eid;
  const std::vector<int>& obs = region_obs(rid);
  const int vp = region_vp(rid);

  // the one-sided wavefront that passes through e toward g
  const double og = orient_value(e.seg.a, e.seg.b, gmid);
  const double ceps = 1e-9 * e.len * (dist(gmid, emid) + 1e-300);
  const bool collinear = std::abs(og) <= ceps;
  const int pass_side = og >= 0 ? 1 : 0;  // wavelets on the far side cross toward g

  std::vector<Candidate> cands;
  auto add_portal_items = [&](const std::vector<SeqItem>& items) {
    for (const SeqItem& it : items) {
      Candidate c;
      c.gen = it.gen;
      c.from_wavefront = true;
      c.home = e.seg.at(0.5 * (it.lo + it.hi));
      c.windows = portal_windows(it.gen.site, e.seg.at(it.lo), e.seg.at(it.hi), g.seg);
      if (!c.windows.empty()) cands.push_back(std::move(c));
    }
  };
  if (collinear) {
    add_portal_items(side_items[0]);
    add_portal_items(side_items[1]);
  } else {
    add_portal_items(side_items[pass_side]);
  }
  // artificial wavelets at e's endpoints
  for (int end = 0; end < 2; ++end) {
    const double w = end == 0 ? dist_a_[eid] : dist_b_[eid];
    if (!std::isfinite(w)) continue;
    Candidate c;
    c.gen = WeightedGenerator(end == 0 ? e.seg.a : e.seg.b, w, true);
    c.home = e.seg.at(0.5);
    c.windows = {{0.0, 1.0}};
    cands.push_back(std::move(c));
  }
  // the region's settled vertex wavelet (diffraction around the obstacle corner)
  {
    Candidate c;
    if (vertex_candidate(vp, rid, g.seg, c)) cands.push_back(std::move(c));
  }
  // obstacle walls inside the propagation region cast shadows
  for (auto& c : cands) {
    for (int oi : obs) {
      if (c.windows.empty()) break;
      const Segment& w = sub_.obstacle_tree().segment(static_cast<std::size_t>(oi));
      subtract_shadow(c.windows, c.gen.site, w.a, w.b, g.seg, c.home);
    }
  }
  cands.erase(std::remove_if(cands.begin(), cands.end(),
                             [](const Candidate& c) { return c.windows.empty(); }),
              cands.end());
  if (cands.empty()) return;

  double tau = kInf;
  for (const auto& c : cands) tau = std::min(tau, min_arrival_on(c.gen, g.seg, c.windows));
  if (!std::isfinite(tau)) return;

  if (is_input) {
    cur_edge_ = eid;
    inflight_target_ = gid;
    std::vector<SeqItem> items = lower_envelope(g.seg, cands, &result_.stats.bisector_events);
    if (!items.empty()) {
      const int origin_side = collinear ? 0 : pass_side;
      VersionHandle v = edit_into_version(origin_wf_[origin_side], items);
      Contribution contrib;
      contrib.from = eid;
      contrib.side = collinear ? side_index(g.seg, emid) : side_index(g.seg, e.seg.at(0.5));
      contrib.wf = v;
      contrib.tau = tau;
      contribs_[gid].push_back(contrib);
    }
    inflight_target_ = -1;
  }
  if (tau + g.len < covertime_[gid]) {
    covertime_[gid] = tau + g.len;
    Provider pv;
    pv.from = eid;
    pv.is_input = is_input;
    double best = kInf;
    for (const auto& c : cands) {
      const double a = min_arrival_on(c.gen, g.seg, c.windows);
      if (a < best) {
        best = a;
        pv.site = c.gen.site;
        pv.weight = c.gen.weight;
        pv.artificial = c.gen.artificial;
      }
    }
    provider_[gid] = pv;
  }
}

void WavefrontEngine::emit_marks(int eid, const std::vector<SeqItem> side_items[2]) {
  const TransparentEdge& e = sub_.edges()[eid];
  auto emit = [&](const SeqItem& it, int side, MarkRecord::Origin origin, int cell) {
    MarkRecord m;
    m.gen = it.gen;
    m.cell = cell;
    m.edge = eid;
    m.side = side;
    m.lo = it.lo;
    m.hi = it.hi;
    m.origin = origin;
    result_.marks.push_back(m);
  };
  const int vp = region_vp(eid);
  for (int sdx = 0; sdx < 2; ++sdx) {
    const auto& items = side_items[sdx];
    for (std::size_t i = 0; i < items.size(); ++i) {
      for (int cell : {e.cell_a, e.cell_b}) {
        emit(items[i], sdx, MarkRecord::kOriginalClaim, cell);
        // the paper's neighbor rule: both wavefront neighbors get marked too
        if (i > 0) emit(items[i - 1], sdx, MarkRecord::kNeighbor, cell);
        if (i + 1 < items.size()) emit(items[i + 1], sdx, MarkRecord::kNeighbor, cell);
        if (cell == e.cell_b && e.cell_b == e.cell_a) break;
      }
    }
  }
  // vertex rule: the wavelet that settles a V-point is marked for its cell
  if (vp >= 0 && std::isfinite(vdist_[vp])) {
    const Point vpos = sub_.v_points()[vp];
    for (int sdx = 0; sdx < 2; ++sdx)
      for (const auto& it : side_items[sdx])
        if (std::abs(it.gen.arrival(vpos) - vdist_[vp]) <= 1e-12 * (1.0 + vdist_[vp])) {
          int cell = -1;
          for (int cid : e.ucells)
            if (sub_.cells()[cid].vpoint == vp) cell = cid;
          emit(it, sdx, MarkRecord::kOriginalVertex, cell);
        }
  }
}

RunResult WavefrontEngine::run() {
  result_ = RunResult{};
  initialize_expansion();

  using QItem = std::pair<double, int>;
  std::priority_queue<QItem, std::vector<QItem>, std::greater<QItem>> queue;
  for (std::size_t i = 0; i < covertime_.size(); ++i)
    if (std::isfinite(covertime_[i])) queue.emplace(covertime_[i], static_cast<int>(i));

  double tau = 0.0;
  std::vector<SeqItem> side_items[2];
  while (!queue.empty()) {
    auto [ct, eid] = queue.top();
    queue.pop();
    if (processed_[eid] || ct != covertime_[eid]) continue;  // stale entry
    if (ct < tau - 1e-12 * (1.0 + tau))
      { char buf[260]; const Provider& pv = provider_[eid]; snprintf(buf, sizeof buf, "wavefront: covertime order violated (ct=%.17g tau=%.17g diff=%.3e edge=%d from=%d input=%d site=(%.12f,%.12f) w=%.12f art=%d)", ct, tau, tau - ct, eid, pv.from, (int)pv.is_input, pv.site.x, pv.site.y, pv.weight, (int)pv.artificial); throw std::logic_error(buf); }
    tau = std::max(tau, ct);
    result_.processed_covertimes.push_back(ct);

    settled_vps_.clear();
    merge_wavefronts(eid, side_items);
    processed_[eid] = 1;
    ++result_.stats.processed_edges;
    if (opt_.collect_marks) emit_marks(eid, side_items);
    if (opt_.retain_wavefronts) {
      if (result_.wavefronts.empty()) result_.wavefronts.resize(sub_.edges().size());
      result_.wavefronts[eid] = {side_items[0], side_items[1]};
    }

    // a vertex that just settled covers every edge of its regions right away;
    // waiting for the regular propagations would announce those covertimes late
    for (int vp : settled_vps_) {
      for (int gid : vp_edges_[vp]) {
        if (processed_[gid]) continue;
        Candidate vc;
        if (!vertex_candidate(vp, gid, sub_.edges()[gid].seg, vc)) continue;
        const double tau_v = min_arrival_on(vc.gen, sub_.edges()[gid].seg, vc.windows);
        const double ct_v = tau_v + sub_.edges()[gid].len;
        if (ct_v < covertime_[gid]) {
          covertime_[gid] = ct_v;
          provider_[gid] = Provider{eid, vc.gen.site, vc.gen.weight, false, false};
          queue.emplace(ct_v, gid);
        }
      }
    }

    cur_edge_ = eid;
    for (int gid : sub_.output_of(eid)) {
      if (processed_[gid]) continue;
      const double before = covertime_[gid];
      propagate_wavefront(eid, gid, side_items);
      if (covertime_[gid] < before) queue.emplace(covertime_[gid], gid);
    }
    cur_edge_ = -1;
    origin_wf_[0] = VersionHandle{};
    origin_wf_[1] = VersionHandle{};
    contribs_[eid].clear();
    contribs_[eid].shrink_to_fit();
  }

  snap_->finish();
  result_.vertex_dist = vdist_;
  result_.vertex_pred = vpred_;
  result_.endpoint_dist_a = dist_a_;
  result_.endpoint_dist_b = dist_b_;
  result_.stats.max_live_nodes = std::max(result_.stats.max_live_nodes,
                                          snap_->ledger().peak_live);
  result_.stats.max_snapshot_nodes = snap_->ledger().max_snapshot;
  result_.stats.resets = static_cast<int>(snap_->snapshots().size());
  result_.stats.phases = snap_->ledger().phases;
  return result_;
}

RunResult run_expansion(const Subdivision& sub, const Instance& inst,
                        WavefrontEngine::Options opt) {
  WavefrontEngine eng(sub, inst, opt);
  return eng.run();
}

}  // namespace spmx
