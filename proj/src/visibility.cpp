#include "spmx/visibility.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace spmx {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

VisibilityOracle::VisibilityOracle(const Instance& inst) : inst_(inst) {
  edges_.build(inst_.obstacle_edges());
  for (const auto& poly : inst_.obstacles)
    for (const auto& v : poly.vertices) nodes_.push_back(v);
  nodes_.push_back(inst_.source);

  const std::size_t n = nodes_.size();
  dist_.assign(n, kInf);
  parent_.assign(n, -1);
  const std::size_t src = n - 1;
  dist_[src] = 0.0;

  // Dijkstra over the (implicit) visibility graph. Ties between equal-length
  // paths are broken toward the lexicographically smaller waypoint sequence.
  std::vector<bool> done(n, false);
  for (std::size_t round = 0; round < n; ++round) {
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i)
      if (!done[i] && dist_[i] < kInf && (best == n || dist_[i] < dist_[best])) best = i;
    if (best == n) break;
    done[best] = true;
    for (std::size_t j = 0; j < n; ++j) {
      if (done[j]) continue;
      if (!visible(nodes_[best], nodes_[j])) continue;
      const double nd = dist_[best] + dist(nodes_[best], nodes_[j]);
      const double tol = 1e-12 * (1.0 + nd);
      if (nd < dist_[j] - tol) {
        dist_[j] = nd;
        parent_[j] = static_cast<int>(best);
      } else if (std::abs(nd - dist_[j]) <= tol && parent_[j] >= 0) {
        // lexicographic tie-break on the immediate predecessor point
        if (nodes_[best] < nodes_[parent_[j]]) parent_[j] = static_cast<int>(best);
      }
    }
  }
}

bool sight_clear(const Instance& inst, const SegmentTree& tree, const Point& a, const Point& b) {
  if (a == b) return true;
  const Segment s(a, b);
  if (tree.blocked(s)) return false;
  // The segment may graze vertices or run along boundaries; test the strict
  // interior of each sub-interval between touch points.
  std::vector<double> ts{0.0, 0.5, 1.0};
  const double len = s.length();
  for (const auto& poly : inst.obstacles)
    for (const auto& v : poly.vertices)
      if (dist_point_segment(v, s) <= 1e-11 * (1.0 + len)) ts.push_back(closest_param(s, v));
  std::sort(ts.begin(), ts.end());
  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    if (ts[i + 1] - ts[i] < 1e-12) continue;
    if (inst.inside_obstacle(s.at(0.5 * (ts[i] + ts[i + 1])))) return false;
  }
  return true;
}

bool VisibilityOracle::visible(const Point& p, const Point& q) const {
  return sight_clear(inst_, edges_, p, q);
}

void VisibilityOracle::check_free(const Point& p, const char* what) const {
  if (inst_.inside_obstacle(p))
    throw PointInObstacleError(std::string(what) + " lies strictly inside an obstacle");
}

std::vector<double> VisibilityOracle::distances_from(const Point& p) const {
  const std::size_t n = nodes_.size();
  std::vector<double> d(n, kInf);
  for (std::size_t i = 0; i < n; ++i)
    if (visible(p, nodes_[i])) d[i] = dist(p, nodes_[i]);
  std::vector<bool> done(n, false);
  for (std::size_t round = 0; round < n; ++round) {
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i)
      if (!done[i] && d[i] < kInf && (best == n || d[i] < d[best])) best = i;
    if (best == n) break;
    done[best] = true;
    for (std::size_t j = 0; j < n; ++j)
      if (!done[j] && visible(nodes_[best], nodes_[j]))
        d[j] = std::min(d[j], d[best] + dist(nodes_[best], nodes_[j]));
  }
  return d;
}

double VisibilityOracle::geodesic_distance(const Point& t) const {
  check_free(t, "query point");
  if (t == inst_.source) return 0.0;
  double best = kInf;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (dist_[i] == kInf) continue;
    const double reach = dist_[i] + dist(nodes_[i], t);
    if (reach < best && visible(nodes_[i], t)) best = reach;
  }
  return best;
}

PathResult VisibilityOracle::shortest_path(const Point& t) const {
  check_free(t, "query point");
  PathResult res;
  if (t == inst_.source) {
    res.waypoints = {inst_.source};
    res.length = 0.0;
    return res;
  }
  double best = kInf;
  std::size_t bi = nodes_.size();
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (dist_[i] == kInf || !visible(nodes_[i], t)) continue;
    const double reach = dist_[i] + dist(nodes_[i], t);
    const double tol = 1e-12 * (1.0 + reach);
    if (reach < best - tol) {
      best = reach;
      bi = i;
    } else if (std::abs(reach - best) <= tol && bi < nodes_.size() && nodes_[i] < nodes_[bi]) {
      bi = i;
    }
  }
  if (bi == nodes_.size()) throw GeometryError("query point unreachable");
  std::vector<Point> rev;
  for (int cur = static_cast<int>(bi); cur >= 0; cur = parent_[cur]) rev.push_back(nodes_[cur]);
  res.waypoints.assign(rev.rbegin(), rev.rend());
  if (res.waypoints.empty() || !(res.waypoints.back() == t)) res.waypoints.push_back(t);
  res.length = 0.0;
  for (std::size_t i = 0; i + 1 < res.waypoints.size(); ++i)
    res.length += dist(res.waypoints[i], res.waypoints[i + 1]);
  return res;
}

double VisibilityOracle::point_to_point(const Point& p, const Point& q) const {
  check_free(p, "point");
  check_free(q, "point");
  if (visible(p, q)) return dist(p, q);
  const std::vector<double> dp = distances_from(p);
  double best = kInf;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (dp[i] == kInf) continue;
    const double reach = dp[i] + dist(nodes_[i], q);
    if (reach < best && visible(nodes_[i], q)) best = reach;
  }
  return best;
}

double VisibilityOracle::segment_geodesic_distance(const Segment& e, const Segment& f) const {
  check_free(e.a, "segment endpoint");
  check_free(e.b, "segment endpoint");
  check_free(f.a, "segment endpoint");
  check_free(f.b, "segment endpoint");
  if (edges_.blocked(e) || edges_.blocked(f))
    throw InvalidSegmentError("segment crosses an obstacle interior");

  // Direct (Euclidean) route if the realizing pair is mutually visible.
  double best = kInf;
  {
    // closest pair of points between e and f
    double bt = 0, bu = 0, bd = kInf;
    for (int i = 0; i <= 16; ++i) {
      const double t = i / 16.0;
      const double u = closest_param(f, e.at(t));
      const double d = dist(e.at(t), f.at(u));
      if (d < bd) {
        bd = d;
        bt = t;
        bu = u;
      }
    }
    // golden-section polish on t (u follows as closest param)
    double lo = std::max(0.0, bt - 1.0 / 16), hi = std::min(1.0, bt + 1.0 / 16);
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    auto fv = [&](double t) { return dist_point_segment(e.at(t), f); };
    double f1 = fv(x1), f2 = fv(x2);
    for (int it = 0; it < 60; ++it) {
      if (f1 < f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - gr * (hi - lo);
        f1 = fv(x1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + gr * (hi - lo);
        f2 = fv(x2);
      }
    }
    bt = 0.5 * (lo + hi);
    bu = closest_param(f, e.at(bt));
    const Point pe = e.at(bt), pf = f.at(bu);
    if (visible(pe, pf)) best = dist(pe, pf);
  }

  // Vertex-mediated routes: e -> i -> ... -> j -> f with geodesic middle.
  const std::size_t n = nodes_.size();
  std::vector<std::vector<double>> D(n);
  for (std::size_t i = 0; i < n; ++i) D[i] = distances_from(nodes_[i]);
  auto seg_to_node = [&](const Segment& seg, std::size_t i) {
    const double t = closest_param(seg, nodes_[i]);
    const Point p = seg.at(t);
    if (visible(p, nodes_[i])) return dist(p, nodes_[i]);
    // fall back to the best visible sample
    double b = kInf;
    for (int k = 0; k <= 32; ++k) {
      const Point q = seg.at(k / 32.0);
      if (visible(q, nodes_[i])) b = std::min(b, dist(q, nodes_[i]));
    }
    return b;
  };
  std::vector<double> de(n), df(n);
  for (std::size_t i = 0; i < n; ++i) {
    de[i] = seg_to_node(e, i);
    df[i] = seg_to_node(f, i);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (de[i] == kInf) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (df[j] == kInf || D[i][j] == kInf) continue;
      best = std::min(best, de[i] + D[i][j] + df[j]);
    }
  }
  return best;
}

}  // namespace spmx
