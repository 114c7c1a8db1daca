#include "spmx/geom.hpp"

#include <algorithm>
#include <cassert>

namespace spmx {

Point checked(const Point& p) {
  if (!finite(p)) throw InputError("non-finite coordinate");
  return p;
}

Segment::Segment(const Point& pa, const Point& pb) : a(checked(pa)), b(checked(pb)) {
  if (a == b) throw InputError("degenerate segment (a == b)");
}

double orient_value(const Point& a, const Point& b, const Point& c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

Sign orientation(const Point& a, const Point& b, const Point& c) {
  if (!finite(a) || !finite(b) || !finite(c)) throw InputError("non-finite point");
  const double v = orient_value(a, b, c);
  // Relative guard: |error| <= ~4 ulp of the magnitude sum.
  const double mag = std::abs((b.x - a.x) * (c.y - a.y)) + std::abs((b.y - a.y) * (c.x - a.x));
  const double eps = 8.0 * 1e-16 * mag;
  if (v > eps) return Sign::Positive;
  if (v < -eps) return Sign::Negative;
  return Sign::Zero;
}

double closest_param(const Segment& s, const Point& p) {
  const Point d = s.b - s.a;
  const double dd = dot(d, d);
  if (dd == 0.0) return 0.0;
  double t = dot(p - s.a, d) / dd;
  return std::clamp(t, 0.0, 1.0);
}

double dist_point_segment(const Point& p, const Segment& s) {
  return dist(p, s.at(closest_param(s, p)));
}

double dist_segment_segment(const Segment& s, const Segment& t) {
  if (segments_properly_intersect(s, t)) return 0.0;
  double d = dist_point_segment(s.a, t);
  d = std::min(d, dist_point_segment(s.b, t));
  d = std::min(d, dist_point_segment(t.a, s));
  d = std::min(d, dist_point_segment(t.b, s));
  return d;
}

static bool on_segment_collinear(const Point& a, const Point& b, const Point& p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
         std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}

bool segments_properly_intersect(const Segment& s, const Segment& t) {
  const Sign o1 = orientation(s.a, s.b, t.a);
  const Sign o2 = orientation(s.a, s.b, t.b);
  const Sign o3 = orientation(t.a, t.b, s.a);
  const Sign o4 = orientation(t.a, t.b, s.b);
  if (o1 != o2 && o3 != o4 && o1 != Sign::Zero && o2 != Sign::Zero &&
      o3 != Sign::Zero && o4 != Sign::Zero)
    return true;
  // Collinear overlap with positive shared length counts as proper.
  if (o1 == Sign::Zero && o2 == Sign::Zero && o3 == Sign::Zero && o4 == Sign::Zero) {
    // project on the dominant axis
    const bool horiz = std::abs(s.b.x - s.a.x) >= std::abs(s.b.y - s.a.y);
    auto key = [&](const Point& p) { return horiz ? p.x : p.y; };
    double lo = std::max(std::min(key(s.a), key(s.b)), std::min(key(t.a), key(t.b)));
    double hi = std::min(std::max(key(s.a), key(s.b)), std::max(key(t.a), key(t.b)));
    const double span = std::max(std::abs(key(s.b) - key(s.a)), std::abs(key(t.b) - key(t.a)));
    return hi - lo > 1e-12 * (1.0 + span);
  }
  // One endpoint strictly inside the other segment: touching, not proper.
  (void)on_segment_collinear;
  return false;
}

bool line_intersection(const Segment& s, const Segment& t, Point& out) {
  const Point r = s.b - s.a;
  const Point q = t.b - t.a;
  const double den = cross(r, q);
  if (den == 0.0) return false;
  const double u = cross(t.a - s.a, q) / den;
  out = s.a + r * u;
  return true;
}

Polygon::Polygon(std::vector<Point> vs) : vertices(std::move(vs)) {
  if (vertices.size() < 3) throw InputError("polygon needs >= 3 vertices");
  for (auto& v : vertices) checked(v);
  for (std::size_t i = 0; i < vertices.size(); ++i)
    if (vertices[i] == vertices[(i + 1) % vertices.size()])
      throw InputError("polygon has repeated consecutive vertices");
  ccw = signed_area() > 0.0;
}

double Polygon::signed_area() const {
  double s = 0.0;
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const Point& a = vertices[i];
    const Point& b = vertices[(i + 1) % vertices.size()];
    s += cross(a, b);
  }
  return 0.5 * s;
}

bool Polygon::on_boundary(const Point& p, double eps) const {
  for (std::size_t i = 0; i < vertices.size(); ++i)
    if (dist_point_segment(p, edge(i)) <= eps) return true;
  return false;
}

static bool crossing_count_inside(const std::vector<Point>& vs, const Point& p) {
  bool in = false;
  for (std::size_t i = 0, j = vs.size() - 1; i < vs.size(); j = i++) {
    const Point& a = vs[i];
    const Point& b = vs[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double xi = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
      if (p.x < xi) in = !in;
    }
  }
  return in;
}

bool Polygon::contains(const Point& p) const {
  if (on_boundary(p, 1e-12 * (1.0 + std::abs(p.x) + std::abs(p.y)))) return false;
  return crossing_count_inside(vertices, p);
}

bool Polygon::contains_or_boundary(const Point& p) const {
  if (on_boundary(p, 1e-9 * (1.0 + std::abs(p.x) + std::abs(p.y)))) return true;
  return crossing_count_inside(vertices, p);
}

bool Polygon::self_intersects() const {
  const std::size_t n = vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      const Segment ei = edge(i), ej = edge(j);
      if (adjacent) continue;
      if (segments_properly_intersect(ei, ej)) return true;
      // Non-adjacent edges sharing a point means a pinch.
      if (dist_point_segment(ej.a, ei) < 1e-12 || dist_point_segment(ej.b, ei) < 1e-12 ||
          dist_point_segment(ei.a, ej) < 1e-12 || dist_point_segment(ei.b, ej) < 1e-12)
        return true;
    }
  }
  return false;
}

void BBox::expand(const Point& p) {
  if (empty) {
    x0 = x1 = p.x;
    y0 = y1 = p.y;
    empty = false;
  } else {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
}

void BBox::expand(const BBox& b) {
  if (b.empty) return;
  expand(Point{b.x0, b.y0});
  expand(Point{b.x1, b.y1});
}

void BBox::inflate(double m) {
  x0 -= m;
  y0 -= m;
  x1 += m;
  y1 += m;
}

BBox bbox_of(const Segment& s) {
  BBox b;
  b.expand(s.a);
  b.expand(s.b);
  return b;
}

void SegmentTree::build(std::vector<Segment> segs) {
  segs_ = std::move(segs);
  nodes_.clear();
  order_.resize(segs_.size());
  for (std::size_t i = 0; i < segs_.size(); ++i) order_[i] = i;
  if (!segs_.empty()) build_rec(0, segs_.size());
}

int SegmentTree::build_rec(std::size_t lo, std::size_t hi) {
  Node nd;
  for (std::size_t i = lo; i < hi; ++i) nd.box.expand(bbox_of(segs_[order_[i]]));
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(nd);
  if (hi - lo <= 4) {
    nodes_[id].first = static_cast<int>(lo);
    nodes_[id].count = static_cast<int>(hi - lo);
    return id;
  }
  const bool splitx = nd.box.width() >= nd.box.height();
  std::sort(order_.begin() + lo, order_.begin() + hi, [&](std::size_t a, std::size_t b) {
    const BBox ba = bbox_of(segs_[a]), bb = bbox_of(segs_[b]);
    return splitx ? (ba.x0 + ba.x1 < bb.x0 + bb.x1) : (ba.y0 + ba.y1 < bb.y0 + bb.y1);
  });
  const std::size_t mid = (lo + hi) / 2;
  const int l = build_rec(lo, mid);
  const int r = build_rec(mid, hi);
  nodes_[id].left = l;
  nodes_[id].right = r;
  return id;
}

void SegmentTree::query_box(const BBox& box, std::vector<std::size_t>& out) const {
  out.clear();
  if (nodes_.empty()) return;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    const Node& nd = nodes_[id];
    if (!nd.box.overlaps(box)) continue;
    if (nd.count > 0 || nd.left < 0) {
      for (int i = nd.first; i < nd.first + nd.count; ++i) {
        const std::size_t si = order_[i];
        if (bbox_of(segs_[si]).overlaps(box)) out.push_back(si);
      }
    } else {
      stack.push_back(nd.left);
      stack.push_back(nd.right);
    }
  }
}

bool SegmentTree::blocked(const Segment& s) const {
  if (nodes_.empty()) return false;
  return blocked_rec(0, s, bbox_of(s));
}

bool SegmentTree::blocked_rec(int node, const Segment& s, const BBox& sb) const {
  const Node& nd = nodes_[node];
  if (!nd.box.overlaps(sb)) return false;
  if (nd.count > 0 || nd.left < 0) {
    for (int i = nd.first; i < nd.first + nd.count; ++i) {
      const Segment& w = segs_[order_[i]];
      if (!segments_properly_intersect(w, s)) continue;
      // A collinear overlap means the query runs along the wall; that stays
      // in the closure of free space and does not cross the interior.
      if (orientation(s.a, s.b, w.a) == Sign::Zero &&
          orientation(s.a, s.b, w.b) == Sign::Zero)
        continue;
      return true;
    }
    return false;
  }
  return blocked_rec(nd.left, s, sb) || blocked_rec(nd.right, s, sb);
}

}  // namespace spmx
