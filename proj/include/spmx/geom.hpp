#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace spmx {

struct InputError : std::runtime_error {
  explicit InputError(const std::string& m) : std::runtime_error(m) {}
};
struct GeometryError : std::runtime_error {
  explicit GeometryError(const std::string& m) : std::runtime_error(m) {}
};

struct Point {
  double x = 0.0;
  double y = 0.0;

  Point() = default;
  Point(double px, double py) : x(px), y(py) {}

  Point operator+(const Point& o) const { return {x + o.x, y + o.y}; }
  Point operator-(const Point& o) const { return {x - o.x, y - o.y}; }
  Point operator*(double s) const { return {x * s, y * s}; }
  bool operator==(const Point& o) const { return x == o.x && y == o.y; }
  bool operator!=(const Point& o) const { return !(*this == o); }
  bool operator<(const Point& o) const {
    return x < o.x || (x == o.x && y < o.y);
  }
};

inline double dot(const Point& a, const Point& b) { return a.x * b.x + a.y * b.y; }
inline double cross(const Point& a, const Point& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Point& a) { return std::hypot(a.x, a.y); }
inline double dist(const Point& a, const Point& b) { return norm(a - b); }
inline double dist2(const Point& a, const Point& b) {
  const double dx = a.x - b.x, dy = a.y - b.y;
  return dx * dx + dy * dy;
}
inline bool finite(const Point& p) { return std::isfinite(p.x) && std::isfinite(p.y); }

Point checked(const Point& p);  // throws InputError on NaN/inf

struct Segment {
  Point a, b;
  Segment() = default;
  Segment(const Point& pa, const Point& pb);

  double length() const { return dist(a, b); }
  Point at(double t) const { return {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)}; }
};

enum class Sign { Negative = -1, Zero = 0, Positive = 1 };

// Sign of twice the signed area of triangle abc (epsilon-guarded double policy).
Sign orientation(const Point& a, const Point& b, const Point& c);
double orient_value(const Point& a, const Point& b, const Point& c);

// Closest parameter t in [0,1] on segment s to point p.
double closest_param(const Segment& s, const Point& p);
double dist_point_segment(const Point& p, const Segment& s);
double dist_segment_segment(const Segment& s, const Segment& t);

// True if the open interiors of the segments cross, or one passes strictly
// through the interior of the other. Shared endpoints / touching do not count.
bool segments_properly_intersect(const Segment& s, const Segment& t);

// Intersection point of the supporting lines, or nullopt-like flag via ok.
bool line_intersection(const Segment& s, const Segment& t, Point& out);

struct Polygon {
  std::vector<Point> vertices;  // cyclic, consecutive distinct
  bool ccw = true;

  Polygon() = default;
  explicit Polygon(std::vector<Point> vs);

  double signed_area() const;
  bool contains(const Point& p) const;          // strict interior
  bool contains_or_boundary(const Point& p) const;
  bool on_boundary(const Point& p, double eps) const;
  std::size_t size() const { return vertices.size(); }
  Segment edge(std::size_t i) const {
    return Segment(vertices[i], vertices[(i + 1) % vertices.size()]);
  }
  bool self_intersects() const;
};

struct BBox {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  bool empty = true;
  void expand(const Point& p);
  void expand(const BBox& b);
  void inflate(double m);
  bool contains(const Point& p) const {
    return !empty && p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1;
  }
  bool overlaps(const BBox& o) const {
    return !empty && !o.empty && x0 <= o.x1 && o.x0 <= x1 && y0 <= o.y1 && o.y0 <= y1;
  }
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
};

BBox bbox_of(const Segment& s);

// Static AABB tree over segments; supports segment/box overlap queries.
class SegmentTree {
 public:
  void build(std::vector<Segment> segs);
  bool empty() const { return segs_.empty(); }
  std::size_t size() const { return segs_.size(); }
  const Segment& segment(std::size_t i) const { return segs_[i]; }

  // Indices of stored segments whose bbox overlaps `box`.
  void query_box(const BBox& box, std::vector<std::size_t>& out) const;
  // True if `s` properly intersects any stored segment.
  bool blocked(const Segment& s) const;

 private:
  struct Node {
    BBox box;
    int left = -1, right = -1;
    int first = -1, count = 0;  // leaf payload range in order_
  };
  std::vector<Segment> segs_;
  std::vector<Node> nodes_;
  std::vector<std::size_t> order_;
  int build_rec(std::size_t lo, std::size_t hi);
  bool blocked_rec(int node, const Segment& s, const BBox& sb) const;
};

// Deterministic 64-bit mix (splitmix64); used wherever reproducible
// pseudo-randomness is needed.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct Rng {
  std::uint64_t state;
  explicit Rng(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    state += 0x9e3779b97f4a7c15ULL;
    return mix64(state);
  }
  double uniform() { return (next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t below(std::uint64_t n) { return next() % n; }
};

}  // namespace spmx
