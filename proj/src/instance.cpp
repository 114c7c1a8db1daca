#include "spmx/instance.hpp"

#include <algorithm>
#include <cmath>

namespace spmx {

std::size_t Instance::vertex_count() const {
  std::size_t n = 0;
  for (const auto& p : obstacles) n += p.size();
  return n;
}

std::vector<Point> Instance::v_points() const {
  std::vector<Point> pts;
  pts.reserve(vertex_count() + 1);
  for (const auto& poly : obstacles)
    for (const auto& v : poly.vertices) pts.push_back(v);
  pts.push_back(source);
  return pts;
}

std::vector<Segment> Instance::obstacle_edges() const {
  std::vector<Segment> segs;
  segs.reserve(vertex_count());
  for (const auto& poly : obstacles)
    for (std::size_t i = 0; i < poly.size(); ++i) segs.push_back(poly.edge(i));
  return segs;
}

bool Instance::inside_obstacle(const Point& p) const {
  for (const auto& poly : obstacles)
    if (poly.contains(p)) return true;
  return false;
}

bool Instance::in_free_space(const Point& p) const { return !inside_obstacle(p); }

BBox Instance::bounds() const {
  BBox b;
  for (const auto& poly : obstacles)
    for (const auto& v : poly.vertices) b.expand(v);
  b.expand(source);
  return b;
}

void Instance::validate() const {
  checked(source);
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    if (obstacles[i].self_intersects())
      throw InputError("obstacle " + std::to_string(i) + " is self-intersecting");
  }
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    for (std::size_t j = i + 1; j < obstacles.size(); ++j) {
      const Polygon& a = obstacles[i];
      const Polygon& b = obstacles[j];
      bool overlap = false;
      for (std::size_t ei = 0; ei < a.size() && !overlap; ++ei)
        for (std::size_t ej = 0; ej < b.size() && !overlap; ++ej)
          if (segments_properly_intersect(a.edge(ei), b.edge(ej)) ||
              dist_segment_segment(a.edge(ei), b.edge(ej)) < 1e-12)
            overlap = true;
      if (!overlap && (a.contains_or_boundary(b.vertices[0]) || b.contains_or_boundary(a.vertices[0])))
        overlap = true;
      if (overlap)
        throw InputError("obstacles " + std::to_string(i) + " and " + std::to_string(j) +
                         " overlap or touch");
    }
  }
  for (std::size_t i = 0; i < obstacles.size(); ++i)
    if (obstacles[i].contains(source))
      throw InputError("source lies inside obstacle " + std::to_string(i));
}

namespace {

// Convex blob with k vertices around center with given radius.
Polygon random_blob(Rng& rng, const Point& center, double radius, std::size_t k) {
  std::vector<double> angles(k);
  for (auto& a : angles) a = rng.uniform(0.0, 2.0 * M_PI);
  std::sort(angles.begin(), angles.end());
  // enforce minimum angular gap so vertices are distinct
  for (std::size_t i = 1; i < k; ++i)
    angles[i] = std::max(angles[i], angles[i - 1] + 0.05);
  std::vector<Point> vs;
  for (double a : angles) {
    const double r = radius * rng.uniform(0.55, 1.0);
    vs.push_back({center.x + r * std::cos(a), center.y + r * std::sin(a)});
  }
  return Polygon(vs);
}

}  // namespace

Instance generate_instance(std::uint64_t seed, std::size_t count, std::size_t max_k) {
  Rng rng(mix64(seed * 0x51f7cc3 + 17));
  Instance inst;
  inst.seed = seed;
  inst.name = "random-" + std::to_string(seed);
  const double world = 10.0;
  std::size_t attempts = 0;
  while (inst.obstacles.size() < count && attempts < 4000) {
    ++attempts;
    const std::size_t k = 3 + rng.below(std::max<std::size_t>(1, max_k - 2));
    const double radius = rng.uniform(0.35, 1.1);
    const Point c{rng.uniform(radius + 0.2, world - radius - 0.2),
                  rng.uniform(radius + 0.2, world - radius - 0.2)};
    Polygon cand = random_blob(rng, c, radius, k);
    bool ok = !cand.self_intersects();
    for (const auto& other : inst.obstacles) {
      if (!ok) break;
      for (std::size_t ei = 0; ei < cand.size() && ok; ++ei)
        for (std::size_t ej = 0; ej < other.size() && ok; ++ej)
          if (dist_segment_segment(cand.edge(ei), other.edge(ej)) < 0.05) ok = false;
      if (ok && (other.contains_or_boundary(cand.vertices[0]) ||
                 cand.contains_or_boundary(other.vertices[0])))
        ok = false;
    }
    if (ok) inst.obstacles.push_back(std::move(cand));
  }
  // source in free space, away from obstacle boundaries
  for (;;) {
    const Point s{rng.uniform(0.0, world), rng.uniform(0.0, world)};
    bool ok = true;
    for (const auto& poly : inst.obstacles) {
      if (poly.contains_or_boundary(s)) ok = false;
      for (std::size_t i = 0; i < poly.size() && ok; ++i)
        if (dist_point_segment(s, poly.edge(i)) < 0.05) ok = false;
    }
    if (ok) {
      inst.source = s;
      break;
    }
  }
  inst.validate();
  return inst;
}

Instance generate_instance_n(std::uint64_t seed, std::size_t target_n) {
  // blobs average ~5.5 vertices
  const std::size_t count = std::max<std::size_t>(1, target_n / 6);
  Instance inst = generate_instance(seed, count, 8);
  // top up with triangles if we fell short (dense packings may reject blobs)
  Rng rng(mix64(seed ^ 0xabcdef123));
  std::size_t attempts = 0;
  while (inst.vertex_count() + 3 <= target_n && attempts < 20000) {
    ++attempts;
    const double r = rng.uniform(0.05, 0.15);
    const Point c{rng.uniform(0.3, 9.7), rng.uniform(0.3, 9.7)};
    Polygon cand;
    try {
      cand = random_blob(rng, c, r, 3);
    } catch (const InputError&) {
      continue;
    }
    bool ok = !cand.self_intersects() && dist(c, inst.source) > r + 0.05;
    for (const auto& other : inst.obstacles) {
      if (!ok) break;
      for (std::size_t ei = 0; ei < cand.size() && ok; ++ei)
        for (std::size_t ej = 0; ej < other.size() && ok; ++ej)
          if (dist_segment_segment(cand.edge(ei), other.edge(ej)) < 0.03) ok = false;
      if (ok && (other.contains_or_boundary(cand.vertices[0]) ||
                 cand.contains_or_boundary(other.vertices[0])))
        ok = false;
    }
    if (ok) inst.obstacles.push_back(std::move(cand));
  }
  inst.validate();
  return inst;
}

Point random_free_point(const Instance& inst, Rng& rng) {
  BBox b = inst.bounds();
  b.inflate(0.5 + 0.05 * std::max(b.width(), b.height()));
  for (int i = 0; i < 100000; ++i) {
    const Point p{rng.uniform(b.x0, b.x1), rng.uniform(b.y0, b.y1)};
    if (!inst.inside_obstacle(p)) return p;
  }
  return inst.source;
}

}  // namespace spmx
