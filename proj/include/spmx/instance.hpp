#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spmx/geom.hpp"

namespace spmx {

// A shortest-path problem input: pairwise disjoint polygonal obstacles and a
// source point in free space.
struct Instance {
  std::vector<Polygon> obstacles;
  Point source;
  std::string name;
  std::optional<std::uint64_t> seed;

  // total number of obstacle vertices (the paper's n)
  std::size_t vertex_count() const;
  // obstacle vertices plus the source (the point set V)
  std::vector<Point> v_points() const;
  std::vector<Segment> obstacle_edges() const;

  bool inside_obstacle(const Point& p) const;       // strict interior
  bool in_free_space(const Point& p) const;         // closure of free space
  BBox bounds() const;                              // obstacles + source

  // Throws InputError with a specific diagnostic on: self-intersecting
  // polygon, overlapping obstacles, source inside an obstacle.
  void validate() const;
};

// Deterministic random instance: `count` disjoint convex-ish obstacles in the
// unit square, scaled to ~[0,10]^2, plus a free-space source.
Instance generate_instance(std::uint64_t seed, std::size_t count,
                           std::size_t max_vertices_per_obstacle = 8);

// Random instance with approximately `target_n` total vertices.
Instance generate_instance_n(std::uint64_t seed, std::size_t target_n);

// Random point in the closed free space of the instance.
Point random_free_point(const Instance& inst, Rng& rng);

}  // namespace spmx
