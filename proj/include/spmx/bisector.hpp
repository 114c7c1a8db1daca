#pragma once

#include "spmx/geom.hpp"

namespace spmx {

// Relative tolerance for weighted-equidistance residuals.
inline constexpr double kEpsBisector = 1e-9;

struct WeightedGenerator {
  Point site;
  double weight = 0.0;   // geodesic distance d(s, site)
  bool artificial = false;

  WeightedGenerator() = default;
  WeightedGenerator(const Point& p, double w, bool art = false)
      : site(checked(p)), weight(w), artificial(art) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InputError("generator weight must be finite and >= 0");
  }
  double arrival(const Point& p) const { return weight + dist(site, p); }
  bool same_wavelet(const WeightedGenerator& o) const {
    return site == o.site && weight == o.weight;
  }
};

struct DegenerateInputError : GeometryError {
  explicit DegenerateInputError(const std::string& m) : GeometryError(m) {}
};
struct DegenerateOverlapError : GeometryError {
  explicit DegenerateOverlapError(const std::string& m) : GeometryError(m) {}
};

// Locus of points p with weight(u)+|pu| == weight(v)+|pv|. In general one
// hyperbola branch with foci u.site, v.site; a straight line when the weights
// are equal; a ray when |weight(u)-weight(v)| == |uv| (predecessor case);
// empty when one generator dominates the plane.
class Bisector {
 public:
  Bisector(const WeightedGenerator& u, const WeightedGenerator& v);

  const WeightedGenerator& u() const { return u_; }
  const WeightedGenerator& v() const { return v_; }
  bool empty_locus() const { return empty_; }
  bool degenerate_line() const { return degenerate_line_; }
  bool is_ray() const { return ray_; }

  // (weight_u + |pu|) - (weight_v + |pv|); zero on the locus.
  double residual(const Point& p) const { return u_.arrival(p) - v_.arrival(p); }
  // Negative: u's side (u arrives first). Positive: v's side.
  Sign classify(const Point& p) const;

  // Curve parameterization; theta in R (ray case: theta >= 0 half only).
  Point at(double theta) const;
  // Inverse of at() for points on (or near) the locus.
  double theta_of(const Point& p) const;
  // Upper bound on |theta| so that at(theta) stays within distance R of the
  // focus midpoint.
  double theta_bound(double R) const;

  // conic coefficients Ax^2+Bxy+Cy^2+Dx+Ey+F of the supporting conic
  void conic(double out[6]) const;

 private:
  WeightedGenerator u_, v_;
  Point mid_, dir_, perp_;  // frame: origin mid_, x along u->v
  double c_ = 0;            // half focal distance
  double a_ = 0;            // signed transverse semi-axis: x(theta) = a_*cosh(theta)
  double b_ = 0;            // conjugate semi-axis (0 => ray)
  bool empty_ = false;
  bool degenerate_line_ = false;
  bool ray_ = false;
};

// Intersections of the bisector locus with a segment, ordered along s.
std::vector<Point> bisector_segment_intersection(const Bisector& b, const Segment& s);

// Intersections of two bisector loci. Throws DegenerateOverlapError if the
// loci coincide. search_radius bounds the region of interest around the
// generators (<=0: derived automatically).
std::vector<Point> bisector_bisector_intersection(const Bisector& b1, const Bisector& b2,
                                                  double search_radius = -1.0);

}  // namespace spmx
