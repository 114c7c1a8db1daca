#include "spmx/bisector.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace spmx {

Bisector::Bisector(const WeightedGenerator& u, const WeightedGenerator& v) : u_(u), v_(v) {
  const double duv = dist(u.site, v.site);
  const double scale = 1.0 + duv + u.weight + v.weight;
  if (duv <= 1e-15 * scale) {
    if (std::abs(u.weight - v.weight) <= kEpsBisector * scale)
      throw DegenerateInputError("coincident generators");
    empty_ = true;  // one wavelet dominates everywhere
    return;
  }
  mid_ = Point{0.5 * (u.site.x + v.site.x), 0.5 * (u.site.y + v.site.y)};
  dir_ = (v.site - u.site) * (1.0 / duv);
  perp_ = Point{-dir_.y, dir_.x};
  c_ = 0.5 * duv;
  const double D = u.weight - v.weight;  // locus: |pv| - |pu| = D
  a_ = -0.5 * D;                         // x(theta) = a_ * cosh(theta)
  const double gap = c_ * c_ - a_ * a_;
  if (std::abs(D) >= duv) {
    if (std::abs(D) - duv > kEpsBisector * scale) {
      empty_ = true;
      return;
    }
    // |D| == |uv| within tolerance: straight ray from the nearer focus.
    ray_ = true;
    degenerate_line_ = true;
    a_ = (a_ < 0) ? -c_ : c_;
    b_ = 0.0;
    return;
  }
  b_ = std::sqrt(std::max(0.0, gap));
}

Sign Bisector::classify(const Point& p) const {
  const double r = residual(p);
  const double eps = kEpsBisector * (1.0 + u_.arrival(p) + v_.arrival(p));
  if (r < -eps) return Sign::Negative;
  if (r > eps) return Sign::Positive;
  return Sign::Zero;
}

Point Bisector::at(double theta) const {
  if (ray_) theta = std::abs(theta);
  const double x = a_ * std::cosh(theta);
  const double y = b_ * std::sinh(theta);
  return mid_ + dir_ * x + perp_ * y;
}

double Bisector::theta_of(const Point& p) const {
  const Point q = p - mid_;
  if (ray_ || b_ <= 1e-300) {
    const double x = dot(q, dir_);
    const double r = (std::abs(a_) > 1e-300) ? std::abs(x) / std::abs(a_) : 1.0;
    return std::acosh(std::max(1.0, r));
  }
  return std::asinh(dot(q, perp_) / b_);
}

double Bisector::theta_bound(double R) const {
  double t = 40.0;
  if (std::abs(a_) > 1e-300) {
    const double q = std::max(1.0, R / std::abs(a_));
    t = std::min(t, std::acosh(q));
  }
  if (b_ > 1e-300) t = std::min(t, std::asinh(R / b_));
  return std::max(t, 1e-3);
}

void Bisector::conic(double out[6]) const {
  // frame coords: x = d.(p-m), y = n.(p-m) with d=dir_, n=perp_
  const double dx = dir_.x, dy = dir_.y, mx = mid_.x, my = mid_.y;
  const double nx = perp_.x, ny = perp_.y;
  auto fill_line = [&](double lx, double ly) {
    out[0] = out[1] = out[2] = 0.0;
    out[3] = lx;
    out[4] = ly;
    out[5] = -(lx * mx + ly * my);
  };
  if (empty_) {
    for (int i = 0; i < 6; ++i) out[i] = 0.0;
    return;
  }
  if (std::abs(a_) < 1e-300) {  // perpendicular-bisector line: x == 0
    fill_line(dx, dy);
    return;
  }
  if (ray_) {  // supporting line y == 0
    fill_line(nx, ny);
    return;
  }
  // b^2 x^2 - a^2 y^2 - a^2 b^2 = 0 expanded in world coordinates
  const double A = b_ * b_ * dx * dx - a_ * a_ * nx * nx;
  const double B = 2.0 * (b_ * b_ * dx * dy - a_ * a_ * nx * ny);
  const double C = b_ * b_ * dy * dy - a_ * a_ * ny * ny;
  const double px = -(b_ * b_ * dx * (dx * mx + dy * my) - a_ * a_ * nx * (nx * mx + ny * my));
  const double py = -(b_ * b_ * dy * (dx * mx + dy * my) - a_ * a_ * ny * (nx * mx + ny * my));
  const double f0 = b_ * b_ * (dx * mx + dy * my) * (dx * mx + dy * my) -
                    a_ * a_ * (nx * mx + ny * my) * (nx * mx + ny * my) - a_ * a_ * b_ * b_;
  out[0] = A;
  out[1] = B;
  out[2] = C;
  out[3] = 2.0 * px;
  out[4] = 2.0 * py;
  out[5] = f0;
}

namespace {

template <class F>
double bisect_root(const F& f, double lo, double hi, double flo) {
  for (int i = 0; i < 80; ++i) {
    if (hi - lo <= 1e-15 * (1.0 + std::abs(lo) + std::abs(hi))) break;
    const double m = 0.5 * (lo + hi);
    const double fm = f(m);
    if (fm == 0.0) return m;
    if ((fm < 0) == (flo < 0)) {
      lo = m;
      flo = fm;
    } else {
      hi = m;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

std::vector<Point> bisector_segment_intersection(const Bisector& b, const Segment& s) {
  std::vector<Point> pts;
  if (b.empty_locus()) return pts;
  const WeightedGenerator& u = b.u();
  const WeightedGenerator& v = b.v();
  auto resid = [&](double t) { return b.residual(s.at(t)); };

  std::vector<double> roots;
  const Point A = s.a, d = s.b - s.a;
  const double W = v.weight - u.weight;  // |pu| = |pv| + W on the locus
  const Point vu = v.site - u.site;
  const double alpha = 2.0 * dot(d, vu);
  const double beta = 2.0 * dot(A, vu) + dot(u.site, u.site) - dot(v.site, v.site) - W * W;
  auto push_root = [&](double t) {
    if (t < -1e-9 || t > 1.0 + 1e-9) return;
    t = std::clamp(t, 0.0, 1.0);
    roots.push_back(t);
  };
  if (W == 0.0) {
    if (alpha != 0.0) push_root(-beta / alpha);
  } else {
    const Point Av = A - v.site;
    const double qa = alpha * alpha - 4.0 * W * W * dot(d, d);
    const double qb = 2.0 * alpha * beta - 8.0 * W * W * dot(d, Av);
    const double qc = beta * beta - 4.0 * W * W * dot(Av, Av);
    if (std::abs(qa) < 1e-14 * (std::abs(qb) + std::abs(qc) + 1.0)) {
      if (qb != 0.0) push_root(-qc / qb);
    } else {
      const double disc = qb * qb - 4.0 * qa * qc;
      if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        push_root((-qb - sq) / (2.0 * qa));
        push_root((-qb + sq) / (2.0 * qa));
      }
    }
  }
  // Guard against missed/spurious roots: coarse sign scan plus bisection.
  const int N = 16;
  double prev = resid(0.0);
  for (int i = 1; i <= N; ++i) {
    const double t = static_cast<double>(i) / N;
    const double cur = resid(t);
    if ((prev < 0.0 && cur > 0.0) || (prev > 0.0 && cur < 0.0)) {
      const double t0 = static_cast<double>(i - 1) / N;
      bool near_known = false;
      for (double r : roots)
        if (r >= t0 - 1e-6 && r <= t + 1e-6) near_known = true;
      if (!near_known) roots.push_back(bisect_root(resid, t0, t, prev));
    }
    prev = cur;
  }
  std::sort(roots.begin(), roots.end());
  // Filter by true residual and dedupe.
  double last = -1e9;
  for (double t : roots) {
    // polish: small bracketed refinement around t
    double lo = std::max(0.0, t - 1.0 / N), hi = std::min(1.0, t + 1.0 / N);
    double flo = resid(lo), fhi = resid(hi);
    double tt = t;
    if ((flo < 0) != (fhi < 0)) tt = bisect_root(resid, lo, hi, flo);
    const Point p = s.at(tt);
    const double eps = kEpsBisector * (1.0 + u.arrival(p) + v.arrival(p));
    if (std::abs(b.residual(p)) > eps) continue;
    if (tt - last < 1e-9) continue;
    last = tt;
    pts.push_back(p);
  }
  return pts;
}

std::vector<Point> bisector_bisector_intersection(const Bisector& b1, const Bisector& b2,
                                                  double search_radius) {
  const bool same_fwd = b1.u().same_wavelet(b2.u()) && b1.v().same_wavelet(b2.v());
  const bool same_rev = b1.u().same_wavelet(b2.v()) && b1.v().same_wavelet(b2.u());
  if (same_fwd || same_rev) throw DegenerateOverlapError("identical bisectors");
  std::vector<Point> pts;
  if (b1.empty_locus() || b2.empty_locus()) return pts;

  double R = search_radius;
  if (R <= 0.0) {
    double m = 1.0;
    const Point sites[4] = {b1.u().site, b1.v().site, b2.u().site, b2.v().site};
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) m = std::max(m, dist(sites[i], sites[j]));
    m = std::max({m, b1.u().weight, b1.v().weight, b2.u().weight, b2.v().weight});
    R = 16.0 * m;
  }
  const double tb = b1.theta_bound(R);
  const double t_lo = b1.is_ray() ? 0.0 : -tb;
  auto g = [&](double th) { return b2.residual(b1.at(th)); };

  const int N = 512;
  std::vector<double> roots;
  double prev = g(t_lo);
  for (int i = 1; i <= N; ++i) {
    const double th = t_lo + (tb - t_lo) * i / N;
    const double cur = g(th);
    if ((prev < 0.0 && cur > 0.0) || (prev > 0.0 && cur < 0.0))
      roots.push_back(bisect_root(g, t_lo + (tb - t_lo) * (i - 1) / N, th, prev));
    else if (cur == 0.0)
      roots.push_back(th);
    prev = cur;
  }
  for (double th : roots) {
    const Point p = b1.at(th);
    const double e1 = kEpsBisector * (1.0 + b1.u().arrival(p) + b1.v().arrival(p));
    const double e2 = kEpsBisector * (1.0 + b2.u().arrival(p) + b2.v().arrival(p));
    if (std::abs(b1.residual(p)) > e1 || std::abs(b2.residual(p)) > e2) continue;
    bool dup = false;
    for (const Point& q : pts)
      if (dist(p, q) < 1e-7 * (1.0 + R / 16.0)) dup = true;
    if (!dup) pts.push_back(p);
  }
  return pts;
}

}  // namespace spmx
