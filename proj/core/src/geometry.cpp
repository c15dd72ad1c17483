#include "perco/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace perco {

namespace {

inline void two_sum(double a, double b, double& x, double& y) {
  x = a + b;
  const double bv = x - a;
  const double av = x - bv;
  y = (a - av) + (b - bv);
}

inline void two_product(double a, double b, double& p, double& e) {
  p = a * b;
  e = std::fma(a, b, -p);
}

// Sign of an exact sum of doubles, via a nonoverlapping expansion.
int expansion_sign(const double* terms, int n) {
  double h[32];
  int len = 0;
  for (int k = 0; k < n; ++k) {
    double q = terms[k];
    for (int i = 0; i < len; ++i) {
      double sum, err;
      two_sum(q, h[i], sum, err);
      h[i] = err;
      q = sum;
    }
    h[len++] = q;
  }
  for (int i = len - 1; i >= 0; --i) {
    if (h[i] > 0) return 1;
    if (h[i] < 0) return -1;
  }
  return 0;
}

int orientation_exact(Point a, Point b, Point c) {
  // ax*by - ax*cy - ay*bx + ay*cx + bx*cy - by*cx
  double t[12];
  two_product(a.x, b.y, t[0], t[1]);
  two_product(-a.x, c.y, t[2], t[3]);
  two_product(-a.y, b.x, t[4], t[5]);
  two_product(a.y, c.x, t[6], t[7]);
  two_product(b.x, c.y, t[8], t[9]);
  two_product(-b.y, c.x, t[10], t[11]);
  return expansion_sign(t, 12);
}

constexpr double kEps = std::numeric_limits<double>::epsilon() * 0.5;
constexpr double kCcwErrBound = (3.0 + 16.0 * kEps) * kEps;

bool on_segment_box(const Segment& s, Point p) {
  return p.x >= std::min(s.a.x, s.b.x) && p.x <= std::max(s.a.x, s.b.x) &&
         p.y >= std::min(s.a.y, s.b.y) && p.y <= std::max(s.a.y, s.b.y);
}

bool strictly_inside(const Box& b, Point p) {
  return p.x > b.lo.x && p.x < b.hi.x && p.y > b.lo.y && p.y < b.hi.y;
}

Point clamp_to(const Box& b, Point p) {
  return {std::clamp(p.x, b.lo.x, b.hi.x), std::clamp(p.y, b.lo.y, b.hi.y)};
}

struct ClipParams {
  double t0 = 0.0;
  double t1 = 1.0;
  int enter = -1;  // index into kAllSides, -1 if a is kept
  int leave = -1;
};

std::optional<ClipParams> liang_barsky(const Segment& s, const Box& b) {
  const double dx = s.b.x - s.a.x;
  const double dy = s.b.y - s.a.y;
  const double p[4] = {-dx, dx, -dy, dy};
  const double q[4] = {s.a.x - b.lo.x, b.hi.x - s.a.x, s.a.y - b.lo.y, b.hi.y - s.a.y};
  ClipParams c;
  for (int k = 0; k < 4; ++k) {
    if (p[k] == 0.0) {
      if (q[k] < 0.0) return std::nullopt;
      continue;
    }
    const double r = q[k] / p[k];
    if (p[k] < 0.0) {
      if (r > c.t0) {
        c.t0 = r;
        c.enter = k;
      }
    } else if (r < c.t1) {
      c.t1 = r;
      c.leave = k;
    }
  }
  if (c.t0 > c.t1) return std::nullopt;
  return c;
}

Point snap(Point p, const Box& b, int side) {
  switch (side) {
    case 0: p.x = b.lo.x; break;
    case 1: p.x = b.hi.x; break;
    case 2: p.y = b.lo.y; break;
    case 3: p.y = b.hi.y; break;
    default: break;
  }
  return clamp_to(b, p);
}

Point lerp(const Segment& s, double t) {
  return {s.a.x + t * (s.b.x - s.a.x), s.a.y + t * (s.b.y - s.a.y)};
}

bool finite(Point p) { return std::isfinite(p.x) && std::isfinite(p.y); }

}  // namespace

const char* to_string(Side side) {
  switch (side) {
    case Side::left: return "left";
    case Side::right: return "right";
    case Side::bottom: return "bottom";
    case Side::top: return "top";
  }
  return "?";
}

double Segment::length() const { return distance(a, b); }

Box::Box(Point lo_, Point hi_) : lo(lo_), hi(hi_) {
  if (!finite(lo) || !finite(hi)) throw GeometryError("box corners must be finite");
  if (!(lo.x < hi.x) || !(lo.y < hi.y)) throw GeometryError("box requires lo < hi in both coordinates");
}

Box Box::centered(Point c, double half_width) {
  return Box({c.x - half_width, c.y - half_width}, {c.x + half_width, c.y + half_width});
}

Box Box::expanded(double margin) const {
  return Box({lo.x - margin, lo.y - margin}, {hi.x + margin, hi.y + margin});
}

Segment Box::side(Side s) const {
  switch (s) {
    case Side::left: return {{lo.x, lo.y}, {lo.x, hi.y}};
    case Side::right: return {{hi.x, lo.y}, {hi.x, hi.y}};
    case Side::bottom: return {{lo.x, lo.y}, {hi.x, lo.y}};
    case Side::top: return {{lo.x, hi.y}, {hi.x, hi.y}};
  }
  return {};
}

Annulus::Annulus(const Box& inner_, const Box& outer_) : inner(inner_), outer(outer_) {
  if (!outer.strictly_contains(inner)) throw GeometryError("annulus inner box must lie strictly inside the outer box");
  const Point ci = inner.center();
  const Point co = outer.center();
  const double tol = 1e-12 * std::max({1.0, std::abs(co.x), std::abs(co.y), outer.width()});
  if (std::abs(ci.x - co.x) > tol || std::abs(ci.y - co.y) > tol)
    throw GeometryError("annulus boxes must share a center");
}

Annulus Annulus::centered(Point c, double inner_half, double outer_half) {
  return Annulus(Box::centered(c, inner_half), Box::centered(c, outer_half));
}

bool Annulus::contains(Point p) const { return outer.contains(p) && !strictly_inside(inner, p); }

double distance(Point p, Point q) { return std::hypot(p.x - q.x, p.y - q.y); }

int orientation(Point a, Point b, Point c) {
  const double detleft = (a.x - c.x) * (b.y - c.y);
  const double detright = (a.y - c.y) * (b.x - c.x);
  const double det = detleft - detright;
  double detsum;
  if (detleft > 0.0) {
    if (detright <= 0.0) return det > 0.0 ? 1 : (det < 0.0 ? -1 : 0);
    detsum = detleft + detright;
  } else if (detleft < 0.0) {
    if (detright >= 0.0) return det > 0.0 ? 1 : (det < 0.0 ? -1 : 0);
    detsum = -detleft - detright;
  } else {
    return det > 0.0 ? 1 : (det < 0.0 ? -1 : 0);
  }
  const double errbound = kCcwErrBound * detsum;
  if (det >= errbound) return 1;
  if (-det >= errbound) return -1;
  return orientation_exact(a, b, c);
}

bool segments_touch(const Segment& s1, const Segment& s2) {
  const int o1 = orientation(s1.a, s1.b, s2.a);
  const int o2 = orientation(s1.a, s1.b, s2.b);
  const int o3 = orientation(s2.a, s2.b, s1.a);
  const int o4 = orientation(s2.a, s2.b, s1.b);
  if (o1 * o2 < 0 && o3 * o4 < 0) return true;
  if (o1 == 0 && on_segment_box(s1, s2.a)) return true;
  if (o2 == 0 && on_segment_box(s1, s2.b)) return true;
  if (o3 == 0 && on_segment_box(s2, s1.a)) return true;
  if (o4 == 0 && on_segment_box(s2, s1.b)) return true;
  return false;
}

std::optional<Point> segments_intersect(const Segment& s1, const Segment& s2) {
  const int o1 = orientation(s1.a, s1.b, s2.a);
  const int o2 = orientation(s1.a, s1.b, s2.b);
  const int o3 = orientation(s2.a, s2.b, s1.a);
  const int o4 = orientation(s2.a, s2.b, s1.b);
  if (o1 * o2 < 0 && o3 * o4 < 0) {
    const double d1x = s1.b.x - s1.a.x, d1y = s1.b.y - s1.a.y;
    const double d2x = s2.b.x - s2.a.x, d2y = s2.b.y - s2.a.y;
    const double denom = d1x * d2y - d1y * d2x;
    const double t = ((s2.a.x - s1.a.x) * d2y - (s2.a.y - s1.a.y) * d2x) / denom;
    Point p{s1.a.x + t * d1x, s1.a.y + t * d1y};
    // Keep the point inside the overlap of both bounding boxes.
    const double x0 = std::max(std::min(s1.a.x, s1.b.x), std::min(s2.a.x, s2.b.x));
    const double x1 = std::min(std::max(s1.a.x, s1.b.x), std::max(s2.a.x, s2.b.x));
    const double y0 = std::max(std::min(s1.a.y, s1.b.y), std::min(s2.a.y, s2.b.y));
    const double y1 = std::min(std::max(s1.a.y, s1.b.y), std::max(s2.a.y, s2.b.y));
    p.x = std::clamp(p.x, x0, x1);
    p.y = std::clamp(p.y, y0, y1);
    return p;
  }
  if (o1 == 0 && on_segment_box(s1, s2.a)) return s2.a;
  if (o2 == 0 && on_segment_box(s1, s2.b)) return s2.b;
  if (o3 == 0 && on_segment_box(s2, s1.a)) return s1.a;
  if (o4 == 0 && on_segment_box(s2, s1.b)) return s1.b;
  return std::nullopt;
}

std::optional<Segment> clip_segment_to_box(const Segment& s, const Box& b) {
  const auto c = liang_barsky(s, b);
  if (!c) return std::nullopt;
  if (c->enter < 0 && c->leave < 0) return s;
  Segment out;
  out.a = c->enter < 0 ? s.a : snap(lerp(s, c->t0), b, c->enter);
  out.b = c->leave < 0 ? s.b : snap(lerp(s, c->t1), b, c->leave);
  return out;
}

std::vector<Segment> clip_segment_to_annulus(const Segment& s, const Annulus& ann) {
  std::vector<Segment> out;
  const auto piece = clip_segment_to_box(s, ann.outer);
  if (!piece) return out;
  const auto c = liang_barsky(*piece, ann.inner);
  if (!c || !strictly_inside(ann.inner, lerp(*piece, 0.5 * (c->t0 + c->t1)))) {
    out.push_back(*piece);
    return out;
  }
  // The open stretch (t0, t1) runs through the interior of the inner box.
  if (c->enter >= 0) {
    Segment first{piece->a, snap(lerp(*piece, c->t0), ann.inner, c->enter)};
    if (!first.degenerate()) out.push_back(first);
  }
  if (c->leave >= 0) {
    Segment second{snap(lerp(*piece, c->t1), ann.inner, c->leave), piece->b};
    if (!second.degenerate()) out.push_back(second);
  }
  return out;
}

bool segment_touches_side(const Segment& s, const Box& b, Side side) {
  const auto piece = clip_segment_to_box(s, b);
  return piece && segments_touch(*piece, b.side(side));
}

bool segment_intersects_box(const Segment& s, const Box& b) {
  if (b.contains(s.a) || b.contains(s.b)) return true;
  for (Side side : kAllSides)
    if (segments_touch(s, b.side(side))) return true;
  return false;
}

bool segment_intersects_annulus(const Segment& s, const Annulus& ann) {
  if (!segment_intersects_box(s, ann.outer)) return false;
  return !(strictly_inside(ann.inner, s.a) && strictly_inside(ann.inner, s.b));
}

double box_distance2(const Box& b, Point p) {
  const double dx = std::max({b.lo.x - p.x, 0.0, p.x - b.hi.x});
  const double dy = std::max({b.lo.y - p.y, 0.0, p.y - b.hi.y});
  return dx * dx + dy * dy;
}

double box_distance2(const Box& a, const Box& b) {
  const double dx = std::max({a.lo.x - b.hi.x, 0.0, b.lo.x - a.hi.x});
  const double dy = std::max({a.lo.y - b.hi.y, 0.0, b.lo.y - a.hi.y});
  return dx * dx + dy * dy;
}

double box_max_distance2(const Box& a, const Box& b) {
  const double dx = std::max(a.hi.x - b.lo.x, b.hi.x - a.lo.x);
  const double dy = std::max(a.hi.y - b.lo.y, b.hi.y - a.lo.y);
  return dx * dx + dy * dy;
}

Aabb bounds(const Segment& s) {
  return {std::min(s.a.x, s.b.x), std::min(s.a.y, s.b.y), std::max(s.a.x, s.b.x),
          std::max(s.a.y, s.b.y)};
}

}  // namespace perco
