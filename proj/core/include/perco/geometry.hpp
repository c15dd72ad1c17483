#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace perco {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

struct Segment {
  Point a;
  Point b;

  double length() const;
  bool degenerate() const { return a == b; }
  Point midpoint() const { return {(a.x + b.x) * 0.5, (a.y + b.y) * 0.5}; }

  friend bool operator==(const Segment&, const Segment&) = default;
};

enum class Side { left, right, bottom, top };

inline constexpr std::array<Side, 4> kAllSides = {Side::left, Side::right,
                                                  Side::bottom, Side::top};

const char* to_string(Side side);

struct Box {
  Point lo;
  Point hi;

  Box() = default;
  Box(Point lo_, Point hi_);
  Box(double x0, double y0, double x1, double y1) : Box(Point{x0, y0}, Point{x1, y1}) {}

  static Box centered(Point c, double half_width);
  static Box centered(double half_width) { return centered({0.0, 0.0}, half_width); }

  double width() const { return hi.x - lo.x; }
  double height() const { return hi.y - lo.y; }
  double area() const { return width() * height(); }
  Point center() const { return {(lo.x + hi.x) * 0.5, (lo.y + hi.y) * 0.5}; }

  bool contains(Point p) const {
    return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y;
  }
  bool contains(const Box& b) const {
    return b.lo.x >= lo.x && b.hi.x <= hi.x && b.lo.y >= lo.y && b.hi.y <= hi.y;
  }
  bool strictly_contains(const Box& b) const {
    return b.lo.x > lo.x && b.hi.x < hi.x && b.lo.y > lo.y && b.hi.y < hi.y;
  }
  bool overlaps(const Box& b) const {
    return lo.x <= b.hi.x && b.lo.x <= hi.x && lo.y <= b.hi.y && b.lo.y <= hi.y;
  }
  Box expanded(double margin) const;
  Segment side(Side s) const;

  friend bool operator==(const Box&, const Box&) = default;
};

// Closed annulus: outer box minus the open interior of the inner box.
struct Annulus {
  Box inner;
  Box outer;

  Annulus() = default;
  Annulus(const Box& inner_, const Box& outer_);

  static Annulus centered(Point c, double inner_half, double outer_half);

  Point center() const { return outer.center(); }
  bool contains(Point p) const;

  friend bool operator==(const Annulus&, const Annulus&) = default;
};

class GeometryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

double distance(Point p, Point q);

// Exact sign of the orientation determinant: +1 left turn, -1 right turn, 0 collinear.
int orientation(Point a, Point b, Point c);

bool segments_touch(const Segment& s1, const Segment& s2);
std::optional<Point> segments_intersect(const Segment& s1, const Segment& s2);

std::optional<Segment> clip_segment_to_box(const Segment& s, const Box& b);
// 0, 1 or 2 pieces of s inside the closed annulus.
std::vector<Segment> clip_segment_to_annulus(const Segment& s, const Annulus& ann);

bool segment_touches_side(const Segment& s, const Box& b, Side side);
bool segment_intersects_box(const Segment& s, const Box& b);
bool segment_intersects_annulus(const Segment& s, const Annulus& ann);

// Squared distance from p to the closed box (0 inside).
double box_distance2(const Box& b, Point p);
double box_distance2(const Box& a, const Box& b);
double box_max_distance2(const Box& a, const Box& b);

// Bounding box of s (may be degenerate, no invariant check).
struct Aabb {
  double x0, y0, x1, y1;
};
Aabb bounds(const Segment& s);

}  // namespace perco
