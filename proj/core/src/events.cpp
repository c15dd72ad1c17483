#include "perco/events.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <numbers>

namespace perco {

namespace {

using PiecePredicate = std::function<bool(const Piece&)>;

EventOutcome connect_sets(const ClippedArrangement& arr, const PiecePredicate& is_source,
                          const PiecePredicate& is_target) {
  EventOutcome out;
  const std::size_t n = arr.pieces.size();
  std::vector<char> src(n), dst(n);
  bool any_src = false, any_dst = false;
  for (std::size_t p = 0; p < n; ++p) {
    src[p] = is_source(arr.pieces[p]);
    dst[p] = is_target(arr.pieces[p]);
    any_src |= src[p] != 0;
    any_dst |= dst[p] != 0;
  }
  if (!any_src || !any_dst) return out;
  std::vector<char> comp_src(n, 0);
  for (std::size_t p = 0; p < n; ++p)
    if (src[p]) comp_src[arr.component[p]] = 1;
  bool reachable = false;
  for (std::size_t p = 0; p < n && !reachable; ++p) reachable = dst[p] && comp_src[arr.component[p]];
  if (!reachable) return out;

  const auto adj = arr.incidence();
  std::vector<std::int64_t> parent(n, -2);
  std::deque<std::uint32_t> queue;
  for (std::uint32_t p = 0; p < n; ++p)
    if (src[p]) {
      parent[p] = -1;
      queue.push_back(p);
    }
  while (!queue.empty()) {
    const std::uint32_t u = queue.front();
    queue.pop_front();
    if (dst[u]) {
      out.occurred = true;
      for (std::int64_t v = u; v >= 0; v = parent[v]) out.witness.push_back(static_cast<std::uint32_t>(v));
      std::reverse(out.witness.begin(), out.witness.end());
      for (std::uint32_t v : out.witness) out.witness_segments.push_back(arr.pieces[v].segment);
      return out;
    }
    for (std::uint32_t k : adj[u]) {
      const Intersection& x = arr.intersections[k];
      const std::uint32_t v = x.a == u ? x.b : x.a;
      if (parent[v] != -2) continue;
      parent[v] = u;
      queue.push_back(v);
    }
  }
  return out;
}

// Signed angle swept around c when moving straight from p to q.
double sweep_angle(Point c, Point p, Point q) {
  const double px = p.x - c.x, py = p.y - c.y;
  const double qx = q.x - c.x, qy = q.y - c.y;
  return std::atan2(px * qy - py * qx, px * qx + py * qy);
}

bool same_box(const Box& a, const Box& b) { return a == b; }

}  // namespace

const char* to_string(Direction d) { return d == Direction::left_right ? "left_right" : "top_down"; }

void require_inside(const Realization& r, const Box& region) {
  if (!r.sampled_area().contains(region))
    throw RegionError("event region is not inside the sampled area of the realization");
}

void ArmSpec::validate() const {
  auto inside_conf = [&](const auto& v) {
    using T = std::decay_t<decltype(v)>;
    if constexpr (std::is_same_v<T, Box>) return confinement.contains(v);
    else if constexpr (std::is_same_v<T, Segment>) return confinement.contains(v.a) && confinement.contains(v.b);
    else return confinement.contains(v.box);
  };
  if (!std::visit(inside_conf, source)) throw GeometryError("arm source must lie inside the confinement box");
  if (!std::visit(inside_conf, target)) throw GeometryError("arm target must lie inside the confinement box");
  bool disjoint = true;
  if (const Box* sb = std::get_if<Box>(&source)) {
    if (const Box* tb = std::get_if<Box>(&target)) disjoint = !sb->overlaps(*tb);
    else if (const Segment* ts = std::get_if<Segment>(&target)) disjoint = !segment_intersects_box(*ts, *sb);
    else disjoint = std::get<BoxBoundary>(target).box.strictly_contains(*sb);
  } else {
    const Segment& ss = std::get<Segment>(source);
    if (const Box* tb = std::get_if<Box>(&target)) disjoint = !segment_intersects_box(ss, *tb);
    else if (const Segment* ts = std::get_if<Segment>(&target)) disjoint = !segments_touch(ss, *ts);
    else {
      const Box& bb = std::get<BoxBoundary>(target).box;
      for (Side side : kAllSides) disjoint = disjoint && !segments_touch(ss, bb.side(side));
    }
  }
  if (!disjoint) throw GeometryError("arm source and target must be disjoint");
}

EventOutcome detect_crossing(const Realization& r, const CrossingSpec& spec, Linkage linkage) {
  require_inside(r, spec.rect);
  const auto arr = clip_and_connect(r, spec.rect, linkage);
  const std::uint16_t a = spec.direction == Direction::left_right ? kContactLeft : kContactTop;
  const std::uint16_t b = spec.direction == Direction::left_right ? kContactRight : kContactBottom;
  return connect_sets(
      arr, [a](const Piece& p) { return (p.contacts & a) != 0; },
      [b](const Piece& p) { return (p.contacts & b) != 0; });
}

EventOutcome detect_arm(const Realization& r, const ArmSpec& spec, Linkage linkage) {
  spec.validate();
  require_inside(r, spec.confinement);
  const auto arr = clip_and_connect(r, spec.confinement, linkage);
  PiecePredicate source;
  if (const Box* sb = std::get_if<Box>(&spec.source)) {
    source = [b = *sb](const Piece& p) { return segment_intersects_box(p.segment, b); };
  } else {
    source = [s = std::get<Segment>(spec.source)](const Piece& p) { return segments_touch(p.segment, s); };
  }
  PiecePredicate target;
  if (const BoxBoundary* bb = std::get_if<BoxBoundary>(&spec.target)) {
    if (same_box(bb->box, spec.confinement)) {
      target = [](const Piece& p) { return (p.contacts & kContactOuterAny) != 0; };
    } else {
      target = [b = bb->box](const Piece& p) {
        for (Side side : kAllSides)
          if (segments_touch(p.segment, b.side(side))) return true;
        return false;
      };
    }
  } else if (const Box* tb = std::get_if<Box>(&spec.target)) {
    target = [b = *tb](const Piece& p) { return segment_intersects_box(p.segment, b); };
  } else {
    target = [s = std::get<Segment>(spec.target)](const Piece& p) { return segments_touch(p.segment, s); };
  }
  return connect_sets(arr, source, target);
}

EventOutcome find_circuit(const ClippedArrangement& arr, const Annulus& ann) {
  EventOutcome out;
  const Point c = ann.center();
  const std::size_t n = arr.pieces.size();
  const auto adj = arr.incidence();
  // phi[p]: unwrapped angle of piece p's first endpoint along the tree path.
  std::vector<double> phi(n, 0.0);
  std::vector<std::int64_t> parent(n, -2);
  std::vector<std::int64_t> parent_edge(n, -1);
  std::vector<std::uint32_t> depth(n, 0);
  std::vector<char> tree_edge(arr.intersections.size(), 0);

  auto anchor = [&](std::uint32_t p) { return arr.pieces[p].segment.a; };

  for (std::uint32_t root = 0; root < n; ++root) {
    if (parent[root] != -2) continue;
    parent[root] = -1;
    std::deque<std::uint32_t> queue{root};
    while (!queue.empty()) {
      const std::uint32_t u = queue.front();
      queue.pop_front();
      for (std::uint32_t k : adj[u]) {
        const Intersection& x = arr.intersections[k];
        const std::uint32_t v = x.a == u ? x.b : x.a;
        if (parent[v] != -2) continue;
        parent[v] = u;
        parent_edge[v] = k;
        depth[v] = depth[u] + 1;
        tree_edge[k] = 1;
        phi[v] = phi[u] + sweep_angle(c, anchor(u), x.at) + sweep_angle(c, x.at, anchor(v));
        queue.push_back(v);
      }
    }
  }

  for (std::uint32_t k = 0; k < arr.intersections.size(); ++k) {
    if (tree_edge[k]) continue;
    const Intersection& x = arr.intersections[k];
    const double wa = phi[x.a] + sweep_angle(c, anchor(x.a), x.at);
    const double wb = phi[x.b] + sweep_angle(c, anchor(x.b), x.at);
    if (std::abs(wa - wb) <= std::numbers::pi) continue;
    out.occurred = true;
    std::vector<std::uint32_t> left, right;
    std::int64_t u = x.a, v = x.b;
    while (depth[u] > depth[v]) { left.push_back(static_cast<std::uint32_t>(u)); u = parent[u]; }
    while (depth[v] > depth[u]) { right.push_back(static_cast<std::uint32_t>(v)); v = parent[v]; }
    while (u != v) {
      left.push_back(static_cast<std::uint32_t>(u));
      right.push_back(static_cast<std::uint32_t>(v));
      u = parent[u];
      v = parent[v];
    }
    left.push_back(static_cast<std::uint32_t>(u));
    out.witness = left;
    out.witness.insert(out.witness.end(), right.rbegin(), right.rend());
    for (std::uint32_t p : out.witness) out.witness_segments.push_back(arr.pieces[p].segment);
    return out;
  }
  return out;
}

EventOutcome detect_circuit(const Realization& r, const Annulus& ann, Linkage linkage) {
  require_inside(r, ann.outer);
  return find_circuit(clip_and_connect(r, ann, linkage), ann);
}

double longest_edge_in_box(const Realization& r, const Box& b) {
  double best = 0.0;
  for (std::size_t k = 0; k < r.segment_count(); ++k) {
    const double len = r.segment_size(k);
    if (len <= best) continue;
    if (segment_intersects_box(r.segment(k), b)) best = len;
  }
  return best;
}

bool long_edge_in_annulus(const Realization& r, const Annulus& ann, double threshold) {
  for (std::size_t k = 0; k < r.segment_count(); ++k)
    if (r.segment_size(k) > threshold && segment_intersects_annulus(r.segment(k), ann)) return true;
  return false;
}

CompositeLayout composite_layout(double s, double rho) {
  if (!(s >= 1.0)) throw GeometryError("composite event needs s >= 1");
  if (!(rho >= 1.0)) throw GeometryError("composite event needs rho >= 1");
  CompositeLayout out;
  if (rho <= 2.0) {
    out.lr_rects.emplace_back(0.0, 0.0, rho * s, s);
    return out;
  }
  const int n = static_cast<int>(std::ceil(rho)) - 2;
  for (int j = 0; j <= n; ++j) {
    const double x = std::min(j * s, (rho - 2.0) * s);
    out.lr_rects.emplace_back(x, 0.0, x + 2.0 * s, s);
    if (j >= 1) out.td_squares.emplace_back(x, 0.0, x + s, s);
  }
  return out;
}

EventOutcome detect_composite_f(const Realization& r, double s, double rho, Linkage linkage) {
  const CompositeLayout layout = composite_layout(s, rho);
  require_inside(r, Box(0.0, 0.0, rho * s, s));
  EventOutcome out;
  out.occurred = true;
  auto absorb = [&](const EventOutcome& e) {
    if (!e.occurred) {
      out.occurred = false;
      return false;
    }
    out.witness_segments.insert(out.witness_segments.end(), e.witness_segments.begin(),
                                e.witness_segments.end());
    return true;
  };
  for (const Box& rect : layout.lr_rects)
    if (!absorb(detect_crossing(r, {rect, Direction::left_right}, linkage))) return {};
  for (const Box& sq : layout.td_squares)
    if (!absorb(detect_crossing(r, {sq, Direction::top_down}, linkage))) return {};
  return out;
}

bool frame_crossings(const Realization& r, const Annulus& ann, Linkage linkage) {
  const Box& i = ann.inner;
  const Box& o = ann.outer;
  const CrossingSpec parts[4] = {
      {Box(o.lo.x, i.hi.y, o.hi.x, o.hi.y), Direction::left_right},
      {Box(o.lo.x, o.lo.y, o.hi.x, i.lo.y), Direction::left_right},
      {Box(o.lo.x, o.lo.y, i.lo.x, o.hi.y), Direction::top_down},
      {Box(i.hi.x, o.lo.y, o.hi.x, o.hi.y), Direction::top_down},
  };
  for (const auto& spec : parts)
    if (!detect_crossing(r, spec, linkage).occurred) return false;
  return true;
}

}  // namespace perco
