#include "perco/connectivity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace perco {

UnionFind::UnionFind(std::size_t n) : parent_(n), size_(n, 1), min_(n), classes_(n) {
  std::iota(parent_.begin(), parent_.end(), 0u);
  std::iota(min_.begin(), min_.end(), 0u);
}

std::uint32_t UnionFind::find(std::uint32_t x) {
  std::uint32_t root = x;
  while (parent_[root] != root) root = parent_[root];
  while (parent_[x] != root) {
    const std::uint32_t next = parent_[x];
    parent_[x] = root;
    x = next;
  }
  return root;
}

bool UnionFind::unite(std::uint32_t a, std::uint32_t b) {
  a = find(a);
  b = find(b);
  if (a == b) return false;
  if (size_[a] < size_[b] || (size_[a] == size_[b] && a > b)) std::swap(a, b);
  parent_[b] = a;
  size_[a] += size_[b];
  min_[a] = std::min(min_[a], min_[b]);
  --classes_;
  return true;
}

std::vector<std::uint32_t> UnionFind::labels() {
  std::vector<std::uint32_t> out(parent_.size());
  for (std::uint32_t i = 0; i < out.size(); ++i) out[i] = representative(i);
  return out;
}

Box region_bounds(const Region& region) {
  if (const Box* b = std::get_if<Box>(&region)) return *b;
  return std::get<Annulus>(region).outer;
}

std::uint16_t side_contact(Side side) {
  switch (side) {
    case Side::left: return kContactLeft;
    case Side::right: return kContactRight;
    case Side::bottom: return kContactBottom;
    case Side::top: return kContactTop;
  }
  return 0;
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> segment_intersections_sweep(
    const std::vector<Segment>& segments) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
  const std::size_t n = segments.size();
  if (n < 2) return out;

  double gx0 = INFINITY, gy0 = INFINITY, gx1 = -INFINITY, gy1 = -INFINITY;
  std::vector<double> extents(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Aabb b = bounds(segments[i]);
    gx0 = std::min(gx0, b.x0); gy0 = std::min(gy0, b.y0);
    gx1 = std::max(gx1, b.x1); gy1 = std::max(gy1, b.y1);
    extents[i] = std::max(b.x1 - b.x0, b.y1 - b.y0);
  }
  std::nth_element(extents.begin(), extents.begin() + n / 2, extents.end());
  const double span = std::max(gx1 - gx0, gy1 - gy0);
  double h = std::max({extents[n / 2], std::sqrt((gx1 - gx0) * (gy1 - gy0) / n), span * 1e-9, 1e-300});
  const double max_cells = 4.0 * n + 16.0;
  while (((gx1 - gx0) / h + 1.0) * ((gy1 - gy0) / h + 1.0) > max_cells) h *= 2.0;
  const auto nx = static_cast<std::int64_t>((gx1 - gx0) / h) + 1;
  const auto ny = static_cast<std::int64_t>((gy1 - gy0) / h) + 1;
  const double eps = h * 1e-9;

  auto col = [&](double x) {
    return std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor((x - gx0) / h)), 0, nx - 1);
  };
  auto row = [&](double y) {
    return std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor((y - gy0) / h)), 0, ny - 1);
  };
  // Visit every cell a segment may pass through, column by column.
  auto cover = [&](const Segment& s, auto&& emit) {
    const Aabb b = bounds(s);
    const double dx = s.b.x - s.a.x, dy = s.b.y - s.a.y;
    const std::int64_t c0 = col(b.x0), c1 = col(b.x1);
    for (std::int64_t c = c0; c <= c1; ++c) {
      double ylo = b.y0, yhi = b.y1;
      if (c0 != c1 && dx != 0.0) {
        const double xl = std::max(gx0 + c * h - eps, b.x0);
        const double xr = std::min(gx0 + (c + 1) * h + eps, b.x1);
        const double ta = std::clamp((xl - s.a.x) / dx, 0.0, 1.0);
        const double tb = std::clamp((xr - s.a.x) / dx, 0.0, 1.0);
        const double ya = s.a.y + ta * dy, yb = s.a.y + tb * dy;
        ylo = std::max(b.y0, std::min(ya, yb) - eps);
        yhi = std::min(b.y1, std::max(ya, yb) + eps);
      }
      for (std::int64_t r = row(ylo); r <= row(yhi); ++r) emit(static_cast<std::size_t>(r * nx + c));
    }
  };

  const std::size_t cells = static_cast<std::size_t>(nx * ny);
  std::vector<std::uint32_t> start(cells + 1, 0);
  for (std::size_t i = 0; i < n; ++i) cover(segments[i], [&](std::size_t cell) { ++start[cell + 1]; });
  for (std::size_t c = 0; c < cells; ++c) start[c + 1] += start[c];
  std::vector<std::uint32_t> fill(start.begin(), start.end() - 1);
  std::vector<std::uint32_t> items(start[cells]);
  for (std::size_t i = 0; i < n; ++i)
    cover(segments[i], [&](std::size_t cell) { items[fill[cell]++] = static_cast<std::uint32_t>(i); });

  std::vector<std::uint64_t> candidates;
  for (std::size_t c = 0; c < cells; ++c)
    for (std::uint32_t x = start[c]; x < start[c + 1]; ++x)
      for (std::uint32_t y = x + 1; y < start[c + 1]; ++y) {
        std::uint32_t i = items[x], j = items[y];
        if (i > j) std::swap(i, j);
        candidates.push_back((static_cast<std::uint64_t>(i) << 32) | j);
      }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  for (std::uint64_t key : candidates) {
    const auto i = static_cast<std::uint32_t>(key >> 32);
    const auto j = static_cast<std::uint32_t>(key & 0xffffffffu);
    if (segments_touch(segments[i], segments[j])) out.emplace_back(i, j);
  }
  return out;
}

std::vector<std::uint32_t> enhanced_components(const Realization& r) {
  UnionFind uf(r.points.size());
  for (const Edge& e : r.edges) uf.unite(e.i, e.j);
  const auto pairs = segment_intersections_sweep(r.segments());
  for (const auto& [k1, k2] : pairs) uf.unite(r.endpoints(k1).first, r.endpoints(k2).first);
  return uf.labels();
}

std::vector<std::uint32_t> direct_components(const Realization& r) {
  UnionFind uf(r.points.size());
  for (const Edge& e : r.edges) uf.unite(e.i, e.j);
  return uf.labels();
}

ClippedArrangement clip_and_connect(const Realization& r, const Region& region, Linkage linkage) {
  ClippedArrangement arr;
  arr.region = region;
  arr.linkage = r.stick_model ? Linkage::enhanced : linkage;

  const Box* box = std::get_if<Box>(&region);
  const Annulus* ann = std::get_if<Annulus>(&region);
  const Box outer = region_bounds(region);

  auto add_piece = [&](std::uint32_t src, const Segment& orig, const Segment& s) {
    Piece p;
    p.source = src;
    p.segment = s;
    p.keeps_a = s.a == orig.a;
    p.keeps_b = s.b == orig.b;
    for (Side side : kAllSides) {
      if (segments_touch(s, outer.side(side))) p.contacts |= side_contact(side);
      if (ann && segments_touch(s, ann->inner.side(side)))
        p.contacts |= static_cast<std::uint16_t>(side_contact(side) << 4);
    }
    arr.pieces.push_back(p);
  };

  for (std::size_t k = 0; k < r.segment_count(); ++k) {
    const Segment s = r.segment(k);
    const auto src = static_cast<std::uint32_t>(k);
    if (box) {
      if (auto piece = clip_segment_to_box(s, *box)) add_piece(src, s, *piece);
    } else {
      for (const Segment& piece : clip_segment_to_annulus(s, *ann)) add_piece(src, s, piece);
    }
  }

  if (arr.linkage == Linkage::enhanced) {
    std::vector<Segment> segs;
    segs.reserve(arr.pieces.size());
    for (const Piece& p : arr.pieces) segs.push_back(p.segment);
    for (const auto& [i, j] : segment_intersections_sweep(segs)) {
      if (auto at = segments_intersect(segs[i], segs[j])) arr.intersections.push_back({i, j, *at});
    }
  } else {
    // Pieces meet only at graph vertices that lie in the region.
    std::unordered_map<std::uint32_t, std::vector<std::uint32_t>> at_vertex;
    for (std::uint32_t p = 0; p < arr.pieces.size(); ++p) {
      const Piece& pc = arr.pieces[p];
      const Edge& e = r.edges[pc.source];
      if (pc.keeps_a) at_vertex[e.i].push_back(p);
      if (pc.keeps_b) at_vertex[e.j].push_back(p);
    }
    std::vector<std::uint32_t> vertices;
    vertices.reserve(at_vertex.size());
    for (const auto& kv : at_vertex) vertices.push_back(kv.first);
    std::sort(vertices.begin(), vertices.end());
    for (std::uint32_t v : vertices) {
      const auto& list = at_vertex[v];
      for (std::size_t k = 1; k < list.size(); ++k)
        arr.intersections.push_back({list[0], list[k], r.points[v]});
    }
  }

  UnionFind uf(arr.pieces.size());
  for (const Intersection& x : arr.intersections) uf.unite(x.a, x.b);
  arr.component = uf.labels();
  return arr;
}

std::vector<ComponentSummary> ClippedArrangement::summaries(const Realization& r) const {
  std::vector<ComponentSummary> out;
  std::unordered_map<std::uint32_t, std::size_t> index;
  for (std::uint32_t p = 0; p < pieces.size(); ++p) {
    const std::uint32_t c = component[p];
    auto it = index.find(c);
    if (it == index.end()) {
      it = index.emplace(c, out.size()).first;
      ComponentSummary s;
      s.id = c;
      s.bbox = bounds(pieces[p].segment);
      out.push_back(s);
    }
    ComponentSummary& s = out[it->second];
    ++s.piece_count;
    s.contacts |= pieces[p].contacts;
    const Aabb b = bounds(pieces[p].segment);
    s.bbox = {std::min(s.bbox.x0, b.x0), std::min(s.bbox.y0, b.y0), std::max(s.bbox.x1, b.x1),
              std::max(s.bbox.y1, b.y1)};
    const auto [u, v] = r.endpoints(pieces[p].source);
    s.vertices.push_back(u);
    if (v != u) s.vertices.push_back(v);
  }
  for (auto& s : out) {
    std::sort(s.vertices.begin(), s.vertices.end());
    s.vertices.erase(std::unique(s.vertices.begin(), s.vertices.end()), s.vertices.end());
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

std::vector<std::vector<std::uint32_t>> ClippedArrangement::incidence() const {
  std::vector<std::vector<std::uint32_t>> adj(pieces.size());
  for (std::uint32_t k = 0; k < intersections.size(); ++k) {
    adj[intersections[k].a].push_back(k);
    adj[intersections[k].b].push_back(k);
  }
  return adj;
}

}  // namespace perco
