#include "perco/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <unordered_map>

namespace perco {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::uint32_t kLeafSize = 8;
constexpr double kProposalBudget = 4.0;

struct KdNode {
  Aabb box;
  std::uint32_t begin;
  std::uint32_t end;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double wmax = 1.0;

  std::uint32_t size() const { return end - begin; }
  bool leaf() const { return left < 0; }
};

struct KdItem {
  double x, y, w;
  std::uint32_t id;
};

std::uint32_t spread_bits(std::uint32_t v) {
  v &= 0xFFFF;
  v = (v | (v << 8)) & 0x00FF00FF;
  v = (v | (v << 4)) & 0x0F0F0F0F;
  v = (v | (v << 2)) & 0x33333333;
  v = (v | (v << 1)) & 0x55555555;
  return v;
}

// Binary tree over Morton order: every split halves a cell, so building is a
// radix sort plus one pass. Points are copied into tree order.
class KdTree {
 public:
  KdTree(const std::vector<Point>& pts, const std::vector<double>* weights) {
    const std::size_t n = pts.size();
    if (n == 0) return;
    double x0 = INFINITY, y0 = INFINITY, x1 = -INFINITY, y1 = -INFINITY;
    for (const Point& p : pts) {
      x0 = std::min(x0, p.x);
      y0 = std::min(y0, p.y);
      x1 = std::max(x1, p.x);
      y1 = std::max(y1, p.y);
    }
    const double sx = x1 > x0 ? 65535.0 / (x1 - x0) : 0.0;
    const double sy = y1 > y0 ? 65535.0 / (y1 - y0) : 0.0;
    std::vector<std::uint32_t> code(n), idx(n), code2(n), idx2(n);
    for (std::uint32_t i = 0; i < n; ++i) {
      const auto qx = static_cast<std::uint32_t>((pts[i].x - x0) * sx);
      const auto qy = static_cast<std::uint32_t>((pts[i].y - y0) * sy);
      code[i] = (spread_bits(qy) << 1) | spread_bits(qx);
      idx[i] = i;
    }
    for (int shift = 0; shift < 32; shift += 8) {
      std::size_t count[257] = {};
      for (std::size_t i = 0; i < n; ++i) ++count[((code[i] >> shift) & 0xFF) + 1];
      for (int d = 0; d < 256; ++d) count[d + 1] += count[d];
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t dst = count[(code[i] >> shift) & 0xFF]++;
        code2[dst] = code[i];
        idx2[dst] = idx[i];
      }
      code.swap(code2);
      idx.swap(idx2);
    }
    items_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const std::uint32_t i = idx[k];
      items_[k] = {pts[i].x, pts[i].y, weights ? (*weights)[i] : 1.0, i};
    }
    codes_ = std::move(code);
    nodes_.reserve(4 * n / kLeafSize + 2);
    build(0, static_cast<std::uint32_t>(n), 31);
  }

  const std::vector<KdNode>& nodes() const { return nodes_; }
  const std::vector<KdItem>& items() const { return items_; }

 private:
  std::int32_t build(std::uint32_t begin, std::uint32_t end, int bit) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back({});
    KdNode node;
    node.begin = begin;
    node.end = end;
    std::uint32_t mid = begin;
    // Skip levels where the whole range falls on one side.
    while (end - begin > kLeafSize && bit >= 0) {
      const std::uint32_t mask = 1u << bit;
      mid = static_cast<std::uint32_t>(
          std::partition_point(codes_.begin() + begin, codes_.begin() + end,
                               [mask](std::uint32_t c) { return (c & mask) == 0; }) -
          codes_.begin());
      --bit;
      if (mid != begin && mid != end) break;
    }
    if (mid == begin || mid == end || end - begin <= kLeafSize) {
      node.box = {INFINITY, INFINITY, -INFINITY, -INFINITY};
      double wmax = 1.0;
      for (std::uint32_t k = begin; k < end; ++k) {
        const KdItem& p = items_[k];
        node.box.x0 = std::min(node.box.x0, p.x);
        node.box.y0 = std::min(node.box.y0, p.y);
        node.box.x1 = std::max(node.box.x1, p.x);
        node.box.y1 = std::max(node.box.y1, p.y);
        wmax = std::max(wmax, p.w);
      }
      node.wmax = wmax;
      nodes_[id] = node;
      return id;
    }
    node.left = build(begin, mid, bit);
    node.right = build(mid, end, bit);
    const KdNode& l = nodes_[node.left];
    const KdNode& r = nodes_[node.right];
    node.box = {std::min(l.box.x0, r.box.x0), std::min(l.box.y0, r.box.y0), std::max(l.box.x1, r.box.x1),
                std::max(l.box.y1, r.box.y1)};
    node.wmax = std::max(l.wmax, r.wmax);
    nodes_[id] = node;
    return id;
  }

  std::vector<std::uint32_t> codes_;
  std::vector<KdItem> items_;
  std::vector<KdNode> nodes_;
};

double aabb_distance2(const Aabb& a, const Aabb& b) {
  const double dx = std::max({a.x0 - b.x1, 0.0, b.x0 - a.x1});
  const double dy = std::max({a.y0 - b.y1, 0.0, b.y0 - a.y1});
  return dx * dx + dy * dy;
}

double aabb_max_distance2(const Aabb& a, const Aabb& b) {
  const double dx = std::max(a.x1 - b.x0, b.x1 - a.x0);
  const double dy = std::max(a.y1 - b.y0, b.y1 - a.y0);
  return dx * dx + dy * dy;
}

double cross(Point o, Point a, Point b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

// Conservative test: can a segment between a point of a and a point of b meet t?
bool hull_meets_box(const Aabb& a, const Aabb& b, const Box& t) {
  const double x0 = std::min(a.x0, b.x0), x1 = std::max(a.x1, b.x1);
  const double y0 = std::min(a.y0, b.y0), y1 = std::max(a.y1, b.y1);
  if (x1 < t.lo.x || x0 > t.hi.x || y1 < t.lo.y || y0 > t.hi.y) return false;
  Point pts[8] = {{a.x0, a.y0}, {a.x1, a.y0}, {a.x0, a.y1}, {a.x1, a.y1},
                  {b.x0, b.y0}, {b.x1, b.y0}, {b.x0, b.y1}, {b.x1, b.y1}};
  std::sort(std::begin(pts), std::end(pts),
            [](Point p, Point q) { return p.x < q.x || (p.x == q.x && p.y < q.y); });
  Point hull[16];
  int k = 0;
  for (int i = 0; i < 8; ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (int i = 6, lower = k + 1; i >= 0; --i) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  const int m = k - 1;
  const double scale = 1e-9 * (1.0 + std::max({std::abs(x0), std::abs(x1), std::abs(y0), std::abs(y1)}));
  const Point corners[4] = {t.lo, {t.hi.x, t.lo.y}, t.hi, {t.lo.x, t.hi.y}};
  for (int i = 0; i < m; ++i) {
    const Point p = hull[i];
    const Point q = hull[i + 1];
    const double nx = q.y - p.y;
    const double ny = -(q.x - p.x);
    const double norm = std::hypot(nx, ny);
    if (norm == 0.0) continue;
    const double h = nx * p.x + ny * p.y;
    double lo = INFINITY;
    for (const Point& c : corners) lo = std::min(lo, nx * c.x + ny * c.y);
    if (lo > h + scale * norm) return false;
  }
  return true;
}

class EdgeSink {
 public:
  EdgeSink(const std::vector<Point>& pts, const RcmOptions& opt) : pts_(pts), opt_(opt) {
    min_len2_ = opt.min_length * opt.min_length;
  }

  void offer(std::uint32_t a, std::uint32_t b) {
    if (a > b) std::swap(a, b);
    Segment s{pts_[a], pts_[b]};
    if (min_len2_ > 0.0) {
      const double dx = s.a.x - s.b.x, dy = s.a.y - s.b.y;
      if (dx * dx + dy * dy < min_len2_) return;
    }
    if (opt_.must_hit && !segment_intersects_box(s, *opt_.must_hit)) return;
    edges.push_back({a, b, s});
  }

  std::vector<Edge> edges;

 private:
  const std::vector<Point>& pts_;
  const RcmOptions& opt_;
  double min_len2_;
};

class DualTreeSampler {
 public:
  DualTreeSampler(const std::vector<Point>& pts, const ConnectionFunction& cf, const std::vector<double>* w,
                  std::optional<double> trunc, RngStream& rng, const RcmOptions& opt, EdgeSink& sink)
      : cf_(cf), rng_(rng), opt_(opt), sink_(sink), tree_(pts, w) {
    trunc2_ = trunc ? (*trunc) * (*trunc) : INFINITY;
    min_len2_ = opt.min_length * opt.min_length;
  }

  void run() {
    if (tree_.nodes().empty()) return;
    visit(0, 0);
  }

 private:
  bool pruned(const KdNode& a, const KdNode& b, double d2min) const {
    if (d2min > trunc2_) return true;
    if (min_len2_ > 0.0 && aabb_max_distance2(a.box, b.box) < min_len2_) return true;
    if (opt_.must_hit && !hull_meets_box(a.box, b.box, *opt_.must_hit)) return true;
    return false;
  }

  // Keeps the pair with probability g / pmax.
  void try_pair(const KdItem& p, const KdItem& q, double pmax) {
    const double dx = p.x - q.x, dy = p.y - q.y;
    const double d2 = dx * dx + dy * dy;
    if (d2 > trunc2_) return;
    const double prob = cf_(std::sqrt(d2), p.w, q.w);
    if (prob <= 0.0) return;
    if (prob >= pmax || rng_.uniform() * pmax <= prob) sink_.offer(p.id, q.id);
  }

  // Unconditional Bernoulli draw for one pair.
  void draw_pair(const KdItem& p, const KdItem& q) {
    const double u = rng_.uniform();
    const double dx = p.x - q.x, dy = p.y - q.y;
    const double d2 = dx * dx + dy * dy;
    if (d2 > trunc2_) return;
    if (u <= cf_(std::sqrt(d2), p.w, q.w)) sink_.offer(p.id, q.id);
  }

  void visit(std::int32_t ia, std::int32_t ib) {
    const auto& nodes = tree_.nodes();
    const KdNode& a = nodes[ia];
    const KdNode& b = nodes[ib];
    const double d2min = aabb_distance2(a.box, b.box);
    if (pruned(a, b, d2min)) return;
    const auto& items = tree_.items();
    if (ia == ib) {
      if (a.leaf()) {
        for (std::uint32_t x = a.begin; x < a.end; ++x)
          for (std::uint32_t y = x + 1; y < a.end; ++y) draw_pair(items[x], items[y]);
        return;
      }
      visit(a.left, a.left);
      visit(a.left, a.right);
      visit(a.right, a.right);
      return;
    }
    const double pmax = std::min(1.0, cf_.bound(std::sqrt(d2min), a.wmax, b.wmax));
    if (pmax <= 0.0) return;
    const double na = a.size(), nb = b.size();
    if (pmax * na * nb <= kProposalBudget || (a.leaf() && b.leaf())) {
      sample_block(a, b, pmax);
      return;
    }
    const bool split_a = b.leaf() || (!a.leaf() && a.size() >= b.size());
    if (split_a) {
      visit(a.left, ib);
      visit(a.right, ib);
    } else {
      visit(ia, b.left);
      visit(ia, b.right);
    }
  }

  // Geometric skipping over the |a| x |b| pair grid at rate pmax.
  void sample_block(const KdNode& a, const KdNode& b, double pmax) {
    const auto& items = tree_.items();
    const std::uint64_t nb = b.size();
    const std::uint64_t total = static_cast<std::uint64_t>(a.size()) * nb;
    if (pmax >= 1.0) {
      for (std::uint64_t k = 0; k < total; ++k) draw_pair(items[a.begin + k / nb], items[b.begin + k % nb]);
      return;
    }
    const double log_q = std::log1p(-pmax);
    std::uint64_t k = 0;
    bool first = true;
    for (;;) {
      const double gap = std::floor(std::log(rng_.uniform()) / log_q);
      if (!(gap < static_cast<double>(total))) break;
      const auto g = static_cast<std::uint64_t>(gap);
      k = first ? g : k + 1 + g;
      first = false;
      if (k >= total) break;
      try_pair(items[a.begin + k / nb], items[b.begin + k % nb], pmax);
    }
  }

  const ConnectionFunction& cf_;
  RngStream& rng_;
  const RcmOptions& opt_;
  EdgeSink& sink_;
  KdTree tree_;
  double trunc2_;
  double min_len2_;
};

void scan_pairs(const std::vector<Point>& pts, const ConnectionFunction& cf, const std::vector<double>* w,
                std::optional<double> trunc, std::uint64_t pair_seed, EdgeSink& sink) {
  const std::uint32_t n = static_cast<std::uint32_t>(pts.size());
  auto consider = [&](std::uint32_t i, std::uint32_t j) {
    if (i > j) std::swap(i, j);
    const double d = distance(pts[i], pts[j]);
    if (trunc && d > *trunc) return;
    const double p = cf(d, w ? (*w)[i] : 1.0, w ? (*w)[j] : 1.0);
    if (hashed_uniform(pair_seed, i, j) <= p && p > 0.0) sink.offer(i, j);
  };
  if (!trunc || n < 64) {
    for (std::uint32_t i = 0; i < n; ++i)
      for (std::uint32_t j = i + 1; j < n; ++j) consider(i, j);
    return;
  }
  double x0 = INFINITY, y0 = INFINITY, x1 = -INFINITY, y1 = -INFINITY;
  for (const Point& p : pts) {
    x0 = std::min(x0, p.x); y0 = std::min(y0, p.y);
    x1 = std::max(x1, p.x); y1 = std::max(y1, p.y);
  }
  double cell = std::max(*trunc, 1e-12);
  // Keep the grid size bounded for tiny truncation radii.
  const double max_cells = 4.0 * n + 16.0;
  while (((x1 - x0) / cell + 1.0) * ((y1 - y0) / cell + 1.0) > max_cells) cell *= 2.0;
  const auto nx = static_cast<std::int64_t>((x1 - x0) / cell) + 1;
  const auto ny = static_cast<std::int64_t>((y1 - y0) / cell) + 1;
  std::vector<std::vector<std::uint32_t>> grid(static_cast<std::size_t>(nx * ny));
  auto cell_of = [&](const Point& p) {
    const auto cx = std::min<std::int64_t>(nx - 1, static_cast<std::int64_t>((p.x - x0) / cell));
    const auto cy = std::min<std::int64_t>(ny - 1, static_cast<std::int64_t>((p.y - y0) / cell));
    return std::pair{cx, cy};
  };
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto [cx, cy] = cell_of(pts[i]);
    grid[static_cast<std::size_t>(cy * nx + cx)].push_back(i);
  }
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto [cx, cy] = cell_of(pts[i]);
    for (std::int64_t gy = std::max<std::int64_t>(0, cy - 1); gy <= std::min(ny - 1, cy + 1); ++gy)
      for (std::int64_t gx = std::max<std::int64_t>(0, cx - 1); gx <= std::min(nx - 1, cx + 1); ++gx)
        for (std::uint32_t j : grid[static_cast<std::size_t>(gy * nx + gx)])
          if (j > i) consider(i, j);
  }
}

Box bounding_window(const std::vector<Point>& pts) {
  if (pts.empty()) return Box(-1.0, -1.0, 1.0, 1.0);
  double x0 = INFINITY, y0 = INFINITY, x1 = -INFINITY, y1 = -INFINITY;
  for (const Point& p : pts) {
    x0 = std::min(x0, p.x); y0 = std::min(y0, p.y);
    x1 = std::max(x1, p.x); y1 = std::max(y1, p.y);
  }
  const double pad = 1e-9 * (1.0 + std::max(x1 - x0, y1 - y0));
  return Box(x0 - pad, y0 - pad, x1 + pad, y1 + pad);
}

}  // namespace

ConnectionFunction ConnectionFunction::indicator(double r0) {
  ConnectionFunction cf;
  cf.kind = Kind::indicator;
  cf.r0 = r0;
  return cf;
}

ConnectionFunction ConnectionFunction::power_min(double c) {
  ConnectionFunction cf;
  cf.kind = Kind::power_min;
  cf.c = c;
  return cf;
}

ConnectionFunction ConnectionFunction::exponential(double mu) {
  ConnectionFunction cf;
  cf.kind = Kind::exponential;
  cf.mu = mu;
  return cf;
}

ConnectionFunction ConnectionFunction::inhomogeneous(double eta, double alpha) {
  ConnectionFunction cf;
  cf.kind = Kind::inhomogeneous;
  cf.eta = eta;
  cf.alpha = alpha;
  return cf;
}

void ConnectionFunction::validate() const {
  switch (kind) {
    case Kind::indicator:
      if (!(r0 > 0.0) || !std::isfinite(r0)) throw ModelError("indicator radius r0 must be finite and > 0");
      break;
    case Kind::power_min:
      if (!(c > 0.0)) throw ModelError("power_min exponent c must be > 0");
      break;
    case Kind::exponential:
      if (!(mu > 0.0)) throw ModelError("exponential rate mu must be > 0");
      break;
    case Kind::inhomogeneous:
      if (!(eta > 0.0)) throw ModelError("eta must be > 0");
      if (!(alpha > 0.0)) throw ModelError("alpha must be > 0");
      break;
  }
}

double ConnectionFunction::operator()(double dist, double w1, double w2) const {
  switch (kind) {
    case Kind::indicator: return dist <= r0 ? 1.0 : 0.0;
    case Kind::power_min: return dist <= 1.0 ? 1.0 : std::pow(dist, -c);
    case Kind::exponential: return std::exp(-mu * dist);
    case Kind::inhomogeneous:
      if (dist <= 0.0) return 1.0;
      return -std::expm1(-eta * w1 * w2 / std::pow(dist, alpha));
  }
  return 0.0;
}

double ConnectionFunction::bound(double dmin, double w1max, double w2max) const {
  return (*this)(dmin, w1max, w2max);
}

std::optional<double> ConnectionFunction::support_radius() const {
  if (kind == Kind::indicator) return r0;
  return std::nullopt;
}

std::string ConnectionFunction::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::indicator: os << "indicator(r0=" << r0 << ")"; break;
    case Kind::power_min: os << "power_min(c=" << c << ")"; break;
    case Kind::exponential: os << "exponential(mu=" << mu << ")"; break;
    case Kind::inhomogeneous: os << "inhomogeneous(eta=" << eta << ",alpha=" << alpha << ")"; break;
  }
  return os.str();
}

double connection_probability(const ConnectionFunction& cf, double dist, double w1, double w2) {
  if (!(dist > 0.0)) throw ModelError("connection_probability requires dist > 0");
  if (cf.weighted() && (!(w1 >= 1.0) || !(w2 >= 1.0)))
    throw ModelError("inhomogeneous connection requires weights >= 1");
  return cf(dist, w1, w2);
}

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::rcm: return "rcm";
    case ModelKind::ercm: return "ercm";
    case ModelKind::iercm: return "iercm";
    case ModelKind::sticks: return "sticks";
  }
  return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "rcm") return ModelKind::rcm;
  if (s == "ercm") return ModelKind::ercm;
  if (s == "iercm") return ModelKind::iercm;
  if (s == "sticks") return ModelKind::sticks;
  throw ModelError("unknown model kind '" + s + "'");
}

std::vector<Segment> Realization::segments() const {
  std::vector<Segment> out;
  out.reserve(segment_count());
  for (std::size_t k = 0; k < segment_count(); ++k) out.push_back(segment(k));
  return out;
}

std::pair<std::uint32_t, std::uint32_t> Realization::endpoints(std::size_t k) const {
  if (stick_model) return {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k)};
  return {edges[k].i, edges[k].j};
}

Realization Realization::restricted(const std::vector<char>& keep) const {
  Realization out;
  out.stick_model = stick_model;
  out.window = window;
  out.padding = padding;
  out.truncation_radius = truncation_radius;
  std::vector<std::uint32_t> remap(points.size(), UINT32_MAX);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!keep[i]) continue;
    remap[i] = static_cast<std::uint32_t>(out.points.size());
    out.points.push_back(points[i]);
    if (!weights.empty()) out.weights.push_back(weights[i]);
    if (stick_model) out.sticks.push_back(sticks[i]);
  }
  for (const Edge& e : edges)
    if (remap[e.i] != UINT32_MAX && remap[e.j] != UINT32_MAX) out.edges.push_back({remap[e.i], remap[e.j], e.segment});
  return out;
}

Realization build_rcm(const std::vector<Point>& points, const ConnectionFunction& cf,
                      const std::vector<double>* weights, std::optional<double> trunc, RngStream& rng,
                      const RcmOptions& options) {
  cf.validate();
  if (cf.weighted() && (!weights || weights->size() != points.size()))
    throw ModelError("inhomogeneous connection function needs one weight per point");
  if (trunc && !(*trunc > 0.0)) throw ModelError("truncation radius must be > 0");
  const std::vector<double>* w = cf.weighted() ? weights : nullptr;
  Realization r;
  r.points = points;
  if (w) r.weights = *w;
  r.window = bounding_window(points);
  r.truncation_radius = trunc;
  EdgeSink sink(points, options);
  if (options.sampler == PairSampler::scan) {
    const std::uint64_t seed = options.pair_seed ? *options.pair_seed : rng.next_u64();
    scan_pairs(points, cf, w, trunc, seed, sink);
  } else {
    DualTreeSampler(points, cf, w, trunc, rng, options, sink).run();
  }
  r.edges = std::move(sink.edges);
  std::sort(r.edges.begin(), r.edges.end(),
            [](const Edge& x, const Edge& y) { return x.i < y.i || (x.i == y.i && x.j < y.j); });
  return r;
}

Realization build_sticks(const std::vector<Point>& points, const StickLaw& law, RngStream& rng) {
  law.half_length.validate();
  law.orientation.validate();
  Realization r;
  r.stick_model = true;
  r.points = points;
  r.sticks.reserve(points.size());
  for (const Point& p : points) r.sticks.push_back(sample_stick_mark(p, law, rng));
  r.window = bounding_window(points);
  return r;
}

double expected_sticks_hitting(const Box& k, double lambda, const StickLaw& law) {
  const double el = law.half_length.mean();
  return lambda * (k.area() + 2.0 * el * (k.width() * law.orientation.mean_abs_sin() +
                                          k.height() * law.orientation.mean_abs_cos()));
}

Realization sample_sticks_hitting(const Box& k, double lambda, const StickLaw& law, RngStream& rng) {
  law.half_length.validate();
  law.orientation.validate();
  if (!(lambda >= 0.0)) throw ModelError("intensity must be >= 0");
  const double el = law.half_length.mean();
  if (!std::isfinite(el)) throw ModelError("sticks hitting a box need a finite mean half-length");
  const double w0 = k.area();
  const double w1 = 2.0 * el * k.width() * law.orientation.mean_abs_sin();
  const double w2 = 2.0 * el * k.height() * law.orientation.mean_abs_cos();
  const double total = w0 + w1 + w2;
  const std::uint64_t n = rng.poisson(lambda * total);

  Realization r;
  r.stick_model = true;
  r.window = k;
  r.sticks.reserve(n);
  r.points.reserve(n);
  double pad = 0.0;
  for (std::uint64_t s = 0; s < n; ++s) {
    const double u = rng.uniform() * total;
    double len, theta;
    if (u <= w0) {
      len = law.half_length.sample(rng);
      theta = law.orientation.sample(rng);
    } else {
      const bool by_sin = u <= w0 + w1;
      len = law.half_length.sample_size_biased(rng);
      for (;;) {
        theta = law.orientation.sample(rng);
        const double acc = by_sin ? std::abs(std::sin(theta)) : std::abs(std::cos(theta));
        if (rng.uniform() <= acc) break;
      }
    }
    const double ex = len * std::abs(std::cos(theta));
    const double ey = len * std::abs(std::sin(theta));
    Stick st;
    st.half_length = len;
    st.angle = theta;
    for (;;) {
      st.center = {rng.uniform(k.lo.x - ex, k.hi.x + ex), rng.uniform(k.lo.y - ey, k.hi.y + ey)};
      if (segment_intersects_box(st.segment(), k)) break;
    }
    pad = std::max({pad, k.lo.x - st.center.x, st.center.x - k.hi.x, k.lo.y - st.center.y,
                    st.center.y - k.hi.y});
    r.points.push_back(st.center);
    r.sticks.push_back(st);
  }
  r.padding = pad;
  return r;
}

}  // namespace perco
