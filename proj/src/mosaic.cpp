#include "posesynth/mosaic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace posesynth {

// ---------------------------------------------------------------------------
// Warping

namespace {

struct Taps {
  int x0, x1, y0, y1;
  double fx, fy;
};

Taps taps_at(double sx, double sy) {
  Taps t;
  const double flx = std::floor(sx), fly = std::floor(sy);
  t.x0 = static_cast<int>(flx);
  t.y0 = static_cast<int>(fly);
  t.fx = sx - flx;
  t.fy = sy - fly;
  t.x1 = t.fx > 0.0 ? t.x0 + 1 : t.x0;
  t.y1 = t.fy > 0.0 ? t.y0 + 1 : t.y0;
  return t;
}

std::uint8_t to_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

}  // namespace

WarpedCandidate warp_image(const AnnotatedImage& src, const Transform2D& t, int canvas) {
  if (!(t.scale > 0.0)) throw Error(ErrorKind::InvalidArgument, "transform scale must be > 0");
  if (canvas <= 0) throw Error(ErrorKind::InvalidArgument, "canvas must be > 0");
  const RgbImage& img = src.pixels;
  if (img.width <= 0 || img.height <= 0) throw Error(ErrorKind::InvalidArgument, "empty source image");

  WarpedCandidate out;
  out.image = RgbImage(canvas, canvas);
  out.valid = Raster<std::uint8_t>(canvas, canvas, 0);
  out.aligned_pose = t.apply(src.pose);

  const Transform2D inv = t.inverse();
  const double c = inv.scale * std::cos(inv.rotation);
  const double s = inv.scale * std::sin(inv.rotation);
  const double maxx = img.width - 1, maxy = img.height - 1;
  for (int v = 0; v < canvas; ++v) {
    for (int u = 0; u < canvas; ++u) {
      double sx = c * u - s * v + inv.translation.x();
      double sy = s * u + c * v + inv.translation.y();
      Taps tp = taps_at(sx, sy);
      const bool ok = tp.x0 >= 0 && tp.y0 >= 0 && tp.x1 <= maxx && tp.y1 <= maxy;
      out.valid(u, v) = ok ? 1 : 0;
      if (!ok) tp = taps_at(std::clamp(sx, 0.0, maxx), std::clamp(sy, 0.0, maxy));
      const std::uint8_t* p00 = img.at(tp.x0, tp.y0);
      const std::uint8_t* p10 = img.at(tp.x1, tp.y0);
      const std::uint8_t* p01 = img.at(tp.x0, tp.y1);
      const std::uint8_t* p11 = img.at(tp.x1, tp.y1);
      std::uint8_t* dst = out.image.at(u, v);
      for (int ch = 0; ch < 3; ++ch) {
        const double top = p00[ch] + tp.fx * (p10[ch] - p00[ch]);
        const double bot = p01[ch] + tp.fx * (p11[ch] - p01[ch]);
        dst[ch] = to_u8(top + tp.fy * (bot - top));
      }
    }
  }
  return out;
}

WarpedCandidate warp_candidate(const AnnotatedImage& src, const Match& m, int canvas) {
  WarpedCandidate out = warp_image(src, m.transform, canvas);
  out.match = m;
  return out;
}

// ---------------------------------------------------------------------------
// Delaunay

namespace {

double orient(const Vec2& a, const Vec2& b, const Vec2& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

// Positive when d lies inside the circumcircle of positively oriented (a, b, c).
long double incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const long double adx = a.x() - d.x(), ady = a.y() - d.y();
  const long double bdx = b.x() - d.x(), bdy = b.y() - d.y();
  const long double cdx = c.x() - d.x(), cdy = c.y() - d.y();
  const long double ad = adx * adx + ady * ady;
  const long double bd = bdx * bdx + bdy * bdy;
  const long double cd = cdx * cdx + cdy * cdy;
  return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx);
}

}  // namespace

std::vector<Triangle> delaunay(std::span<const Vec2> points) {
  // Collapse duplicates onto their first occurrence.
  std::vector<int> uniq;
  for (int i = 0; i < static_cast<int>(points.size()); ++i) {
    bool dup = false;
    for (int u : uniq) dup = dup || points[u] == points[i];
    if (!dup) uniq.push_back(i);
  }
  if (uniq.size() < 3) throw Error(ErrorKind::Degenerate, "fewer than 3 distinct points");

  Vec2 lo = points[uniq[0]], hi = lo;
  for (int u : uniq) {
    lo = lo.cwiseMin(points[u]);
    hi = hi.cwiseMax(points[u]);
  }
  const double extent = std::max((hi - lo).maxCoeff(), 1e-300);
  const double area_tol = 1e-12 * extent * extent;
  const long double circle_tol = 1e-12L * extent * extent * extent * extent;

  const int m = static_cast<int>(uniq.size());
  std::vector<Triangle> out;
  std::set<std::vector<int>> fanned;
  for (int a = 0; a < m; ++a) {
    for (int b = a + 1; b < m; ++b) {
      for (int c = b + 1; c < m; ++c) {
        int ia = uniq[a], ib = uniq[b], ic = uniq[c];
        const double o = orient(points[ia], points[ib], points[ic]);
        if (std::abs(o) <= area_tol) continue;
        if (o < 0) std::swap(ib, ic);
        bool empty = true;
        std::vector<int> on_circle = {ia, ib, ic};
        for (int d = 0; d < m && empty; ++d) {
          const int id = uniq[d];
          if (id == ia || id == ib || id == ic) continue;
          const long double ic_val = incircle(points[ia], points[ib], points[ic], points[id]);
          if (ic_val > circle_tol) empty = false;
          else if (ic_val >= -circle_tol) on_circle.push_back(id);
        }
        if (!empty) continue;
        if (on_circle.size() == 3) {
          out.push_back({ia, ib, ic});
          continue;
        }
        std::vector<int> key = on_circle;
        std::sort(key.begin(), key.end());
        if (!fanned.insert(key).second) continue;
        // Cocircular points are in convex position: sort by angle about the
        // centroid and fan from the first.
        Vec2 centroid = Vec2::Zero();
        for (int id : key) centroid += points[id];
        centroid /= static_cast<double>(key.size());
        std::sort(key.begin(), key.end(), [&](int x, int y) {
          const Vec2 dx = points[x] - centroid, dy = points[y] - centroid;
          return std::atan2(dx.y(), dx.x()) < std::atan2(dy.y(), dy.x());
        });
        for (std::size_t k = 1; k + 1 < key.size(); ++k) {
          Triangle t{key[0], key[k], key[k + 1]};
          const double ot = orient(points[t[0]], points[t[1]], points[t[2]]);
          if (std::abs(ot) <= area_tol) continue;
          if (ot < 0) std::swap(t[1], t[2]);
          out.push_back(t);
        }
      }
    }
  }
  if (out.empty()) throw Error(ErrorKind::Degenerate, "all points are collinear");
  return out;
}

// ---------------------------------------------------------------------------
// Rasterization

namespace {

// Edge function of the directed edge a->b evaluated at p, computed from the
// lower-indexed endpoint so the two triangles sharing an edge see exactly
// negated values.
double edge_fn(std::span<const Vec2> pts, int a, int b, double px, double py) {
  const bool flip = b < a;
  const Vec2& o = pts[flip ? b : a];
  const Vec2& e = pts[flip ? a : b];
  const double v = (e.x() - o.x()) * (py - o.y()) - (e.y() - o.y()) * (px - o.x());
  return flip ? -v : v;
}

bool owns_edge(const Vec2& a, const Vec2& b) {
  const Vec2 d = b - a;
  return d.y() > 0.0 || (d.y() == 0.0 && d.x() < 0.0);
}

}  // namespace

Raster<double> rasterize_barycentric(std::span<const Vec2> points, std::span<const double> values,
                                     std::span<const Triangle> triangles, int width, int height) {
  if (points.size() != values.size()) throw Error(ErrorKind::InvalidArgument, "points/values size mismatch");
  Raster<double> out(width, height, 0.0);
  Raster<std::uint8_t> covered(width, height, 0);

  std::map<std::pair<int, int>, int> edge_count;
  for (const Triangle& t : triangles) {
    const int a = t[0], b = t[1], c = t[2];
    for (auto [x, y] : {std::pair{a, b}, std::pair{b, c}, std::pair{c, a}})
      ++edge_count[{std::min(x, y), std::max(x, y)}];

    const double area = orient(points[a], points[b], points[c]);
    if (!(area > 0.0)) continue;
    const bool own_ab = owns_edge(points[a], points[b]);
    const bool own_bc = owns_edge(points[b], points[c]);
    const bool own_ca = owns_edge(points[c], points[a]);
    const double minx = std::min({points[a].x(), points[b].x(), points[c].x()});
    const double maxx = std::max({points[a].x(), points[b].x(), points[c].x()});
    const double miny = std::min({points[a].y(), points[b].y(), points[c].y()});
    const double maxy = std::max({points[a].y(), points[b].y(), points[c].y()});
    const int x0 = std::max(0, static_cast<int>(std::ceil(minx)));
    const int x1 = std::min(width - 1, static_cast<int>(std::floor(maxx)));
    const int y0 = std::max(0, static_cast<int>(std::ceil(miny)));
    const int y1 = std::min(height - 1, static_cast<int>(std::floor(maxy)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double e_ab = edge_fn(points, a, b, x, y);
        const double e_bc = edge_fn(points, b, c, x, y);
        const double e_ca = edge_fn(points, c, a, x, y);
        const bool in = (e_ab > 0.0 || (e_ab == 0.0 && own_ab)) && (e_bc > 0.0 || (e_bc == 0.0 && own_bc)) &&
                        (e_ca > 0.0 || (e_ca == 0.0 && own_ca));
        if (!in) continue;
        const double wa = e_bc / area, wb = e_ca / area, wc = e_ab / area;
        out(x, y) = wa * values[a] + wb * values[b] + wc * values[c];
        covered(x, y) = 1;
      }
    }
  }

  std::vector<std::pair<int, int>> boundary;
  for (const auto& [e, count] : edge_count)
    if (count == 1) boundary.push_back(e);

  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (covered(x, y)) continue;
      const Vec2 p(x, y);
      double best_d2 = std::numeric_limits<double>::infinity();
      double best_v = 0.0;
      for (const auto& [a, b] : boundary) {
        const Vec2 ab = points[b] - points[a];
        const double len2 = ab.squaredNorm();
        const double t = len2 > 0.0 ? std::clamp((p - points[a]).dot(ab) / len2, 0.0, 1.0) : 0.0;
        const double d2 = (p - (points[a] + t * ab)).squaredNorm();
        if (d2 < best_d2) {
          best_d2 = d2;
          best_v = values[a] + t * (values[b] - values[a]);
        }
      }
      out(x, y) = best_v;
    }
  }
  return out;
}

ProbabilityMap probability_map(const WarpedCandidate& cand, const QueryPose& qp, double sigma) {
  if (!(sigma > 0.0)) throw Error(ErrorKind::InvalidArgument, "sigma must be > 0");
  const Pose2D& p = qp.pose2d;
  const Pose2D& q = cand.aligned_pose;
  if (p.size() != q.size()) throw Error(ErrorKind::JointCountMismatch, "query/candidate size mismatch");

  std::vector<Vec2> verts;
  std::vector<double> vals;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (!p.visible[k] || !q.visible[k]) continue;
    const double d2 = (p.joints[k] - q.joints[k]).squaredNorm();
    verts.push_back(q.joints[k]);
    vals.push_back(std::exp(-d2 / (sigma * sigma)));
  }
  if (verts.size() < 3) throw Error(ErrorKind::Degenerate, "fewer than 3 mutually visible joints");
  const std::vector<Triangle> tris = delaunay(verts);

  ProbabilityMap out;
  out.values = rasterize_barycentric(verts, vals, tris, cand.valid.width, cand.valid.height);
  for (std::size_t i = 0; i < out.values.values.size(); ++i) {
    double& v = out.values.values[i];
    v = cand.valid.values[i] ? std::clamp(v, 0.0, 1.0) : 0.0;
  }
  return out;
}

IndexMap index_map(std::span<const ProbabilityMap> maps, std::span<const double> distances) {
  if (maps.empty()) throw Error(ErrorKind::InvalidArgument, "index_map needs at least one map");
  if (distances.size() != maps.size()) throw Error(ErrorKind::InvalidArgument, "maps/distances size mismatch");
  const int w = maps[0].values.width, h = maps[0].values.height;
  for (const auto& m : maps)
    if (m.values.width != w || m.values.height != h)
      throw Error(ErrorKind::InvalidArgument, "probability maps differ in size");

  int closest = 0;
  for (int j = 1; j < static_cast<int>(distances.size()); ++j)
    if (distances[j] < distances[closest]) closest = j;

  IndexMap out;
  out.indices = Raster<int>(w, h, 0);
  const std::size_t count = static_cast<std::size_t>(w) * h;
  for (std::size_t px = 0; px < count; ++px) {
    int best = 0;
    double best_v = maps[0].values.values[px];
    for (int j = 1; j < static_cast<int>(maps.size()); ++j) {
      const double v = maps[j].values.values[px];
      if (v > best_v) {
        best_v = v;
        best = j;
      }
    }
    out.indices.values[px] = best_v > 0.0 ? best : closest;
  }
  return out;
}

RgbImage compose_mosaic(std::span<const WarpedCandidate> candidates, const IndexMap& im) {
  const int w = im.indices.width, h = im.indices.height;
  RgbImage out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int j = im.indices(x, y);
      if (j < 0 || static_cast<std::size_t>(j) >= candidates.size())
        throw Error(ErrorKind::InvalidArgument, "index map refers to a missing candidate");
      const std::uint8_t* src = candidates[j].image.at(x, y);
      std::copy(src, src + 3, out.at(x, y));
    }
  }
  return out;
}

}  // namespace posesynth
