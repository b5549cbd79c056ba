#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "../support.hpp"
#include "posesynth/mosaic.hpp"

using namespace posesynth;

namespace {

AnnotatedImage noise_image(Rng& rng, int w, int h, Pose2D pose) {
  AnnotatedImage a{"src", RgbImage(w, h), std::move(pose)};
  for (auto& b : a.pixels.data) b = static_cast<std::uint8_t>(rng.below(256));
  return a;
}

double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

/// Monotone-chain hull area.
double hull_area(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  std::vector<Vec2> h;
  for (int pass = 0; pass < 2; ++pass) {
    const std::size_t start = h.size();
    for (const auto& p : pts) {
      while (h.size() >= start + 2 && cross(h[h.size() - 2], h.back(), p) <= 0) h.pop_back();
      h.push_back(p);
    }
    h.pop_back();
    std::reverse(pts.begin(), pts.end());
  }
  double a = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) a += cross(Vec2::Zero(), h[i], h[(i + 1) % h.size()]);
  return 0.5 * a;
}

}  // namespace

TEST_CASE("warp_image: identity and translation") {
  Rng rng(1);
  const AnnotatedImage src = noise_image(rng, 40, 40, Pose2D({{5, 5}, {30, 30}}));
  const WarpedCandidate id = warp_image(src, Transform2D::identity(), 40);
  CHECK(id.image == src.pixels);
  CHECK(std::all_of(id.valid.values.begin(), id.valid.values.end(), [](auto v) { return v == 1; }));
  CHECK(id.aligned_pose == src.pose);

  const WarpedCandidate shifted = warp_image(src, Transform2D{0.0, 1.0, Vec2(30, 0)}, 40);
  for (int y = 0; y < 40; ++y)
    for (int x = 0; x < 40; ++x) {
      CHECK(shifted.valid(x, y) == (x >= 30 ? 1 : 0));
      if (x >= 30) CHECK(std::equal(shifted.image.at(x, y), shifted.image.at(x, y) + 3, src.pixels.at(x - 30, y)));
    }
  CHECK((shifted.aligned_pose.joints[0] - Vec2(35, 5)).norm() < 1e-12);
}

TEST_CASE("warp_image: scale 2 on a 2x2 checkerboard") {
  AnnotatedImage board{"board", RgbImage(2, 2), Pose2D({{0, 0}, {1, 1}})};
  const std::uint8_t v[2][2] = {{255, 0}, {0, 255}};  // [y][x]
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 2; ++x) std::fill(board.pixels.at(x, y), board.pixels.at(x, y) + 3, v[y][x]);
  const WarpedCandidate w = warp_image(board, Transform2D{0.0, 2.0, Vec2::Zero()}, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) {
      // Canvas pixel (x, y) samples source (x/2, y/2).
      const double sx = x / 2.0, sy = y / 2.0;
      const bool inside = sx <= 1.0 && sy <= 1.0;
      CHECK(w.valid(x, y) == (inside ? 1 : 0));
      if (!inside) continue;
      const int x0 = static_cast<int>(sx), y0 = static_cast<int>(sy);
      const double fx = sx - x0, fy = sy - y0;
      auto at = [&](int xx, int yy) { return static_cast<double>(v[std::min(yy, 1)][std::min(xx, 1)]); };
      const double expect = (1 - fx) * (1 - fy) * at(x0, y0) + fx * (1 - fy) * at(x0 + 1, y0) +
                            (1 - fx) * fy * at(x0, y0 + 1) + fx * fy * at(x0 + 1, y0 + 1);
      CHECK(w.image.at(x, y)[0] == static_cast<int>(std::floor(expect + 0.5)));
    }
  CHECK(w.image.at(1, 0)[0] == 128);  // half-way between 255 and 0
  CHECK(w.image.at(1, 1)[0] == 128);  // average of all four taps
  CHECK(w.image.at(2, 2)[0] == 255);
}

TEST_CASE("warp_image: validity matches the four-tap rule under rotation") {
  Rng rng(2);
  const AnnotatedImage src = noise_image(rng, 50, 30, Pose2D({{5, 5}, {20, 20}}));
  const Transform2D t{0.4, 1.3, Vec2(12, -3)};
  const WarpedCandidate w = warp_image(src, t, 64);
  const Transform2D inv = t.inverse();
  int mismatches = 0;
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) {
      const Vec2 s = inv.apply(Vec2(x, y));
      const bool ok = s.x() >= 0 && s.y() >= 0 && std::ceil(s.x()) <= 49 && std::ceil(s.y()) <= 29;
      mismatches += ok != (w.valid(x, y) == 1);
    }
  // Pixels whose source lies within rounding distance of the border may differ.
  CHECK(mismatches <= 2);
  CHECK_THROWS_AS(warp_image(src, Transform2D{0.0, 0.0, Vec2::Zero()}, 10), Error);
}

TEST_CASE("delaunay: simple cases") {
  const std::vector<Vec2> square = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const auto tris = delaunay(square);
  CHECK(tris.size() == 2);
  double area = 0.0;
  for (const auto& t : tris) area += 0.5 * cross(square[t[0]], square[t[1]], square[t[2]]);
  CHECK(area == doctest::Approx(1.0));

  CHECK_THROWS_AS(delaunay(std::vector<Vec2>{{0, 0}, {1, 1}, {2, 2}}), Error);
  CHECK_THROWS_AS(delaunay(std::vector<Vec2>{{0, 0}, {1, 1}}), Error);
  CHECK(delaunay(std::vector<Vec2>{{0, 0}, {4, 0}, {0, 4}, {0, 0}}).size() == 1);
}

TEST_CASE("delaunay: empty circumcircles and hull coverage on random sets") {
  Rng rng(5);
  for (int set = 0; set < 30; ++set) {
    const int n = 3 + static_cast<int>(rng.below(10));
    std::vector<Vec2> pts;
    for (int i = 0; i < n; ++i) pts.emplace_back(rng.uniform(0, 220), rng.uniform(0, 220));
    const auto tris = delaunay(pts);
    double area = 0.0;
    for (const auto& t : tris) {
      const Vec2 &a = pts[t[0]], &b = pts[t[1]], &c = pts[t[2]];
      CHECK(cross(a, b, c) > 0);
      area += 0.5 * cross(a, b, c);
      // Circumcircle from the perpendicular-bisector formula.
      const double d = 2 * (a.x() * (b.y() - c.y()) + b.x() * (c.y() - a.y()) + c.x() * (a.y() - b.y()));
      const Vec2 center((a.squaredNorm() * (b.y() - c.y()) + b.squaredNorm() * (c.y() - a.y()) + c.squaredNorm() * (a.y() - b.y())) / d,
                        (a.squaredNorm() * (c.x() - b.x()) + b.squaredNorm() * (a.x() - c.x()) + c.squaredNorm() * (b.x() - a.x())) / d);
      const double r = (a - center).norm();
      for (int k = 0; k < n; ++k) {
        if (k == t[0] || k == t[1] || k == t[2]) continue;
        CHECK((pts[k] - center).norm() >= r - 1e-9 * std::max(1.0, r));
      }
    }
    CHECK(area == doctest::Approx(hull_area(pts)).epsilon(1e-9));
  }
}

TEST_CASE("rasterize_barycentric") {
  const std::vector<Vec2> pts = {{0, 0}, {30, 0}, {0, 30}};
  const std::vector<double> vals = {1.0, 0.5, 0.25};
  const std::vector<Triangle> tris = {{0, 1, 2}};
  const Raster<double> r = rasterize_barycentric(pts, vals, tris, 40, 40);
  CHECK(r(10, 10) == doctest::Approx((1.0 + 0.5 + 0.25) / 3.0).epsilon(1e-12));
  CHECK(r(10, 10) == doctest::Approx(0.5833).epsilon(1e-4));
  CHECK(r(0, 0) == doctest::Approx(1.0));
  CHECK(r(30, 0) == doctest::Approx(0.5));
  CHECK(r(0, 30) == doctest::Approx(0.25));
  // Outside the hull: value at the nearest boundary point. (39, 39) projects
  // onto the hypotenuse at (15, 15), the midpoint of the 0.5 and 0.25 vertices.
  CHECK(r(39, 39) == doctest::Approx(0.375));
  CHECK(r(35, 0) == doctest::Approx(0.5));
}

TEST_CASE("rasterize_barycentric is continuous across shared edges") {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<Vec2> pts = {{10, 10}, {90, 10}, {90, 90}, {10, 90}};
    std::vector<double> vals;
    for (int i = 0; i < 4; ++i) vals.push_back(rng.unit());
    const std::vector<Triangle> tris = {{0, 1, 2}, {0, 2, 3}};
    const Raster<double> r = rasterize_barycentric(pts, vals, tris, 100, 100);
    // Each triangle alone: the diagonal becomes its boundary, so both sides
    // report their own limit there.
    const Raster<double> lower = rasterize_barycentric(pts, vals, std::vector<Triangle>{tris[0]}, 100, 100);
    const Raster<double> upper = rasterize_barycentric(pts, vals, std::vector<Triangle>{tris[1]}, 100, 100);
    // Diagonal 0-2 passes through pixel centers (t, t).
    for (int t = 10; t <= 90; ++t) {
      const double s = (t - 10) / 80.0;
      CHECK(r(t, t) == doctest::Approx(vals[0] + s * (vals[2] - vals[0])).epsilon(1e-9));
      CHECK(std::abs(lower(t, t) - upper(t, t)) < 1e-6);
    }
  }
}

TEST_CASE("probability_map") {
  Rng rng(7);
  Pose2D q({{40, 40}, {100, 40}, {70, 100}, {70, 60}});
  AnnotatedImage src = noise_image(rng, 120, 120, q);
  QueryPose qp;
  qp.pose2d = q;
  const WarpedCandidate perfect = warp_image(src, Transform2D::identity(), 120);
  const ProbabilityMap pm = probability_map(perfect, qp, 15.0);
  for (const auto& j : q.joints) CHECK(pm.values(static_cast<int>(j.x()), static_cast<int>(j.y())) == doctest::Approx(1.0));
  CHECK(pm.values(70, 50) == doctest::Approx(1.0));

  // Query joint 0 displaced by sigma from the candidate's.
  qp.pose2d.joints[0] += Vec2(15, 0);
  const ProbabilityMap off = probability_map(perfect, qp, 15.0);
  CHECK(off.values(40, 40) == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
  for (double v : off.values.values) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }

  // Invalid pixels are zero.
  const WarpedCandidate moved = warp_image(src, Transform2D{0.0, 1.0, Vec2(10, 0)}, 120);
  QueryPose qm;
  qm.pose2d = moved.aligned_pose;
  const ProbabilityMap mm = probability_map(moved, qm, 15.0);
  for (int y = 0; y < 120; ++y)
    for (int x = 0; x < 10; ++x) CHECK(mm.values(x, y) == 0.0);
}

TEST_CASE("index_map") {
  ProbabilityMap a{Raster<double>(4, 2, 0.0)}, b{Raster<double>(4, 2, 0.0)};
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 4; ++x) {
      a.values(x, y) = x < 2 ? 0.9 : 0.1;
      b.values(x, y) = x < 2 ? 0.2 : 0.8;
    }
  const IndexMap im = index_map(std::vector<ProbabilityMap>{a, b}, std::vector<double>{1.0, 2.0});
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 4; ++x) CHECK(im.indices(x, y) == (x < 2 ? 0 : 1));

  const IndexMap single = index_map(std::vector<ProbabilityMap>{a}, std::vector<double>{3.0});
  for (int v : single.indices.values) CHECK(v == 0);

  // All zero: smallest distance wins. Ties: lowest index.
  ProbabilityMap z{Raster<double>(3, 3, 0.0)};
  const IndexMap zi = index_map(std::vector<ProbabilityMap>{z, z, z}, std::vector<double>{5.0, 1.0, 1.0});
  for (int v : zi.indices.values) CHECK(v == 1);
  ProbabilityMap h{Raster<double>(3, 3, 0.5)};
  const IndexMap ti = index_map(std::vector<ProbabilityMap>{z, h, h}, std::vector<double>{0.0, 1.0, 1.0});
  for (int v : ti.indices.values) CHECK(v == 1);

  Rng rng(8);
  std::vector<ProbabilityMap> maps(5, ProbabilityMap{Raster<double>(30, 20, 0.0)});
  for (auto& m : maps)
    for (auto& v : m.values.values) v = rng.below(4) == 0 ? 0.0 : static_cast<double>(rng.below(5)) / 4.0;
  const std::vector<double> dist = {3, 2, 5, 1, 4};
  const IndexMap ri = index_map(maps, dist);
  for (std::size_t px = 0; px < 600; ++px) {
    int best = 0;
    for (int j = 1; j < 5; ++j)
      if (maps[j].values.values[px] > maps[best].values.values[px]) best = j;
    if (maps[best].values.values[px] == 0.0) best = 3;
    CHECK(ri.indices.values[px] == best);
  }
}

TEST_CASE("compose_mosaic") {
  Rng rng(9);
  const AnnotatedImage src = noise_image(rng, 16, 16, Pose2D({{1, 1}, {5, 5}}));
  const WarpedCandidate c = warp_image(src, Transform2D::identity(), 16);
  IndexMap zero{Raster<int>(16, 16, 0)};
  CHECK(compose_mosaic(std::vector<WarpedCandidate>{c}, zero) == src.pixels);

  IndexMap mixed{Raster<int>(16, 16, 0)};
  for (auto& v : mixed.indices.values) v = static_cast<int>(rng.below(3));
  CHECK(compose_mosaic(std::vector<WarpedCandidate>{c, c, c}, mixed) == src.pixels);

  WarpedCandidate red = c, blue = c;
  for (std::size_t i = 0; i < red.image.data.size(); i += 3) {
    red.image.data[i] = 255, red.image.data[i + 1] = 0, red.image.data[i + 2] = 0;
    blue.image.data[i] = 0, blue.image.data[i + 1] = 0, blue.image.data[i + 2] = 255;
  }
  IndexMap board{Raster<int>(16, 16, 0)};
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) board.indices(x, y) = (x + y) % 2;
  const RgbImage out = compose_mosaic(std::vector<WarpedCandidate>{red, blue}, board);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) CHECK(out.at(x, y)[0] == ((x + y) % 2 == 0 ? 255 : 0));
}
