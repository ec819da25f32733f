#include <cmath>
#include <queue>
#include <random>

#include "doctest.h"
#include "hsi/error.hpp"
#include "hsi/scene.hpp"

using namespace hsi;

namespace {

const char* kUnitCube = R"(MESHv1
# unit cube centered at the origin
v -0.5 -0.5 -0.5
v 0.5 -0.5 -0.5
v 0.5 0.5 -0.5
v -0.5 0.5 -0.5
v -0.5 -0.5 0.5
v 0.5 -0.5 0.5
v 0.5 0.5 0.5
v -0.5 0.5 0.5
o cube
f 0 2 1
f 0 3 2
f 4 5 6
f 4 6 7
f 0 1 5
f 0 5 4
f 1 2 6
f 1 6 5
f 2 3 7
f 2 7 6
f 3 0 4
f 3 4 7
)";

// Moller-Trumbore over every triangle; the nearest t > 1e-12.
std::optional<double> brute_raycast(const SceneMesh& m, const Vec3& o, const Vec3& d) {
  std::optional<double> best;
  for (const auto& t : m.triangles()) {
    const Vec3 a = m.vertices()[t[0]], b = m.vertices()[t[1]], c = m.vertices()[t[2]];
    const Vec3 e1 = b - a, e2 = c - a, p = cross(d, e2);
    const double det = dot(e1, p);
    if (std::fabs(det) < 1e-15) continue;
    const Vec3 s = o - a;
    const double u = dot(s, p) / det;
    const Vec3 q = cross(s, e1);
    const double v = dot(d, q) / det;
    const double dist = dot(e2, q) / det;
    if (u < 0 || v < 0 || u + v > 1 || dist <= 1e-12) continue;
    if (!best || dist < *best) best = dist;
  }
  return best;
}

// Sutherland-Hodgman clip of the triangle against the closed box; any
// surviving vertex means the triangle touches the box.
bool clip_overlap(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& lo, const Vec3& hi) {
  std::vector<Vec3> poly = {a, b, c};
  for (int axis = 0; axis < 3 && !poly.empty(); ++axis)
    for (int side = 0; side < 2 && !poly.empty(); ++side) {
      const double bound = side == 0 ? lo[axis] : hi[axis];
      auto inside = [&](const Vec3& p) { return side == 0 ? p[axis] >= bound : p[axis] <= bound; };
      std::vector<Vec3> out;
      for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec3 &p = poly[i], &q = poly[(i + 1) % poly.size()];
        if (inside(p)) out.push_back(p);
        if (inside(p) != inside(q)) {
          const double t = (bound - p[axis]) / (q[axis] - p[axis]);
          Vec3 x = p + (q - p) * t;
          Vec3 fixed = x;
          double* comp = axis == 0 ? &fixed.x : axis == 1 ? &fixed.y : &fixed.z;
          *comp = bound;
          out.push_back(fixed);
        }
      }
      poly = std::move(out);
    }
  return !poly.empty();
}

int components(const NavGrid& nav) {
  std::vector<int> label(nav.walkable_bits.size(), -1);
  int count = 0;
  for (int j = 0; j < nav.ny; ++j)
    for (int i = 0; i < nav.nx; ++i) {
      if (!nav.walkable(i, j) || label[j * nav.nx + i] >= 0) continue;
      std::queue<std::pair<int, int>> q;
      q.push({i, j});
      label[j * nav.nx + i] = count;
      while (!q.empty()) {
        auto [x, y] = q.front();
        q.pop();
        const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
          const int u = x + dx[k], v = y + dy[k];
          if (nav.walkable(u, v) && label[v * nav.nx + u] < 0) {
            label[v * nav.nx + u] = count;
            q.push({u, v});
          }
        }
      }
      ++count;
    }
  return count;
}

SceneMesh room_floor(double x, double y) { return make_box({0, 0, -0.1}, {x, y, 0}, "floor"); }

}  // namespace

TEST_CASE("load the unit cube") {
  const SceneMesh m = parse_scene(kUnitCube);
  CHECK(m.triangles().size() == 12);
  CHECK(m.vertices().size() == 8);
  REQUIRE(m.objects().size() == 1);
  CHECK(m.objects()[0].closed);
  CHECK(m.warnings().empty());
}

TEST_CASE("parse errors") {
  CHECK_THROWS_AS(parse_scene("MESHv1\nv 0 0 0\nf 0 1 2\n"), ParseError);
  CHECK_THROWS_AS(parse_scene("OBJ\n"), ParseError);
  CHECK_THROWS_AS(parse_scene(""), ParseError);
  CHECK_THROWS_AS(parse_scene("MESHv1\nv 0 0\n"), ParseError);
  CHECK_THROWS_AS(parse_scene("MESHv1\nq 1 2 3\n"), ParseError);
  CHECK_THROWS_AS(load_scene("/nonexistent/scene.mesh"), ParseError);
}

TEST_CASE("two tagged objects give two ranges") {
  const SceneMesh m = merge_meshes(make_box({0, 0, -0.1}, {4, 4, 0}, "floor"), make_box({1, 1, 0}, {2, 2, 1}, "box"));
  const auto tags = m.tag_ranges();
  REQUIRE(tags.size() == 2);
  CHECK(tags.at("floor") == std::pair<std::size_t, std::size_t>{0, 12});
  CHECK(tags.at("box") == std::pair<std::size_t, std::size_t>{12, 24});
  const SceneMesh round = parse_scene(write_scene(m));
  CHECK(round.tag_ranges() == tags);
  CHECK(round.hash() == m.hash());
}

TEST_CASE("open objects are recorded and refused for containment") {
  const SceneMesh m = parse_scene("MESHv1\nv 0 0 0\nv 1 0 0\nv 0 1 0\no sheet\nf 0 1 2\n");
  CHECK_FALSE(m.objects()[0].closed);
  CHECK(m.warnings().size() == 1);
  CHECK_THROWS_AS(point_inside(m, {0.1, 0.1, 0}), UnsupportedQuery);
  CHECK(count_inside_closed(m, {{0.1, 0.1, 0}}) == 0);
}

TEST_CASE("point_inside on the unit cube") {
  const SceneMesh m = parse_scene(kUnitCube);
  CHECK(point_inside(m, {0, 0, 0}));
  CHECK_FALSE(point_inside(m, {3, 0, 0}));
  // Points on the mesh's own vertex and edge lines stress the re-cast sequence.
  CHECK(point_inside(m, {0.25, 0.25, 0.25}));
  CHECK(point_inside(m, {0, 0, 0.4999}));
}

TEST_CASE("point_inside agrees with the analytic box test") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const Vec3 lo{-0.7, -0.3, -1.1}, hi{0.9, 1.2, 0.4};
  const SceneMesh m = make_box(lo, hi, "box");
  for (int i = 0; i < 1000; ++i) {
    const Vec3 p{u(rng), u(rng), u(rng)};
    const bool want = p.x > lo.x && p.x < hi.x && p.y > lo.y && p.y < hi.y && p.z > lo.z && p.z < hi.z;
    CHECK(point_inside(m, p) == want);
  }
}

TEST_CASE("point_inside on a convex prism matches half-space tests") {
  // Hexagonal prism, radius 1, z in [0, 1].
  std::vector<Vec3> v;
  for (int z = 0; z < 2; ++z)
    for (int k = 0; k < 6; ++k) v.push_back({std::cos(k * M_PI / 3), std::sin(k * M_PI / 3), double(z)});
  v.push_back({0, 0, 0});
  v.push_back({0, 0, 1});
  std::vector<std::array<int, 3>> t;
  for (int k = 0; k < 6; ++k) {
    const int n = (k + 1) % 6;
    t.push_back({12, n, k});
    t.push_back({13, 6 + k, 6 + n});
    t.push_back({k, n, 6 + n});
    t.push_back({k, 6 + n, 6 + k});
  }
  const SceneMesh m(v, t, {{"prism", 0, t.size(), false, {}, {}}});
  REQUIRE(m.objects()[0].closed);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.3, 1.3);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 p{u(rng), u(rng), u(rng) + 0.5};
    bool want = p.z > 0 && p.z < 1;
    for (int k = 0; k < 6 && want; ++k) {
      const double a = (k + 0.5) * M_PI / 3;
      want = p.x * std::cos(a) + p.y * std::sin(a) < std::cos(M_PI / 6);
    }
    CHECK(point_inside(m, p) == want);
  }
}

TEST_CASE("voxelize the unit cube at cell 0.5") {
  const OccupancyGrid g = voxelize(parse_scene(kUnitCube), 0.5);
  CHECK(g.dims == std::array<int, 3>{2, 2, 2});
  CHECK(g.occupied_count() == 8);
}

TEST_CASE("voxelize agrees with a clipping oracle") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.05, 1.95);
  std::vector<Vec3> v;
  std::vector<std::array<int, 3>> t;
  for (int i = 0; i < 30; ++i) {
    for (int k = 0; k < 3; ++k) v.push_back({u(rng), u(rng), u(rng)});
    t.push_back({3 * i, 3 * i + 1, 3 * i + 2});
  }
  const SceneMesh m(v, t, {{"soup", 0, t.size(), false, {}, {}}});
  const double cell = 0.25;
  const OccupancyGrid g = voxelize(m, cell, {0, 0, 0}, {2, 2, 2});
  std::size_t want = 0;
  for (int k = 0; k < 8; ++k)
    for (int j = 0; j < 8; ++j)
      for (int i = 0; i < 8; ++i) {
        const Vec3 lo{i * cell, j * cell, k * cell}, hi = lo + Vec3{cell, cell, cell};
        bool hit = false;
        for (const auto& tri : t) hit = hit || clip_overlap(v[tri[0]], v[tri[1]], v[tri[2]], lo, hi);
        CHECK(g.occupied(i, j, k) == hit);
        want += hit;
      }
  CHECK(g.occupied_count() == want);
}

TEST_CASE("every triangle's box overlaps an occupied cell") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  std::vector<Vec3> v;
  std::vector<std::array<int, 3>> t;
  for (int i = 0; i < 40; ++i) {
    const Vec3 c{u(rng), u(rng), u(rng)};
    for (int k = 0; k < 3; ++k) v.push_back(c + Vec3{u(rng), u(rng), u(rng)} * 0.02);
    t.push_back({3 * i, 3 * i + 1, 3 * i + 2});
  }
  const SceneMesh m(v, t, {{"soup", 0, t.size(), false, {}, {}}});
  const OccupancyGrid g = voxelize(m, 0.1);
  for (const auto& tri : t) {
    bool any = false;
    for (int k = 0; k < g.dims[2] && !any; ++k)
      for (int j = 0; j < g.dims[1] && !any; ++j)
        for (int i = 0; i < g.dims[0] && !any; ++i) {
          if (!g.occupied(i, j, k)) continue;
          const Vec3 lo = g.origin + Vec3{i * g.cell, j * g.cell, k * g.cell};
          bool overlap = true;
          for (int a = 0; a < 3; ++a) {
            const double mn = std::min({v[tri[0]][a], v[tri[1]][a], v[tri[2]][a]});
            const double mx = std::max({v[tri[0]][a], v[tri[1]][a], v[tri[2]][a]});
            overlap = overlap && mx >= lo[a] && mn <= lo[a] + g.cell;
          }
          any = overlap;
        }
    CHECK(any);
  }
}

TEST_CASE("voxelize edge cases") {
  const OccupancyGrid empty = voxelize(SceneMesh{}, 0.5, {0, 0, 0}, {2, 2, 2});
  CHECK(empty.occupied_count() == 0);
  CHECK(empty.occupancy.size() == 64);

  // A horizontal square at z = 0.3 fills exactly one layer.
  const SceneMesh plane({{0, 0, 0.3}, {2, 0, 0.3}, {2, 2, 0.3}, {0, 2, 0.3}}, {{0, 1, 2}, {0, 2, 3}},
                        {{"plane", 0, 2, false, {}, {}}});
  const OccupancyGrid g = voxelize(plane, 0.25, {0, 0, 0}, {2, 2, 2});
  for (int k = 0; k < 8; ++k) {
    std::size_t layer = 0;
    for (int j = 0; j < 8; ++j)
      for (int i = 0; i < 8; ++i) layer += g.occupied(i, j, k);
    CHECK(layer == (k == 1 ? 64u : 0u));
  }

  CHECK_THROWS_AS(voxelize(plane, 0.0), ResourceError);
  CHECK_THROWS_AS(voxelize(plane, 1e-4, {0, 0, 0}, {10, 10, 10}), ResourceError);
}

TEST_CASE("nav grid of an empty room is fully walkable") {
  const OccupancyGrid occ = voxelize(room_floor(10, 10), 0.1, {0, 0, -0.1}, {10, 10, 2});
  const NavGrid nav = nav_grid(occ, 0.3);
  CHECK(nav.walkable_count() == static_cast<std::size_t>(nav.nx * nav.ny));
  CHECK(components(nav) == 1);
}

TEST_CASE("a wall splits the room in two") {
  const SceneMesh m = merge_meshes(room_floor(10, 10), make_box({4.9, 0, 0}, {5.1, 10, 2.5}, "wall"));
  const NavGrid nav = nav_grid(voxelize(m, 0.1), 0.3);
  CHECK(components(nav) == 2);
  CHECK_FALSE(nav.walkable(nav.cell_of(5.0, 5.0).first, nav.cell_of(5.0, 5.0).second));
  CHECK(nav.walkable(nav.cell_of(2.0, 5.0).first, nav.cell_of(2.0, 5.0).second));
}

TEST_CASE("objects above head height do not block") {
  const SceneMesh m = merge_meshes(room_floor(6, 6), make_box({2, 2, 2.0}, {4, 4, 2.2}, "shelf"));
  const NavGrid nav = nav_grid(voxelize(m, 0.1), 0.3);
  CHECK(nav.walkable_count() == static_cast<std::size_t>(nav.nx * nav.ny));
}

TEST_CASE("support is required on upper layers") {
  const SceneMesh m = merge_meshes(room_floor(8, 4), make_box({4, 0, 0}, {8, 4, 3}, "roof"));
  NavParams upper;
  upper.ground_z = 3.0;
  upper.require_support = true;
  const NavGrid nav = nav_grid(voxelize(m, 0.1), 0.3, upper);
  CHECK(nav.walkable(nav.cell_of(6, 2).first, nav.cell_of(6, 2).second));
  CHECK_FALSE(nav.walkable(nav.cell_of(2, 2).first, nav.cell_of(2, 2).second));
}

TEST_CASE("walkable set shrinks monotonically with clearance") {
  const SceneMesh m = merge_meshes(room_floor(6, 6), make_box({2.8, 2.8, 0}, {3.2, 3.2, 2.5}, "pillar"));
  const OccupancyGrid occ = voxelize(m, 0.1);
  const NavGrid a = nav_grid(occ, 0.0), b = nav_grid(occ, 0.2), c = nav_grid(occ, 0.5);
  CHECK(a.walkable_count() > b.walkable_count());
  CHECK(b.walkable_count() > c.walkable_count());
  for (std::size_t i = 0; i < a.walkable_bits.size(); ++i) {
    CHECK(b.walkable_bits[i] <= a.walkable_bits[i]);
    CHECK(c.walkable_bits[i] <= b.walkable_bits[i]);
  }
  CHECK_THROWS_AS(nav_grid(occ, -0.1), PlanningError);
}

TEST_CASE("place_obstacle translates, rotates and leaves the scene alone") {
  ObstacleSpec obs;
  obs.mesh = make_box({-0.2, -0.1, 0}, {0.2, 0.1, 0.3}, "pumpkin");
  obs.tag = "pumpkin";
  obs.translation = {2, 0, 0};
  const SceneMesh scene = room_floor(6, 6);
  const std::uint64_t before = scene.hash();
  const SceneMesh placed = place_obstacle(scene, obs);
  CHECK(scene.hash() == before);
  REQUIRE(placed.objects().size() == 2);

  auto centroid = [](const std::vector<Vec3>& v, std::size_t from, std::size_t to) {
    Vec3 c;
    for (std::size_t i = from; i < to; ++i) c += v[i];
    return c / double(to - from);
  };
  const Vec3 local = centroid(obs.mesh.vertices(), 0, 8);
  const Vec3 world = centroid(placed.vertices(), 8, 16);
  CHECK(norm(world - local - Vec3{2, 0, 0}) < 1e-12);

  obs.yaw = M_PI / 2;
  obs.translation = {};
  const SceneMesh turned = posed_obstacle(obs);
  // Local x extent 0.4 becomes world y extent.
  CHECK(turned.bbox_max().y - turned.bbox_min().y == doctest::Approx(0.4));
  CHECK(turned.bbox_max().x - turned.bbox_min().x == doctest::Approx(0.2));

  obs.tag = "floor";
  CHECK_THROWS_AS(place_obstacle(scene, obs), ContractError);
  obs.tag = "pumpkin";
  obs.translation.x = NAN;
  CHECK_THROWS_AS(place_obstacle(scene, obs), InvalidState);
}

TEST_CASE("placing an obstacle marks new occupied cells at its pose") {
  ObstacleSpec obs;
  obs.mesh = make_box({-0.25, -0.25, 0}, {0.25, 0.25, 0.5}, "crate");
  obs.tag = "crate";
  obs.translation = {3, 3, 0};
  const SceneMesh scene = room_floor(6, 6);
  const Vec3 lo{0, 0, -0.1}, hi{6, 6, 2};
  const OccupancyGrid a = voxelize(scene, 0.1, lo, hi), b = voxelize(place_obstacle(scene, obs), 0.1, lo, hi);
  std::size_t added = 0;
  for (std::size_t i = 0; i < a.occupancy.size(); ++i) {
    CHECK(b.occupancy[i] >= a.occupancy[i]);
    if (b.occupancy[i] && !a.occupancy[i]) {
      ++added;
      const int ii = int(i % 60), jj = int((i / 60) % 60);
      CHECK(std::fabs((ii + 0.5) * 0.1 - 3) < 0.36);
      CHECK(std::fabs((jj + 0.5) * 0.1 - 3) < 0.36);
    }
  }
  CHECK(added > 0);
}

TEST_CASE("raycast on the unit cube") {
  const SceneMesh m = parse_scene(kUnitCube);
  const auto hit = raycast(m, {0, 0, 2}, {0, 0, -1});
  REQUIRE(hit);
  CHECK(*hit == doctest::Approx(1.5).epsilon(1e-12));
  CHECK_FALSE(raycast(m, {0, 0, 2}, {0, 0, 1}));
  CHECK_THROWS_AS(raycast(m, {0, 0, 2}, {0, 0, 0}), UnsupportedQuery);
}

TEST_CASE("raycast agrees with an all-triangle oracle") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const SceneMesh m = merge_meshes(make_box({-1, -1, -1}, {0.5, 0.2, 0.7}, "a"), make_box({1, 1, 0}, {2, 2.5, 1}, "b"));
  int hits = 0;
  for (int i = 0; i < 500; ++i) {
    const Vec3 o{u(rng), u(rng), u(rng)};
    Vec3 d{u(rng), u(rng), u(rng)};
    d = d / norm(d);
    const auto got = raycast(m, o, d);
    const auto want = brute_raycast(m, o, d);
    REQUIRE(got.has_value() == want.has_value());
    if (got) {
      ++hits;
      CHECK(std::fabs(*got - *want) < 1e-9);
    }
  }
  CHECK(hits > 20);
}
