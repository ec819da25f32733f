#include "hsi/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include "hsi/error.hpp"

namespace hsi {

namespace {

constexpr double kInsideEps = 1e-9;
constexpr double kRayEps = 1e-12;

// Fixed probe directions for parity tests, tried in order when a probe grazes
// an edge or vertex. Irrational-looking components keep them off axis-aligned
// fixture edges.
const std::array<Vec3, 8>& probe_directions() {
  static const std::array<Vec3, 8> dirs = [] {
    const std::array<Vec3, 8> raw = {Vec3{0.5773, 0.6124, 0.5401},  Vec3{-0.4319, 0.7071, 0.5598},
                                     Vec3{0.3817, -0.5257, 0.7603}, Vec3{-0.6527, -0.2719, -0.7071},
                                     Vec3{0.8165, 0.1453, -0.5587}, Vec3{0.1234, -0.9137, 0.3871},
                                     Vec3{-0.7937, 0.4472, -0.4123}, Vec3{0.2679, 0.3090, -0.9122}};
    std::array<Vec3, 8> out;
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = raw[i] / norm(raw[i]);
    return out;
  }();
  return dirs;
}

bool edge_manifold(const std::vector<std::array<int, 3>>& tris, std::size_t first, std::size_t count) {
  if (count == 0) return false;
  std::map<std::pair<int, int>, int> uses;
  for (std::size_t t = first; t < first + count; ++t) {
    const auto& tri = tris[t];
    for (int e = 0; e < 3; ++e) {
      int a = tri[e], b = tri[(e + 1) % 3];
      if (a > b) std::swap(a, b);
      ++uses[{a, b}];
    }
  }
  return std::all_of(uses.begin(), uses.end(), [](const auto& kv) { return kv.second == 2; });
}

// Separating-axis triangle/box overlap test (Akenine-Moller).
bool tri_box_overlap(const Vec3& center, const Vec3& half, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 v0 = a - center, v1 = b - center, v2 = c - center;
  const Vec3 e0 = v1 - v0, e1 = v2 - v1, e2 = v0 - v2;

  auto axis_test = [&](const Vec3& axis) {
    const double p0 = dot(v0, axis), p1 = dot(v1, axis), p2 = dot(v2, axis);
    const double r = half.x * std::fabs(axis.x) + half.y * std::fabs(axis.y) + half.z * std::fabs(axis.z);
    return !(std::min({p0, p1, p2}) > r || std::max({p0, p1, p2}) < -r);
  };

  const std::array<Vec3, 3> box_axes = {Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}};
  for (const Vec3& e : {e0, e1, e2})
    for (const Vec3& u : box_axes)
      if (!axis_test(cross(u, e))) return false;
  for (const Vec3& u : box_axes)
    if (!axis_test(u)) return false;
  return axis_test(cross(e0, e1));
}

}  // namespace

SceneMesh::SceneMesh(std::vector<Vec3> vertices, std::vector<std::array<int, 3>> triangles,
                     std::vector<SceneObject> objects)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)), objects_(std::move(objects)) {
  for (const Vec3& v : vertices_)
    if (!is_finite(v)) throw ParseError("non-finite vertex");
  const int nv = static_cast<int>(vertices_.size());
  for (const auto& tri : triangles_)
    for (int idx : tri)
      if (idx < 0 || idx >= nv) throw ParseError("triangle index out of range: " + std::to_string(idx));

  std::size_t covered = 0;
  std::set<std::string> names;
  for (SceneObject& obj : objects_) {
    if (obj.first_triangle != covered) throw ParseError("object ranges must be contiguous: " + obj.name);
    if (!names.insert(obj.name).second) throw ParseError("duplicate object tag: " + obj.name);
    covered += obj.triangle_count;
    if (covered > triangles_.size()) throw ParseError("object range exceeds triangle count: " + obj.name);
    obj.closed = edge_manifold(triangles_, obj.first_triangle, obj.triangle_count);
    if (!obj.closed) warnings_.push_back("object '" + obj.name + "' is open; containment queries will reject it");
    constexpr double inf = std::numeric_limits<double>::infinity();
    obj.bbox_min = {inf, inf, inf};
    obj.bbox_max = {-inf, -inf, -inf};
    for (std::size_t t = obj.first_triangle; t < obj.first_triangle + obj.triangle_count; ++t)
      for (int v : triangles_[t])
        for (int a = 0; a < 3; ++a) {
          obj.bbox_min[a] = std::min(obj.bbox_min[a], vertices_[v][a]);
          obj.bbox_max[a] = std::max(obj.bbox_max[a], vertices_[v][a]);
        }
  }
  if (covered != triangles_.size()) throw ParseError("triangles outside any object");

  if (!triangles_.empty()) {
    bbox_min_ = objects_.front().bbox_min;
    bbox_max_ = objects_.front().bbox_max;
    for (const SceneObject& obj : objects_) {
      if (obj.triangle_count == 0) continue;
      for (int a = 0; a < 3; ++a) {
        bbox_min_[a] = std::min(bbox_min_[a], obj.bbox_min[a]);
        bbox_max_[a] = std::max(bbox_max_[a], obj.bbox_max[a]);
      }
    }
  }
  for (const auto& tri : triangles_) batch_.push(vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]);
}

std::map<std::string, std::pair<std::size_t, std::size_t>> SceneMesh::tag_ranges() const {
  std::map<std::string, std::pair<std::size_t, std::size_t>> out;
  for (const SceneObject& obj : objects_) out[obj.name] = {obj.first_triangle, obj.first_triangle + obj.triangle_count};
  return out;
}

std::optional<std::size_t> SceneMesh::find_object(const std::string& name) const {
  for (std::size_t i = 0; i < objects_.size(); ++i)
    if (objects_[i].name == name) return i;
  return std::nullopt;
}

std::uint64_t SceneMesh::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const Vec3& v : vertices_) feed(&v, sizeof(Vec3));
  for (const auto& t : triangles_) feed(t.data(), sizeof(int) * 3);
  for (const SceneObject& o : objects_) {
    feed(o.name.data(), o.name.size());
    feed(&o.first_triangle, sizeof(o.first_triangle));
    feed(&o.triangle_count, sizeof(o.triangle_count));
  }
  return h;
}

SceneMesh parse_scene(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  auto fail = [&line_no](const std::string& msg) {
    throw ParseError("line " + std::to_string(line_no) + ": " + msg);
  };

  if (!std::getline(in, line)) throw ParseError("empty mesh file");
  ++line_no;
  if (line.rfind("MESHv1", 0) != 0) fail("missing MESHv1 header");

  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<SceneObject> objects;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string kind;
    if (!(ls >> kind) || kind[0] == '#') continue;
    if (kind == "v") {
      Vec3 v;
      if (!(ls >> v.x >> v.y >> v.z)) fail("vertex needs three coordinates");
      vertices.push_back(v);
    } else if (kind == "f") {
      std::array<int, 3> t{};
      if (!(ls >> t[0] >> t[1] >> t[2])) fail("face needs three indices");
      for (int idx : t)
        if (idx < 0 || idx >= static_cast<int>(vertices.size()))
          fail("face index out of range: " + std::to_string(idx));
      if (objects.empty()) objects.push_back({"default", 0, 0, false, {}, {}});
      triangles.push_back(t);
      ++objects.back().triangle_count;
    } else if (kind == "o") {
      std::string name;
      if (!(ls >> name)) fail("object line needs a tag");
      objects.push_back({name, triangles.size(), 0, false, {}, {}});
    } else {
      fail("unknown record '" + kind + "'");
    }
  }
  return SceneMesh(std::move(vertices), std::move(triangles), std::move(objects));
}

SceneMesh load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open mesh file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scene(ss.str());
}

std::string write_scene(const SceneMesh& mesh) {
  std::ostringstream out;
  out << std::setprecision(17) << "MESHv1\n";
  for (const Vec3& v : mesh.vertices()) out << "v " << v.x << ' ' << v.y << ' ' << v.z << '\n';
  for (const SceneObject& obj : mesh.objects()) {
    out << "o " << obj.name << '\n';
    for (std::size_t t = obj.first_triangle; t < obj.first_triangle + obj.triangle_count; ++t) {
      const auto& tri = mesh.triangles()[t];
      out << "f " << tri[0] << ' ' << tri[1] << ' ' << tri[2] << '\n';
    }
  }
  return out.str();
}

bool inside_object(const SceneMesh& mesh, std::size_t object, const Vec3& p) {
  const SceneObject& obj = mesh.objects().at(object);
  if (!obj.closed) throw UnsupportedQuery("containment query on open object '" + obj.name + "'");
  for (int a = 0; a < 3; ++a)
    if (p[a] <= obj.bbox_min[a] || p[a] >= obj.bbox_max[a]) return false;
  for (const Vec3& dir : probe_directions()) {
    const kernels::RayScan scan = kernels::ray_scan(mesh.batch(), obj.first_triangle,
                                                    obj.first_triangle + obj.triangle_count, p, dir, kInsideEps);
    if (!scan.grazing) return (scan.crossings % 2) == 1;
  }
  // Every probe grazed: p lies on the surface, which is not strictly inside.
  return false;
}

bool point_inside(const SceneMesh& mesh, const Vec3& p) {
  bool inside = false;
  for (std::size_t i = 0; i < mesh.objects().size(); ++i)
    if (inside_object(mesh, i, p)) inside = true;
  return inside;
}

std::size_t count_inside_closed(const SceneMesh& mesh, const std::vector<Vec3>& points) {
  std::size_t count = 0;
  for (const Vec3& p : points)
    for (std::size_t i = 0; i < mesh.objects().size(); ++i)
      if (mesh.objects()[i].closed && inside_object(mesh, i, p)) {
        ++count;
        break;
      }
  return count;
}

std::optional<double> raycast(const SceneMesh& mesh, const Vec3& origin, const Vec3& dir) {
  const double len = norm(dir);
  if (!(len > 0.0) || !std::isfinite(len)) throw UnsupportedQuery("raycast direction has zero length");
  const kernels::RayScan scan = kernels::ray_scan(mesh.batch(), 0, mesh.batch().size(), origin, dir / len, kRayEps);
  if (!std::isfinite(scan.nearest)) return std::nullopt;
  return scan.nearest;
}

std::size_t OccupancyGrid::occupied_count() const {
  return static_cast<std::size_t>(std::count(occupancy.begin(), occupancy.end(), std::uint8_t{1}));
}

OccupancyGrid voxelize(const SceneMesh& mesh, double cell) {
  if (mesh.empty()) return voxelize(mesh, cell, Vec3{}, Vec3{});
  return voxelize(mesh, cell, mesh.bbox_min(), mesh.bbox_max());
}

OccupancyGrid voxelize(const SceneMesh& mesh, double cell, const Vec3& lo, const Vec3& hi) {
  if (!(cell > 0.0)) throw ResourceError("voxel cell size must be positive");
  OccupancyGrid grid;
  grid.origin = lo;
  grid.cell = cell;
  double total = 1.0;
  for (int a = 0; a < 3; ++a) {
    const double extent = std::max(0.0, hi[a] - lo[a]);
    grid.dims[a] = std::max(1, static_cast<int>(std::ceil(extent / cell - 1e-9)));
    total *= grid.dims[a];
  }
  if (total > static_cast<double>(kMaxGridCells))
    throw ResourceError("occupancy grid would exceed " + std::to_string(kMaxGridCells) + " cells");
  grid.occupancy.assign(static_cast<std::size_t>(total), 0);

  const Vec3 half{cell / 2 + 1e-9, cell / 2 + 1e-9, cell / 2 + 1e-9};
  for (const auto& tri : mesh.triangles()) {
    const Vec3 &a = mesh.vertices()[tri[0]], &b = mesh.vertices()[tri[1]], &c = mesh.vertices()[tri[2]];
    std::array<int, 3> from{}, to{};
    for (int ax = 0; ax < 3; ++ax) {
      const double mn = std::min({a[ax], b[ax], c[ax]}), mx = std::max({a[ax], b[ax], c[ax]});
      from[ax] = std::max(0, static_cast<int>(std::floor((mn - lo[ax]) / cell)) - 1);
      to[ax] = std::min(grid.dims[ax] - 1, static_cast<int>(std::floor((mx - lo[ax]) / cell)) + 1);
    }
    for (int k = from[2]; k <= to[2]; ++k)
      for (int j = from[1]; j <= to[1]; ++j)
        for (int i = from[0]; i <= to[0]; ++i) {
          const std::size_t idx = grid.index(i, j, k);
          if (grid.occupancy[idx]) continue;
          const Vec3 center = lo + Vec3{(i + 0.5) * cell, (j + 0.5) * cell, (k + 0.5) * cell};
          if (tri_box_overlap(center, half, a, b, c)) grid.occupancy[idx] = 1;
        }
  }
  return grid;
}

std::pair<int, int> NavGrid::cell_of(double x, double y) const {
  return {static_cast<int>(std::floor((x - origin_x) / cell)), static_cast<int>(std::floor((y - origin_y) / cell))};
}

Vec3 NavGrid::center(int i, int j) const {
  return {origin_x + (i + 0.5) * cell, origin_y + (j + 0.5) * cell, ground_z};
}

std::size_t NavGrid::walkable_count() const {
  return static_cast<std::size_t>(std::count(walkable_bits.begin(), walkable_bits.end(), std::uint8_t{1}));
}

NavGrid nav_grid(const OccupancyGrid& occ, double clearance, const NavParams& params) {
  if (clearance < 0.0) throw PlanningError("clearance must be non-negative");
  NavGrid nav;
  nav.origin_x = occ.origin.x;
  nav.origin_y = occ.origin.y;
  nav.cell = occ.cell;
  nav.nx = occ.dims[0];
  nav.ny = occ.dims[1];
  nav.clearance = clearance;
  nav.ground_z = params.ground_z;

  const double band_lo = params.ground_z + params.step_height;
  const double band_hi = params.ground_z + params.agent_height;
  // Columns holding an occupied cell inside the body band, and columns with
  // support at ground level.
  std::vector<std::uint8_t> blocked(static_cast<std::size_t>(nav.nx) * nav.ny, 0);
  std::vector<std::uint8_t> support(blocked.size(), 0);
  for (int k = 0; k < occ.dims[2]; ++k) {
    const double z0 = occ.origin.z + k * occ.cell, z1 = z0 + occ.cell;
    // A cell counts as body-band only if its bottom clears the step height, so
    // the conservative floor layer touching z = ground never blocks.
    const bool in_band = z0 >= band_lo - 1e-9 && z0 < band_hi;
    const bool at_ground = z0 < params.ground_z + params.step_height && z1 > params.ground_z - params.step_height;
    if (!in_band && !at_ground) continue;
    for (int j = 0; j < nav.ny; ++j)
      for (int i = 0; i < nav.nx; ++i) {
        if (!occ.occupied(i, j, k)) continue;
        const std::size_t c = static_cast<std::size_t>(j) * nav.nx + i;
        if (in_band) blocked[c] = 1;
        if (at_ground) support[c] = 1;
      }
  }

  const int reach = static_cast<int>(std::floor(clearance / occ.cell + 1e-9));
  nav.walkable_bits.assign(blocked.size(), 0);
  for (int j = 0; j < nav.ny; ++j)
    for (int i = 0; i < nav.nx; ++i) {
      if (params.require_support && !support[static_cast<std::size_t>(j) * nav.nx + i]) continue;
      bool free = true;
      for (int dj = -reach; dj <= reach && free; ++dj)
        for (int di = -reach; di <= reach && free; ++di) {
          if (std::hypot(di * occ.cell, dj * occ.cell) > clearance + 1e-9) continue;
          const int ii = i + di, jj = j + dj;
          if (ii < 0 || jj < 0 || ii >= nav.nx || jj >= nav.ny) continue;
          if (blocked[static_cast<std::size_t>(jj) * nav.nx + ii]) free = false;
        }
      nav.walkable_bits[static_cast<std::size_t>(j) * nav.nx + i] = free ? 1 : 0;
    }
  return nav;
}

SceneMesh posed_obstacle(const ObstacleSpec& obs) {
  if (!is_finite(obs.translation) || !std::isfinite(obs.yaw)) throw InvalidState("obstacle pose must be finite");
  std::vector<Vec3> verts;
  verts.reserve(obs.mesh.vertices().size());
  for (const Vec3& v : obs.mesh.vertices()) verts.push_back(yaw_rotate(v, obs.yaw) + obs.translation);
  std::vector<SceneObject> objects = {{obs.tag, 0, obs.mesh.triangles().size(), false, {}, {}}};
  return SceneMesh(std::move(verts), obs.mesh.triangles(), std::move(objects));
}

SceneMesh merge_meshes(const SceneMesh& a, const SceneMesh& b) {
  for (const SceneObject& o : b.objects())
    if (a.find_object(o.name)) throw ContractError("object tag already present in scene: " + o.name);
  std::vector<Vec3> verts = a.vertices();
  verts.insert(verts.end(), b.vertices().begin(), b.vertices().end());
  std::vector<std::array<int, 3>> tris = a.triangles();
  const int shift = static_cast<int>(a.vertices().size());
  for (auto t : b.triangles()) tris.push_back({t[0] + shift, t[1] + shift, t[2] + shift});
  std::vector<SceneObject> objects = a.objects();
  for (SceneObject o : b.objects()) {
    o.first_triangle += a.triangles().size();
    objects.push_back(o);
  }
  return SceneMesh(std::move(verts), std::move(tris), std::move(objects));
}

SceneMesh place_obstacle(const SceneMesh& scene, const ObstacleSpec& obs) {
  if (scene.find_object(obs.tag)) throw ContractError("obstacle tag collides with existing object: " + obs.tag);
  return merge_meshes(scene, posed_obstacle(obs));
}

SceneMesh make_box(const Vec3& lo, const Vec3& hi, const std::string& name) {
  std::vector<Vec3> verts;
  for (int b = 0; b < 8; ++b) verts.push_back({(b & 1) ? hi.x : lo.x, (b & 2) ? hi.y : lo.y, (b & 4) ? hi.z : lo.z});
  std::vector<std::array<int, 3>> tris = {{0, 2, 3}, {0, 3, 1}, {4, 5, 7}, {4, 7, 6}, {0, 1, 5}, {0, 5, 4},
                                          {2, 6, 7}, {2, 7, 3}, {0, 4, 6}, {0, 6, 2}, {1, 3, 7}, {1, 7, 5}};
  return SceneMesh(std::move(verts), std::move(tris), {{name, 0, 12, false, {}, {}}});
}

}  // namespace hsi
