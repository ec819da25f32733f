#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hsi/kernels/kernels.hpp"
#include "hsi/math.hpp"

namespace hsi {

struct SceneObject {
  std::string name;
  std::size_t first_triangle = 0;
  std::size_t triangle_count = 0;
  bool closed = false;
  Vec3 bbox_min, bbox_max;
};

// Immutable triangle soup partitioned into named objects. Containment queries
// are answered per object and require the object to be closed (every edge
// shared by exactly two of its triangles).
class SceneMesh {
 public:
  SceneMesh() = default;
  // Validates indices and computes closedness and bounds. Triangles listed in
  // no object are rejected; pass one object covering everything instead.
  SceneMesh(std::vector<Vec3> vertices, std::vector<std::array<int, 3>> triangles, std::vector<SceneObject> objects);

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
  const std::vector<SceneObject>& objects() const { return objects_; }
  const kernels::TriangleBatch& batch() const { return batch_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  std::map<std::string, std::pair<std::size_t, std::size_t>> tag_ranges() const;
  std::optional<std::size_t> find_object(const std::string& name) const;
  bool empty() const { return triangles_.empty(); }
  Vec3 bbox_min() const { return bbox_min_; }
  Vec3 bbox_max() const { return bbox_max_; }

  // Content hash (vertices, triangles, object table).
  std::uint64_t hash() const;

 private:
  std::vector<Vec3> vertices_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<SceneObject> objects_;
  kernels::TriangleBatch batch_;
  std::vector<std::string> warnings_;
  Vec3 bbox_min_, bbox_max_;
};

// MESHv1 text format, documented in docs/mesh_format.md.
SceneMesh parse_scene(const std::string& text);
SceneMesh load_scene(const std::filesystem::path& path);
std::string write_scene(const SceneMesh& mesh);

// Strictly-inside test against one closed object. Throws UnsupportedQuery for
// an open object.
bool inside_object(const SceneMesh& mesh, std::size_t object, const Vec3& p);
// True iff p is strictly inside any object. Every object must be closed.
bool point_inside(const SceneMesh& mesh, const Vec3& p);
// Number of points strictly inside some closed object; open objects are
// skipped.
std::size_t count_inside_closed(const SceneMesh& mesh, const std::vector<Vec3>& points);
// Nearest positive hit distance along dir (normalized internally).
std::optional<double> raycast(const SceneMesh& mesh, const Vec3& origin, const Vec3& dir);

struct OccupancyGrid {
  Vec3 origin;
  double cell = 0.0;
  std::array<int, 3> dims{0, 0, 0};
  std::vector<std::uint8_t> occupancy;

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * dims[1] + j) * dims[0] + i;
  }
  bool occupied(int i, int j, int k) const { return occupancy[index(i, j, k)] != 0; }
  std::size_t occupied_count() const;
};

inline constexpr std::size_t kMaxGridCells = 100'000'000;

// Conservative: a cell is occupied iff some triangle touches its closed box.
// The grid spans the mesh bounds; the bounded overload uses the given box.
OccupancyGrid voxelize(const SceneMesh& mesh, double cell);
OccupancyGrid voxelize(const SceneMesh& mesh, double cell, const Vec3& lo, const Vec3& hi);

struct NavParams {
  double agent_height = 1.8;
  double ground_z = 0.0;
  double step_height = 0.05;
  // Upper floors: a column is walkable only over occupied support at ground_z.
  bool require_support = false;
};

struct NavGrid {
  double origin_x = 0.0, origin_y = 0.0;
  double cell = 0.0;
  int nx = 0, ny = 0;
  double clearance = 0.0;
  double ground_z = 0.0;
  std::vector<std::uint8_t> walkable_bits;

  bool in_bounds(int i, int j) const { return i >= 0 && j >= 0 && i < nx && j < ny; }
  bool walkable(int i, int j) const { return in_bounds(i, j) && walkable_bits[static_cast<std::size_t>(j) * nx + i] != 0; }
  std::pair<int, int> cell_of(double x, double y) const;
  Vec3 center(int i, int j) const;
  std::size_t walkable_count() const;
};

NavGrid nav_grid(const OccupancyGrid& occ, double clearance, const NavParams& params = {});

struct ObstacleSpec {
  SceneMesh mesh;
  Vec3 translation;
  double yaw = 0.0;
  std::string tag;
  bool seen = true;
};

// The obstacle's triangles in world coordinates as a single object named tag.
SceneMesh posed_obstacle(const ObstacleSpec& obs);
SceneMesh place_obstacle(const SceneMesh& scene, const ObstacleSpec& obs);

// Concatenates meshes; object names must be unique across inputs.
SceneMesh merge_meshes(const SceneMesh& a, const SceneMesh& b);

// Axis-aligned box as a closed 12-triangle object; used by fixtures and tests.
SceneMesh make_box(const Vec3& lo, const Vec3& hi, const std::string& name);

}  // namespace hsi
