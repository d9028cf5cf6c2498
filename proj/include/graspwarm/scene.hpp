#pragma once

// Procedural top-down grasp world: scene generation, heightmap rendering and
// analytic parallel-jaw grasp adjudication.
//
// Coordinates are (row, col) in pixels. Pixel (r, c) has its center at the
// continuous point (r, c). A rotation by theta acts on a (row, col) vector as
//   (dr, dc) -> (dr cos - dc sin, dr sin + dc cos)
// and the gripper closing axis at yaw alpha is R(alpha) (0, 1) = (-sin, cos).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "graspwarm/rng.hpp"

namespace graspwarm::sim {

inline constexpr int kNumOrientations = 16;

inline double orientation_angle(int alpha_index) {
  return std::numbers::pi / 8.0 * static_cast<double>(alpha_index);
}

enum class Shape { disc, rectangle, capsule, ell };

inline std::string to_string(Shape s) {
  switch (s) {
    case Shape::disc: return "disc";
    case Shape::rectangle: return "rectangle";
    case Shape::capsule: return "capsule";
    case Shape::ell: return "ell";
  }
  return "unknown";
}

inline Shape shape_from_string(const std::string& s) {
  if (s == "disc") return Shape::disc;
  if (s == "rectangle") return Shape::rectangle;
  if (s == "capsule") return Shape::capsule;
  if (s == "ell") return Shape::ell;
  throw std::invalid_argument("unknown shape '" + s + "'");
}

struct Workspace {
  int height = 32;
  int width = 32;
  friend bool operator==(const Workspace&, const Workspace&) = default;
};

struct Pose {
  double row = 0.0;  // center row
  double col = 0.0;  // center column
  double yaw = 0.0;  // radians
  friend bool operator==(const Pose&, const Pose&) = default;
};

/// One rigid object lying on the table.
///
/// `size` is shape specific:
///   disc      {radius}
///   rectangle {half extent along local row axis, half extent along local col axis}
///   capsule   {half length of the core segment (local row axis), radius}
///   ell       {arm length along local row axis, arm length along local col axis, thickness}
/// The ell's pose is the center of its square corner block; its arms extend
/// along +row and +col in the local frame.
struct ObjectSpec {
  int id = 0;
  Shape shape = Shape::disc;
  Pose pose;
  std::array<double, 3> size{};
  double height = 1.0;
  std::array<double, 3> color{};
  friend bool operator==(const ObjectSpec&, const ObjectSpec&) = default;
};

struct Scene {
  std::vector<ObjectSpec> objects;
  Workspace workspace;
  std::uint64_t seed = 0;
  friend bool operator==(const Scene&, const Scene&) = default;
};

/// Color (H x W x 3, row-major, channel last) and depth (H x W) heightmaps.
struct HeightmapPair {
  int height = 0;
  int width = 0;
  std::vector<double> color;
  std::vector<double> depth;

  double& depth_at(int r, int c) { return depth[static_cast<std::size_t>(r) * width + c]; }
  double depth_at(int r, int c) const { return depth[static_cast<std::size_t>(r) * width + c]; }
  friend bool operator==(const HeightmapPair&, const HeightmapPair&) = default;
};

struct GraspAction {
  int x = 0;  // row
  int y = 0;  // column
  int alpha_index = 0;
  double alpha() const { return orientation_angle(alpha_index); }
  friend bool operator==(const GraspAction&, const GraspAction&) = default;
};

struct GraspOutcome {
  bool success = false;
  std::optional<int> removed_id;
  int reward = 0;
};

struct GripperConfig {
  double aperture = 12.0;    // maximum opening, pixels
  double finger_size = 2.0;  // side of each square finger pad, pixels
};

struct SizeRange {
  double lo = 0.0;
  double hi = 0.0;
};

/// Object palette and placement rules used by generate_scene.
struct SceneConfig {
  std::vector<Shape> shapes{Shape::disc, Shape::rectangle, Shape::capsule, Shape::ell};
  SizeRange disc_radius{2.5, 3.5};
  SizeRange rect_half_length{5.5, 8.0};
  SizeRange rect_half_width{2.0, 3.0};
  SizeRange capsule_half_length{3.0, 5.0};
  SizeRange capsule_radius{2.0, 2.8};
  SizeRange ell_arm{8.0, 11.0};
  SizeRange ell_thickness{4.0, 5.0};
  SizeRange height{0.5, 2.0};
  int min_gap = 1;           // empty pixels required between footprints (Chebyshev)
  int max_retries = 2000;    // pose draws per object before giving up
};

class PlacementError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Geometry

namespace detail {

struct Vec2 {
  double r = 0.0;
  double c = 0.0;
};

inline Vec2 rotate(Vec2 v, double theta) {
  const double cs = std::cos(theta), sn = std::sin(theta);
  return {v.r * cs - v.c * sn, v.r * sn + v.c * cs};
}

inline Vec2 to_local(const ObjectSpec& o, double r, double c) {
  return rotate({r - o.pose.row, c - o.pose.col}, -o.pose.yaw);
}

inline Vec2 to_world(const ObjectSpec& o, Vec2 local) {
  const Vec2 w = rotate(local, o.pose.yaw);
  return {w.r + o.pose.row, w.c + o.pose.col};
}

inline double segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const double dr = b.r - a.r, dc = b.c - a.c;
  const double len2 = dr * dr + dc * dc;
  double t = len2 > 0.0 ? ((p.r - a.r) * dr + (p.c - a.c) * dc) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double er = p.r - (a.r + t * dr), ec = p.c - (a.c + t * dc);
  return std::sqrt(er * er + ec * ec);
}

/// Outline in the local frame for the polygonal shapes.
inline std::vector<Vec2> local_polygon(const ObjectSpec& o) {
  if (o.shape == Shape::rectangle) {
    const double a = o.size[0], b = o.size[1];
    return {{-a, -b}, {a, -b}, {a, b}, {-a, b}};
  }
  if (o.shape == Shape::ell) {
    const double arm_r = o.size[0], arm_c = o.size[1], h = o.size[2] / 2.0;
    return {{-h, -h}, {arm_r - h, -h}, {arm_r - h, h}, {h, h}, {h, arm_c - h}, {-h, arm_c - h}};
  }
  return {};
}

inline bool in_box(Vec2 p, double r0, double r1, double c0, double c1) {
  return p.r >= r0 && p.r <= r1 && p.c >= c0 && p.c <= c1;
}

}  // namespace detail

/// Continuous point-in-shape test.
inline bool contains(const ObjectSpec& o, double r, double c) {
  const detail::Vec2 p = detail::to_local(o, r, c);
  switch (o.shape) {
    case Shape::disc:
      return p.r * p.r + p.c * p.c <= o.size[0] * o.size[0];
    case Shape::rectangle:
      return std::abs(p.r) <= o.size[0] && std::abs(p.c) <= o.size[1];
    case Shape::capsule:
      return detail::segment_distance(p, {-o.size[0], 0.0}, {o.size[0], 0.0}) <= o.size[1];
    case Shape::ell: {
      const double h = o.size[2] / 2.0;
      return detail::in_box(p, -h, o.size[0] - h, -h, h) ||
             detail::in_box(p, -h, h, -h, o.size[1] - h);
    }
  }
  return false;
}

/// Distance from (r, c) to the shape outline; positive inside, negative outside.
inline double boundary_distance(const ObjectSpec& o, double r, double c) {
  const detail::Vec2 p = detail::to_local(o, r, c);
  switch (o.shape) {
    case Shape::disc:
      return o.size[0] - std::sqrt(p.r * p.r + p.c * p.c);
    case Shape::capsule:
      return o.size[1] - detail::segment_distance(p, {-o.size[0], 0.0}, {o.size[0], 0.0});
    case Shape::rectangle:
    case Shape::ell: {
      const auto poly = detail::local_polygon(o);
      double d = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < poly.size(); ++i) {
        d = std::min(d, detail::segment_distance(p, poly[i], poly[(i + 1) % poly.size()]));
      }
      return contains(o, r, c) ? d : -d;
    }
  }
  return 0.0;
}

/// Point used as the annotation anchor (the "center" an annotator would click).
/// Equals the geometric centroid for the convex shapes. For the ell it is the
/// center of the corner block: the L centroid sits near the inner corner and
/// can fall outside the footprint.
inline std::pair<double, double> keypoint_anchor(const ObjectSpec& o) {
  return {o.pose.row, o.pose.col};
}

struct Bounds {
  double row_min, row_max, col_min, col_max;
};

inline Bounds bounds(const ObjectSpec& o) {
  using detail::Vec2;
  std::vector<Vec2> pts;
  double pad = 0.0;
  switch (o.shape) {
    case Shape::disc:
      pts = {{0.0, 0.0}};
      pad = o.size[0];
      break;
    case Shape::capsule:
      pts = {{-o.size[0], 0.0}, {o.size[0], 0.0}};
      pad = o.size[1];
      break;
    default:
      pts = detail::local_polygon(o);
  }
  Bounds b{1e300, -1e300, 1e300, -1e300};
  for (const Vec2& lp : pts) {
    const Vec2 w = detail::to_world(o, lp);
    b.row_min = std::min(b.row_min, w.r - pad);
    b.row_max = std::max(b.row_max, w.r + pad);
    b.col_min = std::min(b.col_min, w.c - pad);
    b.col_max = std::max(b.col_max, w.c + pad);
  }
  return b;
}

/// Object id per pixel; -1 on background.
struct LabelMap {
  int height = 0;
  int width = 0;
  std::vector<int> ids;

  int at(int r, int c) const { return ids[static_cast<std::size_t>(r) * width + c]; }
  bool inside(int r, int c) const { return r >= 0 && r < height && c >= 0 && c < width; }
};

/// Pixels (clipped to the workspace) whose centers lie inside the object.
inline std::vector<std::pair<int, int>> footprint_pixels(const ObjectSpec& o, Workspace ws) {
  const Bounds b = bounds(o);
  std::vector<std::pair<int, int>> px;
  const int r0 = std::max(0, static_cast<int>(std::floor(b.row_min)));
  const int r1 = std::min(ws.height - 1, static_cast<int>(std::ceil(b.row_max)));
  const int c0 = std::max(0, static_cast<int>(std::floor(b.col_min)));
  const int c1 = std::min(ws.width - 1, static_cast<int>(std::ceil(b.col_max)));
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c)
      if (contains(o, r, c)) px.emplace_back(r, c);
  return px;
}

inline LabelMap rasterize(const Scene& scene) {
  LabelMap m{scene.workspace.height, scene.workspace.width,
             std::vector<int>(static_cast<std::size_t>(scene.workspace.height) * scene.workspace.width, -1)};
  for (const ObjectSpec& o : scene.objects)
    for (auto [r, c] : footprint_pixels(o, scene.workspace))
      m.ids[static_cast<std::size_t>(r) * m.width + c] = o.id;
  return m;
}

inline const ObjectSpec* find_object(const Scene& scene, int id) {
  for (const ObjectSpec& o : scene.objects)
    if (o.id == id) return &o;
  return nullptr;
}

/// Object whose footprint covers pixel (r, c), if any.
inline const ObjectSpec* object_at(const Scene& scene, int r, int c) {
  for (const ObjectSpec& o : scene.objects)
    if (contains(o, r, c)) return &o;
  return nullptr;
}

// ---------------------------------------------------------------------------
// Scene generation

namespace detail {

inline ObjectSpec sample_object(int id, Workspace ws, const SceneConfig& cfg, Rng& rng) {
  ObjectSpec o;
  o.id = id;
  o.shape = cfg.shapes[rng.below(cfg.shapes.size())];
  auto draw = [&rng](SizeRange s) { return rng.uniform(s.lo, s.hi); };
  switch (o.shape) {
    case Shape::disc:
      o.size = {draw(cfg.disc_radius), 0.0, 0.0};
      break;
    case Shape::rectangle:
      o.size = {draw(cfg.rect_half_length), draw(cfg.rect_half_width), 0.0};
      break;
    case Shape::capsule:
      o.size = {draw(cfg.capsule_half_length), draw(cfg.capsule_radius), 0.0};
      break;
    case Shape::ell: {
      const double a = draw(cfg.ell_arm);
      const double b = draw(cfg.ell_arm);
      o.size = {a, b, draw(cfg.ell_thickness)};
      break;
    }
  }
  o.pose.yaw = o.shape == Shape::disc ? 0.0 : rng.uniform(0.0, std::numbers::pi);
  o.pose.row = rng.uniform(0.0, ws.height - 1.0);
  o.pose.col = rng.uniform(0.0, ws.width - 1.0);
  o.height = draw(cfg.height);
  for (double& ch : o.color) ch = rng.uniform(0.15, 1.0);
  return o;
}

}  // namespace detail

/// Random non-overlapping placement of `n_objects` objects.
///
/// Each object gets up to `cfg.max_retries` pose draws; if any object cannot
/// be placed the whole call throws PlacementError.
inline Scene generate_scene(std::size_t n_objects, Workspace ws, std::uint64_t seed,
                            const SceneConfig& cfg = {}) {
  if (ws.height < 32 || ws.width < 32)
    throw std::invalid_argument("generate_scene: workspace must be at least 32x32");
  if (cfg.shapes.empty()) throw std::invalid_argument("generate_scene: empty shape palette");
  Rng rng(seed);
  Scene scene{{}, ws, seed};
  std::vector<int> labels(static_cast<std::size_t>(ws.height) * ws.width, -1);
  for (std::size_t i = 0; i < n_objects; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < cfg.max_retries && !placed; ++attempt) {
      ObjectSpec o = detail::sample_object(static_cast<int>(i), ws, cfg, rng);
      const Bounds b = bounds(o);
      if (b.row_min < 0.0 || b.col_min < 0.0 || b.row_max > ws.height - 1.0 ||
          b.col_max > ws.width - 1.0)
        continue;
      const auto px = footprint_pixels(o, ws);
      if (px.empty()) continue;
      bool clear = true;
      for (auto [r, c] : px) {
        for (int dr = -cfg.min_gap; dr <= cfg.min_gap && clear; ++dr)
          for (int dc = -cfg.min_gap; dc <= cfg.min_gap && clear; ++dc) {
            const int rr = r + dr, cc = c + dc;
            if (rr < 0 || cc < 0 || rr >= ws.height || cc >= ws.width) continue;
            if (labels[static_cast<std::size_t>(rr) * ws.width + cc] >= 0) clear = false;
          }
        if (!clear) break;
      }
      if (!clear) continue;
      for (auto [r, c] : px) labels[static_cast<std::size_t>(r) * ws.width + c] = o.id;
      scene.objects.push_back(o);
      placed = true;
    }
    if (!placed)
      throw PlacementError("generate_scene: could not place object " + std::to_string(i) + " of " +
                           std::to_string(n_objects) + " after " +
                           std::to_string(cfg.max_retries) + " retries (workspace too crowded)");
  }
  return scene;
}

// ---------------------------------------------------------------------------
// Rendering

/// Orthographic top-down render; background is zero in both maps.
inline HeightmapPair render_heightmaps(const Scene& scene) {
  const int H = scene.workspace.height, W = scene.workspace.width;
  HeightmapPair hm{H, W, std::vector<double>(static_cast<std::size_t>(H) * W * 3, 0.0),
                   std::vector<double>(static_cast<std::size_t>(H) * W, 0.0)};
  for (const ObjectSpec& o : scene.objects) {
    for (auto [r, c] : footprint_pixels(o, scene.workspace)) {
      const std::size_t idx = static_cast<std::size_t>(r) * W + c;
      hm.depth[idx] = o.height;
      for (int ch = 0; ch < 3; ++ch) hm.color[idx * 3 + ch] = o.color[ch];
    }
  }
  return hm;
}

// ---------------------------------------------------------------------------
// Grasping

/// Unit closing-axis direction (row, col) for orientation index i.
/// Orientations i and i + 8 give exactly opposite vectors, and components
/// within 1e-12 of zero are snapped to zero.
inline std::pair<double, double> closing_axis(int alpha_index) {
  const double a = orientation_angle(alpha_index % (kNumOrientations / 2));
  auto snap = [](double v) { return std::abs(v) < 1e-12 ? 0.0 : v; };
  const double sign = alpha_index >= kNumOrientations / 2 ? -1.0 : 1.0;
  return {sign * snap(-std::sin(a)), sign * snap(std::cos(a))};
}

/// Span of the covering object's footprint along the closing axis through
/// (x, y), measured between its outermost points on that line so that a
/// concave outline is gripped across its gap; nullopt on background.
inline std::optional<double> closing_extent(const Scene& scene, int x, int y, int alpha_index) {
  const ObjectSpec* target = object_at(scene, x, y);
  if (target == nullptr) return std::nullopt;
  const auto [dr, dc] = closing_axis(alpha_index);
  const double limit = scene.workspace.height + scene.workspace.width;
  auto exit_distance = [&](double sign) {
    constexpr double step = 0.25;
    double inside = 0.0;
    for (double t = step; t < limit; t += step)
      if (contains(*target, x + sign * t * dr, y + sign * t * dc)) inside = t;
    double lo = inside, hi = inside + step;
    for (int it = 0; it < 40; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (contains(*target, x + sign * mid * dr, y + sign * mid * dc))
        lo = mid;
      else
        hi = mid;
    }
    return lo;
  };
  return exit_distance(1.0) + exit_distance(-1.0);
}

/// True when a finger pad centered at (fr, fc), aligned with the closing
/// axis, covers any object pixel.
inline bool finger_collides(const LabelMap& labels, double fr, double fc, int alpha_index,
                            double finger_size) {
  const auto [dr, dc] = closing_axis(alpha_index);
  const double half = finger_size / 2.0;
  const int reach = static_cast<int>(std::ceil(half * std::numbers::sqrt2)) + 1;
  const int r0 = static_cast<int>(std::floor(fr)) - reach, r1 = static_cast<int>(std::ceil(fr)) + reach;
  const int c0 = static_cast<int>(std::floor(fc)) - reach, c1 = static_cast<int>(std::ceil(fc)) + reach;
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c) {
      if (!labels.inside(r, c) || labels.at(r, c) < 0) continue;
      const double vr = r - fr, vc = c - fc;
      const double along = vr * dr + vc * dc;
      const double across = vr * dc - vc * dr;
      if (std::abs(along) <= half + 1e-9 && std::abs(across) <= half + 1e-9) return true;
    }
  return false;
}

/// Deterministic analytic grasp: succeeds iff the grasp point is on an
/// object, the chord fits in the aperture and neither finger pad lands on
/// an object. The grasped object is removed on success.
inline std::pair<Scene, GraspOutcome> execute_grasp(const Scene& scene, const GraspAction& action,
                                                    const GripperConfig& gripper = {}) {
  const Workspace ws = scene.workspace;
  if (action.x < 0 || action.y < 0 || action.x >= ws.height || action.y >= ws.width)
    throw std::out_of_range("execute_grasp: action outside workspace");
  if (action.alpha_index < 0 || action.alpha_index >= kNumOrientations)
    throw std::out_of_range("execute_grasp: alpha_index outside [0, 15]");

  GraspOutcome fail;
  const auto extent = closing_extent(scene, action.x, action.y, action.alpha_index);
  if (!extent || *extent > gripper.aperture) return {scene, fail};

  const LabelMap labels = rasterize(scene);
  const auto [dr, dc] = closing_axis(action.alpha_index);
  const double off = gripper.aperture / 2.0;
  for (double sign : {1.0, -1.0}) {
    if (finger_collides(labels, action.x + sign * off * dr, action.y + sign * off * dc,
                        action.alpha_index, gripper.finger_size))
      return {scene, fail};
  }

  const ObjectSpec* target = object_at(scene, action.x, action.y);
  const int id = target->id;
  Scene next = scene;
  std::erase_if(next.objects, [id](const ObjectSpec& o) { return o.id == id; });
  return {std::move(next), GraspOutcome{true, id, 1}};
}

inline bool is_terminal(const Scene& scene, std::size_t step, std::size_t max_steps) {
  return scene.objects.empty() || step >= max_steps;
}

// ---------------------------------------------------------------------------
// JSON

inline void to_json(nlohmann::json& j, const ObjectSpec& o) {
  j = nlohmann::json{{"id", o.id},
                     {"shape", to_string(o.shape)},
                     {"pose", {{"row", o.pose.row}, {"col", o.pose.col}, {"yaw", o.pose.yaw}}},
                     {"size", o.size},
                     {"height", o.height},
                     {"color", o.color}};
}

inline void from_json(const nlohmann::json& j, ObjectSpec& o) {
  o.id = j.at("id").get<int>();
  o.shape = shape_from_string(j.at("shape").get<std::string>());
  const auto& p = j.at("pose");
  o.pose = {p.at("row").get<double>(), p.at("col").get<double>(), p.at("yaw").get<double>()};
  o.size = j.at("size").get<std::array<double, 3>>();
  o.height = j.at("height").get<double>();
  o.color = j.at("color").get<std::array<double, 3>>();
  if (!(o.height > 0.0)) throw std::invalid_argument("object height must be > 0");
}

inline void to_json(nlohmann::json& j, const Scene& s) {
  j = nlohmann::json{{"workspace", {{"H", s.workspace.height}, {"W", s.workspace.width}}},
                     {"seed", s.seed},
                     {"objects", s.objects}};
}

inline void from_json(const nlohmann::json& j, Scene& s) {
  s.workspace = {j.at("workspace").at("H").get<int>(), j.at("workspace").at("W").get<int>()};
  s.seed = j.at("seed").get<std::uint64_t>();
  s.objects = j.at("objects").get<std::vector<ObjectSpec>>();
}

}  // namespace graspwarm::sim
