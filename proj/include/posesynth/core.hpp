#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace posesynth {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

enum class ErrorKind {
  InvalidArgument,
  NoVisibleNeighbor,
  DegenerateSegment,
  AllOccluded,
  NoCandidate,
  Degenerate,
  DegeneratePose,
  BehindCamera,
  InvalidRange,
  TooFewPoses,
  JointCountMismatch,
  MissingPrediction,
  ParseError,
  SchemaMismatch,
  UnknownId,
  Io,
};

const char* to_string(ErrorKind kind);

/// Every failure raised by the library carries a kind so callers (and the
/// CLI exit-code mapping) can dispatch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Joint set with a kinematic tree. Indices everywhere refer to `joints`.
struct Skeleton {
  std::vector<std::string> joints;
  std::vector<std::pair<int, int>> edges;  // (parent, child)
  std::vector<std::pair<int, int>> left_right_pairs;
  std::vector<int> torso_joints;
  int root = 0;

  std::size_t size() const { return joints.size(); }
  int index_of(const std::string& name) const;  // -1 when absent
  std::vector<int> neighbors(int j) const;      // sorted ascending
  /// Permutation that swaps every left/right pair and fixes the rest.
  std::vector<int> mirror_permutation() const;

  bool operator==(const Skeleton&) const = default;
};

/// 13 joints: head, L/R shoulder, elbow, wrist, hip, knee, ankle.
Skeleton default_skeleton();

/// Empty iff the skeleton is well formed; one message per failed invariant.
std::vector<std::string> validate_skeleton(const Skeleton& s);

struct Pose2D {
  std::vector<Vec2> joints;  // pixels, origin top-left, x right, y down
  std::vector<bool> visible;

  Pose2D() = default;
  explicit Pose2D(std::vector<Vec2> pts);
  Pose2D(std::vector<Vec2> pts, std::vector<bool> vis);

  std::size_t size() const { return joints.size(); }
  bool is_visible(std::size_t k) const { return visible[k]; }
  std::size_t visible_count() const;

  bool operator==(const Pose2D&) const = default;
};

struct Pose3D {
  std::vector<Vec3> joints;  // millimeters

  std::size_t size() const { return joints.size(); }
  bool operator==(const Pose3D&) const = default;
};

Vec3 torso_center(const Pose3D& p, const Skeleton& s);

struct Camera {
  double azimuth = 0.0;    // degrees
  double elevation = 0.0;  // degrees, [-90, 90]
  double distance = 5000.0;
  double focal = 1100.0;

  bool operator==(const Camera&) const = default;
};

void check_camera(const Camera& c);

/// Similarity transform x -> scale * R(rotation) * x + translation.
struct Transform2D {
  double rotation = 0.0;  // radians
  double scale = 1.0;
  Vec2 translation = Vec2::Zero();

  static Transform2D identity() { return {}; }

  Vec2 apply(const Vec2& x) const;
  Pose2D apply(const Pose2D& p) const;
  /// (*this) o other, i.e. apply other first.
  Transform2D compose(const Transform2D& other) const;
  Transform2D inverse() const;

  bool operator==(const Transform2D&) const = default;
};

/// Index of the tree neighbor of `j` farthest from it in `p` among visible
/// neighbors. Ties go to the smaller index.
int farthest_connected_joint(const Skeleton& s, const Pose2D& p, int j);

/// Interleaved 8-bit RGB raster.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::uint8_t* at(int x, int y) { return &data[(static_cast<std::size_t>(y) * width + x) * 3]; }
  const std::uint8_t* at(int x, int y) const {
    return &data[(static_cast<std::size_t>(y) * width + x) * 3];
  }

  bool operator==(const RgbImage&) const = default;
};

/// Single-channel raster, row major.
template <typename T>
struct Raster {
  int width = 0;
  int height = 0;
  std::vector<T> values;

  Raster() = default;
  Raster(int w, int h, T fill = T{})
      : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

  T& operator()(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
  const T& operator()(int x, int y) const {
    return values[static_cast<std::size_t>(y) * width + x];
  }

  bool operator==(const Raster&) const = default;
};

struct AnnotatedImage {
  std::string id;
  RgbImage pixels;
  Pose2D pose;
};

struct BlendConfig {
  double s_min = 3.0;
  double s_max = 21.0;
  double alpha = 0.2;  // side growth in px per px of distance to the pose
};

void check_blend_config(const BlendConfig& cfg);

struct SynthConfig {
  int canvas = 220;
  double margin = 10.0;
  double sigma = 15.0;
  BlendConfig blend;
  std::uint64_t seed = 0;
};

void check_synth_config(const SynthConfig& cfg);

}  // namespace posesynth
