#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace psi {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Vec4 = Eigen::Vector4d;

inline constexpr int kNumWaypoints = 16;

/// Rigid transform stored as rotation vector (axis * angle, radians) plus
/// translation (meters). Matrices are only built transiently.
struct Pose {
  Vec3 rotvec = Vec3::Zero();
  Vec3 trans = Vec3::Zero();

  static Pose identity() { return {}; }
  static Pose from_rt(const Mat3& rotation, const Vec3& translation);
  static Pose from_matrix(const Mat4& m);
  static Pose from_translation(const Vec3& t) { return {Vec3::Zero(), t}; }

  Mat3 rotation() const;
  Mat4 matrix() const;
  Pose inverse() const;
  Vec3 apply(const Vec3& point) const;
  bool is_finite() const;
};

/// a * b applies b first, then a.
Pose compose(const Pose& a, const Pose& b);
inline Pose operator*(const Pose& a, const Pose& b) { return compose(a, b); }

struct TrajectoryEntry {
  std::int64_t frame_index = 0;
  Pose pose;
};

/// Ordered poses of one object in coordinate frame `frame_id`.
struct PoseTrajectory {
  std::string frame_id;
  std::vector<TrajectoryEntry> entries;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
  const Pose& front() const { return entries.front().pose; }
  const Pose& back() const { return entries.back().pose; }
  std::vector<Pose> poses() const;

  /// Throws InvalidArgument when empty, unordered or non-finite.
  void validate() const;

  /// Builds a trajectory with consecutive indices 0..n-1.
  static PoseTrajectory from_poses(std::string frame_id, std::span<const Pose> poses);
};

using WaypointTrajectory = std::array<Pose, kNumWaypoints>;

Mat3 skew(const Vec3& v);

/// Rodrigues formula; total over finite input.
Mat3 rotvec_to_matrix(const Vec3& r);

/// Inverse of rotvec_to_matrix with |result| <= pi. Throws NotARotation when
/// the input is not orthonormal within 1e-6 or has negative determinant.
Vec3 matrix_to_rotvec(const Mat3& m);

/// Maps any rotation vector to the equivalent one with norm <= pi. At exactly
/// pi the axis sign is chosen so z >= 0 (then y, then x).
Vec3 canonicalize_rotvec(const Vec3& r);

/// Geodesic angle between the rotations of a and b, in [0, pi].
double rotation_distance(const Pose& a, const Pose& b);
double rotation_angle(const Mat3& m);

/// Spherical interpolation of rotation and linear interpolation of
/// translation; alpha = 0 gives a, alpha = 1 gives b.
Pose interpolate(const Pose& a, const Pose& b, double alpha);

/// Uniform resampling to n poses over entry order. Endpoints are copied
/// exactly. A single-entry trajectory yields n copies and logs a warning.
std::vector<Pose> resample_trajectory(const PoseTrajectory& traj, int n = kNumWaypoints);

/// Conjugates pose by a translation to u: the returned transform acts on
/// points expressed relative to u.
Pose center_at(const Pose& pose, const Vec3& u);
Pose uncenter_at(const Pose& delta, const Vec3& u);

/// Relative poses Delta_i in the u-centered object frame (axes of the source
/// frame): x_i = R_i (x_0 - u) + u + t_i. Delta_0 is exactly identity.
PoseTrajectory to_object_frame(const PoseTrajectory& traj, const Vec3& u);

/// Inverse of to_object_frame given the first absolute pose.
PoseTrajectory from_object_frame(const PoseTrajectory& rel, const Vec3& u, const Pose& first);

/// Moves `pose` rigidly with an object displaced by the relative transform
/// delta about the center u.
Pose apply_relative(const Pose& delta, const Vec3& u, const Pose& pose);
Vec3 apply_relative(const Pose& delta, const Vec3& u, const Vec3& point);

/// End-effector poses that keep the grasp rigidly attached to the object.
/// The first output is the grasp itself.
std::vector<Pose> grasp_to_ee_trajectory(const Pose& grasp, std::span<const Pose> rel, const Vec3& u);

WaypointTrajectory to_waypoints(std::span<const Pose> poses);

}  // namespace psi
