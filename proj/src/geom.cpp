#include "psi/geom.hpp"

#include "psi/error.hpp"
#include "psi/log.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace psi {

namespace {

constexpr double kPi = std::numbers::pi;

Vec3 vee(const Mat3& m) { return {m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1)}; }

// Sign convention for half-turns: z >= 0, then y >= 0, then x >= 0.
Vec3 fix_half_turn_sign(Vec3 r) {
  constexpr double kZero = 1e-12;
  bool flip = false;
  if (std::abs(r.z()) > kZero) {
    flip = r.z() < 0.0;
  } else if (std::abs(r.y()) > kZero) {
    flip = r.y() < 0.0;
  } else {
    flip = r.x() < 0.0;
  }
  return flip ? Vec3(-r) : r;
}

}  // namespace

Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return s;
}

Mat3 rotvec_to_matrix(const Vec3& r) {
  const double theta2 = r.squaredNorm();
  const Mat3 k = skew(r);
  double a;  // sin(t)/t
  double b;  // (1 - cos(t))/t^2
  if (theta2 < 1e-10) {
    a = 1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0;
    b = 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0;
  } else {
    const double theta = std::sqrt(theta2);
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta2;
  }
  return Mat3::Identity() + a * k + b * k * k;
}

double rotation_angle(const Mat3& m) {
  const double s = 0.5 * vee(m).norm();
  const double c = 0.5 * (m.trace() - 1.0);
  return std::atan2(s, c);
}

Vec3 matrix_to_rotvec(const Mat3& m) {
  if (!m.allFinite()) throw Error(ErrorCode::NotARotation, "non-finite matrix");
  const double ortho_err = (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (ortho_err > 1e-6 || m.determinant() < 0.0) {
    throw Error(ErrorCode::NotARotation, "matrix is not a proper rotation");
  }
  const Vec3 v = vee(m);
  const double s = 0.5 * v.norm();
  const double c = 0.5 * (m.trace() - 1.0);
  const double theta = std::atan2(s, c);

  if (c > -0.9) {
    // theta / sin(theta), with its series near zero.
    const double f = s < 1e-8 ? 1.0 + theta * theta / 6.0 : theta / s;
    return 0.5 * f * v;
  }

  // Near a half-turn the skew part vanishes; read the axis from the
  // symmetric part (1 - cos) * a a^T instead.
  const Mat3 b = 0.5 * (m + m.transpose()) - c * Mat3::Identity();
  int col = 0;
  b.diagonal().maxCoeff(&col);
  Vec3 axis = b.col(col) / std::sqrt(b(col, col) * (1.0 - c));
  axis.normalize();
  if (axis.dot(v) < 0.0) axis = -axis;
  Vec3 r = theta * axis;
  if (std::abs(theta - kPi) < 1e-12) r = fix_half_turn_sign(r);
  return r;
}

Vec3 canonicalize_rotvec(const Vec3& r) {
  const double theta = r.norm();
  if (theta <= kPi) {
    return std::abs(theta - kPi) < 1e-12 ? fix_half_turn_sign(r) : r;
  }
  double wrapped = std::fmod(theta, 2.0 * kPi);
  if (wrapped > kPi) wrapped -= 2.0 * kPi;
  Vec3 out = r * (wrapped / theta);
  if (std::abs(std::abs(wrapped) - kPi) < 1e-12) out = fix_half_turn_sign(out);
  return out;
}

Pose Pose::from_rt(const Mat3& rotation, const Vec3& translation) {
  return {matrix_to_rotvec(rotation), translation};
}

Pose Pose::from_matrix(const Mat4& m) {
  return from_rt(m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>());
}

Mat3 Pose::rotation() const { return rotvec_to_matrix(rotvec); }

Mat4 Pose::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation();
  m.topRightCorner<3, 1>() = trans;
  return m;
}

Pose Pose::inverse() const {
  const Mat3 rt = rotation().transpose();
  return {canonicalize_rotvec(-rotvec), -(rt * trans)};
}

Vec3 Pose::apply(const Vec3& point) const { return rotation() * point + trans; }

bool Pose::is_finite() const { return rotvec.allFinite() && trans.allFinite(); }

Pose compose(const Pose& a, const Pose& b) {
  const Mat3 ra = a.rotation();
  return {matrix_to_rotvec(ra * b.rotation()), ra * b.trans + a.trans};
}

double rotation_distance(const Pose& a, const Pose& b) {
  return rotation_angle(a.rotation().transpose() * b.rotation());
}

Pose interpolate(const Pose& a, const Pose& b, double alpha) {
  if (alpha == 0.0) return a;
  if (alpha == 1.0) return b;
  const Mat3 ra = a.rotation();
  const Vec3 step = matrix_to_rotvec(ra.transpose() * b.rotation());
  const Mat3 r = ra * rotvec_to_matrix(alpha * step);
  return {matrix_to_rotvec(r), (1.0 - alpha) * a.trans + alpha * b.trans};
}

std::vector<Pose> PoseTrajectory::poses() const {
  std::vector<Pose> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.pose);
  return out;
}

void PoseTrajectory::validate() const {
  if (entries.empty()) throw Error(ErrorCode::InvalidArgument, "trajectory is empty");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!entries[i].pose.is_finite()) {
      throw Error(ErrorCode::InvalidArgument, "non-finite pose at entry " + std::to_string(i));
    }
    if (entries[i].frame_index < 0) {
      throw Error(ErrorCode::InvalidArgument, "negative frame index");
    }
    if (i > 0 && entries[i].frame_index <= entries[i - 1].frame_index) {
      throw Error(ErrorCode::InvalidArgument, "frame indices must be strictly increasing");
    }
  }
}

PoseTrajectory PoseTrajectory::from_poses(std::string frame_id, std::span<const Pose> poses) {
  PoseTrajectory t{std::move(frame_id), {}};
  t.entries.reserve(poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) {
    t.entries.push_back({static_cast<std::int64_t>(i), poses[i]});
  }
  return t;
}

std::vector<Pose> resample_trajectory(const PoseTrajectory& traj, int n) {
  if (traj.empty()) throw Error(ErrorCode::InvalidArgument, "cannot resample an empty trajectory");
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "resample count must be >= 2");
  const std::size_t m = traj.size();
  if (m == 1) {
    log().warn("DegenerateTrajectory: single-entry trajectory resampled to {} copies", n);
    return std::vector<Pose>(static_cast<std::size_t>(n), traj.front());
  }
  std::vector<Pose> out;
  out.reserve(static_cast<std::size_t>(n));
  const double span = static_cast<double>(m - 1);
  for (int k = 0; k < n; ++k) {
    if (k == 0) {
      out.push_back(traj.front());
      continue;
    }
    if (k == n - 1) {
      out.push_back(traj.back());
      continue;
    }
    const double s = span * k / (n - 1);
    auto lo = static_cast<std::size_t>(std::floor(s));
    lo = std::min(lo, m - 2);
    const double alpha = s - static_cast<double>(lo);
    out.push_back(interpolate(traj.entries[lo].pose, traj.entries[lo + 1].pose, alpha));
  }
  return out;
}

Pose center_at(const Pose& pose, const Vec3& u) {
  // T(-u) * pose * T(u)
  const Mat3 r = pose.rotation();
  return {pose.rotvec, r * u + pose.trans - u};
}

Pose uncenter_at(const Pose& delta, const Vec3& u) {
  // T(u) * delta * T(-u)
  const Mat3 r = delta.rotation();
  return {delta.rotvec, delta.trans + u - r * u};
}

PoseTrajectory to_object_frame(const PoseTrajectory& traj, const Vec3& u) {
  traj.validate();
  PoseTrajectory out{traj.frame_id, {}};
  out.entries.reserve(traj.size());
  const Pose first_inv = traj.front().inverse();
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const auto& e = traj.entries[i];
    Pose delta = i == 0 ? Pose::identity() : center_at(compose(e.pose, first_inv), u);
    out.entries.push_back({e.frame_index, delta});
  }
  return out;
}

PoseTrajectory from_object_frame(const PoseTrajectory& rel, const Vec3& u, const Pose& first) {
  PoseTrajectory out{rel.frame_id, {}};
  out.entries.reserve(rel.size());
  for (const auto& e : rel.entries) {
    out.entries.push_back({e.frame_index, compose(uncenter_at(e.pose, u), first)});
  }
  return out;
}

Pose apply_relative(const Pose& delta, const Vec3& u, const Pose& pose) {
  return compose(uncenter_at(delta, u), pose);
}

Vec3 apply_relative(const Pose& delta, const Vec3& u, const Vec3& point) {
  return delta.rotation() * (point - u) + u + delta.trans;
}

std::vector<Pose> grasp_to_ee_trajectory(const Pose& grasp, std::span<const Pose> rel, const Vec3& u) {
  std::vector<Pose> out;
  out.reserve(rel.size());
  for (std::size_t i = 0; i < rel.size(); ++i) {
    out.push_back(i == 0 ? grasp : apply_relative(rel[i], u, grasp));
  }
  return out;
}

WaypointTrajectory to_waypoints(std::span<const Pose> poses) {
  if (poses.size() != static_cast<std::size_t>(kNumWaypoints)) {
    throw Error(ErrorCode::InvalidArgument,
                "expected " + std::to_string(kNumWaypoints) + " waypoints, got " +
                    std::to_string(poses.size()));
  }
  WaypointTrajectory w;
  std::copy(poses.begin(), poses.end(), w.begin());
  return w;
}

}  // namespace psi
