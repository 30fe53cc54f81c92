#include "psi/synth.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace psi::synth {

double unit_uniform(std::mt19937_64& gen) { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }

double gaussian(std::mt19937_64& gen) {
  // Box-Muller; u1 kept away from zero.
  const double u1 = 1.0 - unit_uniform(gen);
  const double u2 = unit_uniform(gen);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

namespace {

constexpr double kHx = 0.05, kHy = 0.035, kHz = 0.07;
constexpr double kCapRadius = 0.03;  // spherical cap on the +x face
constexpr double kCapHeight = 0.015;
constexpr double kStepZ = 0.03;      // +y face is raised by 1 cm above this height

Vec3 jitter(std::mt19937_64& gen, double noise) {
  if (noise <= 0.0) return Vec3::Zero();
  return noise * Vec3(gaussian(gen), gaussian(gen), gaussian(gen));
}

Vec3 sample_face(std::mt19937_64& gen, int face) {
  const double a = 2.0 * unit_uniform(gen) - 1.0;
  const double b = 2.0 * unit_uniform(gen) - 1.0;
  switch (face) {
    case 0: return {kHx, a * kHy, b * kHz};
    case 1: return {-kHx, a * kHy, b * kHz};
    case 2: {
      const double z = b * kHz;
      return {a * kHx, kHy + (z > kStepZ ? 0.01 : 0.0), z};
    }
    case 3: return {a * kHx, -kHy, b * kHz};
    case 4: return {a * kHx, b * kHy, kHz};
    default: return {a * kHx, b * kHy, -kHz};
  }
}

// Spherical cap on +x centered at (kHx, 0, 0.02) with base radius kCapRadius.
Vec3 sample_cap(std::mt19937_64& gen) {
  const double rs = (kCapRadius * kCapRadius + kCapHeight * kCapHeight) / (2.0 * kCapHeight);
  const double zmin = rs - kCapHeight;  // cap spans axial height [zmin, rs]
  const double h = zmin + unit_uniform(gen) * kCapHeight;  // uniform in height = uniform in area
  const double phi = 2.0 * std::numbers::pi * unit_uniform(gen);
  const double rho = std::sqrt(std::max(0.0, rs * rs - h * h));
  return {kHx + (h - zmin), rho * std::cos(phi), 0.02 + rho * std::sin(phi)};
}

}  // namespace

PointCloud sample_object(std::size_t n, std::uint64_t seed, double noise) {
  std::mt19937_64 gen(seed);
  const std::array<double, 7> area{
      4 * kHy * kHz, 4 * kHy * kHz, 4 * kHx * kHz, 4 * kHx * kHz, 4 * kHx * kHy, 4 * kHx * kHy,
      2 * std::numbers::pi * ((kCapRadius * kCapRadius + kCapHeight * kCapHeight) / (2 * kCapHeight)) * kCapHeight};
  double total = 0.0;
  for (double a : area) total += a;
  PointCloud pc;
  pc.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double pick = unit_uniform(gen) * total;
    int face = 0;
    while (face < 6 && pick >= area[static_cast<std::size_t>(face)]) {
      pick -= area[static_cast<std::size_t>(face)];
      ++face;
    }
    Vec3 p = face == 6 ? sample_cap(gen) : sample_face(gen, face);
    // The flat +x face is hidden under the cap's footprint.
    if (face == 0 && std::hypot(p.y(), p.z() - 0.02) < kCapRadius) p = sample_cap(gen);
    pc.points.push_back(p + jitter(gen, noise));
  }
  return pc;
}

PointCloud sample_surface(std::size_t n, std::uint64_t seed, double noise) {
  std::mt19937_64 gen(seed);
  PointCloud pc;
  pc.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = 0.2 * unit_uniform(gen) - 0.1;
    const double y = 0.2 * unit_uniform(gen) - 0.1;
    const double z = 0.03 * std::exp(-((x - 0.04) * (x - 0.04) + (y + 0.03) * (y + 0.03)) / 0.0008) +
                     0.015 * std::exp(-((x + 0.05) * (x + 0.05) + (y - 0.05) * (y - 0.05)) / 0.0003) +
                     0.01 * std::sin(25.0 * x + 3.0 * y) * std::cos(18.0 * y) + 0.1 * x * y;
    pc.points.push_back(Vec3(x, y, z) + jitter(gen, noise));
  }
  return pc;
}

FrameSequence make_sequence(std::span<const Pose> object_poses, std::size_t n_points, std::uint64_t seed,
                            double noise) {
  FrameSequence seq{"camera", {}};
  for (std::size_t f = 0; f < object_poses.size(); ++f) {
    const PointCloud local = sample_object(n_points, seed + f, noise);
    seq.frames.push_back({static_cast<std::int64_t>(f), transform_cloud(local, object_poses[f])});
  }
  return seq;
}

PoseTrajectory relative_to_first(std::span<const Pose> object_poses, const std::string& frame_id) {
  PoseTrajectory t{frame_id, {}};
  const Pose first_inv = object_poses.front().inverse();
  for (std::size_t f = 0; f < object_poses.size(); ++f) {
    t.entries.push_back({static_cast<std::int64_t>(f), f == 0 ? Pose::identity() : compose(object_poses[f], first_inv)});
  }
  return t;
}

namespace {

double smooth(double s) { return s * s * s * (10.0 + s * (-15.0 + 6.0 * s)); }

Pose about_center(const Mat3& r, const Vec3& u, const Vec3& center) { return Pose::from_rt(r, center - r * u); }

}  // namespace

PoseTrajectory pick_place_demo(const Vec3& u, const Vec3& goal, double lift, int n) {
  std::vector<Pose> poses;
  const Vec3 up(0, 0, lift);
  for (int i = 0; i < n; ++i) {
    const double t = 3.0 * i / (n - 1);
    Vec3 c;
    if (t <= 1.0) {
      c = u + smooth(t) * up;
    } else if (t <= 2.0) {
      c = u + up + smooth(t - 1.0) * (goal - u);
    } else {
      c = goal + (1.0 - smooth(t - 2.0)) * up;
    }
    poses.push_back(Pose::from_translation(c - u));
  }
  return PoseTrajectory::from_poses("world", poses);
}

PoseTrajectory pour_demo(const Vec3& u, const Vec3& goal, double tilt, int n) {
  Vec3 dir = goal - u;
  dir.z() = 0.0;
  const Vec3 axis = dir.norm() > 1e-9 ? Vec3(Vec3::UnitZ().cross(dir).normalized()) : Vec3::UnitX();
  return tip_demo(u, tilt * axis, goal - u, n);
}

PoseTrajectory tip_demo(const Vec3& u, const Vec3& rotvec, const Vec3& displacement, int n) {
  std::vector<Pose> poses;
  for (int i = 0; i < n; ++i) {
    const double s = smooth(static_cast<double>(i) / (n - 1));
    poses.push_back(about_center(rotvec_to_matrix(s * rotvec), u, u + s * displacement));
  }
  return PoseTrajectory::from_poses("world", poses);
}

PoseTrajectory stir_demo(const Vec3& u, double radius, double turns, int n) {
  std::vector<Pose> poses;
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * turns * i / (n - 1);
    poses.push_back(Pose::from_translation(radius * Vec3(std::cos(a) - 1.0, std::sin(a), 0.0)));
  }
  return PoseTrajectory::from_poses("world", poses);
}

}  // namespace psi::synth
