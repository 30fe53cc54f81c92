#pragma once

// Seeded synthetic scenes: object surfaces, rigid-motion sequences and
// demonstration trajectories. Used by fixtures, tests and the CLI.

#include "psi/cloud.hpp"
#include "psi/geom.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace psi::synth {

/// Uniform double in [0, 1) from the top 53 bits; independent of the
/// standard library's distribution implementations so streams are portable.
double unit_uniform(std::mt19937_64& gen);
double gaussian(std::mt19937_64& gen);

/// Box of half extents (5, 3.5, 7) cm with a spherical cap on +x and a step
/// on +y, centered at the origin. Area-weighted surface samples.
PointCloud sample_object(std::size_t n, std::uint64_t seed, double noise = 0.0);

/// Height field over a 20 x 20 cm patch with bumps of different sizes.
PointCloud sample_surface(std::size_t n, std::uint64_t seed, double noise = 0.0);

/// One frame per absolute object pose; each frame is a fresh sample of the
/// object (n points, seed + frame) placed by that pose.
FrameSequence make_sequence(std::span<const Pose> object_poses, std::size_t n_points, std::uint64_t seed,
                            double noise = 0.0);

/// Tracking-style trajectory T_i = A_i * A_0^-1 of absolute poses A_i.
PoseTrajectory relative_to_first(std::span<const Pose> object_poses, const std::string& frame_id = "camera");

/// World-frame demonstrations as object motions M_t (M_0 = identity) of an
/// object centered at u.
/// Lift by `lift`, carry over and set down so the center ends at `goal`.
PoseTrajectory pick_place_demo(const Vec3& u, const Vec3& goal, double lift, int n = 40);
/// Carry the center to `goal` while tipping the up axis by `tilt` toward the
/// horizontal direction of travel.
PoseTrajectory pour_demo(const Vec3& u, const Vec3& goal, double tilt, int n = 40);
/// Rotation by s * rotvec about the moving center u + s * displacement,
/// s rising smoothly from 0 to 1. Centered waypoints are linear in both.
PoseTrajectory tip_demo(const Vec3& u, const Vec3& rotvec, const Vec3& displacement, int n = 40);
/// Horizontal circles of `radius` starting and ending at u.
PoseTrajectory stir_demo(const Vec3& u, double radius, double turns, int n = 60);

}  // namespace psi::synth
