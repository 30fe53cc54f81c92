#pragma once

#include "psi/geom.hpp"

#include <span>
#include <vector>

namespace psi {

/// Least-squares rigid transform T minimizing sum |T p0_i - p1_i|^2 (Kabsch,
/// uniform weights, determinant-corrected so the result is a rotation).
/// Throws LengthMismatch, and DegenerateGeometry when p0 has fewer than 3
/// points or is collinear.
Pose flow_to_se3(std::span<const Vec3> p0, std::span<const Vec3> p1);

/// Sum of squared residuals of `t` on the pairs.
double alignment_residual(const Pose& t, std::span<const Vec3> p0, std::span<const Vec3> p1);

/// Per waypoint, every point moved by apply_relative(delta, u, .).
std::vector<std::vector<Vec3>> gen_flow_labels(std::span<const Vec3> points, std::span<const Pose> rel, const Vec3& u);

}  // namespace psi
