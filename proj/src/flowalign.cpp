#include "psi/flowalign.hpp"

#include "psi/error.hpp"

#include <Eigen/SVD>

namespace psi {

Pose flow_to_se3(std::span<const Vec3> p0, std::span<const Vec3> p1) {
  if (p0.size() != p1.size()) {
    throw Error(ErrorCode::LengthMismatch,
                std::to_string(p0.size()) + " source points vs " + std::to_string(p1.size()) + " targets");
  }
  if (p0.size() < 3) throw Error(ErrorCode::DegenerateGeometry, "need at least 3 point pairs");
  const double n = static_cast<double>(p0.size());
  Vec3 c0 = Vec3::Zero(), c1 = Vec3::Zero();
  for (std::size_t i = 0; i < p0.size(); ++i) {
    c0 += p0[i];
    c1 += p1[i];
  }
  c0 /= n;
  c1 /= n;
  Mat3 h = Mat3::Zero();
  Mat3 spread = Mat3::Zero();
  for (std::size_t i = 0; i < p0.size(); ++i) {
    const Vec3 a = p0[i] - c0;
    h += a * (p1[i] - c1).transpose();
    spread += a * a.transpose();
  }
  // Collinear sources leave the rotation about that line undetermined.
  const Eigen::JacobiSVD<Mat3> geom(spread);
  const Vec3 sv = geom.singularValues();
  if (sv[1] <= 1e-12 * std::max(sv[0], 1e-300)) {
    throw Error(ErrorCode::DegenerateGeometry, "source points are collinear");
  }
  const Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  Mat3 fix = Mat3::Identity();
  fix(2, 2) = (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  const Mat3 r = v * fix * u.transpose();
  return Pose::from_rt(r, c1 - r * c0);
}

double alignment_residual(const Pose& t, std::span<const Vec3> p0, std::span<const Vec3> p1) {
  if (p0.size() != p1.size()) throw Error(ErrorCode::LengthMismatch, "point sets differ in length");
  const Mat3 r = t.rotation();
  double s = 0.0;
  for (std::size_t i = 0; i < p0.size(); ++i) s += (r * p0[i] + t.trans - p1[i]).squaredNorm();
  return s;
}

std::vector<std::vector<Vec3>> gen_flow_labels(std::span<const Vec3> points, std::span<const Pose> rel, const Vec3& u) {
  std::vector<std::vector<Vec3>> out;
  out.reserve(rel.size());
  for (const auto& delta : rel) {
    std::vector<Vec3> moved;
    moved.reserve(points.size());
    const Mat3 r = delta.rotation();
    for (const auto& p : points) moved.push_back(r * (p - u) + u + delta.trans);
    out.push_back(std::move(moved));
  }
  return out;
}

}  // namespace psi
