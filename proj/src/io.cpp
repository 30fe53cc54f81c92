#include "psi/io.hpp"

#include "psi/error.hpp"

#include <fstream>
#include <sstream>

namespace psi {

namespace {

void expect_array(const Json& j, std::size_t n, const std::string& what) {
  if (!j.is_array() || (n != 0 && j.size() != n)) {
    throw Error(ErrorCode::Parse, what + ": expected array of " + std::to_string(n) + " numbers");
  }
  for (const auto& x : j) {
    if (!x.is_number()) throw Error(ErrorCode::Parse, what + ": non-numeric element");
  }
}

}  // namespace

Json vec_to_json(const Eigen::VectorXd& v) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

Vec3 vec3_from_json(const Json& j, const std::string& what) {
  expect_array(j, 3, what);
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Vec2 vec2_from_json(const Json& j, const std::string& what) {
  expect_array(j, 2, what);
  return {j[0].get<double>(), j[1].get<double>()};
}

Eigen::VectorXd vecx_from_json(const Json& j, const std::string& what) {
  expect_array(j, 0, what);
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

const Json& require(const Json& j, const std::string& key) {
  if (!j.is_object() || !j.contains(key)) throw Error(ErrorCode::Parse, "missing field '" + key + "'");
  return j.at(key);
}

Json pose_to_json(const Pose& p) {
  return Json{{"rotvec", vec_to_json(p.rotvec)}, {"trans", vec_to_json(p.trans)}};
}

Pose pose_from_json(const Json& j) {
  Pose p{vec3_from_json(require(j, "rotvec"), "rotvec"), vec3_from_json(require(j, "trans"), "trans")};
  if (!p.is_finite()) throw Error(ErrorCode::Parse, "non-finite pose");
  return p;
}

Json trajectory_to_json(const PoseTrajectory& t) {
  Json entries = Json::array();
  for (const auto& e : t.entries) {
    Json je = pose_to_json(e.pose);
    je["index"] = e.frame_index;
    entries.push_back(std::move(je));
  }
  return Json{{"frame_id", t.frame_id}, {"entries", std::move(entries)}};
}

PoseTrajectory trajectory_from_json(const Json& j) {
  PoseTrajectory t;
  const auto& fid = require(j, "frame_id");
  if (!fid.is_string()) throw Error(ErrorCode::Parse, "frame_id must be a string");
  t.frame_id = fid.get<std::string>();
  const auto& entries = require(j, "entries");
  if (!entries.is_array()) throw Error(ErrorCode::Parse, "entries must be an array");
  for (const auto& e : entries) {
    const auto& idx = require(e, "index");
    if (!idx.is_number_integer()) throw Error(ErrorCode::Parse, "index must be an integer");
    t.entries.push_back({idx.get<std::int64_t>(), pose_from_json(e)});
  }
  try {
    t.validate();
  } catch (const Error& err) {
    throw Error(ErrorCode::Parse, err.what());
  }
  return t;
}

PoseTrajectory load_trajectory(const std::filesystem::path& path) {
  return trajectory_from_json(read_json_file(path));
}

void save_trajectory(const PoseTrajectory& t, const std::filesystem::path& path) {
  write_json_file(trajectory_to_json(t), path);
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return Json::parse(ss.str());
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::Parse, path.string() + ": " + e.what());
  }
}

void write_json_file(const Json& j, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace psi
