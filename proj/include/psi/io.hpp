#pragma once

#include "psi/geom.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>

namespace psi {

using Json = nlohmann::json;

Json vec_to_json(const Eigen::VectorXd& v);
Vec3 vec3_from_json(const Json& j, const std::string& what);
Vec2 vec2_from_json(const Json& j, const std::string& what);
Eigen::VectorXd vecx_from_json(const Json& j, const std::string& what);

Json pose_to_json(const Pose& p);
Pose pose_from_json(const Json& j);

/// {frame_id, entries: [{index, rotvec, trans}]}
Json trajectory_to_json(const PoseTrajectory& t);
PoseTrajectory trajectory_from_json(const Json& j);

PoseTrajectory load_trajectory(const std::filesystem::path& path);
void save_trajectory(const PoseTrajectory& t, const std::filesystem::path& path);

/// Throws Io when the file cannot be read and Parse on malformed JSON.
Json read_json_file(const std::filesystem::path& path);

/// Pretty-printed with sorted keys and a trailing newline, so identical
/// values always produce identical bytes. Doubles keep 17 significant digits.
void write_json_file(const Json& j, const std::filesystem::path& path);

/// Field accessor that throws Parse naming the missing key.
const Json& require(const Json& j, const std::string& key);

}  // namespace psi
