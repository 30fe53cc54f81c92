// Python surface: poses as (rotvec, trans) numpy pairs, point clouds as
// (N, 3) arrays, structured documents as the same JSON the CLI reads.

#include "psi/error.hpp"
#include "psi/filterpipe.hpp"
#include "psi/flowalign.hpp"
#include "psi/imitate.hpp"
#include "psi/io.hpp"
#include "psi/registration.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace psi;

namespace {

using Points = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

std::vector<Vec3> to_vecs(const Points& m) {
  std::vector<Vec3> v(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) v[static_cast<std::size_t>(i)] = m.row(i).transpose();
  return v;
}

Points to_points(const std::vector<Vec3>& v) {
  Points m(static_cast<Eigen::Index>(v.size()), 3);
  for (std::size_t i = 0; i < v.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = v[i].transpose();
  return m;
}

PointCloud to_cloud(const Points& m) { return PointCloud{to_vecs(m)}; }

Json parse(const std::string& s) { return Json::parse(s); }

}  // namespace

PYBIND11_MODULE(_psi, m) {
  m.doc() = "Object-centric grasp and trajectory pipeline";

  py::register_exception<Error>(m, "PsiError");

  py::class_<Pose>(m, "Pose")
      .def(py::init<>())
      .def(py::init([](const Vec3& r, const Vec3& t) { return Pose{r, t}; }), py::arg("rotvec"), py::arg("trans"))
      .def_readwrite("rotvec", &Pose::rotvec)
      .def_readwrite("trans", &Pose::trans)
      .def("matrix", &Pose::matrix)
      .def("rotation", &Pose::rotation)
      .def("inverse", &Pose::inverse)
      .def("apply", &Pose::apply)
      .def_static("from_matrix", &Pose::from_matrix)
      .def("__mul__", [](const Pose& a, const Pose& b) { return compose(a, b); })
      .def("__repr__", [](const Pose& p) {
        return "Pose(rotvec=[" + std::to_string(p.rotvec.x()) + ", " + std::to_string(p.rotvec.y()) + ", " +
               std::to_string(p.rotvec.z()) + "], trans=[" + std::to_string(p.trans.x()) + ", " +
               std::to_string(p.trans.y()) + ", " + std::to_string(p.trans.z()) + "])";
      });

  m.def("compose", &compose);
  m.def("rotvec_to_matrix", &rotvec_to_matrix);
  m.def("matrix_to_rotvec", &matrix_to_rotvec);
  m.def("rotation_distance", &rotation_distance);
  m.def("interpolate", &interpolate);
  m.def("center_at", &center_at);
  m.def("uncenter_at", &uncenter_at);

  m.def("object_center", [](const Points& p) { return object_center(to_cloud(p)); });
  m.def("remove_outliers", [](const Points& p, int k, double ratio) { return to_points(remove_outliers(to_cloud(p), k, ratio).points); },
        py::arg("points"), py::arg("k") = 30, py::arg("std_ratio") = 2.0);
  m.def(
      "icp_register",
      [](const Points& src, const Points& dst, const Pose& init, double coarse, double fine) {
        IcpParams p;
        p.coarse_dist = coarse;
        p.fine_dist = fine;
        const IcpResult r = icp_register(to_cloud(src), to_cloud(dst), init, p);
        return py::make_tuple(r.transform, r.fitness, r.rmse);
      },
      py::arg("src"), py::arg("dst"), py::arg("init") = Pose{}, py::arg("coarse_dist") = 0.08,
      py::arg("fine_dist") = 0.02);

  m.def("anchor_grasps", [](const Vec3& u) {
    const auto a = generate_anchors(u);
    return std::vector<Pose>(a.begin(), a.end());
  });
  m.def("assign_candidate", [](const Pose& c, const Vec3& u) { return assign_candidate(c, generate_anchors(u)); });
  m.def("select_grasp_index", [](const std::vector<Pose>& cands, const std::array<double, kNumAnchors>& scores, const Vec3& u) {
    std::vector<CandidateGrasp> c;
    for (const auto& p : cands) c.push_back({p, ""});
    return select_grasp_index(c, scores, generate_anchors(u));
  });

  m.def("flow_to_se3", [](const Points& p0, const Points& p1) { return flow_to_se3(to_vecs(p0), to_vecs(p1)); });
  m.def("gen_flow_labels", [](const Points& p, const std::vector<Pose>& rel, const Vec3& u) {
    std::vector<Points> out;
    for (const auto& f : gen_flow_labels(to_vecs(p), rel, u)) out.push_back(to_points(f));
    return out;
  });

  m.def(
      "evaluate_task",
      [](const std::string& task_json, const std::vector<Pose>& motion, const Vec3& u) {
        const auto traj = PoseTrajectory::from_poses("world", motion);
        return verdict_to_json(evaluate_detailed(task_from_json(parse(task_json)), traj, u)).dump();
      },
      "Verdict JSON for a world-frame object motion (M_0 first).");

  m.def(
      "predict",
      [](const std::string& model_path, const Vec3& u, std::optional<Vec2> goal2d) {
        const Prediction p = predict(load_model(model_path), u, goal2d);
        return py::make_tuple(std::vector<Pose>(p.waypoints.begin(), p.waypoints.end()),
                              std::vector<double>(p.scores.begin(), p.scores.end()));
      },
      py::arg("model_path"), py::arg("u"), py::arg("goal2d") = std::nullopt);

  m.attr("NUM_ANCHORS") = kNumAnchors;
  m.attr("NUM_WAYPOINTS") = kNumWaypoints;
}
