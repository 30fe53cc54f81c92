#pragma once

#include "psi/filterpipe.hpp"
#include "psi/grasp.hpp"

#include <Eigen/Core>
#include <filesystem>
#include <optional>
#include <vector>

namespace psi {

inline constexpr int kRawFeatures = 5;                     // u (3), goal2d (2)
inline constexpr int kFeatures = kRawFeatures + 1;         // + bias
inline constexpr int kTrajOutputs = kNumWaypoints * 6;     // rotvec, trans per waypoint
using FeatureVec = Eigen::Matrix<double, kFeatures, 1>;

/// Standardized [u, goal2d] followed by a constant 1. goal2d absent -> 0.
struct FeatureScaler {
  Eigen::Matrix<double, kRawFeatures, 1> mean = Eigen::Matrix<double, kRawFeatures, 1>::Zero();
  Eigen::Matrix<double, kRawFeatures, 1> scale = Eigen::Matrix<double, kRawFeatures, 1>::Ones();

  FeatureVec operator()(const Vec3& u, const std::optional<Vec2>& goal2d) const;
};

struct PolicyModel {
  FeatureScaler scaler;
  Eigen::Matrix<double, kTrajOutputs, kFeatures> traj_weights = Eigen::Matrix<double, kTrajOutputs, kFeatures>::Zero();
  Eigen::Matrix<double, kNumAnchors, kFeatures> grasp_weights = Eigen::Matrix<double, kNumAnchors, kFeatures>::Zero();
  bool stage1 = false;
  bool stage2 = false;
  double traj_loss = 0.0;   // training MSE per output
  double grasp_loss = 0.0;  // training BCE per (episode, anchor)
};

struct Stage1Params {
  double ridge = 1e-6;  // bias column is not penalized
};

struct Stage2Params {
  int epochs = 500;
  /// <= 0 picks 1/L, L the Lipschitz constant of the mean-BCE gradient, so
  /// every full-batch step decreases the loss.
  double lr = 0.0;
  double small_data_factor = 0.1;
  double joint_weight = 0.01;  // L_traj + w L_grasp when not small_data
};

/// Fewer than 100 kept episodes.
bool is_small_data(const FilteredDataset& d);

/// Closed-form ridge fit of the 96 waypoint numbers. Discarded records are
/// ignored. Throws EmptyDataset.
PolicyModel train_stage1(const FilteredDataset& d, const Stage1Params& params = {});

/// Full-batch gradient descent on mean BCE of the 8 grasp outputs. With
/// small_data the trajectory weights stay untouched; otherwise they are
/// refit with the joint objective each epoch. `bce_history` receives the
/// loss before every epoch plus the final loss. Throws StageOrder.
PolicyModel train_stage2(const PolicyModel& model, const FilteredDataset& d, bool small_data,
                         const Stage2Params& params = {}, std::vector<double>* bce_history = nullptr);

struct Prediction {
  WaypointTrajectory waypoints;
  GraspScores scores;
};

/// Throws Untrained unless stage 1 is done; scores need stage 2 and are 0.5
/// otherwise.
Prediction predict(const PolicyModel& model, const Vec3& u, const std::optional<Vec2>& goal2d);

Json model_to_json(const PolicyModel& m);
PolicyModel model_from_json(const Json& j);
void save_model(const PolicyModel& m, const std::filesystem::path& path);
PolicyModel load_model(const std::filesystem::path& path);

}  // namespace psi
