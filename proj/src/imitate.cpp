#include "psi/imitate.hpp"

#include "psi/error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace psi {

namespace {

using Mat = Eigen::MatrixXd;

struct Batch {
  Mat x;  // n x kFeatures
  Mat traj;  // n x 96
  Mat labels;  // n x 8
};

Eigen::Matrix<double, 1, kTrajOutputs> flatten(const WaypointTrajectory& w) {
  Eigen::Matrix<double, 1, kTrajOutputs> row;
  for (int k = 0; k < kNumWaypoints; ++k) {
    row.segment<3>(6 * k) = w[static_cast<std::size_t>(k)].rotvec.transpose();
    row.segment<3>(6 * k + 3) = w[static_cast<std::size_t>(k)].trans.transpose();
  }
  return row;
}

std::vector<const EpisodeRecord*> kept(const FilteredDataset& d) {
  std::vector<const EpisodeRecord*> out;
  for (const auto& r : d.records) {
    if (!r.discarded) out.push_back(&r);
  }
  if (out.empty()) throw Error(ErrorCode::EmptyDataset, "dataset has no kept episodes");
  return out;
}

Eigen::Matrix<double, kRawFeatures, 1> raw(const Vec3& u, const std::optional<Vec2>& goal2d) {
  Eigen::Matrix<double, kRawFeatures, 1> f;
  f.head<3>() = u;
  f.tail<2>() = goal2d ? *goal2d : Vec2::Zero();
  return f;
}

Batch make_batch(const std::vector<const EpisodeRecord*>& recs, const FeatureScaler& scaler) {
  const auto n = static_cast<Eigen::Index>(recs.size());
  Batch b{Mat(n, kFeatures), Mat(n, kTrajOutputs), Mat(n, kNumAnchors)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = *recs[static_cast<std::size_t>(i)];
    b.x.row(i) = scaler(r.u, r.goal2d).transpose();
    b.traj.row(i) = flatten(r.waypoints);
    for (int k = 0; k < kNumAnchors; ++k) b.labels(i, k) = r.grasp_labels[k] ? 1.0 : 0.0;
  }
  return b;
}

// Minimizes mean ||W x - y||^2 + ridge ||W without bias||^2.
Mat ridge_fit(const Mat& x, const Mat& y, double ridge) {
  const double n = static_cast<double>(x.rows());
  Mat a = x.transpose() * x / n;
  for (int c = 0; c < kFeatures - 1; ++c) a(c, c) += ridge;
  a(kFeatures - 1, kFeatures - 1) += 1e-15;
  return a.ldlt().solve(x.transpose() * y / n).transpose();
}

double traj_mse(const Mat& w, const Batch& b) {
  return (b.x * w.transpose() - b.traj).squaredNorm() / static_cast<double>(b.traj.size());
}

// Numerically safe log(1 + exp(z)).
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
double sigmoid(double z) { return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

double bce(const Mat& g, const Batch& b) {
  const Mat z = b.x * g.transpose();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index k = 0; k < z.cols(); ++k) {
      // -[y log s(z) + (1 - y) log(1 - s(z))] = softplus(z) - y z
      sum += softplus(z(i, k)) - b.labels(i, k) * z(i, k);
    }
  }
  return sum / static_cast<double>(z.size());
}

}  // namespace

FeatureVec FeatureScaler::operator()(const Vec3& u, const std::optional<Vec2>& goal2d) const {
  FeatureVec f;
  f.head<kRawFeatures>() = (raw(u, goal2d) - mean).cwiseQuotient(scale);
  f[kRawFeatures] = 1.0;
  return f;
}

bool is_small_data(const FilteredDataset& d) {
  int n = 0;
  for (const auto& r : d.records) n += r.discarded ? 0 : 1;
  return n < 100;
}

PolicyModel train_stage1(const FilteredDataset& d, const Stage1Params& params) {
  if (!(params.ridge >= 0.0)) throw Error(ErrorCode::InvalidArgument, "ridge must be >= 0");
  const auto recs = kept(d);
  PolicyModel m;
  const double n = static_cast<double>(recs.size());
  Eigen::Matrix<double, kRawFeatures, 1> sum = Eigen::Matrix<double, kRawFeatures, 1>::Zero();
  Eigen::Matrix<double, kRawFeatures, 1> sq = Eigen::Matrix<double, kRawFeatures, 1>::Zero();
  for (const auto* r : recs) sum += raw(r->u, r->goal2d);
  m.scaler.mean = sum / n;
  for (const auto* r : recs) sq += (raw(r->u, r->goal2d) - m.scaler.mean).cwiseAbs2();
  for (int c = 0; c < kRawFeatures; ++c) {
    const double sd = std::sqrt(sq[c] / n);
    m.scaler.scale[c] = sd > 1e-12 ? sd : 1.0;
  }
  const Batch b = make_batch(recs, m.scaler);
  m.traj_weights = ridge_fit(b.x, b.traj, params.ridge);
  m.traj_loss = traj_mse(m.traj_weights, b);
  m.stage1 = true;
  return m;
}

PolicyModel train_stage2(const PolicyModel& model, const FilteredDataset& d, bool small_data,
                         const Stage2Params& params, std::vector<double>* bce_history) {
  if (!model.stage1) throw Error(ErrorCode::StageOrder, "stage 2 needs a stage-1 model");
  if (params.epochs < 0 || params.small_data_factor <= 0.0 || params.joint_weight <= 0.0) {
    throw Error(ErrorCode::InvalidArgument, "invalid Stage2Params");
  }
  const Batch b = make_batch(kept(d), model.scaler);
  PolicyModel m = model;
  const double pairs = static_cast<double>(b.labels.size());

  // Each grasp row sees a Hessian <= X^T X / (4 * pairs).
  const Mat xtx = b.x.transpose() * b.x;
  const double l = 0.25 * Eigen::SelfAdjointEigenSolver<Mat>(xtx).eigenvalues().maxCoeff() / pairs;
  // The joint objective scales the grasp gradient by w; an automatic rate
  // scales the step back by 1/w, so the grasp update is the same.
  const double w = small_data ? 1.0 : params.joint_weight;
  double lr = params.lr > 0.0 ? params.lr : 1.0 / (w * l);
  if (small_data) lr *= params.small_data_factor;

  // The trajectory head shares nothing with the grasp head, so its part of
  // the joint objective is minimized in closed form once.
  if (!small_data) m.traj_weights = ridge_fit(b.x, b.traj, 1e-6);
  Mat g = m.grasp_weights;
  double loss = bce(g, b);
  if (bce_history) bce_history->clear();
  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    if (bce_history) bce_history->push_back(loss);
    const Mat p = (b.x * g.transpose()).unaryExpr([](double z) { return sigmoid(z); });
    const Mat grad = (p - b.labels).transpose() * b.x / pairs;
    const Mat next = g - lr * w * grad;
    // At the optimum a step can raise the loss by an ulp; such steps are
    // dropped so the recorded loss never goes up.
    const double next_loss = bce(next, b);
    if (next_loss <= loss) {
      g = next;
      loss = next_loss;
    }
  }
  m.grasp_weights = g;
  m.grasp_loss = loss;
  if (bce_history) bce_history->push_back(m.grasp_loss);
  if (!small_data) m.traj_loss = traj_mse(m.traj_weights, b);
  m.stage2 = true;
  return m;
}

Prediction predict(const PolicyModel& model, const Vec3& u, const std::optional<Vec2>& goal2d) {
  if (!model.stage1) throw Error(ErrorCode::Untrained, "model has not been trained");
  const FeatureVec f = model.scaler(u, goal2d);
  const Eigen::Matrix<double, kTrajOutputs, 1> y = model.traj_weights * f;
  Prediction p;
  p.waypoints[0] = Pose::identity();
  for (int k = 1; k < kNumWaypoints; ++k) {
    p.waypoints[static_cast<std::size_t>(k)] =
        Pose{canonicalize_rotvec(y.segment<3>(6 * k)), y.segment<3>(6 * k + 3)};
  }
  const Eigen::Matrix<double, kNumAnchors, 1> z = model.grasp_weights * f;
  // Far outside the training range the logistic saturates to exactly 0 or 1
  // in double precision; keep scores strictly inside (0, 1).
  constexpr double kEdge = 1e-12;
  for (int k = 0; k < kNumAnchors; ++k) {
    p.scores[static_cast<std::size_t>(k)] = std::clamp(sigmoid(z[k]), kEdge, 1.0 - kEdge);
  }
  return p;
}

namespace {

Json matrix_to_json(const Mat& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

template <typename M>
void matrix_from_json(const Json& j, M& out, const std::string& what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != out.rows()) {
    throw Error(ErrorCode::Parse, what + ": wrong row count");
  }
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const Json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != out.cols()) {
      throw Error(ErrorCode::Parse, what + ": wrong column count");
    }
    for (Eigen::Index c = 0; c < out.cols(); ++c) out(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
}

}  // namespace

Json model_to_json(const PolicyModel& m) {
  return Json{{"version", 1},
              {"feature_mean", vec_to_json(m.scaler.mean)},
              {"feature_scale", vec_to_json(m.scaler.scale)},
              {"traj_weights", matrix_to_json(m.traj_weights)},
              {"grasp_weights", matrix_to_json(m.grasp_weights)},
              {"trained_stages", Json::array({m.stage1, m.stage2})},
              {"traj_loss", m.traj_loss},
              {"grasp_loss", m.grasp_loss}};
}

PolicyModel model_from_json(const Json& j) {
  if (j.value("version", 0) != 1) throw Error(ErrorCode::Parse, "unsupported model version");
  PolicyModel m;
  const auto mean = vecx_from_json(require(j, "feature_mean"), "feature_mean");
  const auto scale = vecx_from_json(require(j, "feature_scale"), "feature_scale");
  if (mean.size() != kRawFeatures || scale.size() != kRawFeatures) {
    throw Error(ErrorCode::Parse, "feature statistics must have 5 entries");
  }
  m.scaler.mean = mean;
  m.scaler.scale = scale;
  matrix_from_json(require(j, "traj_weights"), m.traj_weights, "traj_weights");
  matrix_from_json(require(j, "grasp_weights"), m.grasp_weights, "grasp_weights");
  const Json& stages = require(j, "trained_stages");
  if (!stages.is_array() || stages.size() != 2) throw Error(ErrorCode::Parse, "trained_stages must have 2 flags");
  m.stage1 = stages[0].get<bool>();
  m.stage2 = stages[1].get<bool>();
  m.traj_loss = j.value("traj_loss", 0.0);
  m.grasp_loss = j.value("grasp_loss", 0.0);
  return m;
}

void save_model(const PolicyModel& m, const std::filesystem::path& path) { write_json_file(model_to_json(m), path); }

PolicyModel load_model(const std::filesystem::path& path) { return model_from_json(read_json_file(path)); }

}  // namespace psi
