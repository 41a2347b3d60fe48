#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ktube/greedy.hpp"
#include "ktube/kernels.hpp"
#include "ktube/scenario.hpp"
#include "ktube/simulator.hpp"
#include "ktube/socp.hpp"

namespace ktube {

/// How the approximation tolerance tau becomes the P-greedy stopping value on P^2.
enum class ToleranceWiring {
  ScaledSquared,  ///< tol = (tau / R)^2, i.e. sup P_Z <= tau / R
  Tau,            ///< tol = tau
};
std::string_view wiring_name(ToleranceWiring w);
ToleranceWiring wiring_from_name(std::string_view name);

/// One seed per random purpose. Each is combined with its own stream tag.
struct Seeds {
  std::uint64_t candidates = 1;
  std::uint64_t training = 2;
  std::uint64_t validation = 3;
  std::uint64_t planning = 4;

  void validate() const;
  friend bool operator==(const Seeds&, const Seeds&) = default;
};
void to_json(nlohmann::json& j, const Seeds& s);
void from_json(const nlohmann::json& j, Seeds& s);

struct IdentifyConfig {
  KernelSpec kernel;
  SimConfig sim;
  double tau = 0.1;
  double R = 350.0;
  double eps = 0.025;
  double beta = 1e-6;
  Index candidate_count = 4000;
  Index max_basis = 2000;
  ToleranceWiring wiring = ToleranceWiring::ScaledSquared;
  Seeds seeds;
  IpmOptions solver;

  void validate() const;
  double greedy_tol() const;
};

struct ProgramReport {
  ScenarioCertificate certificate;
  SolveStatus status = SolveStatus::Optimal;
  double kkt_residual = 0.0;
  int iterations = 0;
  Index active_count = 0;
  double rkhs_norm = 0.0;     ///< sqrt(alpha^T K_Z alpha)
  double max_residual = 0.0;  ///< max_i |y_i - f(z_i)| on the training set
};

struct GreedyReport {
  double tol = 0.0;
  Index candidate_count = 0;
  GreedyStop stop = GreedyStop::Tolerance;
  double final_max_power = 0.0;
  std::vector<double> max_power_history;
};

/// Learned one-step tube model: yhat_l(z) = alpha_l^T k(Z, z), tube half-width gamma_l.
struct TubeModel {
  KernelSpec kernel;
  PointSet centers{3};
  std::array<Vector, 2> alphas;
  std::array<double, 2> gammas{0.0, 0.0};
  double R = 0.0;
  double tau = 0.0;
  ToleranceWiring wiring = ToleranceWiring::ScaledSquared;
  std::int64_t N = 0;
  int decision_dim = 1;
  std::array<ProgramReport, 2> programs;
  JointCertificate joint;
  GreedyReport greedy;
  Seeds seeds;
  SimConfig sim;

  Index basis_size() const { return centers.size(); }
};

void to_json(nlohmann::json& j, const TubeModel& m);
void from_json(const nlohmann::json& j, TubeModel& m);

/// Runs the whole identification: greedy basis on a candidate set, sample
/// size by bisection, training set, both per-output programs, union bound.
TubeModel identify(const IdentifyConfig& config);

/// Solves the program for one output given shared data. Exposed for tests.
ProgramReport solve_output(const Matrix& gram_factor, const Matrix& features, const Vector& targets, double R,
                           const IpmOptions& solver, Vector& alpha_out, double& gamma_out);

struct Prediction {
  Vec2 mean = Vec2::Zero();
  Vec2 tube = Vec2::Zero();
  /// Distance from z to the nearest center exceeds 2 lengthscales; the tube
  /// is only certified on the sampling domain.
  bool extrapolated = false;
};

Prediction predict(const TubeModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& z);
Vec2 predict_mean(const TubeModel& model, const Vec2& x, double u);

struct ValidationReport {
  Index samples = 0;
  std::array<double, 2> rates{0.0, 0.0};
  double joint_rate = 0.0;
  std::uint64_t seed = 0;
};

/// Empirical violation rates |y_l - yhat_l| > gamma_l on fresh i.i.d. samples.
ValidationReport validate(const TubeModel& model, Index M_test, const SimConfig& sim, std::uint64_t seed);

/// Axis-aligned rectangle in the state plane.
struct Rect {
  Vec2 lo = Vec2::Zero();
  Vec2 hi = Vec2::Zero();

  Vec2 center() const { return 0.5 * (lo + hi); }
  Vec2 half_width() const { return 0.5 * (hi - lo); }
  bool contains(const Vec2& p, double slack = 0.0) const;
  bool contains(const Rect& r, double slack = 0.0) const;
  std::array<Vec2, 4> corners() const;
};

/// Heuristic outer approximation of the reachable states: each rectangle is
/// the bounding box of the predicted corners of the previous one, widened by
/// the tube radii. Not a certified reachable set. Returns horizon + 1 rects,
/// the first being the point x0.
std::vector<Rect> propagate_corners(const TubeModel& model, const Vec2& x0, std::span<const double> u_seq);

}  // namespace ktube
