#pragma once

#include <string_view>

#include "ktube/point_set.hpp"

namespace ktube {

/// Interval-predictor scenario program for one output:
///
///   minimize gamma  s.t.  ||L^T alpha||_2 <= R,  |y_i - features_i alpha| <= gamma  (i = 1..N)
///
/// with K_Z = L L^T, so the norm constraint is alpha^T K_Z alpha <= R^2.
struct ScenarioProgram {
  Matrix gram_factor;  ///< lower triangular L, n x n
  Matrix features;     ///< N x n, row i = k(Z, z_i)^T
  Vector targets;      ///< N
  double norm_bound = 1.0;

  Index basis_size() const { return gram_factor.rows(); }
  Index samples() const { return features.rows(); }
  void validate() const;
};

enum class SolveStatus { Optimal, MaxIter, InfeasibleNumerics };
std::string_view status_name(SolveStatus s);

struct IpmSolution {
  Vector alpha;
  double gamma = 0.0;
  SolveStatus status = SolveStatus::Optimal;
  double kkt_residual = 0.0;
  int iterations = 0;
  Index active_count = 0;
};

struct IpmOptions {
  double tol = 1e-8;
  /// Weight of (1/2) ||L^T alpha / R||^2 added to gamma / max|y|. Selects the
  /// minimum-norm optimizer when gamma alone has a continuum of minimizers.
  double regularization = 1e-9;
  double active_tol = 1e-6;
  int max_iter = 100;
  bool verbose = false;
};

IpmSolution solve_ipm(const ScenarioProgram& program, const IpmOptions& options = {});

/// y_i - features_i alpha.
Vector residuals(const IpmSolution& solution, const ScenarioProgram& program);

/// Sample constraints with |residual| >= gamma - tol_active, plus one if the
/// norm ball is tight, ||L^T alpha|| >= R (1 - tol_active).
Index count_support(const IpmSolution& solution, const ScenarioProgram& program, double tol_active);

}  // namespace ktube
