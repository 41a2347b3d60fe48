#pragma once

#include <vector>

#include "ktube/point_set.hpp"

namespace ktube::cone {

/// Cone K = R_+^{nonneg} x Q^{soc[0]} x ... where Q^m = {(u0, u1) : u0 >= ||u1||}.
struct Dims {
  Index nonneg = 0;
  std::vector<Index> soc;

  Index total() const;
  /// Barrier degree: one per LP coordinate, one per second-order cone.
  Index degree() const;
};

/// minimize (1/2) x^T P x + c^T x  subject to  A x + s = h,  s in K.
/// An empty P means P = 0.
struct Problem {
  Matrix P;
  Vector c;
  Matrix A;
  Vector h;
  Dims dims;
};

struct Options {
  double tol = 1e-8;
  int max_iter = 100;
  double step_fraction = 0.99;
  bool verbose = false;
};

enum class Status { Optimal, MaxIter, NumericalFailure };

struct Result {
  Vector x, s, z;
  Status status = Status::NumericalFailure;
  int iterations = 0;
  double primal_residual = 0.0;  ///< ||A x + s - h|| / max(1, ||h||)
  double dual_residual = 0.0;    ///< ||P x + c + A^T z|| / max(1, ||c||)
  double gap = 0.0;              ///< s^T z / max(1, |objective|)
  double kkt_residual = 0.0;     ///< max of the three above
  double objective = 0.0;
};

/// Primal-dual interior-point method with Nesterov-Todd scaling and a
/// Mehrotra predictor-corrector step. `x0` must make h - A x0 strictly
/// interior to K.
Result solve(const Problem& problem, const Vector& x0, const Options& options = {});

/// Nesterov-Todd scaling of one second-order cone block, W = beta [w0 w1^T; w1 I + w1 w1^T/(1+w0)]
/// with w^T J w = 1. Satisfies W z = W^{-1} s. Exposed for testing.
struct SocScaling {
  double beta = 1.0;
  Vector w;

  static SocScaling from(const Vector& s, const Vector& z);
  Vector apply(const Vector& v) const;
  Vector apply_inverse(const Vector& v) const;
  Matrix dense() const;
  Matrix dense_inverse() const;
  /// W^{-2} in closed form: (2 v v^T - J) / beta^2 with v = (w0, -w1), J = diag(1, -I).
  Matrix inverse_square() const;
};

/// Largest alpha >= 0 (possibly +inf) with u + alpha du in Q, u strictly interior.
double soc_step_to_boundary(const Vector& u, const Vector& du);

}  // namespace ktube::cone
