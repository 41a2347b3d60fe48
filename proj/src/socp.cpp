#include "ktube/socp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ktube/cone_qp.hpp"

namespace ktube {

std::string_view status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::MaxIter: return "max_iter";
    case SolveStatus::InfeasibleNumerics: return "infeasible_numerics";
  }
  return "unknown";
}

void ScenarioProgram::validate() const {
  require(gram_factor.rows() == gram_factor.cols(), "ScenarioProgram: gram_factor must be square");
  require(features.cols() == gram_factor.rows(), "ScenarioProgram: features column count must equal basis size");
  require(features.rows() == targets.size(), "ScenarioProgram: features/targets row mismatch");
  require(features.rows() >= 1, "ScenarioProgram: need at least one sample");
  require(std::isfinite(norm_bound) && norm_bound >= 0, "ScenarioProgram: norm bound must be non-negative");
}

Vector residuals(const IpmSolution& solution, const ScenarioProgram& program) {
  require(solution.alpha.size() == program.features.cols(), "residuals: dimension mismatch");
  return program.targets - program.features * solution.alpha;
}

Index count_support(const IpmSolution& solution, const ScenarioProgram& program, double tol_active) {
  const Vector r = residuals(solution, program);
  Index count = (r.array().abs() >= solution.gamma - tol_active).count();
  const double norm = (program.gram_factor.transpose() * solution.alpha).norm();
  if (program.norm_bound > 0 && norm >= program.norm_bound * (1.0 - tol_active)) ++count;
  return count;
}

namespace {

// Exact epigraph value of alpha, after pulling alpha back into the ball if the
// solver left it marginally outside.
void finalize(IpmSolution& sol, const ScenarioProgram& program, const IpmOptions& opt) {
  const double norm = (program.gram_factor.transpose() * sol.alpha).norm();
  if (norm > program.norm_bound) sol.alpha *= program.norm_bound / norm;
  sol.gamma = residuals(sol, program).cwiseAbs().maxCoeff();
  sol.active_count = count_support(sol, program, opt.active_tol);
}

IpmSolution trivial_solution(const ScenarioProgram& program, const IpmOptions& opt, SolveStatus status) {
  IpmSolution sol;
  sol.alpha = Vector::Zero(program.basis_size());
  sol.status = status;
  finalize(sol, program, opt);
  return sol;
}

// Scaled program data shared by the solver and the polish step.
struct Scaled {
  Matrix G;
  Vector y;
  double mu = 0.0;
};

struct Polished {
  Vector w;
  double kkt = std::numeric_limits<double>::infinity();
};

// Optimality measure of (w, g = max|y - G w|) with multipliers lambda (one per
// sample row, signed by the side that is tight) and nu for the ball, in the
// units the cone solver reports: max of dual residual, primal violation and
// complementarity.
double kkt_measure(const Scaled& sp, const Vector& w, const std::vector<Index>& rows, const std::vector<double>& sign,
                   const Vector& lambda, double nu) {
  const Vector r = sp.y - sp.G * w;
  const double g = r.cwiseAbs().maxCoeff();
  Vector grad = sp.mu * w + nu * w;
  double lam_sum = 0.0, comp = 0.0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    grad -= lambda[static_cast<Index>(k)] * sign[k] * sp.G.row(rows[k]).transpose();
    lam_sum += lambda[static_cast<Index>(k)];
    comp += lambda[static_cast<Index>(k)] * (g - sign[k] * r[rows[k]]);
  }
  comp += nu * std::max(0.0, 1.0 - w.squaredNorm()) * 0.5;
  const double dual = std::sqrt(grad.squaredNorm() + (1.0 - lam_sum) * (1.0 - lam_sum));
  const double primal = std::max(0.0, w.norm() - 1.0);
  const double obj = g + 0.5 * sp.mu * w.squaredNorm();
  return std::max({dual, primal, comp / std::max(1.0, std::abs(obj))});
}

// Newton refinement of the interior-point answer on its active set: the tight
// sample rows hold with equality, and so does the ball if it is tight. The
// interior-point method stalls near 1e-8 when an iterate approaches the ball's
// boundary; on the active set the optimality system is smooth and converges
// to rounding level. Constraints whose multiplier turns negative are dropped
// and the refinement repeats.
Polished polish(const Scaled& sp, const Vector& w0, double active_tol) {
  Polished out;
  const Index n = w0.size();
  const Vector r0 = sp.y - sp.G * w0;
  const double g0 = r0.cwiseAbs().maxCoeff();
  std::vector<Index> rows;
  std::vector<double> sign;
  for (Index i = 0; i < r0.size(); ++i) {
    if (std::abs(r0[i]) >= g0 - active_tol) {
      rows.push_back(i);
      sign.push_back(r0[i] >= 0 ? 1.0 : -1.0);
    }
  }
  bool ball = w0.norm() >= 1.0 - active_tol;
  // A vertex has at most n + 1 tight constraints; far more means the tolerance
  // caught a near-degenerate cluster and the dense system would be too large.
  if (static_cast<Index>(rows.size()) > 2 * (n + 1)) return out;

  for (int round = 0; round < 4 && !rows.empty(); ++round) {
    const Index m = static_cast<Index>(rows.size());
    const Index nv = n + 1 + m + (ball ? 1 : 0);
    Vector w = w0;
    double g = g0;
    Vector lambda = Vector::Constant(m, 1.0 / static_cast<double>(m));
    double nu = 0.0;
    double last = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 10; ++it) {
      Vector F(nv);
      Matrix J = Matrix::Zero(nv, nv);
      // stationarity in w
      F.head(n) = sp.mu * w + nu * w;
      J.topLeftCorner(n, n).diagonal().setConstant(sp.mu + nu);
      for (Index k = 0; k < m; ++k) {
        const auto Gi = sp.G.row(rows[static_cast<std::size_t>(k)]);
        const double sk = sign[static_cast<std::size_t>(k)];
        F.head(n) -= lambda[k] * sk * Gi.transpose();
        J.block(0, n + 1 + k, n, 1) = -sk * Gi.transpose();
        // active row: sk (y_i - G_i w) - g = 0
        F[n + 1 + k] = sk * (sp.y[rows[static_cast<std::size_t>(k)]] - Gi.dot(w)) - g;
        J.block(n + 1 + k, 0, 1, n) = -sk * Gi;
        J(n + 1 + k, n) = -1.0;
      }
      // stationarity in g
      F[n] = 1.0 - lambda.sum();
      J.block(n, n + 1, 1, m).setConstant(-1.0);
      if (ball) {
        J.block(0, nv - 1, n, 1) = w;
        F[nv - 1] = 0.5 * (w.squaredNorm() - 1.0);
        J.block(nv - 1, 0, 1, n) = w.transpose();
      }
      const double fn = F.norm();
      if (fn < 1e-15 || !(fn < 0.5 * last)) break;
      last = fn;
      const Vector step = J.completeOrthogonalDecomposition().solve(-F);
      if (!step.allFinite()) break;
      w += step.head(n);
      g += step[n];
      lambda += step.segment(n + 1, m);
      if (ball) nu += step[nv - 1];
    }
    // drop constraints with clearly negative multipliers and retry
    std::vector<Index> keep_rows;
    std::vector<double> keep_sign;
    const double lam_floor = -1e-12;
    bool dropped = false;
    for (Index k = 0; k < m; ++k) {
      if (lambda[k] < lam_floor) {
        dropped = true;
      } else {
        keep_rows.push_back(rows[static_cast<std::size_t>(k)]);
        keep_sign.push_back(sign[static_cast<std::size_t>(k)]);
      }
    }
    if (ball && nu < lam_floor) {
      ball = false;
      dropped = true;
    }
    if (!dropped && w.allFinite()) {
      if (w.norm() > 1.0) w /= w.norm();
      Vector lam = lambda.cwiseMax(0.0);
      out.kkt = kkt_measure(sp, w, rows, sign, lam, std::max(nu, 0.0));
      out.w = w;
      return out;
    }
    rows = std::move(keep_rows);
    sign = std::move(keep_sign);
  }
  return out;
}

}  // namespace

IpmSolution solve_ipm(const ScenarioProgram& program, const IpmOptions& opt) {
  program.validate();
  const Index n = program.basis_size();
  const Index N = program.samples();
  const double y_scale = program.targets.cwiseAbs().maxCoeff();
  const double R = program.norm_bound;
  if (R == 0.0 || y_scale == 0.0 || n == 0) return trivial_solution(program, opt, SolveStatus::Optimal);

  // Whitened coordinates w = L^T alpha / R, scaled targets y / y_scale:
  //   min g + (mu/2) ||w||^2  s.t.  |y_hat - G w| <= g,  ||w|| <= 1,  G = (R / y_scale) F L^{-T}.
  const auto L = program.gram_factor.triangularView<Eigen::Lower>();
  Matrix G = L.solve(program.features.transpose()).transpose();
  G *= R / y_scale;
  const Vector y_hat = program.targets / y_scale;

  cone::Problem pb;
  const Index nx = n + 1;
  pb.dims.nonneg = 2 * N;
  pb.dims.soc = {n + 1};
  pb.c = Vector::Zero(nx);
  pb.c[n] = 1.0;
  pb.P = Matrix::Zero(nx, nx);
  pb.P.diagonal().head(n).setConstant(opt.regularization);
  pb.A = Matrix::Zero(2 * N + n + 1, nx);
  pb.h = Vector::Zero(2 * N + n + 1);
  // g - y_hat + G w >= 0
  pb.A.topLeftCorner(N, n) = -G;
  pb.A.block(0, n, N, 1).setConstant(-1.0);
  pb.h.head(N) = -y_hat;
  // g + y_hat - G w >= 0
  pb.A.block(N, 0, N, n) = G;
  pb.A.block(N, n, N, 1).setConstant(-1.0);
  pb.h.segment(N, N) = y_hat;
  // (1, w) in Q^{n+1}
  pb.A.block(2 * N + 1, 0, n, n) = -Matrix::Identity(n, n);
  pb.h[2 * N] = 1.0;

  Vector x0 = Vector::Zero(nx);
  x0[n] = 2.0;

  cone::Options copt;
  copt.tol = opt.tol;
  copt.max_iter = opt.max_iter;
  copt.verbose = opt.verbose;
  const cone::Result r = cone::solve(pb, x0, copt);

  if (r.status == cone::Status::NumericalFailure || !r.x.allFinite()) {
    IpmSolution sol = trivial_solution(program, opt, SolveStatus::InfeasibleNumerics);
    sol.kkt_residual = r.kkt_residual;
    sol.iterations = r.iterations;
    return sol;
  }

  Vector w = r.x.head(n);
  double kkt = r.kkt_residual;
  const Scaled sp{G, y_hat, opt.regularization};
  if (kkt > opt.tol) {
    const Polished pol = polish(sp, w, std::max(1e-7, 100.0 * kkt));
    if (pol.kkt < kkt) {
      w = pol.w;
      kkt = pol.kkt;
    }
  }

  IpmSolution sol;
  sol.alpha = L.transpose().solve(Vector(R * w));
  sol.status = kkt <= opt.tol ? SolveStatus::Optimal : SolveStatus::MaxIter;
  sol.kkt_residual = kkt;
  sol.iterations = r.iterations;
  finalize(sol, program, opt);
  return sol;
}

}  // namespace ktube
