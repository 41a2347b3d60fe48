#include "ktube/cone_qp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "ktube/errors.hpp"

namespace ktube::cone {

Index Dims::total() const {
  Index t = nonneg;
  for (Index m : soc) t += m;
  return t;
}

Index Dims::degree() const { return nonneg + static_cast<Index>(soc.size()); }

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// u0^2 - ||u1||^2 in factored form, accurate near the cone boundary.
double soc_det(const Eigen::Ref<const Vector>& u) {
  const double t = u.tail(u.size() - 1).norm();
  return (u[0] - t) * (u[0] + t);
}

// Jordan product u o v.
Vector jordan(const Eigen::Ref<const Vector>& u, const Eigen::Ref<const Vector>& v) {
  Vector out(u.size());
  out[0] = u.dot(v);
  out.tail(u.size() - 1) = u[0] * v.tail(v.size() - 1) + v[0] * u.tail(u.size() - 1);
  return out;
}

// Solves lambda o x = v.
Vector jordan_solve(const Eigen::Ref<const Vector>& lambda, const Eigen::Ref<const Vector>& v) {
  const Index m = lambda.size() - 1;
  const double l0 = lambda[0];
  const auto l1 = lambda.tail(m);
  const double det = l0 * l0 - l1.squaredNorm();
  Vector x(lambda.size());
  x[0] = (l0 * v[0] - l1.dot(v.tail(m))) / det;
  x.tail(m) = (v.tail(m) - x[0] * l1) / l0;
  return x;
}

bool interior(const Vector& u, const Dims& dims) {
  if (u.head(dims.nonneg).size() > 0 && u.head(dims.nonneg).minCoeff() <= 0) return false;
  Index off = dims.nonneg;
  for (Index m : dims.soc) {
    const auto blk = u.segment(off, m);
    if (blk[0] <= 0 || soc_det(blk) <= 0) return false;
    off += m;
  }
  return true;
}

// Identity element of K.
Vector identity(const Dims& dims) {
  Vector e = Vector::Zero(dims.total());
  e.head(dims.nonneg).setOnes();
  Index off = dims.nonneg;
  for (Index m : dims.soc) {
    e[off] = 1.0;
    off += m;
  }
  return e;
}

struct Scaling {
  Vector lp_w;  // sqrt(s / z)
  std::vector<SocScaling> soc;
  std::vector<Matrix> soc_h;  // W^{-2} per block
  const Dims* dims = nullptr;

  Vector apply(const Vector& v) const {
    Vector out(v.size());
    out.head(dims->nonneg) = lp_w.cwiseProduct(v.head(dims->nonneg));
    Index off = dims->nonneg;
    for (std::size_t b = 0; b < soc.size(); ++b) {
      const Index m = dims->soc[b];
      out.segment(off, m) = soc[b].apply(v.segment(off, m));
      off += m;
    }
    return out;
  }

  // H v = W^{-2} v
  Vector apply_h(const Vector& v) const {
    Vector out(v.size());
    out.head(dims->nonneg) = v.head(dims->nonneg).cwiseQuotient(lp_w.cwiseProduct(lp_w));
    Index off = dims->nonneg;
    for (std::size_t b = 0; b < soc.size(); ++b) {
      const Index m = dims->soc[b];
      out.segment(off, m) = soc_h[b] * v.segment(off, m);
      off += m;
    }
    return out;
  }

  // W^2 v
  Vector apply_sq(const Vector& v) const { return apply(apply(v)); }
};

Vector jordan_all(const Vector& u, const Vector& v, const Dims& dims) {
  Vector out(u.size());
  out.head(dims.nonneg) = u.head(dims.nonneg).cwiseProduct(v.head(dims.nonneg));
  Index off = dims.nonneg;
  for (Index m : dims.soc) {
    out.segment(off, m) = jordan(u.segment(off, m), v.segment(off, m));
    off += m;
  }
  return out;
}

Vector jordan_solve_all(const Vector& lambda, const Vector& v, const Dims& dims) {
  Vector out(v.size());
  out.head(dims.nonneg) = v.head(dims.nonneg).cwiseQuotient(lambda.head(dims.nonneg));
  Index off = dims.nonneg;
  for (Index m : dims.soc) {
    out.segment(off, m) = jordan_solve(lambda.segment(off, m), v.segment(off, m));
    off += m;
  }
  return out;
}

double max_step(const Vector& u, const Vector& du, const Dims& dims) {
  double alpha = kInf;
  for (Index i = 0; i < dims.nonneg; ++i) {
    if (du[i] < 0) alpha = std::min(alpha, -u[i] / du[i]);
  }
  Index off = dims.nonneg;
  for (Index m : dims.soc) {
    alpha = std::min(alpha, soc_step_to_boundary(u.segment(off, m), du.segment(off, m)));
    off += m;
  }
  return alpha;
}

}  // namespace

SocScaling SocScaling::from(const Vector& s, const Vector& z) {
  const Index m = s.size() - 1;
  const double sn = std::sqrt(soc_det(s));
  const double zn = std::sqrt(soc_det(z));
  const Vector sb = s / sn;
  const Vector zb = z / zn;
  const double g = std::sqrt(0.5 * (1.0 + sb.dot(zb)));
  SocScaling out;
  out.beta = std::sqrt(sn / zn);
  out.w.resize(s.size());
  out.w[0] = (sb[0] + zb[0]) / (2.0 * g);
  out.w.tail(m) = (sb.tail(m) - zb.tail(m)) / (2.0 * g);
  return out;
}

Vector SocScaling::apply(const Vector& v) const {
  const Index m = v.size() - 1;
  const double w0 = w[0];
  const auto w1 = w.tail(m);
  const double dot = w1.dot(v.tail(m));
  Vector out(v.size());
  out[0] = beta * (w0 * v[0] + dot);
  out.tail(m) = beta * (v[0] * w1 + v.tail(m) + (dot / (1.0 + w0)) * w1);
  return out;
}

Vector SocScaling::apply_inverse(const Vector& v) const {
  const Index m = v.size() - 1;
  const double w0 = w[0];
  const auto w1 = w.tail(m);
  const double dot = w1.dot(v.tail(m));
  Vector out(v.size());
  out[0] = (w0 * v[0] - dot) / beta;
  out.tail(m) = (-v[0] * w1 + v.tail(m) + (dot / (1.0 + w0)) * w1) / beta;
  return out;
}

Matrix SocScaling::dense() const {
  const Index m = w.size() - 1;
  Matrix W(w.size(), w.size());
  W(0, 0) = w[0];
  W.block(0, 1, 1, m) = w.tail(m).transpose();
  W.block(1, 0, m, 1) = w.tail(m);
  W.block(1, 1, m, m) = Matrix::Identity(m, m) + w.tail(m) * w.tail(m).transpose() / (1.0 + w[0]);
  return beta * W;
}

Matrix SocScaling::dense_inverse() const {
  const Index m = w.size() - 1;
  Matrix W(w.size(), w.size());
  W(0, 0) = w[0];
  W.block(0, 1, 1, m) = -w.tail(m).transpose();
  W.block(1, 0, m, 1) = -w.tail(m);
  W.block(1, 1, m, m) = Matrix::Identity(m, m) + w.tail(m) * w.tail(m).transpose() / (1.0 + w[0]);
  return W / beta;
}

Matrix SocScaling::inverse_square() const {
  const Index m = w.size() - 1;
  Vector v = w;
  v.tail(m) = -v.tail(m);
  Matrix H = 2.0 * v * v.transpose();
  H(0, 0) -= 1.0;
  H.diagonal().tail(m).array() += 1.0;
  return H / (beta * beta);
}

double soc_step_to_boundary(const Vector& u, const Vector& du) {
  const Index m = u.size() - 1;
  const double a = du[0] * du[0] - du.tail(m).squaredNorm();
  const double b = u[0] * du[0] - u.tail(m).dot(du.tail(m));
  const double c = std::max(soc_det(u), 0.0);
  // f(alpha) = a alpha^2 + 2 b alpha + c, f(0) = c > 0.
  const double scale = std::max({std::abs(a), std::abs(b), c, 1e-300});
  if (std::abs(a) <= 1e-14 * scale) return b < 0 ? -c / (2.0 * b) : kInf;
  const double disc = b * b - a * c;
  if (disc < 0) return kInf;  // then a > 0 and f never vanishes
  // Roots (-b -/+ sqrt(disc)) / a without cancellation. For a > 0 both roots
  // share a sign, for a < 0 exactly one is positive; the exit is the smallest
  // positive root either way.
  const double q = -(b + std::copysign(std::sqrt(disc), b));
  double alpha = kInf;
  for (double r : {q / a, q != 0.0 ? c / q : kInf}) {
    if (r > 0) alpha = std::min(alpha, r);
  }
  return alpha;
}

Result solve(const Problem& pb, const Vector& x0, const Options& opt) {
  const Dims& dims = pb.dims;
  const Index nx = pb.c.size();
  const Index m = dims.total();
  require(pb.A.rows() == m && pb.A.cols() == nx, "cone::solve: A has wrong shape");
  require(pb.h.size() == m, "cone::solve: h has wrong size");
  require(x0.size() == nx, "cone::solve: x0 has wrong size");
  const bool has_p = pb.P.size() > 0;
  if (has_p) require(pb.P.rows() == nx && pb.P.cols() == nx, "cone::solve: P has wrong shape");

  Result res;
  Vector x = x0;
  Vector s = pb.h - pb.A * x;
  require(interior(s, dims), "cone::solve: initial point is not strictly feasible");
  Vector z = identity(dims);
  const Vector e = identity(dims);
  const double degree = static_cast<double>(dims.degree());
  const double h_norm = std::max(1.0, pb.h.norm());
  const double c_norm = std::max(1.0, pb.c.norm());

  const auto A_lp = pb.A.topRows(dims.nonneg);

  // Near the optimum the scaling matrices can become ill-conditioned and the
  // iterates drift; the best iterate seen so far is what gets returned then.
  Result best;
  best.kkt_residual = kInf;
  int best_iter = 0;
  constexpr int kStallIters = 8;

  for (int it = 0; it <= opt.max_iter; ++it) {
    const Vector Px = has_p ? Vector(pb.P * x) : Vector::Zero(nx);
    const Vector r_x = Px + pb.c + pb.A.transpose() * z;
    const Vector r_z = pb.A * x + s - pb.h;
    const double gap = s.dot(z);
    const double mu = gap / degree;
    res.objective = 0.5 * x.dot(Px) + pb.c.dot(x);
    res.primal_residual = r_z.norm() / h_norm;
    res.dual_residual = r_x.norm() / c_norm;
    res.gap = gap / std::max(1.0, std::abs(res.objective));
    res.kkt_residual = std::max({res.primal_residual, res.dual_residual, res.gap});
    res.iterations = it;
    if (opt.verbose) {
      std::fprintf(stderr, "ipm %3d obj % .10e pres %.2e dres %.2e gap %.2e\n", it, res.objective,
                   res.primal_residual, res.dual_residual, res.gap);
    }
    if (!std::isfinite(res.kkt_residual)) {
      res.status = Status::NumericalFailure;
      break;
    }
    if (res.kkt_residual < best.kkt_residual) {
      best = res;
      best.x = x;
      best.s = s;
      best.z = z;
      best_iter = it;
    }
    if (res.kkt_residual <= opt.tol) {
      res.status = Status::Optimal;
      break;
    }
    if (it == opt.max_iter || it - best_iter >= kStallIters) {
      res.status = Status::MaxIter;
      break;
    }

    Scaling W;
    W.dims = &dims;
    W.lp_w = (s.head(dims.nonneg).cwiseQuotient(z.head(dims.nonneg))).cwiseSqrt();
    {
      Index off = dims.nonneg;
      for (Index b : dims.soc) {
        W.soc.push_back(SocScaling::from(s.segment(off, b), z.segment(off, b)));
        W.soc_h.push_back(W.soc.back().inverse_square());
        off += b;
      }
    }
    const Vector lambda = W.apply(z);

    // Reduced system (P + A^T H A) dx = rhs.
    Matrix K = has_p ? pb.P : Matrix::Zero(nx, nx);
    {
      const Vector sqrt_h = W.lp_w.cwiseInverse();
      const Matrix B = sqrt_h.asDiagonal() * A_lp;
      K.selfadjointView<Eigen::Lower>().rankUpdate(B.transpose());
      Index off = dims.nonneg;
      for (std::size_t b = 0; b < dims.soc.size(); ++b) {
        const Index bm = dims.soc[b];
        const auto Ab = pb.A.middleRows(off, bm);
        K.noalias() += Ab.transpose() * (W.soc_h[b] * Ab);
        off += bm;
      }
      K.triangularView<Eigen::StrictlyUpper>() = K.transpose().triangularView<Eigen::StrictlyUpper>();
    }
    Eigen::LLT<Matrix> llt(K);
    if (llt.info() != Eigen::Success) {
      const double reg = 1e-13 * std::max(1.0, K.diagonal().maxCoeff());
      K.diagonal().array() += reg;
      llt.compute(K);
      if (llt.info() != Eigen::Success) {
        res.status = Status::NumericalFailure;
        break;
      }
    }

    struct Direction {
      Vector dx, dz, ds;
    };
    auto solve_newton = [&](const Vector& d_s) {
      const Vector q = jordan_solve_all(lambda, d_s, dims);
      const Vector Wq = W.apply(q);
      const Vector rhs = -r_x - pb.A.transpose() * W.apply_h(r_z + Wq);
      Vector dx = llt.solve(rhs);
      // Iterative refinement, kept only while it reduces the residual.
      double res_norm = (rhs - K * dx).norm();
      for (int r = 0; r < 3 && res_norm > 1e-15 * rhs.norm(); ++r) {
        const Vector cand = dx + llt.solve(rhs - K * dx);
        const double cand_norm = (rhs - K * cand).norm();
        if (!(cand_norm < res_norm)) break;
        dx = cand;
        res_norm = cand_norm;
      }
      Direction d;
      d.dz = W.apply_h(pb.A * dx + r_z + Wq);
      d.ds = -r_z - pb.A * dx;
      d.dx = std::move(dx);
      // The first block row, P dx + A^T dz = -r_x, absorbs the rounding error of
      // the ill-conditioned H near the cone boundary; refine against it directly.
      auto dual_defect = [&](const Direction& dd) -> Vector {
        Vector e = -r_x - pb.A.transpose() * dd.dz;
        if (has_p) e -= pb.P * dd.dx;
        return e;
      };
      Vector defect = dual_defect(d);
      double defect_norm = defect.norm();
      for (int r = 0; r < 3 && defect_norm > 1e-15 * std::max(1.0, r_x.norm()); ++r) {
        const Vector step = llt.solve(defect);
        const Vector a_step = pb.A * step;
        Direction cand{d.dx + step, d.dz + W.apply_h(a_step), d.ds - a_step};
        const Vector cand_defect = dual_defect(cand);
        const double cand_norm = cand_defect.norm();
        if (!(cand_norm < defect_norm)) break;
        d = std::move(cand);
        defect = cand_defect;
        defect_norm = cand_norm;
      }
      return d;
    };

    const Vector lam_sq = jordan_all(lambda, lambda, dims);
    const Direction aff = solve_newton(-lam_sq);
    const double alpha_aff = std::min(1.0, std::min(max_step(s, aff.ds, dims), max_step(z, aff.dz, dims)));
    const double gap_aff = (s + alpha_aff * aff.ds).dot(z + alpha_aff * aff.dz);
    const double sigma = std::clamp(std::pow(std::max(gap_aff, 0.0) / gap, 3.0), 0.0, 1.0);

    // Second-order correction in the scaled space.
    Vector ds_scaled(m), dz_scaled = W.apply(aff.dz);
    {
      ds_scaled.head(dims.nonneg) = aff.ds.head(dims.nonneg).cwiseQuotient(W.lp_w);
      Index off = dims.nonneg;
      for (std::size_t b = 0; b < dims.soc.size(); ++b) {
        const Index bm = dims.soc[b];
        ds_scaled.segment(off, bm) = W.soc[b].apply_inverse(aff.ds.segment(off, bm));
        off += bm;
      }
    }
    const Vector d_s = -lam_sq - jordan_all(ds_scaled, dz_scaled, dims) + sigma * mu * e;
    Direction dir = solve_newton(d_s);
    double alpha = std::min(1.0, opt.step_fraction * std::min(max_step(s, dir.ds, dims), max_step(z, dir.dz, dims)));
    if (alpha < 0.1) {
      // The second-order term can point out of the cone when the iterate sits
      // close to its boundary; a plain centred Newton step does not.
      const double sigma_c = std::max(sigma, 0.3);
      Direction centred = solve_newton(-lam_sq + sigma_c * mu * e);
      const double alpha_c =
          std::min(1.0, opt.step_fraction * std::min(max_step(s, centred.ds, dims), max_step(z, centred.dz, dims)));
      if (alpha_c > alpha) {
        dir = std::move(centred);
        alpha = alpha_c;
      }
    }
    if (!(alpha > 0) || !std::isfinite(alpha)) {
      res.status = Status::NumericalFailure;
      break;
    }
    x += alpha * dir.dx;
    s += alpha * dir.ds;
    z += alpha * dir.dz;
  }

  if (res.status == Status::Optimal) {
    res.x = std::move(x);
    res.s = std::move(s);
    res.z = std::move(z);
    return res;
  }
  if (!std::isfinite(best.kkt_residual)) {
    res.status = Status::NumericalFailure;
    res.x = std::move(x);
    res.s = std::move(s);
    res.z = std::move(z);
    return res;
  }
  best.status = Status::MaxIter;
  best.iterations = res.iterations;
  return best;
}

}  // namespace ktube::cone
