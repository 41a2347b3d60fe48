#include "ktube/greedy.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ktube/parallel.hpp"

namespace ktube {

Vector power_all(const KernelSpec& kernel, const PointSet& Z, const PointSet& X) {
  return power_all(kernel, Z, X, kernel.default_jitter());
}

Vector power_all(const KernelSpec& kernel, const PointSet& Z, const PointSet& X, double jitter) {
  kernel.validate();
  const double var = kernel.variance;
  Vector p2 = Vector::Constant(X.size(), var);
  if (!Z.empty()) {
    require(Z.dim() == X.dim(), "power_all: centers and points differ in dimension");
    const auto chol = cholesky_with_jitter(gram(kernel, Z, 0.0), jitter, 1e-4 * var);
    Matrix W = cross_matrix(kernel, Z, X);
    chol.lower.triangularView<Eigen::Lower>().solveInPlace(W);
    p2.array() -= W.colwise().squaredNorm().transpose().array();
  }
  return p2.array().max(0.0).min(var).sqrt().matrix();
}

namespace {

struct ArgMax {
  double value = -1.0;
  Index index = -1;
};

// Largest entry, lowest index on ties. Deterministic for any chunking.
ArgMax parallel_argmax(const Vector& v) {
  const auto n = static_cast<std::size_t>(v.size());
  std::vector<ArgMax> partial(parallel::chunk_count(n));
  parallel::for_each_chunk(0, n, [&](std::size_t c, std::size_t lo, std::size_t hi) {
    ArgMax best;
    for (std::size_t i = lo; i < hi; ++i) {
      if (v[static_cast<Index>(i)] > best.value) best = {v[static_cast<Index>(i)], static_cast<Index>(i)};
    }
    partial[c] = best;
  });
  ArgMax best;
  for (const auto& p : partial) {
    if (p.value > best.value || (p.value == best.value && p.index >= 0 && p.index < best.index)) best = p;
  }
  return best;
}

}  // namespace

BasisSelection p_greedy(const KernelSpec& kernel, const PointSet& X, double tol, Index max_n) {
  kernel.validate();
  require(!X.empty(), "p_greedy: candidate set is empty");
  require(tol > 0, "p_greedy: tol must be positive");
  require(max_n >= 1, "p_greedy: max_n must be >= 1");

  const Index M = X.size();
  const Index cap = std::min(max_n, M);
  const double var = kernel.variance;

  BasisSelection out;
  out.centers = PointSet(X.dim());
  out.residual_power_sq = Vector::Constant(M, var);
  // Column j holds the j-th Newton basis function evaluated on all candidates.
  Matrix newton(M, std::min<Index>(cap, 64));
  Vector column(M);

  Index n = 0;
  for (;;) {
    const ArgMax best = parallel_argmax(out.residual_power_sq);
    if (best.value < tol) {
      out.stop = GreedyStop::Tolerance;
      break;
    }
    if (n == cap) {
      out.stop = GreedyStop::MaxSize;
      break;
    }
    if (best.value < kSelectableFloor) {
      out.stop = GreedyStop::Exhausted;
      break;
    }
    const Index s = best.index;
    out.max_power_history.push_back(std::sqrt(best.value));

    if (n == newton.cols()) newton.conservativeResize(Eigen::NoChange, std::min<Index>(cap, 2 * newton.cols()));

    // v_n(x) = (k(x, x_s) - sum_{j<n} v_j(x) v_j(x_s)) / sqrt(P^2(x_s))
    const double inv_norm = 1.0 / std::sqrt(best.value);
    const auto xs = X.point(s);
    const auto prev = newton.leftCols(n);
    const Eigen::RowVectorXd at_s = prev.row(s);
    parallel::for_each_chunk(0, static_cast<std::size_t>(M), [&](std::size_t, std::size_t lo, std::size_t hi) {
      for (auto ii = static_cast<Index>(lo); ii < static_cast<Index>(hi); ++ii) {
        const double k = eval(kernel, X.point(ii), xs);
        const double proj = n > 0 ? prev.row(ii).dot(at_s) : 0.0;
        const double v = (k - proj) * inv_norm;
        column[ii] = v;
        out.residual_power_sq[ii] = std::clamp(out.residual_power_sq[ii] - v * v, 0.0, var);
      }
    });
    newton.col(n) = column;
    out.residual_power_sq[s] = 0.0;
    out.center_indices.push_back(s);
    out.centers.push_back(xs);
    ++n;
  }

  out.newton_factor = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    out.newton_factor.row(i).head(i + 1) = newton.row(out.center_indices[static_cast<std::size_t>(i)]).head(i + 1);
  }
  out.final_max_power = std::sqrt(std::max(0.0, out.residual_power_sq.maxCoeff()));
  return out;
}

double fill_distance(const PointSet& X, const PointSet& Z) {
  require(!Z.empty(), "fill_distance: Z is empty");
  require(X.dim() == Z.dim(), "fill_distance: dimension mismatch");
  const auto n = static_cast<std::size_t>(X.size());
  std::vector<double> nearest(n);
  parallel::for_each_index(0, n, [&](std::size_t ii) {
    const auto i = static_cast<Index>(ii);
    double best = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < Z.size(); ++j) best = std::min(best, distance(X.point(i), Z.point(j)));
    nearest[ii] = best;
  });
  return nearest.empty() ? 0.0 : *std::max_element(nearest.begin(), nearest.end());
}

double theoretical_exponent(double nu, int d, double q) {
  require(nu > 0, "theoretical_exponent: nu must be positive");
  require(d >= 1, "theoretical_exponent: d must be >= 1");
  require(q >= 2, "theoretical_exponent: q must lie in [2, inf]");
  const double l = nu + 0.5 * d;
  const double inv_q = std::isinf(q) ? 0.0 : 1.0 / q;
  return -l / d + std::max(0.5 - inv_q, 0.0);
}

namespace {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const auto m = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LineFit fit;
  fit.slope = sxx > 0 ? sxy / sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  if (syy <= 1e-300) {
    fit.r2 = 1.0;
  } else {
    double sse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double e = y[i] - (fit.intercept + fit.slope * x[i]);
      sse += e * e;
    }
    fit.r2 = std::clamp(1.0 - sse / syy, 0.0, 1.0);
  }
  return fit;
}

}  // namespace

DecayReport decay_fit(const std::vector<double>& history, DecayModel model, int d, std::optional<double> nu,
                      double q) {
  require(history.size() >= 5, "decay_fit: need at least 5 history entries");
  require(d >= 1, "decay_fit: d must be >= 1");
  const std::size_t start = history.size() / 2;
  std::vector<double> xs, ys;
  for (std::size_t j = start; j < history.size(); ++j) {
    require(history[j] > 0, "decay_fit: history must be strictly positive");
    const double n = static_cast<double>(j + 1);
    xs.push_back(model == DecayModel::Algebraic ? std::log(n) : std::pow(n, 1.0 / d));
    ys.push_back(std::log(history[j]));
  }
  const LineFit fit = least_squares(xs, ys);

  DecayReport report;
  report.model = model;
  report.fitted_slope = fit.slope;
  report.fit_r2 = fit.r2;
  report.points_used = static_cast<Index>(xs.size());
  if (model == DecayModel::Exponential) report.exp_fit = ExponentialFit{-fit.slope, std::exp(fit.intercept)};
  if (nu) report.theoretical_exponent = theoretical_exponent(*nu, d, q);
  return report;
}

std::string_view stop_name(GreedyStop s) {
  switch (s) {
    case GreedyStop::Tolerance: return "tolerance";
    case GreedyStop::MaxSize: return "max_size";
    case GreedyStop::Exhausted: return "exhausted";
  }
  return "unknown";
}

GreedyStop stop_from_name(const std::string& s) {
  if (s == "tolerance") return GreedyStop::Tolerance;
  if (s == "max_size") return GreedyStop::MaxSize;
  if (s == "exhausted") return GreedyStop::Exhausted;
  throw ValidationError("greedy.stop: unknown value '" + s + "'");
}

}  // namespace ktube
