#include "ktube/kernels.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "ktube/parallel.hpp"

namespace ktube {

std::string_view family_name(KernelFamily f) {
  switch (f) {
    case KernelFamily::Matern12: return "matern12";
    case KernelFamily::Matern32: return "matern32";
    case KernelFamily::Matern52: return "matern52";
    case KernelFamily::Gaussian: return "gaussian";
    case KernelFamily::Wendland31: return "wendland31";
  }
  return "unknown";
}

KernelFamily family_from_name(std::string_view name) {
  for (auto f : {KernelFamily::Matern12, KernelFamily::Matern32, KernelFamily::Matern52, KernelFamily::Gaussian,
                 KernelFamily::Wendland31}) {
    if (family_name(f) == name) return f;
  }
  throw ValidationError("kernel.family: unknown kernel family '" + std::string(name) + "'");
}

void KernelSpec::validate() const {
  require(std::isfinite(lengthscale) && lengthscale > 0, "kernel.lengthscale: must be positive");
  require(std::isfinite(variance) && variance > 0, "kernel.variance: must be positive");
}

double KernelSpec::smoothness() const {
  switch (family) {
    case KernelFamily::Matern12: return 0.5;
    case KernelFamily::Matern32: return 1.5;
    case KernelFamily::Matern52: return 2.5;
    case KernelFamily::Gaussian: return std::numeric_limits<double>::infinity();
    case KernelFamily::Wendland31: return 1.5;
  }
  return 0.0;
}

void to_json(nlohmann::json& j, const KernelSpec& k) {
  j = nlohmann::json{{"family", family_name(k.family)}, {"lengthscale", k.lengthscale}, {"variance", k.variance}};
}

void from_json(const nlohmann::json& j, KernelSpec& k) {
  require(j.is_object(), "kernel: expected an object");
  require(j.contains("family") && j.at("family").is_string(), "kernel.family: missing or not a string");
  k.family = family_from_name(j.at("family").get<std::string>());
  require(j.contains("lengthscale") && j.at("lengthscale").is_number(), "kernel.lengthscale: missing or not a number");
  k.lengthscale = j.at("lengthscale").get<double>();
  k.variance = 1.0;
  if (j.contains("variance")) {
    require(j.at("variance").is_number(), "kernel.variance: not a number");
    k.variance = j.at("variance").get<double>();
  }
  k.validate();
}

double distance(const Eigen::Ref<const Eigen::RowVectorXd>& x, const Eigen::Ref<const Eigen::RowVectorXd>& y) {
  require(x.size() == y.size(), "kernel: dimension mismatch");
  double scale = 0.0;
  for (Index i = 0; i < x.size(); ++i) scale = std::max(scale, std::abs(x[i] - y[i]));
  if (scale == 0.0) return 0.0;
  double sum = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    const double t = (x[i] - y[i]) / scale;
    sum += t * t;
  }
  const double r = scale * std::sqrt(sum);
  return r < 1e-12 ? 0.0 : r;
}

double eval_radial(const KernelSpec& kernel, double r) {
  double phi = 0.0;
  switch (kernel.family) {
    case KernelFamily::Matern12:
      phi = std::exp(-r);
      break;
    case KernelFamily::Matern32: {
      const double s = std::numbers::sqrt3 * r;
      phi = (1.0 + s) * std::exp(-s);
      break;
    }
    case KernelFamily::Matern52: {
      const double s = std::sqrt(5.0) * r;
      phi = (1.0 + s + s * s / 3.0) * std::exp(-s);
      break;
    }
    case KernelFamily::Gaussian:
      phi = std::exp(-0.5 * r * r);
      break;
    case KernelFamily::Wendland31:
      if (r < 1.0) {
        const double t = 1.0 - r;
        phi = (t * t) * (t * t) * (4.0 * r + 1.0);
      }
      break;
  }
  return kernel.variance * phi;
}

Eigen::ArrayXd eval_radial(const KernelSpec& kernel, const Eigen::ArrayXd& r) {
  Eigen::ArrayXd phi(r.size());
  switch (kernel.family) {
    case KernelFamily::Matern12:
      phi = (-r).exp();
      break;
    case KernelFamily::Matern32: {
      const Eigen::ArrayXd s = std::numbers::sqrt3 * r;
      phi = (1.0 + s) * (-s).exp();
      break;
    }
    case KernelFamily::Matern52: {
      const Eigen::ArrayXd s = std::sqrt(5.0) * r;
      phi = (1.0 + s + s.square() / 3.0) * (-s).exp();
      break;
    }
    case KernelFamily::Gaussian:
      phi = (-0.5 * r.square()).exp();
      break;
    case KernelFamily::Wendland31: {
      const Eigen::ArrayXd t = (1.0 - r).max(0.0);
      phi = t.square().square() * (4.0 * r + 1.0);
      break;
    }
  }
  return kernel.variance * phi;
}

double eval(const KernelSpec& kernel, const Eigen::Ref<const Eigen::RowVectorXd>& x,
            const Eigen::Ref<const Eigen::RowVectorXd>& y) {
  return eval_radial(kernel, distance(x, y) / kernel.lengthscale);
}

Matrix gram(const KernelSpec& kernel, const PointSet& X, double jitter) {
  require(!X.empty(), "gram: point set is empty");
  require(jitter >= 0, "gram: jitter must be non-negative");
  const Index n = X.size();
  Matrix K(n, n);
  parallel::for_each_index(0, static_cast<std::size_t>(n), [&](std::size_t ii) {
    const auto i = static_cast<Index>(ii);
    K(i, i) = kernel.variance + jitter;
    for (Index j = 0; j < i; ++j) K(i, j) = eval(kernel, X.point(i), X.point(j));
  });
  K.triangularView<Eigen::StrictlyUpper>() = K.transpose().triangularView<Eigen::StrictlyUpper>();
  return K;
}

Vector cross(const KernelSpec& kernel, const PointSet& Z, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  require(Z.empty() || Z.dim() == x.size(), "cross: dimension mismatch");
  Vector out(Z.size());
  for (Index i = 0; i < Z.size(); ++i) out[i] = eval(kernel, Z.point(i), x);
  return out;
}

Matrix cross_matrix(const KernelSpec& kernel, const PointSet& A, const PointSet& B) {
  require(A.dim() == B.dim(), "cross_matrix: dimension mismatch");
  Matrix out(A.size(), B.size());
  parallel::for_each_index(0, static_cast<std::size_t>(A.size()), [&](std::size_t ii) {
    const auto i = static_cast<Index>(ii);
    for (Index j = 0; j < B.size(); ++j) out(i, j) = eval(kernel, A.point(i), B.point(j));
  });
  return out;
}

CholeskyResult cholesky_with_jitter(const Matrix& K, double jitter, double max_jitter) {
  require(K.rows() == K.cols(), "cholesky: matrix must be square");
  double shift = jitter;
  for (;;) {
    Matrix shifted = K;
    shifted.diagonal().array() += shift;
    Eigen::LLT<Matrix> llt(shifted);
    if (llt.info() == Eigen::Success && llt.matrixL().toDenseMatrix().diagonal().minCoeff() > 0) {
      return {llt.matrixL(), shift};
    }
    if (shift >= max_jitter) break;
    shift = shift > 0 ? std::min(shift * 10.0, max_jitter) : std::max(1e-14, max_jitter * 1e-6);
  }
  throw NumericalError("cholesky: matrix not positive definite even with jitter " + std::to_string(max_jitter) +
                       " (duplicate or degenerate centers?)");
}

Vector interpolation_weights(const KernelSpec& kernel, const PointSet& Z, const Vector& values, double jitter) {
  require(Z.size() == values.size(), "interpolation_weights: size mismatch");
  if (Z.empty()) return Vector(0);
  const Matrix K = gram(kernel, Z, 0.0);
  const auto chol = cholesky_with_jitter(K, jitter, 1e-4 * kernel.variance);
  const auto L = chol.lower.triangularView<Eigen::Lower>();
  Vector c = L.solve(values);
  L.transpose().solveInPlace(c);
  return c;
}

}  // namespace ktube
