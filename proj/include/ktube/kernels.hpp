#pragma once

#include <json.hpp>

#include <string>
#include <string_view>

#include "ktube/point_set.hpp"

namespace ktube {

enum class KernelFamily { Matern12, Matern32, Matern52, Gaussian, Wendland31 };

std::string_view family_name(KernelFamily f);
KernelFamily family_from_name(std::string_view name);

/// Isotropic stationary kernel k(x, y) = variance * phi(||x - y|| / lengthscale).
struct KernelSpec {
  KernelFamily family = KernelFamily::Matern52;
  double lengthscale = 1.0;
  double variance = 1.0;

  void validate() const;

  /// Smoothness nu for the Matern family; Gaussian reports +inf.
  /// Wendland phi_{3,1} has native space W_2^{(d+3)/2}, i.e. nu = 3/2.
  double smoothness() const;

  /// Default diagonal shift used before factorizing Gram matrices.
  double default_jitter() const { return 1e-10 * variance; }

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

void to_json(nlohmann::json& j, const KernelSpec& k);
void from_json(const nlohmann::json& j, KernelSpec& k);

/// Euclidean distance via the scaled two-pass norm; distances below 1e-12 are 0.
double distance(const Eigen::Ref<const Eigen::RowVectorXd>& x, const Eigen::Ref<const Eigen::RowVectorXd>& y);

/// Profile phi(r) * variance at a scaled radius r = ||x - y|| / lengthscale.
double eval_radial(const KernelSpec& kernel, double r);

/// Vectorized eval_radial over an array of scaled radii.
Eigen::ArrayXd eval_radial(const KernelSpec& kernel, const Eigen::ArrayXd& r);

double eval(const KernelSpec& kernel, const Eigen::Ref<const Eigen::RowVectorXd>& x,
            const Eigen::Ref<const Eigen::RowVectorXd>& y);

/// K + jitter * I over the points of X.
Matrix gram(const KernelSpec& kernel, const PointSet& X, double jitter);

/// k(Z, x) = [k(z_1, x), ..., k(z_n, x)]^T.
Vector cross(const KernelSpec& kernel, const PointSet& Z, const Eigen::Ref<const Eigen::RowVectorXd>& x);

/// Matrix with entry (i, j) = k(a_i, b_j).
Matrix cross_matrix(const KernelSpec& kernel, const PointSet& A, const PointSet& B);

/// Lower Cholesky factor of a symmetric positive (semi)definite matrix. The
/// diagonal shift starts at `jitter` and grows tenfold per failed attempt up
/// to `max_jitter`; NumericalError if even that fails.
struct CholeskyResult {
  Matrix lower;
  double jitter_used = 0.0;
};
CholeskyResult cholesky_with_jitter(const Matrix& K, double jitter, double max_jitter);

/// Coefficients c solving (K_Z + jitter I) c = values.
Vector interpolation_weights(const KernelSpec& kernel, const PointSet& Z, const Vector& values, double jitter);

}  // namespace ktube
