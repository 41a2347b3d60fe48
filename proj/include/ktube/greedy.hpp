#pragma once

#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ktube/kernels.hpp"

namespace ktube {

/// Why p_greedy stopped.
enum class GreedyStop {
  Tolerance,  ///< max P_Z^2 fell below tol
  MaxSize,    ///< |Z| reached max_n first (truncated)
  Exhausted,  ///< every remaining candidate is numerically a center already
};

std::string_view stop_name(GreedyStop s);
GreedyStop stop_from_name(const std::string& s);

/// Output of the P-greedy selection.
///
/// `newton_factor` is the lower-triangular L_Z with K_Z = L_Z L_Z^T, read off
/// the Newton basis values at the selected centers. `max_power_history[j]` is
/// max_x P_{Z_j}(x) immediately before the (j+1)-th selection, so it has one
/// entry per center. `residual_power_sq` holds P_Z(x)^2 for every candidate
/// after the final selection.
struct BasisSelection {
  PointSet centers;
  std::vector<Index> center_indices;
  Matrix newton_factor;
  std::vector<double> max_power_history;
  Vector residual_power_sq;
  double final_max_power = 0.0;
  GreedyStop stop = GreedyStop::Tolerance;

  Index size() const { return centers.size(); }
  bool truncated() const { return stop == GreedyStop::MaxSize; }
};

/// Power function P_Z(x) = sqrt(k(x,x) - k(Z,x)^T (K_Z + jitter I)^{-1} k(Z,x))
/// for every x in X, by direct factorization. Values clamped to [0, sqrt(variance)].
Vector power_all(const KernelSpec& kernel, const PointSet& Z, const PointSet& X);
Vector power_all(const KernelSpec& kernel, const PointSet& Z, const PointSet& X, double jitter);

/// Residual power below this is treated as zero when picking the next center.
inline constexpr double kSelectableFloor = 1e-14;

/// P-greedy center selection over the discrete candidate set X.
///
/// Each step picks the candidate with the largest P_Z(x)^2 (lowest index on
/// ties) and downdates every candidate with the new Newton basis function
/// v_j: P_j^2 = P_{j-1}^2 - v_j^2. Stops when max P^2 < tol or |Z| == max_n.
BasisSelection p_greedy(const KernelSpec& kernel, const PointSet& X, double tol, Index max_n);

/// max over X of the distance to the nearest point of Z.
double fill_distance(const PointSet& X, const PointSet& Z);

/// Algebraic decay exponent of the approximation numbers of an RKHS ball in
/// L^q for a kernel of smoothness nu in d dimensions: -(nu + d/2)/d + (1/2 - 1/q)_+.
/// Pass q = infinity for the sup norm.
double theoretical_exponent(double nu, int d, double q = std::numeric_limits<double>::infinity());

enum class DecayModel { Algebraic, Exponential };

struct ExponentialFit {
  double rate = 0.0;       ///< c in C exp(-c n^{1/d})
  double prefactor = 0.0;  ///< C
};

struct DecayReport {
  DecayModel model = DecayModel::Algebraic;
  double fitted_slope = 0.0;  ///< d log P / d log n (algebraic) or d log P / d n^{1/d} (exponential)
  double fit_r2 = 0.0;
  double theoretical_exponent = std::numeric_limits<double>::quiet_NaN();
  std::optional<ExponentialFit> exp_fit;
  Index points_used = 0;
};

/// Least-squares decay fit over the second half of `history` (entry j is the
/// value at n = j + 1). When `nu` is given the report also carries the
/// theoretical exponent for (nu, d, q).
DecayReport decay_fit(const std::vector<double>& history, DecayModel model, int d,
                      std::optional<double> nu = std::nullopt,
                      double q = std::numeric_limits<double>::infinity());

}  // namespace ktube
