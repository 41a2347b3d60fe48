#pragma once

#include <cstdint>
#include <span>

#include <json.hpp>

namespace ktube {

/// sum_{i=0}^{k} C(N, i) eps^i (1 - eps)^{N - i}, evaluated in log space.
/// Requires 0 <= k <= N and eps in (0, 1]; k >= N returns exactly 1.
double binomial_tail(std::int64_t N, std::int64_t k, double eps);

/// Smallest N with binomial_tail(N, decision_dim - 1, eps) <= beta.
std::int64_t min_samples_bisect(double eps, double beta, int decision_dim);

/// ceil((2 / eps) * (n + ln(1 / beta))).
std::int64_t min_samples_bound(double eps, double beta, int n);

/// Violation certificate of one convex scenario program: with N i.i.d.
/// scenarios and `decision_dim` decision variables, P^N{V > epsilon} <= tail_value.
struct ScenarioCertificate {
  double epsilon = 0.0;
  double beta = 0.0;
  int decision_dim = 1;
  std::int64_t N = 0;
  double tail_value = 1.0;
  bool valid = false;  ///< tail_value <= beta
};

ScenarioCertificate certify(double eps, double beta, int decision_dim, std::int64_t N);

struct JointCertificate {
  double eps_total = 0.0;
  double beta_total = 0.0;
  bool vacuous = false;  ///< eps_total > 1 or beta_total >= 1
};

/// Union bound over independently certified programs.
JointCertificate union_bound(std::span<const ScenarioCertificate> certs);

void to_json(nlohmann::json& j, const ScenarioCertificate& c);
void from_json(const nlohmann::json& j, ScenarioCertificate& c);
void to_json(nlohmann::json& j, const JointCertificate& c);
void from_json(const nlohmann::json& j, JointCertificate& c);

}  // namespace ktube
