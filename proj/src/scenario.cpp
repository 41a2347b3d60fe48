#include "ktube/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ktube/errors.hpp"

namespace ktube {

namespace {

// Neumaier's variant of Kahan summation.
class CompensatedSum {
public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace

double binomial_tail(std::int64_t N, std::int64_t k, double eps) {
  require(N >= 0, "binomial_tail: N must be non-negative");
  require(k >= 0, "binomial_tail: k must be non-negative");
  require(eps > 0.0 && eps <= 1.0, "binomial_tail: eps must lie in (0, 1]");
  if (k >= N) return 1.0;
  if (eps == 1.0) return 0.0;

  // log term_0 = N log(1 - eps); log term_{i+1} = log term_i + log((N - i)/(i + 1)) + log(eps/(1 - eps))
  const double log_odds = std::log(eps) - std::log1p(-eps);
  std::vector<double> log_terms(static_cast<std::size_t>(k + 1));
  double lt = static_cast<double>(N) * std::log1p(-eps);
  log_terms[0] = lt;
  for (std::int64_t i = 0; i < k; ++i) {
    lt += std::log(static_cast<double>(N - i)) - std::log(static_cast<double>(i + 1)) + log_odds;
    log_terms[static_cast<std::size_t>(i + 1)] = lt;
  }
  const double peak = *std::max_element(log_terms.begin(), log_terms.end());
  CompensatedSum sum;
  for (double l : log_terms) sum.add(std::exp(l - peak));
  const double log_tail = peak + std::log(sum.value());
  return std::clamp(std::exp(log_tail), 0.0, 1.0);
}

std::int64_t min_samples_bound(double eps, double beta, int n) {
  require(eps > 0.0 && eps <= 1.0, "min_samples_bound: eps must lie in (0, 1]");
  require(beta > 0.0 && beta <= 1.0, "min_samples_bound: beta must lie in (0, 1]");
  require(n >= 0, "min_samples_bound: n must be non-negative");
  return static_cast<std::int64_t>(std::ceil((2.0 / eps) * (n + std::log(1.0 / beta))));
}

std::int64_t min_samples_bisect(double eps, double beta, int decision_dim) {
  require(eps > 0.0 && eps < 1.0, "min_samples_bisect: eps must lie in (0, 1)");
  require(beta > 0.0 && beta < 1.0, "min_samples_bisect: beta must lie in (0, 1)");
  require(decision_dim >= 1, "min_samples_bisect: decision_dim must be >= 1");
  const std::int64_t k = decision_dim - 1;
  auto passes = [&](std::int64_t N) { return binomial_tail(N, k, eps) <= beta; };

  // Below decision_dim the tail is identically 1.
  std::int64_t lo = decision_dim;
  if (passes(lo)) return lo;
  std::int64_t hi = std::max(min_samples_bound(eps, beta, decision_dim - 1), lo + 1);
  while (!passes(hi)) {
    lo = hi;
    hi *= 2;
  }
  // Invariant: tail(lo) > beta, tail(hi) <= beta.
  while (hi - lo > 1) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    (passes(mid) ? hi : lo) = mid;
  }
  return hi;
}

ScenarioCertificate certify(double eps, double beta, int decision_dim, std::int64_t N) {
  require(decision_dim >= 1, "certify: decision_dim must be >= 1");
  require(beta > 0.0 && beta < 1.0, "certify: beta must lie in (0, 1)");
  ScenarioCertificate c;
  c.epsilon = eps;
  c.beta = beta;
  c.decision_dim = decision_dim;
  c.N = N;
  c.tail_value = binomial_tail(N, std::min<std::int64_t>(decision_dim - 1, N), eps);
  c.valid = c.tail_value <= beta;
  return c;
}

JointCertificate union_bound(std::span<const ScenarioCertificate> certs) {
  require(!certs.empty(), "union_bound: no certificates");
  JointCertificate j;
  for (const auto& c : certs) {
    j.eps_total += c.epsilon;
    j.beta_total += c.beta;
  }
  j.vacuous = j.eps_total > 1.0 || j.beta_total >= 1.0;
  return j;
}

void to_json(nlohmann::json& j, const ScenarioCertificate& c) {
  j = nlohmann::json{{"epsilon", c.epsilon},           {"beta", c.beta}, {"decision_dim", c.decision_dim},
                     {"N", c.N},                       {"tail_value", c.tail_value}, {"valid", c.valid}};
}

void from_json(const nlohmann::json& j, ScenarioCertificate& c) {
  c.epsilon = j.at("epsilon").get<double>();
  c.beta = j.at("beta").get<double>();
  c.decision_dim = j.at("decision_dim").get<int>();
  c.N = j.at("N").get<std::int64_t>();
  c.tail_value = j.at("tail_value").get<double>();
  c.valid = j.at("valid").get<bool>();
}

void to_json(nlohmann::json& j, const JointCertificate& c) {
  j = nlohmann::json{{"eps_total", c.eps_total}, {"beta_total", c.beta_total}, {"vacuous", c.vacuous}};
}

void from_json(const nlohmann::json& j, JointCertificate& c) {
  c.eps_total = j.at("eps_total").get<double>();
  c.beta_total = j.at("beta_total").get<double>();
  c.vacuous = j.at("vacuous").get<bool>();
}

}  // namespace ktube
