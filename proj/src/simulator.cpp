#include "ktube/simulator.hpp"

#include <cmath>
#include <random>

#include "ktube/parallel.hpp"

namespace ktube {

bool Box::contains(const Eigen::Ref<const Eigen::RowVectorXd>& z) const {
  for (Index i = 0; i < 3; ++i) {
    if (z[i] < lower[i] || z[i] > upper[i]) return false;
  }
  return true;
}

void SimConfig::validate() const {
  require(std::isfinite(Ts) && Ts > 0, "sim.Ts: must be positive");
  require(std::isfinite(sigma_noise) && sigma_noise >= 0, "sim.sigma_noise: must be non-negative");
  require((domain.lower.array() < domain.upper.array()).all(), "sim.domain: lower must be < upper on every axis");
}

void to_json(nlohmann::json& j, const SimConfig& c) {
  j = nlohmann::json{{"Ts", c.Ts},
                     {"sigma_noise", c.sigma_noise},
                     {"domain",
                      {{"lower", {c.domain.lower[0], c.domain.lower[1], c.domain.lower[2]}},
                       {"upper", {c.domain.upper[0], c.domain.upper[1], c.domain.upper[2]}}}},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, SimConfig& c) {
  require(j.is_object(), "sim: expected an object");
  c = SimConfig{};
  if (j.contains("Ts")) c.Ts = j.at("Ts").get<double>();
  if (j.contains("sigma_noise")) c.sigma_noise = j.at("sigma_noise").get<double>();
  if (j.contains("domain")) {
    const auto& d = j.at("domain");
    for (const char* key : {"lower", "upper"}) {
      require(d.contains(key) && d.at(key).is_array() && d.at(key).size() == 3,
              std::string("sim.domain.") + key + ": expected 3 numbers");
    }
    for (int i = 0; i < 3; ++i) {
      c.domain.lower[i] = d.at("lower")[i].get<double>();
      c.domain.upper[i] = d.at("upper")[i].get<double>();
    }
  }
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  c.validate();
}

Vec2 vdp_rhs(const Vec2& x, double u) {
  return {x[1], (1.0 - x[0] * x[0]) * x[1] - x[0] - 2.0 + 2.0 * u};
}

Vec2 rk4_step(const Vec2& x, double u, double Ts) {
  const Vec2 k1 = vdp_rhs(x, u);
  const Vec2 k2 = vdp_rhs(x + 0.5 * Ts * k1, u);
  const Vec2 k3 = vdp_rhs(x + 0.5 * Ts * k2, u);
  const Vec2 k4 = vdp_rhs(x + Ts * k3, u);
  return x + (Ts / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Vec2 step(const Vec2& x, double u, const SimConfig& config, SplitMix64& rng) {
  Vec2 next = rk4_step(x, u, config.Ts);
  if (config.sigma_noise > 0) {
    std::normal_distribution<double> noise(0.0, config.sigma_noise);
    next[0] += noise(rng);
    next[1] += noise(rng);
  }
  return next;
}

PointSet sample_inputs(Index N, const Box& box, std::uint64_t seed, Stream stream) {
  require(N >= 0, "sample_inputs: N must be non-negative");
  Matrix pts(N, 3);
  parallel::for_each_index(0, static_cast<std::size_t>(N), [&](std::size_t i) {
    SplitMix64 g = make_stream(seed, stream, i);
    for (Index a = 0; a < 3; ++a) pts(static_cast<Index>(i), a) = uniform(g, box.lower[a], box.upper[a]);
  });
  return PointSet(std::move(pts));
}

Dataset sample_dataset(Index N, const SimConfig& config, std::uint64_t seed, Stream stream) {
  require(N >= 1, "sample_dataset: N must be >= 1");
  config.validate();
  Dataset ds;
  ds.inputs.resize(N, 3);
  ds.outputs.resize(N, 2);
  ds.seed = seed;
  ds.stream = stream;
  ds.config = config;
  ds.config.seed = seed;
  parallel::for_each_index(0, static_cast<std::size_t>(N), [&](std::size_t ii) {
    const auto i = static_cast<Index>(ii);
    SplitMix64 g = make_stream(seed, stream, ii);
    for (Index a = 0; a < 3; ++a) ds.inputs(i, a) = uniform(g, config.domain.lower[a], config.domain.upper[a]);
    const Vec2 x(ds.inputs(i, 0), ds.inputs(i, 1));
    ds.outputs.row(i) = step(x, ds.inputs(i, 2), config, g).transpose();
  });
  return ds;
}

}  // namespace ktube
