#pragma once

#include <cstdint>

#include <json.hpp>

#include "ktube/point_set.hpp"
#include "ktube/rng.hpp"

namespace ktube {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

/// Axis-aligned box over z = (x1, x2, u).
struct Box {
  Vec3 lower = Vec3::Constant(-5.0);
  Vec3 upper = Vec3::Constant(5.0);

  bool contains(const Eigen::Ref<const Eigen::RowVectorXd>& z) const;
};

struct SimConfig {
  double Ts = 0.1;
  double sigma_noise = 0.02;
  Box domain;
  std::uint64_t seed = 0;

  void validate() const;
};

void to_json(nlohmann::json& j, const SimConfig& c);
void from_json(const nlohmann::json& j, SimConfig& c);

/// Controlled Van der Pol vector field:
///   dx1 = x2,  dx2 = (1 - x1^2) x2 - x1 - 2 + 2u.
Vec2 vdp_rhs(const Vec2& x, double u);

/// One classical RK4 step of length Ts with u held constant.
Vec2 rk4_step(const Vec2& x, double u, double Ts);

/// Noisy discrete-time transition x_{k+1} = RK4(x_k, u_k) + w_k, w_k ~ N(0, sigma^2 I).
Vec2 step(const Vec2& x, double u, const SimConfig& config, SplitMix64& rng);

/// i.i.d. input/output samples. Inputs are rows z = (x1, x2, u), outputs are
/// rows y = x_{k+1}.
struct Dataset {
  Matrix inputs;   ///< N x 3
  Matrix outputs;  ///< N x 2
  std::uint64_t seed = 0;
  Stream stream = Stream::Training;
  SimConfig config;

  Index size() const { return inputs.rows(); }
};

/// Row i is drawn from its own generator make_stream(seed, stream, i), so the
/// result does not depend on how rows are sharded over threads.
Dataset sample_dataset(Index N, const SimConfig& config, std::uint64_t seed, Stream stream);

/// Uniform points in the domain box (no outputs); used for greedy candidates.
PointSet sample_inputs(Index N, const Box& box, std::uint64_t seed, Stream stream);

}  // namespace ktube
