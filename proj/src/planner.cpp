#include "ktube/planner.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "ktube/parallel.hpp"

namespace ktube {

namespace {

double cross2(const Vec2& a, const Vec2& b) { return a[0] * b[1] - a[1] * b[0]; }

bool point_in_triangle(const Vec2& p, const std::array<Vec2, 3>& t) {
  const double d1 = cross2(t[1] - t[0], p - t[0]);
  const double d2 = cross2(t[2] - t[1], p - t[1]);
  const double d3 = cross2(t[0] - t[2], p - t[2]);
  const bool neg = d1 < 0 || d2 < 0 || d3 < 0;
  const bool pos = d1 > 0 || d2 > 0 || d3 > 0;
  return !(neg && pos);
}

std::vector<std::array<Vec2, 3>> star_triangles(const Obstacle& o) {
  const auto v = o.star_vertices();
  std::vector<std::array<Vec2, 3>> tris;
  for (std::size_t i = 0; i < v.size(); ++i) tris.push_back({o.center, v[i], v[(i + 1) % v.size()]});
  return tris;
}

}  // namespace

bool rect_intersects_disk(const Rect& r, const Vec2& center, double radius) {
  const Vec2 nearest = center.cwiseMax(r.lo).cwiseMin(r.hi);
  return (nearest - center).norm() <= radius;
}

bool rect_intersects_triangle(const Rect& r, const std::array<Vec2, 3>& tri) {
  // Rectangle axes.
  for (int a = 0; a < 2; ++a) {
    const double tmin = std::min({tri[0][a], tri[1][a], tri[2][a]});
    const double tmax = std::max({tri[0][a], tri[1][a], tri[2][a]});
    if (tmax < r.lo[a] || tmin > r.hi[a]) return false;
  }
  // Triangle edge normals.
  const auto corners = r.corners();
  for (int e = 0; e < 3; ++e) {
    const Vec2 edge = tri[static_cast<std::size_t>((e + 1) % 3)] - tri[static_cast<std::size_t>(e)];
    const Vec2 normal(-edge[1], edge[0]);
    double tmin = std::numeric_limits<double>::infinity(), tmax = -tmin;
    for (const auto& p : tri) {
      tmin = std::min(tmin, normal.dot(p));
      tmax = std::max(tmax, normal.dot(p));
    }
    double rmin = std::numeric_limits<double>::infinity(), rmax = -rmin;
    for (const auto& p : corners) {
      rmin = std::min(rmin, normal.dot(p));
      rmax = std::max(rmax, normal.dot(p));
    }
    if (rmax < tmin || rmin > tmax) return false;
  }
  return true;
}

std::vector<Vec2> Obstacle::star_vertices() const {
  std::vector<Vec2> v;
  for (int i = 0; i < 10; ++i) {
    const double angle = std::numbers::pi / 2 + i * std::numbers::pi / 5;
    const double rad = i % 2 == 0 ? star_outer : star_inner;
    v.push_back(center + rad * Vec2(std::cos(angle), std::sin(angle)));
  }
  return v;
}

bool Obstacle::contains(const Vec2& p) const {
  if (shape == ObstacleShape::Disk) return (p - center).norm() <= radius;
  for (const auto& t : star_triangles(*this)) {
    if (point_in_triangle(p, t)) return true;
  }
  return false;
}

bool Obstacle::intersects(const Rect& r) const {
  if (shape == ObstacleShape::Disk) return rect_intersects_disk(r, center, radius);
  // Cheap reject against the circumscribed disk.
  if (!rect_intersects_disk(r, center, star_outer)) return false;
  for (const auto& t : star_triangles(*this)) {
    if (rect_intersects_triangle(r, t)) return true;
  }
  return false;
}

void PlanConfig::validate() const {
  require(horizon >= 1, "plan.horizon: must be >= 1");
  require(population >= 10, "plan.population: must be >= 10");
  require(elite_frac > 0 && elite_frac <= 1, "plan.elite_frac: must lie in (0, 1]");
  require(iters >= 1 && replan_iters >= 1, "plan.iters: must be >= 1");
  require(obstacle.radius > 0, "plan.obstacle.radius: must be positive");
  require(obstacle.star_inner > 0 && obstacle.star_outer > obstacle.star_inner,
          "plan.obstacle: star radii must satisfy 0 < inner < outer");
  require(u_min < u_max, "plan.u_bounds: lower must be < upper");
  require(init_std > 0 && min_std >= 0, "plan.init_std: must be positive");
  require(n_rollouts >= 0 && closed_loop_steps >= 0, "plan.n_rollouts: must be non-negative");
  require(x0_perturb_std >= 0, "plan.x0_perturb_std: must be non-negative");
}

namespace {

nlohmann::json vec2_json(const Vec2& v) { return nlohmann::json::array({v[0], v[1]}); }

Vec2 vec2_from(const nlohmann::json& j, const std::string& field) {
  require(j.is_array() && j.size() == 2, field + ": expected 2 numbers");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

void to_json(nlohmann::json& j, const PlanConfig& c) {
  j = nlohmann::json{
      {"x0", vec2_json(c.x0)},
      {"xf", vec2_json(c.xf)},
      {"horizon", c.horizon},
      {"obstacle",
       {{"shape", c.obstacle.shape == ObstacleShape::Disk ? "disk" : "star"},
        {"center", vec2_json(c.obstacle.center)},
        {"radius", c.obstacle.radius},
        {"star_outer", c.obstacle.star_outer},
        {"star_inner", c.obstacle.star_inner}}},
      {"avoid_obstacle", c.avoid_obstacle},
      {"u_bounds", {c.u_min, c.u_max}},
      {"population", c.population},
      {"elite_frac", c.elite_frac},
      {"iters", c.iters},
      {"replan_iters", c.replan_iters},
      {"init_std", c.init_std},
      {"min_std", c.min_std},
      {"w_terminal", c.w_terminal},
      {"w_path", c.w_path},
      {"w_collision", c.w_collision},
      {"w_domain", c.w_domain},
      {"n_rollouts", c.n_rollouts},
      {"closed_loop_steps", c.closed_loop_steps},
      {"x0_perturb_std", c.x0_perturb_std},
  };
}

void from_json(const nlohmann::json& j, PlanConfig& c) {
  require(j.is_object(), "plan: expected an object");
  c = PlanConfig{};
  try {
    if (j.contains("x0")) c.x0 = vec2_from(j.at("x0"), "plan.x0");
    if (j.contains("xf")) c.xf = vec2_from(j.at("xf"), "plan.xf");
    if (j.contains("horizon")) c.horizon = j.at("horizon").get<int>();
    if (j.contains("obstacle")) {
      const auto& o = j.at("obstacle");
      if (o.contains("shape")) {
        const auto shape = o.at("shape").get<std::string>();
        require(shape == "disk" || shape == "star", "plan.obstacle.shape: expected 'disk' or 'star'");
        c.obstacle.shape = shape == "disk" ? ObstacleShape::Disk : ObstacleShape::Star;
      }
      if (o.contains("center")) c.obstacle.center = vec2_from(o.at("center"), "plan.obstacle.center");
      if (o.contains("radius")) c.obstacle.radius = o.at("radius").get<double>();
      if (o.contains("star_outer")) c.obstacle.star_outer = o.at("star_outer").get<double>();
      if (o.contains("star_inner")) c.obstacle.star_inner = o.at("star_inner").get<double>();
    }
    if (j.contains("avoid_obstacle")) c.avoid_obstacle = j.at("avoid_obstacle").get<bool>();
    if (j.contains("u_bounds")) {
      const Vec2 b = vec2_from(j.at("u_bounds"), "plan.u_bounds");
      c.u_min = b[0];
      c.u_max = b[1];
    }
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("population", c.population);
    get("elite_frac", c.elite_frac);
    get("iters", c.iters);
    get("replan_iters", c.replan_iters);
    get("init_std", c.init_std);
    get("min_std", c.min_std);
    get("w_terminal", c.w_terminal);
    get("w_path", c.w_path);
    get("w_collision", c.w_collision);
    get("w_domain", c.w_domain);
    get("n_rollouts", c.n_rollouts);
    get("closed_loop_steps", c.closed_loop_steps);
    get("x0_perturb_std", c.x0_perturb_std);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("plan: ") + e.what());
  }
  c.validate();
}

Plan evaluate_plan(const TubeModel& model, const PlanConfig& config, const Vec2& x0, std::vector<double> controls) {
  Plan p;
  p.controls = std::move(controls);
  p.tube = propagate_corners(model, x0, p.controls);
  p.nominal.reserve(p.controls.size() + 1);
  p.nominal.push_back(x0);
  double path = 0.0;
  for (double u : p.controls) {
    const Vec2 next = predict_mean(model, p.nominal.back(), u);
    path += (next - p.nominal.back()).norm();
    p.nominal.push_back(next);
  }
  double domain_excess = 0.0;
  for (std::size_t k = 1; k < p.tube.size(); ++k) {
    const Rect& r = p.tube[k];
    if (config.avoid_obstacle && config.obstacle.intersects(r)) ++p.collisions;
    for (int a = 0; a < 2; ++a) {
      domain_excess += std::max(0.0, config.state_domain.lower[a] - r.lo[a]);
      domain_excess += std::max(0.0, r.hi[a] - config.state_domain.upper[a]);
    }
  }
  p.feasible = p.collisions == 0;
  p.cost = config.w_terminal * (p.nominal.back() - config.xf).squaredNorm() + config.w_path * path +
           config.w_collision * p.collisions + config.w_domain * domain_excess;
  return p;
}

Plan plan(const TubeModel& model, const PlanConfig& config, const Vec2& x0, std::uint64_t seed,
          std::uint64_t call_id, const std::vector<double>& warm_start, int iters) {
  config.validate();
  const auto H = static_cast<std::size_t>(config.horizon);
  const int n_iters = iters > 0 ? iters : config.iters;
  const auto pop = static_cast<std::size_t>(config.population);
  const auto n_elite = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(config.elite_frac * pop)));

  std::vector<double> mean(H, 0.0);
  if (!warm_start.empty()) {
    for (std::size_t k = 0; k < H; ++k) mean[k] = warm_start[std::min(k, warm_start.size() - 1)];
  }
  std::vector<double> stdev(H, warm_start.empty() ? config.init_std : 0.5 * config.init_std);

  Plan best;
  best.cost = std::numeric_limits<double>::infinity();
  std::vector<Plan> candidates(pop);
  std::vector<std::size_t> order(pop);

  for (int it = 0; it < n_iters; ++it) {
    parallel::for_each_index(0, pop, [&](std::size_t j) {
      std::vector<double> u(H);
      // Candidate 0 is the current mean; the rest are Gaussian perturbations.
      SplitMix64 g = make_stream(seed, Stream::Planning, (call_id * 1000003ULL + static_cast<std::uint64_t>(it)) * pop + j);
      std::normal_distribution<double> normal(0.0, 1.0);
      for (std::size_t k = 0; k < H; ++k) {
        const double z = j == 0 ? 0.0 : normal(g);
        u[k] = std::clamp(mean[k] + stdev[k] * z, config.u_min, config.u_max);
      }
      candidates[j] = evaluate_plan(model, config, x0, std::move(u));
    });
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return candidates[a].cost < candidates[b].cost; });
    if (candidates[order[0]].cost < best.cost) {
      auto history = std::move(best.best_cost_history);
      best = candidates[order[0]];
      best.best_cost_history = std::move(history);
    }
    best.best_cost_history.push_back(best.cost);

    for (std::size_t k = 0; k < H; ++k) {
      double m = 0.0;
      for (std::size_t e = 0; e < n_elite; ++e) m += candidates[order[e]].controls[k];
      m /= static_cast<double>(n_elite);
      double v = 0.0;
      for (std::size_t e = 0; e < n_elite; ++e) v += std::pow(candidates[order[e]].controls[k] - m, 2);
      mean[k] = m;
      stdev[k] = std::max(config.min_std, std::sqrt(v / static_cast<double>(n_elite)));
    }
  }
  return best;
}

std::vector<Vec2> rollout_true(const SimConfig& sim, const Vec2& x0, const std::vector<double>& u_seq,
                               SplitMix64& rng) {
  std::vector<Vec2> traj{x0};
  traj.reserve(u_seq.size() + 1);
  for (double u : u_seq) traj.push_back(step(traj.back(), u, sim, rng));
  return traj;
}

ClosedLoopResult run_closed_loop(const TubeModel& model, const PlanConfig& config, const SimConfig& sim,
                                 const Vec2& x0, std::uint64_t seed, std::uint64_t rollout_id) {
  ClosedLoopResult out;
  out.states.push_back(x0);
  SplitMix64 noise = make_stream(seed, Stream::Rollout, rollout_id);
  std::vector<double> warm;
  const auto H = static_cast<std::size_t>(config.horizon);
  for (int t = 0; t < config.closed_loop_steps; ++t) {
    const std::uint64_t call = rollout_id * 100003ULL + static_cast<std::uint64_t>(t);
    const Plan p = plan(model, config, out.states.back(), seed, call, warm, t == 0 ? config.iters : config.replan_iters);
    out.tube_collisions += p.collisions;
    out.infeasible_plans += p.feasible ? 0 : 1;
    out.half_widths.push_back(p.tube[1].half_width());
    const double u = p.controls.front();
    out.controls.push_back(u);
    out.states.push_back(step(out.states.back(), u, sim, noise));
    if (config.obstacle.contains(out.states.back())) ++out.state_collisions;
    // Shift the plan by one step for the next warm start.
    warm.assign(p.controls.begin() + 1, p.controls.end());
    warm.push_back(p.controls.back());
    warm.resize(H);
  }
  out.terminal_error = (out.states.back() - config.xf).norm();
  return out;
}

MonteCarloResult run_rollouts(const TubeModel& model, const PlanConfig& config, const SimConfig& sim,
                              std::uint64_t seed) {
  MonteCarloResult mc;
  const auto n = static_cast<std::size_t>(config.n_rollouts);
  mc.rollouts.resize(n);
  mc.initial_states.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    SplitMix64 g = make_stream(seed, Stream::Rollout, 1000000ULL + i);
    std::normal_distribution<double> normal(0.0, config.x0_perturb_std);
    mc.initial_states[i] = config.x0 + Vec2(normal(g), normal(g));
  }
  // Plans inside each loop already use the worker pool, so rollouts run in sequence.
  for (std::size_t i = 0; i < n; ++i) {
    mc.rollouts[i] = run_closed_loop(model, config, sim, mc.initial_states[i], seed, i);
    mc.tube_collisions += mc.rollouts[i].tube_collisions;
    mc.state_collisions += mc.rollouts[i].state_collisions;
    mc.worst_terminal_error = std::max(mc.worst_terminal_error, mc.rollouts[i].terminal_error);
  }
  return mc;
}

}  // namespace ktube
