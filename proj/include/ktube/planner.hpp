#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "ktube/pipeline.hpp"

namespace ktube {

enum class ObstacleShape { Disk, Star };

/// Disk of `radius`, or a regular five-pointed star with the given outer
/// (tip) and inner (notch) radii, first tip pointing along +x2.
struct Obstacle {
  ObstacleShape shape = ObstacleShape::Disk;
  Vec2 center{0.0, -4.0};
  double radius = 1.5;
  double star_outer = 2.0;
  double star_inner = 0.9;

  bool contains(const Vec2& p) const;
  bool intersects(const Rect& r) const;
  /// Star outline, alternating tip and notch vertices (10 points).
  std::vector<Vec2> star_vertices() const;
};

bool rect_intersects_disk(const Rect& r, const Vec2& center, double radius);
/// Separating-axis test between a rectangle and a triangle.
bool rect_intersects_triangle(const Rect& r, const std::array<Vec2, 3>& tri);

struct PlanConfig {
  Vec2 x0{4.0, 0.0};
  Vec2 xf{-2.0, 0.0};
  int horizon = 30;
  Obstacle obstacle;
  bool avoid_obstacle = true;
  double u_min = -5.0;
  double u_max = 5.0;
  // cross-entropy optimizer
  int population = 64;
  double elite_frac = 0.125;
  int iters = 12;
  int replan_iters = 4;
  double init_std = 2.0;
  double min_std = 0.05;
  // cost weights
  double w_terminal = 10.0;
  double w_path = 0.1;
  double w_collision = 1e3;
  double w_domain = 1e2;
  Box state_domain;  ///< only the (x1, x2) axes are used
  // closed loop
  int n_rollouts = 20;
  int closed_loop_steps = 40;
  double x0_perturb_std = 0.05;

  void validate() const;
};

void to_json(nlohmann::json& j, const PlanConfig& c);
void from_json(const nlohmann::json& j, PlanConfig& c);

struct Plan {
  std::vector<double> controls;
  std::vector<Rect> tube;       ///< horizon + 1 rectangles from propagate_corners
  std::vector<Vec2> nominal;    ///< horizon + 1 predicted states
  double cost = 0.0;
  int collisions = 0;           ///< tube rectangles touching the obstacle
  bool feasible = false;        ///< collisions == 0
  std::vector<double> best_cost_history;  ///< best cost after each optimizer iteration
};

/// Cost and tube of one control sequence under the model.
Plan evaluate_plan(const TubeModel& model, const PlanConfig& config, const Vec2& x0, std::vector<double> controls);

/// Cross-entropy search over control sequences from `x0`. `warm_start`, when
/// non-empty, seeds the sampling mean. Deterministic for fixed (seed, call_id).
Plan plan(const TubeModel& model, const PlanConfig& config, const Vec2& x0, std::uint64_t seed,
          std::uint64_t call_id = 0, const std::vector<double>& warm_start = {}, int iters = -1);

/// Open-loop simulation of the true noisy system. Returns u_seq.size() + 1 states.
std::vector<Vec2> rollout_true(const SimConfig& sim, const Vec2& x0, const std::vector<double>& u_seq,
                               SplitMix64& rng);

struct ClosedLoopResult {
  std::vector<Vec2> states;
  std::vector<double> controls;
  std::vector<Vec2> half_widths;  ///< first-step tube half-widths of each replanned tube
  int tube_collisions = 0;        ///< summed over every replanned tube
  int state_collisions = 0;       ///< true states inside the obstacle
  int infeasible_plans = 0;
  double terminal_error = 0.0;
};

/// Receding-horizon loop: plan, apply the first control to the true system, repeat.
ClosedLoopResult run_closed_loop(const TubeModel& model, const PlanConfig& config, const SimConfig& sim,
                                 const Vec2& x0, std::uint64_t seed, std::uint64_t rollout_id);

struct MonteCarloResult {
  std::vector<ClosedLoopResult> rollouts;
  std::vector<Vec2> initial_states;
  int tube_collisions = 0;
  int state_collisions = 0;
  double worst_terminal_error = 0.0;
};

/// n_rollouts closed loops from x0 perturbed by N(0, x0_perturb_std^2 I).
MonteCarloResult run_rollouts(const TubeModel& model, const PlanConfig& config, const SimConfig& sim,
                              std::uint64_t seed);

}  // namespace ktube
