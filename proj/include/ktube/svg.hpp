#pragma once

#include <string>
#include <vector>

#include "ktube/planner.hpp"
#include "ktube/provenance.hpp"

namespace ktube {

struct TrajectoryFigure {
  double x_min = -5.0, x_max = 5.0, y_min = -5.0, y_max = 5.0;
  Obstacle obstacle;
  Vec2 x0{4.0, 0.0};
  Vec2 xf{-2.0, 0.0};
  std::vector<Vec2> unconstrained;           ///< drawn red
  std::vector<std::vector<Vec2>> rollouts;   ///< drawn blue
  std::vector<Rect> tube;                    ///< outlined grey
};

/// Self-contained SVG document with a provenance comment after the root tag.
std::string render_trajectories(const TrajectoryFigure& fig, const Provenance& provenance);

}  // namespace ktube
