#include "ktube/svg.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace ktube {

namespace {

constexpr double kSize = 600.0;
constexpr double kMargin = 40.0;

struct Frame {
  const TrajectoryFigure& fig;
  double sx() const { return (kSize - 2 * kMargin) / (fig.x_max - fig.x_min); }
  double sy() const { return (kSize - 2 * kMargin) / (fig.y_max - fig.y_min); }
  double px(double x) const { return kMargin + (x - fig.x_min) * sx(); }
  double py(double y) const { return kSize - kMargin - (y - fig.y_min) * sy(); }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string polyline(const Frame& f, const std::vector<Vec2>& pts, const char* colour, double width,
                     double opacity) {
  std::string s = "<polyline fill=\"none\" stroke=\"" + std::string(colour) + "\" stroke-width=\"" + num(width) +
                  "\" stroke-opacity=\"" + num(opacity) + "\" points=\"";
  for (const auto& p : pts) s += num(f.px(p[0])) + "," + num(f.py(p[1])) + " ";
  if (!pts.empty()) s.pop_back();
  return s + "\"/>\n";
}

}  // namespace

std::string render_trajectories(const TrajectoryFigure& fig, const Provenance& provenance) {
  const Frame f{fig};
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSize << "\" height=\"" << kSize
      << "\" viewBox=\"0 0 " << kSize << ' ' << kSize << "\">\n"
      << svg_provenance_comment(provenance) << '\n'
      << "<rect x=\"0\" y=\"0\" width=\"" << kSize << "\" height=\"" << kSize << "\" fill=\"white\"/>\n"
      << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << kSize - 2 * kMargin
      << "\" height=\"" << kSize - 2 * kMargin << "\" fill=\"none\" stroke=\"black\"/>\n";

  // Axis ticks at integers.
  for (int t = static_cast<int>(std::ceil(fig.x_min)); t <= static_cast<int>(std::floor(fig.x_max)); ++t) {
    out << "<text x=\"" << num(f.px(t)) << "\" y=\"" << num(kSize - kMargin + 16)
        << "\" font-size=\"11\" text-anchor=\"middle\">" << t << "</text>\n";
  }
  for (int t = static_cast<int>(std::ceil(fig.y_min)); t <= static_cast<int>(std::floor(fig.y_max)); ++t) {
    out << "<text x=\"" << num(kMargin - 6) << "\" y=\"" << num(f.py(t) + 4)
        << "\" font-size=\"11\" text-anchor=\"end\">" << t << "</text>\n";
  }
  out << "<text x=\"" << kSize / 2 << "\" y=\"" << kSize - 6 << "\" font-size=\"13\" text-anchor=\"middle\">x1</text>\n"
      << "<text x=\"12\" y=\"" << kSize / 2 << "\" font-size=\"13\">x2</text>\n";

  const Obstacle& o = fig.obstacle;
  if (o.shape == ObstacleShape::Disk) {
    out << "<ellipse cx=\"" << num(f.px(o.center[0])) << "\" cy=\"" << num(f.py(o.center[1])) << "\" rx=\""
        << num(o.radius * f.sx()) << "\" ry=\"" << num(o.radius * f.sy())
        << "\" fill=\"#888888\" fill-opacity=\"0.6\" stroke=\"black\"/>\n";
  } else {
    out << "<polygon fill=\"#888888\" fill-opacity=\"0.6\" stroke=\"black\" points=\"";
    for (const auto& v : o.star_vertices()) out << num(f.px(v[0])) << ',' << num(f.py(v[1])) << ' ';
    out << "\"/>\n";
  }

  for (const auto& r : fig.tube) {
    out << "<rect x=\"" << num(f.px(r.lo[0])) << "\" y=\"" << num(f.py(r.hi[1])) << "\" width=\""
        << num((r.hi[0] - r.lo[0]) * f.sx()) << "\" height=\"" << num((r.hi[1] - r.lo[1]) * f.sy())
        << "\" fill=\"none\" stroke=\"#555555\" stroke-width=\"0.6\"/>\n";
  }
  for (const auto& traj : fig.rollouts) out << polyline(f, traj, "blue", 1.0, 0.6);
  if (!fig.unconstrained.empty()) out << polyline(f, fig.unconstrained, "red", 2.0, 1.0);

  out << "<circle cx=\"" << num(f.px(fig.x0[0])) << "\" cy=\"" << num(f.py(fig.x0[1]))
      << "\" r=\"4\" fill=\"black\"/>\n"
      << "<circle cx=\"" << num(f.px(fig.xf[0])) << "\" cy=\"" << num(f.py(fig.xf[1]))
      << "\" r=\"4\" fill=\"green\"/>\n"
      << "</svg>\n";
  return out.str();
}

}  // namespace ktube
