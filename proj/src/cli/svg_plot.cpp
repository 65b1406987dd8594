#include "ilnet/cli/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ilnet/errors.hpp"

namespace ilnet::cli {
namespace {

const char* kModeColors[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string points_attr(const std::vector<geo::Point>& pts) {
  std::string s;
  for (const auto& p : pts) {
    if (!s.empty()) s += ' ';
    s += num(p.x) + "," + num(p.y);
  }
  return s;
}

}  // namespace

std::string render_svg(const scene::Scenario& s, const eval::ScenarioPrediction& prediction) {
  if (prediction.scenario_id != s.id) {
    throw DataError("prediction is for scenario '" + prediction.scenario_id + "', not '" + s.id + "'");
  }
  double x0 = INFINITY, y0 = INFINITY, x1 = -INFINITY, y1 = -INFINITY;
  auto grow = [&](geo::Point p) {
    x0 = std::min(x0, p.x);
    y0 = std::min(y0, p.y);
    x1 = std::max(x1, p.x);
    y1 = std::max(y1, p.y);
  };
  for (const auto& a : s.agents) {
    for (const auto& st : a.states) grow(st.position);
  }
  for (const auto& a : prediction.agents) {
    if (!a.focal) continue;
    for (const auto& m : a.finals) std::for_each(m.begin(), m.end(), grow);
  }
  x0 -= 15.0;
  y0 -= 15.0;
  x1 += 15.0;
  y1 += 15.0;

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"" << num(std::round(800.0 * (y1 - y0) / (x1 - x0)))
     << "\" viewBox=\"" << num(x0) << ' ' << num(-y1) << ' ' << num(x1 - x0) << ' ' << num(y1 - y0) << "\">\n";
  os << "<title>scenario " << s.id << "</title>\n";
  os << "<rect x=\"" << num(x0) << "\" y=\"" << num(-y1) << "\" width=\"" << num(x1 - x0) << "\" height=\"" << num(y1 - y0)
     << "\" fill=\"#ffffff\"/>\n";
  os << "<g transform=\"scale(1,-1)\" fill=\"none\" stroke-linecap=\"round\">\n";

  os << "<g class=\"lanes\">\n";
  for (const auto& seg : s.map.segments) {
    for (const auto& pl : seg.polylines) {
      const bool center = pl.kind == scene::PolylineKind::kCenterline;
      os << "<polyline class=\"" << (center ? "centerline" : "boundary") << "\" points=\"" << points_attr(pl.points)
         << "\" stroke=\"" << (center ? "#c8c8c8" : "#808080") << "\" stroke-width=\"" << (center ? "0.15" : "0.25")
         << "\"" << (center ? " stroke-dasharray=\"1,1\"" : "") << "/>\n";
    }
  }
  os << "</g>\n<g class=\"agents\">\n";
  for (const auto& a : s.agents) {
    std::vector<geo::Point> hist, fut;
    for (int t = 0; t < s.total_steps(); ++t) {
      const auto& st = a.states[static_cast<std::size_t>(t)];
      if (!st.observed) continue;
      (t < s.history ? hist : fut).push_back(st.position);
    }
    if (!hist.empty()) fut.insert(fut.begin(), hist.back());
    os << "<polyline class=\"history\" data-agent=\"" << a.id << "\" points=\"" << points_attr(hist)
       << "\" stroke=\"#202020\" stroke-width=\"0.4\"/>\n";
    os << "<polyline class=\"ground-truth\" data-agent=\"" << a.id << "\" points=\"" << points_attr(fut)
       << "\" stroke=\"#202020\" stroke-width=\"0.3\" stroke-dasharray=\"0.8,0.6\"/>\n";
  }
  os << "</g>\n<g class=\"predictions\">\n";
  for (const auto& a : prediction.agents) {
    if (!a.focal) continue;
    for (std::size_t k = 0; k < a.finals.size(); ++k) {
      const char* color = kModeColors[k % std::size(kModeColors)];
      os << "<polyline class=\"prediction\" data-agent=\"" << a.agent_id << "\" data-mode=\"" << k << "\" data-prob=\""
         << num(a.probs[k]) << "\" points=\"" << points_attr(a.finals[k]) << "\" stroke=\"" << color
         << "\" stroke-width=\"0.3\" stroke-opacity=\"" << num(0.35 + 0.65 * a.probs[k]) << "\"/>\n";
    }
    for (std::size_t k = 0; k < a.anchors.size(); ++k) {
      os << "<circle class=\"anchor\" data-agent=\"" << a.agent_id << "\" data-mode=\"" << k << "\" cx=\""
         << num(a.anchors[k].x) << "\" cy=\"" << num(a.anchors[k].y) << "\" r=\"0.5\" fill=\""
         << kModeColors[k % std::size(kModeColors)] << "\" stroke=\"#000000\" stroke-width=\"0.1\"/>\n";
    }
  }
  os << "</g>\n</g>\n</svg>\n";
  return os.str();
}

}  // namespace ilnet::cli
