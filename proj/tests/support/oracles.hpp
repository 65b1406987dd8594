#pragma once

#include <cmath>
#include <map>
#include <numbers>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "ilnet/geometry/geometry.hpp"
#include "ilnet/numerics/dense_array.hpp"
#include "ilnet/numerics/rng.hpp"
#include "ilnet/objective/wta.hpp"
#include "ilnet/scene/scenario.hpp"

// Brute-force reference implementations shared by unit and acceptance tests.
namespace ilnet::testing {

struct WtaCase {
  DenseArray preds, gt;
  std::vector<double> valid;
};

/// Coordinates on a coarse grid so that exact ties occur often.
inline WtaCase random_case(Rng& rng, std::size_t N, std::size_t K, std::size_t F, bool coarse) {
  WtaCase c{DenseArray({N, K, F, 2}), DenseArray({N, F, 2}), std::vector<double>(N * F, 0.0)};
  auto draw = [&] { return coarse ? static_cast<double>(rng.uniform_int(-2, 2)) : rng.uniform(-5.0, 5.0); };
  for (std::size_t i = 0; i < c.preds.size(); ++i) c.preds[i] = draw();
  for (std::size_t i = 0; i < c.gt.size(); ++i) c.gt[i] = draw();
  for (auto& v : c.valid) v = rng.bernoulli(0.7) ? 1.0 : 0.0;
  c.valid[rng.uniform_int(0, static_cast<std::int64_t>(N * F) - 1)] = 1.0;
  return c;
}

inline double endpoint_error(const WtaCase& c, std::size_t n, std::size_t k) {
  const std::size_t K = c.preds.dim(1), F = c.preds.dim(2);
  long last = -1;
  for (std::size_t f = 0; f < F; ++f) {
    if (c.valid[n * F + f] != 0.0) last = static_cast<long>(f);
  }
  if (last < 0) return std::nan("");
  const auto f = static_cast<std::size_t>(last);
  return std::hypot(c.preds[((n * K + k) * F + f) * 2] - c.gt[(n * F + f) * 2],
                    c.preds[((n * K + k) * F + f) * 2 + 1] - c.gt[(n * F + f) * 2 + 1]);
}

/// Enumerates every mode (joint: shared, marginal: per agent) and keeps the
/// first minimum.
inline std::vector<std::size_t> wta_oracle(const WtaCase& c, objective::Task task) {
  const std::size_t N = c.preds.dim(0), K = c.preds.dim(1);
  std::vector<std::size_t> out(N, 0);
  if (task == objective::Task::kJoint) {
    std::vector<double> cost(K, 0.0);
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t n = 0; n < N; ++n) {
        const double e = endpoint_error(c, n, k);
        if (!std::isnan(e)) cost[k] += e;
      }
    }
    out.assign(N, static_cast<std::size_t>(std::min_element(cost.begin(), cost.end()) - cost.begin()));
  } else {
    for (std::size_t n = 0; n < N; ++n) {
      std::vector<double> cost(K);
      for (std::size_t k = 0; k < K; ++k) cost[k] = endpoint_error(c, n, k);
      if (!std::isnan(cost[0])) out[n] = static_cast<std::size_t>(std::min_element(cost.begin(), cost.end()) - cost.begin());
    }
  }
  return out;
}

/// Per-mode scan straight from the metric definitions.
struct Scan {
  std::vector<double> ade, fde;
};

inline Scan scan_modes(const double* preds, const double* gt, const double* valid, std::size_t K, std::size_t F) {
  Scan s;
  for (std::size_t k = 0; k < K; ++k) {
    std::vector<double> errs;
    for (std::size_t f = 0; f < F; ++f) {
      if (valid[f] == 0.0) continue;
      errs.push_back(std::hypot(preds[(k * F + f) * 2] - gt[f * 2], preds[(k * F + f) * 2 + 1] - gt[f * 2 + 1]));
    }
    double sum = 0.0;
    for (double e : errs) sum += e;
    s.ade.push_back(sum / static_cast<double>(errs.size()));
    s.fde.push_back(errs.back());
  }
  return s;
}

inline std::size_t first_min(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] < v[best]) best = i;
  }
  return best;
}

/// Winding-number containment, independent of the even-odd rule used by the raster.
inline bool winding_contains(geo::Point p, const std::vector<geo::Point>& poly) {
  int wn = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const geo::Point a = poly[i], b = poly[(i + 1) % poly.size()];
    const double cross = (b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y);
    if (a.y <= p.y) {
      if (b.y > p.y && cross > 0) ++wn;
    } else if (b.y <= p.y && cross < 0) {
      --wn;
    }
  }
  return wn != 0;
}

/// Drivable test of one cell evaluated from the lane geometry.
class CellOracle {
 public:
  CellOracle(const scene::LaneGraph& map, double cell) : cell_(cell) {
    for (const auto& seg : map.segments) {
      const scene::Polyline *l = nullptr, *r = nullptr;
      for (const auto& pl : seg.polylines) {
        if (pl.kind == scene::PolylineKind::kCenterline) centers_.insert(pl.points.begin(), pl.points.end());
        if (pl.kind == scene::PolylineKind::kLeftBoundary) l = &pl;
        if (pl.kind == scene::PolylineKind::kRightBoundary) r = &pl;
      }
      if (!l || !r) continue;
      for (std::size_t i = 0; i + 1 < std::min(l->points.size(), r->points.size()); ++i) {
        quads_.push_back({l->points[i], l->points[i + 1], r->points[i + 1], r->points[i]});
      }
    }
  }
  bool drivable(long ix, long iy) {
    const auto key = std::pair{ix, iy};
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    const geo::Point c{(static_cast<double>(ix) + 0.5) * cell_, (static_cast<double>(iy) + 0.5) * cell_};
    bool hit = false;
    for (const auto& p : centers_) {
      if (std::floor(p.x / cell_) == static_cast<double>(ix) && std::floor(p.y / cell_) == static_cast<double>(iy)) hit = true;
    }
    for (const auto& q : quads_) hit = hit || winding_contains(c, q);
    return memo_[key] = hit;
  }
  double cell() const { return cell_; }

 private:
  struct Less {
    bool operator()(const geo::Point& a, const geo::Point& b) const { return std::pair{a.x, a.y} < std::pair{b.x, b.y}; }
  };
  double cell_;
  std::set<geo::Point, Less> centers_;
  std::vector<std::vector<geo::Point>> quads_;
  std::map<std::pair<long, long>, bool> memo_;
};

/// Angle between two displacement vectors from their polar angles.
inline double polar_angle_between(double ax, double ay, double bx, double by) {
  const double d = std::abs(std::atan2(by, bx) - std::atan2(ay, ax));
  return d > std::numbers::pi ? 2.0 * std::numbers::pi - d : d;
}

/// Minimal XML well-formedness: balanced, properly nested tags with quoted
/// attributes, one root element.
inline bool well_formed_xml(const std::string& text) {
  std::vector<std::string> stack;
  std::size_t i = 0, roots = 0;
  static const std::regex attrs(R"(^(\s+[A-Za-z_:][-A-Za-z0-9_:.]*="[^"<]*")*\s*/?$)");
  while ((i = text.find('<', i)) != std::string::npos) {
    const std::size_t end = text.find('>', i);
    if (end == std::string::npos) return false;
    std::string tag = text.substr(i + 1, end - i - 1);
    i = end + 1;
    if (tag.starts_with("?") || tag.starts_with("!--")) continue;
    if (tag.starts_with("/")) {
      if (stack.empty() || stack.back() != tag.substr(1)) return false;
      stack.pop_back();
      continue;
    }
    const std::size_t name_end = tag.find_first_of(" \t\n/");
    const std::string name = tag.substr(0, name_end);
    if (name.empty() || !std::regex_match(tag.substr(name.size()), attrs)) return false;
    if (stack.empty()) ++roots;
    if (!tag.ends_with("/")) stack.push_back(name);
  }
  return stack.empty() && roots == 1;
}

}  // namespace ilnet::testing
