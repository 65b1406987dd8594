#include "ilnet/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "ilnet/errors.hpp"

namespace ilnet::eval {
namespace {

struct Errors {
  double ade;
  double fde;
};

// ADE/FDE of one mode against the labeled steps.
Errors mode_errors(const double* pred, const double* gt, const double* valid, std::size_t steps) {
  double sum = 0.0, last = 0.0;
  std::size_t count = 0;
  for (std::size_t f = 0; f < steps; ++f) {
    if (valid[f] == 0.0) continue;
    const double e = std::hypot(pred[2 * f] - gt[2 * f], pred[2 * f + 1] - gt[2 * f + 1]);
    sum += e;
    last = e;
    ++count;
  }
  return {sum / static_cast<double>(count), last};
}

bool any_valid(const double* valid, std::size_t steps) {
  return std::any_of(valid, valid + steps, [](double v) { return v != 0.0; });
}

}  // namespace

AccuracyMetrics accuracy_metrics(const DenseArray& preds, const std::vector<double>& probs, const DenseArray& gt,
                                 const std::vector<double>& valid, double miss_threshold) {
  if (preds.rank() != 3 || preds.dim(2) != 2 || gt.rank() != 2 || gt.dim(0) != preds.dim(1) || gt.dim(1) != 2 ||
      probs.size() != preds.dim(0) || valid.size() != gt.dim(0)) {
    throw DimensionError("accuracy_metrics: predictions " + shape_str(preds.shape()) + ", ground truth " +
                         shape_str(gt.shape()) + ", " + std::to_string(probs.size()) + " probabilities");
  }
  const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-6) throw DataError("mode probabilities sum to " + std::to_string(total));
  const std::size_t K = preds.dim(0), F = preds.dim(1);
  if (!any_valid(valid.data(), F)) throw DataError("accuracy_metrics: no labeled ground-truth step");

  AccuracyMetrics m;
  double fde_sum = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const Errors e = mode_errors(preds.ptr() + k * F * 2, gt.ptr(), valid.data(), F);
    fde_sum += e.fde;
    if (k == 0 || e.ade < m.min_ade) m.min_ade = e.ade;
    if (k == 0 || e.fde < m.min_fde) {
      m.min_fde = e.fde;
      m.best_mode = k;
    }
  }
  m.mr = m.min_fde > miss_threshold ? 1.0 : 0.0;
  const double miss_prob = 1.0 - probs[m.best_mode];
  m.brier_min_fde = m.min_fde + miss_prob * miss_prob;
  m.rf = std::max(fde_sum / static_cast<double>(K), kRfFloor) / std::max(m.min_fde, kRfFloor);
  return m;
}

JointMetrics joint_metrics(const DenseArray& preds, const DenseArray& gt, const std::vector<double>& valid) {
  if (preds.rank() != 4 || preds.dim(3) != 2 || gt.rank() != 3 || gt.dim(0) != preds.dim(0) ||
      gt.dim(1) != preds.dim(2) || valid.size() != gt.dim(0) * gt.dim(1)) {
    throw DimensionError("joint_metrics: predictions " + shape_str(preds.shape()) + ", ground truth " +
                         shape_str(gt.shape()));
  }
  const std::size_t N = preds.dim(0), K = preds.dim(1), F = preds.dim(2);
  std::vector<std::size_t> agents;
  for (std::size_t n = 0; n < N; ++n) {
    if (any_valid(valid.data() + n * F, F)) agents.push_back(n);
  }
  if (agents.empty()) throw DataError("joint_metrics: no labeled ground-truth step");
  JointMetrics m;
  for (std::size_t k = 0; k < K; ++k) {
    double ade = 0.0, fde = 0.0;
    for (std::size_t n : agents) {
      const Errors e = mode_errors(preds.ptr() + (n * K + k) * F * 2, gt.ptr() + n * F * 2, valid.data() + n * F, F);
      ade += e.ade;
      fde += e.fde;
    }
    ade /= static_cast<double>(agents.size());
    fde /= static_cast<double>(agents.size());
    if (k == 0 || ade < m.min_joint_ade) m.min_joint_ade = ade;
    if (k == 0 || fde < m.min_joint_fde) {
      m.min_joint_fde = fde;
      m.best_mode = k;
    }
  }
  return m;
}

DiversityMetrics diversity_metrics(const std::vector<std::vector<geo::Point>>& modes, const DrivableRaster& raster,
                                   const Box& crop) {
  DiversityMetrics d;
  if (modes.empty()) return d;
  std::set<CellIndex> touched;
  std::size_t compliant = 0;
  for (const auto& mode : modes) {
    bool inside = true;
    for (const auto& p : mode) {
      const CellIndex c = raster.cell_of(p);
      if (!raster.drivable(c)) {
        inside = false;
        continue;
      }
      if (box_contains(crop, raster.cell_center(c))) touched.insert(c);
    }
    if (inside) ++compliant;
  }
  const std::size_t area = raster.drivable_cells_in(crop);
  d.dao = area == 0 ? 0.0 : static_cast<double>(touched.size()) / static_cast<double>(area);
  d.dac = static_cast<double>(compliant) / static_cast<double>(modes.size());

  double angle_sum = 0.0;
  for (std::size_t a = 0; a < modes.size(); ++a) {
    for (std::size_t b = a + 1; b < modes.size(); ++b) {
      if (modes[a].empty() || modes[b].empty()) continue;
      const double ax = modes[a].back().x - modes[a].front().x, ay = modes[a].back().y - modes[a].front().y;
      const double bx = modes[b].back().x - modes[b].front().x, by = modes[b].back().y - modes[b].front().y;
      const double na = std::hypot(ax, ay), nb = std::hypot(bx, by);
      if (na < 1e-9 || nb < 1e-9) continue;
      angle_sum += std::atan2(std::abs(ax * by - ay * bx), ax * bx + ay * by);
      ++d.aae_pairs;
    }
  }
  d.aae = d.aae_pairs == 0 ? 0.0 : angle_sum / static_cast<double>(d.aae_pairs);
  return d;
}

void MetricAccumulator::add_agent(const AccuracyMetrics& a, const DiversityMetrics& d) {
  sum_.min_ade += a.min_ade;
  sum_.min_fde += a.min_fde;
  sum_.mr += a.mr;
  sum_.brier_min_fde += a.brier_min_fde;
  sum_.rf += a.rf;
  sum_.dao += d.dao;
  sum_.dac += d.dac;
  if (d.aae_pairs > 0) {
    sum_.aae += d.aae;
    ++sum_.aae_agents;
  }
  ++sum_.agents;
}

void MetricAccumulator::add_scenario(const JointMetrics& j) {
  sum_.min_joint_ade += j.min_joint_ade;
  sum_.min_joint_fde += j.min_joint_fde;
  ++sum_.scenarios;
}

MetricReport MetricAccumulator::report() const {
  MetricReport r = sum_;
  if (r.agents > 0) {
    const double n = static_cast<double>(r.agents);
    r.min_ade /= n;
    r.min_fde /= n;
    r.mr /= n;
    r.brier_min_fde /= n;
    r.rf /= n;
    r.dao /= n;
    r.dac /= n;
  }
  if (r.aae_agents > 0) r.aae /= static_cast<double>(r.aae_agents);
  if (r.scenarios > 0) {
    r.min_joint_ade /= static_cast<double>(r.scenarios);
    r.min_joint_fde /= static_cast<double>(r.scenarios);
  }
  return r;
}

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names{"min_ade",       "min_fde",       "mr", "brier_min_fde", "min_joint_ade",
                                              "min_joint_fde", "rf",            "dao", "dac",          "aae"};
  return names;
}

double metric_value(const MetricReport& r, const std::string& name) {
  if (name == "min_ade") return r.min_ade;
  if (name == "min_fde") return r.min_fde;
  if (name == "mr") return r.mr;
  if (name == "brier_min_fde") return r.brier_min_fde;
  if (name == "min_joint_ade") return r.min_joint_ade;
  if (name == "min_joint_fde") return r.min_joint_fde;
  if (name == "rf") return r.rf;
  if (name == "dao") return r.dao;
  if (name == "dac") return r.dac;
  if (name == "aae") return r.aae;
  throw ArgumentError("unknown metric '" + name + "'");
}

}  // namespace ilnet::eval
