#pragma once

#include <cmath>
#include <vector>

#include "gripforge/errors.hpp"
#include "gripforge/geometry.hpp"
#include "gripforge/trajectory.hpp"

namespace gripforge {

struct MetricThresholds {
  double rot_deg = 30.0;
  double trans_cm = 3.0;
};

/// Sequence-level errors in reporting units (degrees / cm). Success is
/// binary: every frame must stay inside the thresholds.
struct MetricReport {
  double e_r_deg = 0.0;
  double e_t_cm = 0.0;
  double e_j_cm = 0.0;
  double e_ft_cm = 0.0;
  double worst_r_deg = 0.0;
  double worst_t_cm = 0.0;
  double worst_j_cm = 0.0;
  double worst_ft_cm = 0.0;
  bool success = true;
  std::vector<int> failing_frames;
};

inline constexpr double kRadToDeg = 180.0 / M_PI;

/// Frame-wise instantaneous errors against the thresholds; means over the
/// sequence for the headline numbers. Internal meters/radians convert to
/// cm/degrees only here.
inline MetricReport evaluate(const Trajectory& sim, const Trajectory& ref,
                             const std::vector<int>& fingertip_indices,
                             const MetricThresholds& thresholds = {}) {
  sim.validate();
  ref.validate();
  if (sim.length() != ref.length()) {
    throw LengthMismatch("metrics: trajectory lengths differ");
  }
  if (sim.length() == 0) throw LengthMismatch("metrics: empty trajectories");

  MetricReport rep;
  double sum_r = 0.0, sum_t = 0.0, sum_j = 0.0, sum_ft = 0.0;
  for (int f = 0; f < sim.length(); ++f) {
    const auto& js = sim.joint_positions[f];
    const auto& jr = ref.joint_positions[f];
    if (js.size() != jr.size()) {
      throw JointSetMismatch("metrics: joint sets differ");
    }
    double r = geodesic_distance(sim.object_poses[f].rotation,
                                 ref.object_poses[f].rotation);
    double t = (sim.object_poses[f].translation -
                ref.object_poses[f].translation).norm();
    double j_sum = 0.0;
    for (std::size_t i = 0; i < js.size(); ++i) j_sum += (js[i] - jr[i]).norm();
    double j_mean = js.empty() ? 0.0 : j_sum / static_cast<double>(js.size());
    double ft_sum = 0.0;
    for (int idx : fingertip_indices) {
      if (idx < 0 || idx >= static_cast<int>(js.size())) {
        throw JointSetMismatch("metrics: fingertip index out of range");
      }
      ft_sum += (js[idx] - jr[idx]).norm();
    }
    double ft_mean = fingertip_indices.empty()
                         ? 0.0
                         : ft_sum / static_cast<double>(fingertip_indices.size());

    sum_r += r;
    sum_t += t;
    sum_j += j_mean;
    sum_ft += ft_mean;
    rep.worst_r_deg = std::max(rep.worst_r_deg, r * kRadToDeg);
    rep.worst_t_cm = std::max(rep.worst_t_cm, t * 100.0);
    rep.worst_j_cm = std::max(rep.worst_j_cm, j_mean * 100.0);
    rep.worst_ft_cm = std::max(rep.worst_ft_cm, ft_mean * 100.0);
    if (r * kRadToDeg > thresholds.rot_deg || t * 100.0 > thresholds.trans_cm) {
      rep.failing_frames.push_back(f);
    }
  }
  double n = static_cast<double>(sim.length());
  rep.e_r_deg = sum_r / n * kRadToDeg;
  rep.e_t_cm = sum_t / n * 100.0;
  rep.e_j_cm = sum_j / n * 100.0;
  rep.e_ft_cm = sum_ft / n * 100.0;
  rep.success = rep.failing_frames.empty();
  return rep;
}

struct MetricSummary {
  double e_r_deg = 0.0;
  double e_t_cm = 0.0;
  double e_j_cm = 0.0;
  double e_ft_cm = 0.0;
  double success_rate_pct = 0.0;
  int count = 0;
};

inline MetricSummary aggregate(const std::vector<MetricReport>& reports) {
  if (reports.empty()) throw EmptyList("aggregate: no reports");
  MetricSummary s;
  s.count = static_cast<int>(reports.size());
  int successes = 0;
  for (const auto& r : reports) {
    s.e_r_deg += r.e_r_deg;
    s.e_t_cm += r.e_t_cm;
    s.e_j_cm += r.e_j_cm;
    s.e_ft_cm += r.e_ft_cm;
    if (r.success) ++successes;
  }
  double n = static_cast<double>(s.count);
  s.e_r_deg /= n;
  s.e_t_cm /= n;
  s.e_j_cm /= n;
  s.e_ft_cm /= n;
  s.success_rate_pct = 100.0 * successes / n;
  return s;
}

}  // namespace gripforge
