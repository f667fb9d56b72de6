#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <thread>
#include <vector>

#include "gripforge/cmaes.hpp"
#include "gripforge/objective.hpp"
#include "gripforge/scenario.hpp"
#include "gripforge/spline.hpp"

namespace gripforge {

/// One optimization window: four consecutive keyframes, only k3 free.
struct Window {
  int k1 = 0, k2 = 0, k3 = 0, k4 = 0;  // keyframe indices into the track
  int first_frame = 0;                 // frame of k1 (snapshot frame)
  int last_frame = 0;                  // frame of k4
};

struct WindowPlan {
  std::vector<Window> windows;
};

/// Windows (0,1,2,3), (1,2,3,4), ... ending when k4 is the final keyframe.
inline WindowPlan plan_windows(const KeyframeTrack& track) {
  track.validate();
  const int k = track.size();
  if (k < 4) throw TooFewKeyframes("plan_windows: need at least 4 keyframes");
  WindowPlan plan;
  for (int i = 0; i + 3 < k; ++i) {
    Window w;
    w.k1 = i;
    w.k2 = i + 1;
    w.k3 = i + 2;
    w.k4 = i + 3;
    w.first_frame = track.frames[i];
    w.last_frame = track.frames[i + 3];
    plan.windows.push_back(w);
  }
  return plan;
}

struct RefinementConfig {
  int keyframe_interval = 5;
  int generations = 40;  // CMA budget per window
  double sigma_coeffs = 0.15;
  double sigma_wrist_rot = 0.1;    // rad
  double sigma_wrist_trans = 0.01; // m
  int skip_initial_frames = 10;
  std::uint64_t seed = 0;
  int jobs = 1;
  int stagnation_generations = 0;  // 0 = run the full budget
  double contact_threshold = 0.008;
  double coeff_bound = kCoeffBoundDefault;
  LossWeights weights;
};

struct WindowReport {
  int index = 0;
  int k3 = 0;
  double incumbent_fitness = 0.0;
  double best_fitness = 0.0;
  long evaluations = 0;
  long divergences = 0;
  double wall_ms = 0.0;
  bool changed = false;
  bool no_op = false;  // zero budget or an all-divergent population
};

struct RefineResult {
  Trajectory trajectory;  // full rollout of the refined controls
  std::vector<std::vector<ContactRecord>> contacts;
  std::vector<WindowReport> reports;
  KeyframeTrack track;
  std::vector<HandControl> dense_controls;
};

namespace detail {

/// Decision vector <-> control: offsets from the incumbent, scaled per
/// channel group (coefficients, wrist rotation vector, wrist translation).
inline HandControl control_from_offsets(const HandControl& incumbent,
                                        const Eigen::VectorXd& x,
                                        const RefinementConfig& cfg) {
  const int nc = static_cast<int>(incumbent.coeffs.size());
  HandControl c = incumbent;
  c.coeffs += cfg.sigma_coeffs * x.head(nc);
  Vec3 rv = cfg.sigma_wrist_rot * x.segment<3>(nc);
  c.wrist.rotation = rotation_vector_exp(rv) * incumbent.wrist.rotation;
  c.wrist.translation += cfg.sigma_wrist_trans * x.tail<3>();
  return c;
}

inline BoxBounds offset_bounds(const HandControl& incumbent,
                               const RefinementConfig& cfg) {
  const int nc = static_cast<int>(incumbent.coeffs.size());
  BoxBounds b;
  b.lower = Eigen::VectorXd::Constant(nc + 6, -1e9);
  b.upper = Eigen::VectorXd::Constant(nc + 6, 1e9);
  for (int i = 0; i < nc; ++i) {
    b.lower[i] = (-cfg.coeff_bound - incumbent.coeffs[i]) / cfg.sigma_coeffs;
    b.upper[i] = (cfg.coeff_bound - incumbent.coeffs[i]) / cfg.sigma_coeffs;
  }
  return b;
}

}  // namespace detail

/// Optimizes one window's k3 in place. The incumbent is always injected into
/// generation 0, so the reported best fitness can never exceed the
/// incumbent's. An all-divergent run leaves the track unchanged.
inline WindowReport refine_window(
    const Window& window, KeyframeTrack& track, const ReferenceWindow& ref,
    const SimState& snapshot, const RefinementConfig& cfg, Rng& rng,
    std::vector<std::unique_ptr<WindowFitnessEvaluator>>& evaluators) {
  auto t0 = std::chrono::steady_clock::now();
  WindowReport report;
  report.k3 = window.k3;

  const HandControl incumbent = track.controls[window.k3];
  const int dim = static_cast<int>(incumbent.coeffs.size()) + 6;

  if (cfg.generations <= 0) {
    report.no_op = true;
    report.incumbent_fitness = std::numeric_limits<double>::quiet_NaN();
    report.best_fitness = std::numeric_limits<double>::quiet_NaN();
    return report;
  }

  auto make_candidate_track = [&](const HandControl& k3_control) {
    KeyframeTrack local;
    local.keyframe_interval = track.keyframe_interval;
    local.frames = {track.frames[window.k1], track.frames[window.k2],
                    track.frames[window.k3], track.frames[window.k4]};
    local.controls = {track.controls[window.k1], track.controls[window.k2],
                      k3_control, track.controls[window.k4]};
    return local;
  };

  CmaEs opt(Eigen::VectorXd::Zero(dim), 1.0, default_params(dim),
            detail::offset_bounds(incumbent, cfg));
  const int lambda = opt.params().lambda;
  const int jobs = std::max(1, std::min<int>(cfg.jobs, lambda));

  double best_fitness = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_x;
  double incumbent_fitness = std::numeric_limits<double>::infinity();
  int since_improvement = 0;

  for (int gen = 0; gen < cfg.generations; ++gen) {
    std::vector<Eigen::VectorXd> candidates = opt.ask(rng);
    if (gen == 0) candidates[0] = Eigen::VectorXd::Zero(dim);

    std::vector<double> fitness(candidates.size(), 0.0);
    auto eval_range = [&](int worker) {
      for (std::size_t i = worker; i < candidates.size(); i += jobs) {
        HandControl c = detail::control_from_offsets(incumbent, candidates[i], cfg);
        fitness[i] = (*evaluators[worker])(make_candidate_track(c), ref, snapshot);
      }
    };
    if (jobs == 1) {
      eval_range(0);
    } else {
      std::vector<std::thread> pool;
      for (int w = 0; w < jobs; ++w) pool.emplace_back(eval_range, w);
      for (auto& th : pool) th.join();
    }

    if (gen == 0) incumbent_fitness = fitness[0];
    report.evaluations += static_cast<long>(candidates.size());

    bool improved = false;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (fitness[i] < best_fitness) {
        best_fitness = fitness[i];
        best_x = candidates[i];
        improved = true;
      }
    }
    since_improvement = improved ? 0 : since_improvement + 1;

    opt.tell(candidates, fitness);
    if (cfg.stagnation_generations > 0 &&
        since_improvement >= cfg.stagnation_generations) {
      break;
    }
  }

  for (const auto& ev : evaluators) report.divergences += ev->divergences();
  report.incumbent_fitness = incumbent_fitness;
  report.best_fitness = best_fitness;
  if (std::isfinite(best_fitness)) {
    if (best_x.size() == dim && best_x.squaredNorm() > 0.0) {
      track.controls[window.k3] =
          detail::control_from_offsets(incumbent, best_x, cfg);
      report.changed = true;
    }
  } else {
    report.no_op = true;  // every candidate diverged
  }
  report.wall_ms = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - t0)
                       .count();
  return report;
}

using WindowProgressFn = std::function<void(const WindowReport&)>;

/// The full sliding-window schedule. Drops the leading frames, seeds the
/// keyframe track from the reference controls, then walks the windows in
/// order. Each finished window freezes its leading keyframe span (evaluating
/// the window-local spline) and advances the snapshot through it, so the
/// whole pass costs O(T). The returned trajectory is the one-pass rollout of
/// the frozen dense controls, which matches the advancing rollouts
/// bit-exactly.
inline RefineResult refine_sequence(const Scenario& scenario,
                                    const RefinementConfig& cfg,
                                    const WindowProgressFn& progress = {}) {
  scenario.validate();
  Trajectory working = scenario.trajectory.slice_from(
      std::min(cfg.skip_initial_frames, scenario.trajectory.length()));
  const int T = working.length();
  if (T < 2) throw TooFewKeyframes("refine_sequence: trajectory too short");
  const double frame_dt = 1.0 / working.frame_rate;

  const auto& gripper = scenario.scene.gripper;
  for (const auto& joints : working.joint_positions) {
    if (static_cast<int>(joints.size()) !=
        static_cast<int>(gripper.fk(Pose{}, VecX::Zero(gripper.n_joints()))
                             .joint_positions.size())) {
      throw SceneMismatch("refine_sequence: trajectory joints do not match scene");
    }
  }

  KeyframeTrack track =
      resample_from_dense(working.controls, cfg.keyframe_interval);
  WindowPlan plan = plan_windows(track);  // throws TooFewKeyframes when short

  ReferenceSequence ref;
  ref.object_poses = working.object_poses;
  ref.object_twists = finite_difference_twist(working.object_poses, frame_dt);
  ref.hand_joints = working.joint_positions;
  ref.contact_targets = extract_contact_targets(
      working, scenario.scene.object, gripper.fingertip_joint_indices(),
      cfg.contact_threshold);

  std::vector<std::unique_ptr<WindowFitnessEvaluator>> evaluators;
  int jobs = std::max(1, cfg.jobs);
  for (int i = 0; i < jobs; ++i) {
    evaluators.push_back(std::make_unique<WindowFitnessEvaluator>(
        scenario.scene, scenario.basis, cfg.weights, frame_dt));
  }

  Simulator sim(scenario.scene, scenario.basis);
  SimState snapshot = sim.make_initial_state(working.controls.front(),
                                             working.object_poses.front());
  std::vector<HandControl> dense(working.controls.begin(),
                                 working.controls.end());

  Rng rng(mix_seed(cfg.seed, 0x5eed0));
  RefineResult result;

  for (std::size_t wi = 0; wi < plan.windows.size(); ++wi) {
    const Window& w = plan.windows[wi];
    ReferenceWindow slice = slice_reference(ref, w.first_frame, w.last_frame);
    WindowReport rep =
        refine_window(w, track, slice, snapshot, cfg, rng, evaluators);
    rep.index = static_cast<int>(wi);

    // Freeze this window's leading span under the final spline, then walk
    // the snapshot forward to the next window's first frame.
    KeyframeTrack local;
    local.keyframe_interval = track.keyframe_interval;
    local.frames = {track.frames[w.k1], track.frames[w.k2],
                    track.frames[w.k3], track.frames[w.k4]};
    local.controls = {track.controls[w.k1], track.controls[w.k2],
                      track.controls[w.k3], track.controls[w.k4]};
    TrackSpline spline(local);

    bool last_window = wi + 1 == plan.windows.size();
    int freeze_end = last_window ? w.last_frame : track.frames[w.k2] - 1;
    for (int f = w.first_frame; f <= freeze_end; ++f) {
      dense[f] = spline.at(static_cast<double>(f));
    }
    if (!last_window) {
      std::vector<HandControl> seg(dense.begin() + w.first_frame,
                                   dense.begin() + track.frames[w.k2]);
      RolloutResult roll = sim.rollout(snapshot, seg, frame_dt);
      snapshot = roll.states.back();
    }

    if (progress) progress(rep);
    result.reports.push_back(std::move(rep));
  }

  // One-pass rollout of the frozen controls from the initial state.
  SimState s0 = sim.make_initial_state(working.controls.front(),
                                       working.object_poses.front());
  std::vector<HandControl> applied(dense.begin(), dense.end() - 1);
  RolloutResult roll = sim.rollout(s0, applied, frame_dt);

  result.trajectory.frame_rate = working.frame_rate;
  result.trajectory.object_poses.push_back(s0.object);
  result.trajectory.controls.push_back(dense.front());
  result.trajectory.joint_positions.push_back(sim.hand_joint_positions(s0));
  result.contacts.resize(1);
  for (std::size_t f = 0; f < roll.states.size(); ++f) {
    result.trajectory.object_poses.push_back(roll.states[f].object);
    result.trajectory.controls.push_back(dense[f + 1]);
    result.trajectory.joint_positions.push_back(
        sim.hand_joint_positions(roll.states[f]));
    result.contacts.push_back(roll.contacts[f]);
  }
  for (std::size_t f = 0; f < result.contacts.size(); ++f) {
    for (auto& r : result.contacts[f]) r.frame = static_cast<int>(f);
  }
  result.track = std::move(track);
  result.dense_controls = std::move(dense);
  return result;
}

}  // namespace gripforge
