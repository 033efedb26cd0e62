#include "dmg/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <future>
#include <limits>
#include <thread>

#include "dmg/errors.hpp"

namespace dmg {
namespace {

const char* missed_reason(PredicateKind kind) {
  switch (kind) {
    case PredicateKind::kGrasped: return "grasp-missed";
    case PredicateKind::kPlacedOn: return "place-missed";
    case PredicateKind::kInRegion: return "region-missed";
    case PredicateKind::kLifted: return "lift-missed";
  }
  return "subtask-missed";
}

/// Command index within a segment at which a scheduled perturbation fires.
int trigger_index(double fraction, int n_commands) {
  const double f = std::clamp(fraction, 0.0, 1.0);
  const int k = static_cast<int>(std::llround(f * (n_commands - 1)));
  return std::clamp(k, 0, n_commands - 1);
}

unsigned resolve_threads(unsigned requested) {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (requested > 0) return requested;
  if (const char* env = std::getenv("DMG_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) {
      return static_cast<unsigned>(std::min<unsigned long>(v, hw));
    }
  }
  return hw;
}

}  // namespace

FitCache FitCache::build(const SourceDataset& src, const DmpConfig& config) {
  config.validate();
  src.spec.validate();
  if (src.demos.empty()) {
    throw SpecError("source dataset has no demonstrations");
  }
  FitCache cache;
  for (const AnnotatedDemo& annotated : src.demos) {
    annotated.demo.validate(src.spec);
    if (annotated.segments.size() != src.spec.subtasks.size()) {
      throw SpecError("annotated demo segment count does not match the "
                      "task's subtask count");
    }
    std::vector<SegmentFit> fits;
    for (const SubtaskSegment& seg : annotated.segments) {
      SegmentFit fit;
      fit.subtask_index = seg.subtask_index;
      fit.reference_object = seg.reference_object;
      fit.gripper_track = seg.gripper_track;
      std::vector<Pose> poses;
      poses.reserve(seg.size());
      for (std::size_t k = seg.start; k < seg.end; ++k) {
        poses.push_back(annotated.demo.steps[k].ee_pose);
      }
      fit.params = fit_segment(poses, config);
      // Anchor the goal to the reference object's pose at the segment's
      // first step. For subtasks that move their own reference object (a
      // handle pull, say) the object's end pose already reflects the motion
      // the DMP is supposed to produce; anchoring there would fold the
      // demonstrated displacement into the goal twice.
      const DemoStep& first = annotated.demo.steps[seg.start];
      const DemoStep& last = annotated.demo.steps[seg.end - 1];
      fit.relative_goal = relative_target(
          first.object_poses.at(seg.reference_object), last.ee_pose);
      fits.push_back(std::move(fit));
    }
    cache.demos.push_back(std::move(fits));
  }
  return cache;
}

int select_demo(const SourceDataset& src, const SceneState& initial,
                SelectStrategy strategy) {
  if (src.demos.empty()) {
    throw SpecError("cannot select a demo from an empty source dataset");
  }
  if (strategy == SelectStrategy::kFirst || src.demos.size() == 1) return 0;
  const std::string& ref = src.spec.subtasks.front().reference_object;
  const double yaw_new = yaw_of(initial.object_poses.at(ref).orientation());
  int best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < src.demos.size(); ++i) {
    const Pose& demo_pose =
        src.demos[i].demo.steps.front().object_poses.at(ref);
    const double d =
        std::abs(wrap_angle(yaw_new - yaw_of(demo_pose.orientation())));
    if (d < best_dist) {  // Strict: exact ties keep the lower index.
      best_dist = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

GenerationRecord generate_trial(
    const SourceDataset& src, const FitCache& fits, const std::string& variant,
    std::uint64_t seed,
    const std::optional<PerturbationSchedule>& perturbation,
    const ControllerModel& controller) {
  const TaskSpec& spec = src.spec;
  GenerationRecord rec;
  rec.seed = seed;
  rec.variant = variant;

  std::mt19937_64 rng(seed);
  SceneState state = sample_initial_state(spec, variant, rng);
  rec.selected_demo = select_demo(
      src, state,
      src.demos.size() > 1 ? SelectStrategy::kOrientation
                           : SelectStrategy::kFirst);
  const std::vector<SegmentFit>& plan = fits.demos.at(rec.selected_demo);

  std::vector<Predicate> completion_predicates;
  for (const Subtask& st : spec.subtasks) {
    completion_predicates.push_back(st.completion);
  }
  PredicateTracker tracker(completion_predicates);
  tracker.update(spec, state, 0);

  int events_fired = 0;
  std::string fail;
  for (const SegmentFit& fit : plan) {
    const DmpParams& params = fit.params;
    if (chart_rotation_angle(params, state.ee_pose) > kChartRadius) {
      fail = "orientation-chart";
      break;
    }
    // Retarget against the live reference-object pose -- except while that
    // object hangs from the gripper. A carried reference only moves because
    // the hand moves it, and chasing that motion would feed the goal back
    // into itself (the same reasoning suppresses perturbations of carried
    // objects). The goal holds at its last externally observed value.
    std::optional<Pose> held_goal;
    auto current_goal = [&]() -> Pose {
      const bool carried =
          state.attached && *state.attached == fit.reference_object;
      if (!carried || !held_goal) {
        held_goal = retarget(fit.relative_goal,
                             state.object_poses.at(fit.reference_object));
      }
      return *held_goal;
    };
    // The segment's first recorded state carries the gripper value that was
    // commanded at the subtask boundary (a grasp closes exactly at the step
    // its predicate first fires). Replaying the track by index therefore
    // starts with that state: actuate the gripper while holding the pose,
    // just as the demonstration did, before any motion command.
    if (!fit.gripper_track.empty() &&
        fit.gripper_track.front() != state.gripper) {
      if (state.step >= spec.horizon) {
        fail = "horizon";
        break;
      }
      const Pose held = state.ee_pose;
      state = step(spec, state, held, fit.gripper_track.front(), controller,
                   params.config.dt);
      tracker.update(spec, state, state.step);
      StepLog log;
      log.state = state;
      log.command_pose = held;
      log.command_gripper = fit.gripper_track.front();
      log.goal_pose = current_goal();
      log.phase = 1.0;
      log.segment_index = fit.subtask_index;
      rec.log.push_back(std::move(log));
    }
    RolloutState rs;
    rs.y = pose_to_chart(params, state.ee_pose);
    const int n_commands = params.n_steps - 1;
    const bool scheduled =
        perturbation.has_value() &&
        perturbation->trigger_subtask == fit.subtask_index;
    const int trigger =
        scheduled ? trigger_index(perturbation->trigger_fraction, n_commands)
                  : -1;
    for (int k = 0; k < n_commands; ++k) {
      if (k == trigger && events_fired < perturbation->max_events) {
        PerturbationEvent event;
        state = apply_perturbation(spec, state, *perturbation, rng,
                                   state.step, &event);
        rec.perturbations.push_back(event);
        ++events_fired;
      }
      const Pose goal_pose = current_goal();
      if (chart_rotation_angle(params, goal_pose) > kChartRadius) {
        fail = "orientation-chart";
        break;
      }
      rs = rollout_step(params, rs, pose_to_chart(params, goal_pose));
      const Pose command = chart_to_pose(params, rs.y);
      const Gripper grip = fit.gripper_track[gripper_track_index(
          fit.gripper_track.size(), static_cast<std::size_t>(k) + 1,
          static_cast<std::size_t>(params.n_steps))];
      if (state.step >= spec.horizon) {
        fail = "horizon";
        break;
      }
      state = step(spec, state, command, grip, controller, params.config.dt);
      tracker.update(spec, state, state.step);
      StepLog log;
      log.state = state;
      log.command_pose = command;
      log.command_gripper = grip;
      log.goal_pose = goal_pose;
      log.phase = rs.x;
      log.segment_index = fit.subtask_index;
      rec.log.push_back(std::move(log));
    }
    if (!fail.empty()) break;
  }

  rec.subtask_completion_steps = tracker.first_fire_steps();
  if (fail.empty()) {
    bool ok = true;
    for (const Predicate& p : spec.success) {
      if (!eval_predicate(spec, p, state)) {
        ok = false;
        break;
      }
    }
    if (!ok) {
      fail = "success-predicate-false";
      for (std::size_t i = 0; i < spec.subtasks.size(); ++i) {
        if (!tracker.fired(i)) {
          fail = missed_reason(spec.subtasks[i].completion.kind);
          break;
        }
      }
    }
  }
  rec.outcome = fail.empty() ? Outcome::kSuccess : Outcome::kFailure;
  rec.failure_reason = fail;
  return rec;
}

GeneratedDataset generate_dataset(const SourceDataset& src,
                                  const GenerateOptions& options) {
  if (options.n_success_target < 1) {
    throw SpecError("generation target must be at least 1 trial");
  }
  const FitCache fits = FitCache::build(src, options.dmp_config);
  const std::uint64_t target =
      static_cast<std::uint64_t>(options.n_success_target);
  const std::uint64_t max_attempts =
      options.max_attempts > 0 ? options.max_attempts : 100 * target;
  const unsigned threads = resolve_threads(options.threads);

  GeneratedDataset out;
  out.spec = src.spec;
  out.variant = options.variant;
  out.seed0 = options.seed0;
  out.fits = fits.demos;

  auto run_one = [&](std::uint64_t seed) {
    return generate_trial(src, fits, options.variant, seed,
                          options.perturbation, options.controller);
  };
  auto absorb = [&](GenerationRecord&& rec) {
    if (out.records.size() >= target) return;  // Past the stop point.
    ++out.attempts;
    AttemptSummary summary;
    summary.seed = rec.seed;
    summary.success = rec.success();
    summary.failure_reason = rec.failure_reason;
    summary.subtask_completion_steps = rec.subtask_completion_steps;
    out.attempt_summaries.push_back(std::move(summary));
    if (rec.success()) out.records.push_back(std::move(rec));
  };

  std::uint64_t next_seed = options.seed0;
  while (out.records.size() < target && out.attempts < max_attempts) {
    const std::uint64_t remaining = max_attempts - out.attempts;
    const std::uint64_t wave =
        std::min<std::uint64_t>(std::max<unsigned>(threads, 1), remaining);
    if (threads <= 1 || wave == 1) {
      absorb(run_one(next_seed));
      ++next_seed;
      continue;
    }
    std::vector<std::future<GenerationRecord>> futures;
    futures.reserve(wave);
    for (std::uint64_t j = 0; j < wave; ++j) {
      futures.push_back(std::async(std::launch::async, run_one,
                                   next_seed + j));
    }
    // Results are merged strictly in seed order, so the stop point (and
    // hence the output) is independent of the worker count.
    for (auto& f : futures) absorb(f.get());
    next_seed += wave;
  }
  out.target_reached = out.records.size() >= target;
  return out;
}

}  // namespace dmg
