#include "dmg/segment.hpp"

#include <limits>
#include <string>

#include "dmg/errors.hpp"

namespace dmg {
namespace {

std::vector<SubtaskSegment> segments_from_boundaries(
    const Demonstration& demo, const TaskSpec& spec,
    const std::vector<std::size_t>& fire_steps) {
  const std::size_t len = demo.steps.size();
  const std::size_t m = spec.subtasks.size();
  std::vector<SubtaskSegment> segments(m);
  for (std::size_t i = 0; i < m; ++i) {
    segments[i].subtask_index = static_cast<int>(i);
    segments[i].reference_object = spec.subtasks[i].reference_object;
    segments[i].start = (i == 0) ? 0 : fire_steps[i - 1];
    segments[i].end = (i + 1 < m) ? fire_steps[i] : len;
    segments[i].gripper_track.reserve(segments[i].size());
    for (std::size_t k = segments[i].start; k < segments[i].end; ++k) {
      segments[i].gripper_track.push_back(demo.steps[k].gripper);
    }
  }
  return segments;
}

}  // namespace

std::vector<SceneState> demo_to_states(const Demonstration& demo,
                                       const TaskSpec& spec) {
  demo.validate(spec);
  std::vector<SceneState> states;
  states.reserve(demo.steps.size());
  std::optional<std::string> attached;
  Pose attach_rel;
  Gripper prev_gripper = Gripper::kOpen;
  for (std::size_t k = 0; k < demo.steps.size(); ++k) {
    const DemoStep& s = demo.steps[k];
    if (prev_gripper == Gripper::kOpen && s.gripper == Gripper::kClosed) {
      std::string nearest;
      double best = std::numeric_limits<double>::infinity();
      for (const auto& [name, pose] : s.object_poses) {
        const double d = (pose.position() - s.ee_pose.position()).norm();
        if (d < best) {
          best = d;
          nearest = name;
        }
      }
      if (!nearest.empty() && best <= spec.grasp_radius) {
        attached = nearest;
        attach_rel = relative_target(s.ee_pose, s.object_poses.at(nearest));
      }
    } else if (prev_gripper == Gripper::kClosed &&
               s.gripper == Gripper::kOpen) {
      attached.reset();
      attach_rel = Pose();
    }
    SceneState state;
    state.ee_pose = s.ee_pose;
    state.gripper = s.gripper;
    state.object_poses = s.object_poses;
    state.attached = attached;
    state.attach_rel = attach_rel;
    state.step = static_cast<int>(k);
    states.push_back(std::move(state));
    prev_gripper = s.gripper;
  }
  return states;
}

std::vector<SubtaskSegment> segment_demo(const Demonstration& demo,
                                         const TaskSpec& spec) {
  const std::vector<SceneState> states = demo_to_states(demo, spec);
  const std::size_t m = spec.subtasks.size();
  std::vector<std::size_t> fire_steps(m, 0);
  for (std::size_t i = 0; i < m; ++i) {
    const Predicate& predicate = spec.subtasks[i].completion;
    bool fired = false;
    for (std::size_t k = 0; k < states.size(); ++k) {
      if (eval_predicate(spec, predicate, states[k])) {
        fire_steps[i] = k;
        fired = true;
        break;
      }
    }
    if (!fired) {
      throw PredicateNeverFiresError(
          static_cast<int>(i),
          "subtask " + std::to_string(i) + " (\"" +
              spec.subtasks[i].reference_object +
              "\"): completion predicate never fires in the demonstration");
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (i == 0 && fire_steps[0] == 0) {
      throw OutOfOrderError(
          "subtask 0's completion predicate already holds at step 0");
    }
    if (i > 0 && fire_steps[i] <= fire_steps[i - 1]) {
      throw OutOfOrderError("subtask " + std::to_string(i) +
                            " completes at step " +
                            std::to_string(fire_steps[i]) +
                            ", not after subtask " + std::to_string(i - 1) +
                            " (step " + std::to_string(fire_steps[i - 1]) +
                            ")");
    }
  }
  // The last firing must leave a nonempty final segment.
  if (m >= 1 && fire_steps[m - 1] >= demo.steps.size()) {
    throw OutOfOrderError("final subtask fires past the end of the demo");
  }
  std::vector<std::size_t> boundaries(fire_steps.begin(),
                                      fire_steps.end() - 1);
  return segments_from_boundaries(demo, spec, boundaries);
}

std::vector<SubtaskSegment> annotate_manual(
    const Demonstration& demo, const TaskSpec& spec,
    const std::vector<std::size_t>& boundaries) {
  demo.validate(spec);
  const std::size_t m = spec.subtasks.size();
  if (boundaries.size() != m - 1) {
    throw InvalidBoundaryError(
        "expected " + std::to_string(m - 1) + " boundaries for " +
        std::to_string(m) + " subtasks, got " +
        std::to_string(boundaries.size()));
  }
  std::size_t prev = 0;
  for (std::size_t i = 0; i < boundaries.size(); ++i) {
    if (boundaries[i] <= prev || boundaries[i] >= demo.steps.size()) {
      throw InvalidBoundaryError(
          "boundary " + std::to_string(i) + " (step " +
          std::to_string(boundaries[i]) +
          ") must be strictly increasing and inside the demo");
    }
    prev = boundaries[i];
  }
  return segments_from_boundaries(demo, spec, boundaries);
}

std::size_t gripper_track_index(std::size_t track_len, std::size_t step,
                                std::size_t rollout_len) {
  if (track_len == 0) throw SpecError("empty gripper track");
  if (rollout_len <= 1 || track_len == rollout_len) {
    return std::min(step, track_len - 1);
  }
  const double scaled = static_cast<double>(step) *
                        static_cast<double>(track_len - 1) /
                        static_cast<double>(rollout_len - 1);
  const auto idx = static_cast<std::size_t>(scaled + 0.5);
  return std::min(idx, track_len - 1);
}

}  // namespace dmg
