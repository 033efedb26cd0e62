#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dmg/scene.hpp"
#include "dmg/se3.hpp"

namespace dmg {

/// One recorded sample of a demonstration: the end-effector pose and
/// gripper command together with every object pose at that instant.
struct DemoStep {
  double t = 0.0;
  Pose ee_pose;
  Gripper gripper = Gripper::kOpen;
  std::map<std::string, Pose> object_poses;
};

/// A source manipulation demonstration sampled at a fixed rate.
struct Demonstration {
  std::string task;
  double dt = 0.05;
  std::vector<DemoStep> steps;

  /// Throws SpecError/TooShortError if the recording is unusable for the
  /// given task: too few samples, bad dt, or object sets that do not match
  /// the task spec on every step.
  void validate(const TaskSpec& spec) const;
};

/// Half-open step range [start, end) of one subtask within a demo, plus the
/// gripper track recorded over it.
struct SubtaskSegment {
  int subtask_index = 0;
  std::string reference_object;
  std::size_t start = 0;
  std::size_t end = 0;
  std::vector<Gripper> gripper_track;

  std::size_t size() const { return end - start; }
};

/// A demonstration with its subtask segmentation attached.
struct AnnotatedDemo {
  Demonstration demo;
  std::vector<SubtaskSegment> segments;
};

}  // namespace dmg
