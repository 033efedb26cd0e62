#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dmg/se3.hpp"

namespace dmg {

enum class Gripper : std::uint8_t { kOpen = 0, kClosed = 1 };

/// Axis-aligned box, used for regions and reset ranges.
struct Box {
  Eigen::Vector3d min = Eigen::Vector3d::Zero();
  Eigen::Vector3d max = Eigen::Vector3d::Zero();

  bool contains(const Eigen::Vector3d& p) const {
    return p.x() >= min.x() && p.x() <= max.x() && p.y() >= min.y() &&
           p.y() <= max.y() && p.z() >= min.z() && p.z() <= max.z();
  }
  Eigen::Vector3d center() const { return 0.5 * (min + max); }
  bool empty() const {
    return max.x() < min.x() || max.y() < min.y() || max.z() < min.z();
  }
};

enum class PredicateKind : std::uint8_t {
  kGrasped,   ///< Object attached to the gripper.
  kPlacedOn,  ///< Object resting on top of a base object, not attached.
  kInRegion,  ///< Object position inside an axis-aligned box.
  kLifted,    ///< Object z at or above an absolute height.
};

/// A monotone (latched once fired) condition on the scene state.
struct Predicate {
  PredicateKind kind = PredicateKind::kGrasped;
  std::string object;       ///< Primary object name.
  std::string base;         ///< placed_on: supporting object name.
  double xy_tol = 0.02;     ///< placed_on: horizontal tolerance [m].
  double z_tol = 0.01;      ///< placed_on: vertical tolerance [m].
  Box region;               ///< in_region: containment box.
  double height = 0.0;      ///< lifted: absolute world z threshold [m].
};

/// One object-centric stage of a task.
struct Subtask {
  std::string reference_object;  ///< Frame the segment's goals retarget to.
  Predicate completion;          ///< Fires when the subtask is done.
};

/// Reset range for one object: position box plus a yaw interval.
struct ResetRange {
  Box box;
  double yaw_min = 0.0;
  double yaw_max = 0.0;
};

/// Named reset distribution (e.g. "D0", "D1"): per-object reset ranges.
/// Objects without an entry reset to a fixed pose given by `fixed`.
struct ResetDistribution {
  std::map<std::string, ResetRange> ranges;
};

struct ObjectGeometry {
  Eigen::Vector3d half_extents = Eigen::Vector3d::Zero();
  Pose fixed_pose;  ///< Pose used when no reset range covers the object.
};

/// Declarative task description: objects, subtask chain, reset
/// distributions, and the success condition (a conjunction of predicates).
struct TaskSpec {
  std::string name;
  std::map<std::string, ObjectGeometry> objects;
  std::vector<Subtask> subtasks;
  std::map<std::string, ResetDistribution> reset_distributions;
  std::vector<Predicate> success;
  int horizon = 2000;         ///< Max simulator steps per trial.
  Pose home_pose;             ///< End-effector start pose.
  double grasp_radius = 0.01; ///< Attachment proximity threshold [m].

  /// Object names in deterministic (lexicographic) order.
  std::vector<std::string> object_order() const;

  /// Throws SpecError (or UnknownPredicateError) on malformed content.
  void validate() const;

  /// Built-in task specs: "stack", "square-surrogate",
  /// "mugcleanup-surrogate". Throws SpecError for unknown names.
  static TaskSpec builtin(const std::string& name);
  static std::vector<std::string> builtin_names();
};

/// Parses a TaskSpec from JSON text (throws SpecError on malformed input).
TaskSpec task_spec_from_json(const std::string& json_text);

/// Canonical JSON form of a TaskSpec; stable across write/read cycles so
/// hashes of it are reproducible.
std::string task_spec_to_json(const TaskSpec& spec);

/// Full kinematic scene state.
struct SceneState {
  Pose ee_pose;
  Gripper gripper = Gripper::kOpen;
  std::map<std::string, Pose> object_poses;
  std::optional<std::string> attached;  ///< Object rigidly following the ee.
  Pose attach_rel;                      ///< inverse(ee) * object at attach.
  int step = 0;
};

/// First-order lag model of the end-effector controller. Per step the ee
/// covers a fraction (1 - exp(-lambda dt)) of the remaining error, with
/// absolute per-step caps. perfect() reaches any command in one step.
struct ControllerModel {
  double lambda = 20.0;
  double max_step_translation = 0.10;  ///< [m] per step.
  double max_step_rotation = 0.30;     ///< [rad] per step.

  static ControllerModel perfect();
};

/// Samples object poses from the named reset distribution with whole-scene
/// rejection resampling on pairwise AABB overlap (yaw-expanded). Throws
/// CrowdedSceneError after 1000 rejected scenes, SpecError for an unknown
/// variant. The ee starts at spec.home_pose with the gripper open.
SceneState sample_initial_state(const TaskSpec& spec,
                                const std::string& variant,
                                std::mt19937_64& rng);

/// Advances the scene by one control period: ee lag response toward the
/// commanded pose, rigid tracking of any attached object, then the gripper
/// transition (attach nearest object within grasp_radius on open->closed,
/// release on closed->open). Throws HorizonExceededError when called with
/// state.step >= spec.horizon.
SceneState step(const TaskSpec& spec, const SceneState& state,
                const Pose& command_pose, Gripper command_gripper,
                const ControllerModel& controller, double dt);

/// Evaluates a predicate on the instantaneous state (no latching).
bool eval_predicate(const TaskSpec& spec, const Predicate& predicate,
                    const SceneState& state);

/// Latches predicates across steps and records first-fire step indices.
class PredicateTracker {
 public:
  explicit PredicateTracker(std::vector<Predicate> predicates)
      : predicates_(std::move(predicates)),
        first_fire_(predicates_.size(), -1) {}

  /// Evaluates all not-yet-fired predicates on `state`, latching those that
  /// hold and recording `step_index` as their first-fire step.
  void update(const TaskSpec& spec, const SceneState& state, int step_index);

  bool fired(std::size_t i) const { return first_fire_[i] >= 0; }
  bool all_fired() const;
  std::int64_t first_fire(std::size_t i) const { return first_fire_[i]; }
  const std::vector<std::int64_t>& first_fire_steps() const {
    return first_fire_;
  }

 private:
  std::vector<Predicate> predicates_;
  std::vector<std::int64_t> first_fire_;
};

/// A scripted disturbance: one instantaneous object displacement triggered
/// part-way through a scheduled subtask's segment.
struct PerturbationSchedule {
  std::string target_object;
  int trigger_subtask = 0;
  double trigger_fraction = 0.25;  ///< Of the segment's command count.
  Box displacement;                ///< Positional delta range [m].
  double yaw_min = 0.0;            ///< Yaw delta range [rad].
  double yaw_max = 0.0;
  int max_events = 1;
};

/// What actually happened when a perturbation fired.
struct PerturbationEvent {
  int step = 0;  ///< Global trial step index at which it was applied.
  std::string target_object;
  Eigen::Vector3d delta = Eigen::Vector3d::Zero();
  double yaw_delta = 0.0;
  bool suppressed = false;  ///< Target was attached; nothing moved.
};

/// Applies one perturbation event: samples a positional delta and a yaw
/// delta from the schedule's ranges and displaces the target object. If the
/// target is currently attached the displacement is suppressed (but still
/// sampled and logged). `step_index` is recorded in the returned event.
SceneState apply_perturbation(const TaskSpec& spec, const SceneState& state,
                              const PerturbationSchedule& schedule,
                              std::mt19937_64& rng, int step_index,
                              PerturbationEvent* event_out);

}  // namespace dmg
