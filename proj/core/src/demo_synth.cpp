#include "dmg/demo_synth.hpp"

#include <cmath>

#include "dmg/errors.hpp"
#include "dmg/segment.hpp"

namespace dmg {
namespace {

constexpr double kApproachHeight = 0.10;  ///< Hover above a grasp [m].
constexpr double kLiftHeight = 0.12;      ///< Raise after grasping [m].
constexpr double kPlaceHover = 0.08;      ///< Hover above a placement [m].
constexpr double kRetreatHeight = 0.10;   ///< Raise after releasing [m].

double min_jerk(double u) {
  return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

/// Runs one scripted demonstration on the kinematic scene with a perfect
/// controller, recording every state.
class ScriptRunner {
 public:
  ScriptRunner(const TaskSpec& spec, const SceneState& initial, double dt)
      : spec_(spec), state_(initial), dt_(dt) {
    demo_.task = spec.name;
    demo_.dt = dt;
    record();
  }

  Demonstration take_demo() && { return std::move(demo_); }

  void run_subtask(const Subtask& subtask, bool is_final) {
    const Predicate& goal = subtask.completion;
    switch (goal.kind) {
      case PredicateKind::kGrasped:
        grasp(goal.object);
        break;
      case PredicateKind::kPlacedOn: {
        const Pose& base = state_.object_poses.at(goal.base);
        const double rest_z =
            base.position().z() +
            spec_.objects.at(goal.base).half_extents.z() +
            spec_.objects.at(goal.object).half_extents.z();
        Pose target(Eigen::Vector3d(base.position().x(), base.position().y(),
                                    rest_z),
                    yaw_quat(yaw_of(base.orientation())));
        transport(goal.object, target, /*align=*/true);
        break;
      }
      case PredicateKind::kInRegion: {
        const bool carried =
            state_.attached.has_value() && *state_.attached == goal.object;
        const Eigen::Vector3d obj_z(
            0.0, 0.0, spec_.objects.at(goal.object).half_extents.z());
        Eigen::Vector3d c = goal.region.center();
        c.z() = std::max(goal.region.min.z() + obj_z.z(),
                         std::min(c.z(), goal.region.max.z()));
        if (carried) {
          Pose target(c, state_.object_poses.at(goal.object).orientation());
          transport(goal.object, target, /*align=*/false);
        } else {
          // Slide the object (e.g. a drawer handle) toward the region center
          // at its own height. Mid-task slides let go the moment the
          // completion signal fires — the farther the hand keeps hold past
          // the boundary, the farther the next gesture drags the object.
          // The final slide parks the object at the center instead.
          Eigen::Vector3d slide = c;
          slide.z() = state_.object_poses.at(goal.object).position().z();
          drag(goal.object, slide, is_final ? nullptr : &goal);
        }
        break;
      }
      case PredicateKind::kLifted: {
        if (!state_.attached || *state_.attached != goal.object) {
          grasp(goal.object);
        }
        Pose up = state_.ee_pose;
        up.set_position(Eigen::Vector3d(up.position().x(), up.position().y(),
                                        goal.height + 0.05));
        move_to(up, 14, Gripper::kClosed);
        hold(3, Gripper::kClosed);
        break;
      }
    }
  }

 private:
  void record() {
    DemoStep s;
    s.t = state_.step * dt_;
    s.ee_pose = state_.ee_pose;
    s.gripper = state_.gripper;
    s.object_poses = state_.object_poses;
    demo_.steps.push_back(std::move(s));
  }

  void command(const Pose& pose, Gripper grip) {
    state_ = step(spec_, state_, pose, grip, ControllerModel::perfect(), dt_);
    record();
  }

  /// Min-jerk interpolation to the target. A watch predicate cuts the move
  /// short on the step where it first fires.
  void move_to(const Pose& target, int n_steps, Gripper grip,
               const Predicate* watch = nullptr) {
    const Pose start = state_.ee_pose;
    for (int k = 1; k <= n_steps; ++k) {
      const double s = min_jerk(static_cast<double>(k) / n_steps);
      const Eigen::Vector3d p =
          (1.0 - s) * start.position() + s * target.position();
      const Eigen::Quaterniond q =
          start.orientation().slerp(s, target.orientation());
      command(Pose(p, q), grip);
      if (watch != nullptr && eval_predicate(spec_, *watch, state_)) return;
    }
  }

  void hold(int n_steps, Gripper grip) {
    for (int k = 0; k < n_steps; ++k) command(state_.ee_pose, grip);
  }

  /// Approach above the object aligned to its yaw, descend, dwell, close.
  void grasp(const std::string& object) {
    const Pose obj = state_.object_poses.at(object);
    const Eigen::Quaterniond q = yaw_quat(yaw_of(obj.orientation()));
    move_to(Pose(obj.position() + Eigen::Vector3d(0, 0, kApproachHeight), q),
            22, Gripper::kOpen);
    move_to(Pose(obj.position(), q), 14, Gripper::kOpen);
    hold(2, Gripper::kOpen);
    hold(3, Gripper::kClosed);
  }

  /// Carry the attached object to a target pose: lift, traverse (optionally
  /// rotating the object onto the target yaw), descend, dwell, release,
  /// retreat.
  void transport(const std::string& object, const Pose& object_target,
                 bool align) {
    if (!state_.attached || *state_.attached != object) {
      throw SpecError("script: transport of \"" + object +
                      "\" requires it to be attached");
    }
    const Pose rel_inv = inverse(state_.attach_rel);
    const Pose object_now = state_.object_poses.at(object);
    const Pose carried_target(
        object_target.position(),
        align ? object_target.orientation() : object_now.orientation());
    const Pose ee_target = compose(carried_target, rel_inv);

    Pose lifted = state_.ee_pose;
    lifted.set_position(state_.ee_pose.position() +
                        Eigen::Vector3d(0, 0, kLiftHeight));
    move_to(lifted, 12, Gripper::kClosed);
    Pose hover = ee_target;
    hover.set_position(ee_target.position() +
                       Eigen::Vector3d(0, 0, kPlaceHover));
    move_to(hover, 22, Gripper::kClosed);
    move_to(ee_target, 14, Gripper::kClosed);
    hold(2, Gripper::kClosed);
    hold(3, Gripper::kOpen);
    Pose retreat = state_.ee_pose;
    retreat.set_position(state_.ee_pose.position() +
                         Eigen::Vector3d(0, 0, kRetreatHeight));
    move_to(retreat, 10, Gripper::kOpen);
  }

  /// Grasp the object in place and slide it to a target position at its
  /// current orientation, then release and retreat. A watch predicate ends
  /// the slide the moment it fires and opens the hand on the very next step.
  void drag(const std::string& object, const Eigen::Vector3d& target_pos,
            const Predicate* watch = nullptr) {
    if (!state_.attached || *state_.attached != object) grasp(object);
    const Pose rel_inv = inverse(state_.attach_rel);
    const Pose object_now = state_.object_poses.at(object);
    const Pose ee_target =
        compose(Pose(target_pos, object_now.orientation()), rel_inv);
    move_to(ee_target, 20, Gripper::kClosed, watch);
    if (watch == nullptr) hold(2, Gripper::kClosed);
    hold(watch == nullptr ? 3 : 1, Gripper::kOpen);
    Pose retreat = state_.ee_pose;
    retreat.set_position(state_.ee_pose.position() +
                         Eigen::Vector3d(0, 0, kRetreatHeight));
    move_to(retreat, 10, Gripper::kOpen);
  }

  const TaskSpec& spec_;
  SceneState state_;
  double dt_;
  Demonstration demo_;
};

Demonstration run_script(const TaskSpec& spec, const SceneState& initial,
                         double dt) {
  ScriptRunner runner(spec, initial, dt);
  for (std::size_t i = 0; i < spec.subtasks.size(); ++i) {
    runner.run_subtask(spec.subtasks[i], i + 1 == spec.subtasks.size());
  }
  return std::move(runner).take_demo();
}

}  // namespace

SourceDataset synthesize_source(const TaskSpec& spec,
                                const std::string& variant,
                                std::uint64_t seed, int n_demos) {
  spec.validate();
  if (n_demos < 1 || n_demos > 2) {
    throw SpecError("demo synthesis supports 1 or 2 demos, got " +
                    std::to_string(n_demos));
  }
  const double dt = 0.05;
  std::mt19937_64 rng(seed);
  const SceneState initial = sample_initial_state(spec, variant, rng);

  SourceDataset src;
  src.spec = spec;
  src.variant = variant;
  src.seed = seed;
  for (int d = 0; d < n_demos; ++d) {
    SceneState scene = initial;
    if (d == 1) {
      // Same scene, first subtask's reference object yawed a quarter turn.
      const std::string& ref = spec.subtasks.front().reference_object;
      Pose& pose = scene.object_poses.at(ref);
      pose = Pose(pose.position(),
                  yaw_quat(M_PI / 2.0) * pose.orientation());
    }
    AnnotatedDemo annotated;
    annotated.demo = run_script(spec, scene, dt);
    annotated.segments = segment_demo(annotated.demo, spec);
    src.demos.push_back(std::move(annotated));
  }
  return src;
}

}  // namespace dmg
