#include "dmg/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "dmg/errors.hpp"

namespace dmg {
namespace {

using ordered_json = nlohmann::ordered_json;

constexpr int kMaxSceneDraws = 1000;

std::string kind_to_string(PredicateKind k) {
  switch (k) {
    case PredicateKind::kGrasped: return "grasped";
    case PredicateKind::kPlacedOn: return "placed_on";
    case PredicateKind::kInRegion: return "in_region";
    case PredicateKind::kLifted: return "lifted";
  }
  throw SpecError("unreachable predicate kind");
}

PredicateKind kind_from_string(const std::string& s) {
  if (s == "grasped") return PredicateKind::kGrasped;
  if (s == "placed_on") return PredicateKind::kPlacedOn;
  if (s == "in_region") return PredicateKind::kInRegion;
  if (s == "lifted") return PredicateKind::kLifted;
  throw UnknownPredicateError("unknown predicate kind: \"" + s + "\"");
}

ordered_json pose_to_array(const Pose& p) {
  const auto a = p.to_array();
  return ordered_json(std::vector<double>(a.begin(), a.end()));
}

Pose pose_from_array(const ordered_json& j) {
  if (!j.is_array() || j.size() != 7) {
    throw SpecError("pose must be a 7-element array [px,py,pz,qw,qx,qy,qz]");
  }
  std::array<double, 7> a{};
  for (int i = 0; i < 7; ++i) a[i] = j[i].get<double>();
  return Pose::from_array(a);
}

ordered_json vec3_to_array(const Eigen::Vector3d& v) {
  return ordered_json{v.x(), v.y(), v.z()};
}

Eigen::Vector3d vec3_from_array(const ordered_json& j) {
  if (!j.is_array() || j.size() != 3) {
    throw SpecError("expected a 3-element array");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

ordered_json predicate_to_json(const Predicate& p) {
  ordered_json j;
  j["kind"] = kind_to_string(p.kind);
  j["object"] = p.object;
  switch (p.kind) {
    case PredicateKind::kGrasped:
      break;
    case PredicateKind::kPlacedOn:
      j["base"] = p.base;
      j["xy_tol"] = p.xy_tol;
      j["z_tol"] = p.z_tol;
      break;
    case PredicateKind::kInRegion:
      j["min"] = vec3_to_array(p.region.min);
      j["max"] = vec3_to_array(p.region.max);
      break;
    case PredicateKind::kLifted:
      j["height"] = p.height;
      break;
  }
  return j;
}

Predicate predicate_from_json(const ordered_json& j) {
  Predicate p;
  p.kind = kind_from_string(j.at("kind").get<std::string>());
  p.object = j.at("object").get<std::string>();
  switch (p.kind) {
    case PredicateKind::kGrasped:
      break;
    case PredicateKind::kPlacedOn:
      p.base = j.at("base").get<std::string>();
      if (j.contains("xy_tol")) p.xy_tol = j.at("xy_tol").get<double>();
      if (j.contains("z_tol")) p.z_tol = j.at("z_tol").get<double>();
      break;
    case PredicateKind::kInRegion:
      p.region.min = vec3_from_array(j.at("min"));
      p.region.max = vec3_from_array(j.at("max"));
      break;
    case PredicateKind::kLifted:
      p.height = j.at("height").get<double>();
      break;
  }
  return p;
}

void validate_predicate(const TaskSpec& spec, const Predicate& p,
                        const std::string& where) {
  if (!spec.objects.count(p.object)) {
    throw SpecError(where + ": predicate references unknown object \"" +
                    p.object + "\"");
  }
  if (p.kind == PredicateKind::kPlacedOn && !spec.objects.count(p.base)) {
    throw SpecError(where + ": placed_on references unknown base \"" +
                    p.base + "\"");
  }
  if (p.kind == PredicateKind::kInRegion && p.region.empty()) {
    throw SpecError(where + ": in_region box is empty");
  }
  if (p.kind == PredicateKind::kPlacedOn && (p.xy_tol <= 0 || p.z_tol <= 0)) {
    throw SpecError(where + ": placed_on tolerances must be positive");
  }
}

// World-frame half extents of a yaw-rotated box (axis-aligned cover).
Eigen::Vector3d yaw_expanded_half(const Eigen::Vector3d& half, double yaw) {
  const double c = std::abs(std::cos(yaw));
  const double s = std::abs(std::sin(yaw));
  return {half.x() * c + half.y() * s, half.x() * s + half.y() * c, half.z()};
}

bool boxes_overlap(const Eigen::Vector3d& ca, const Eigen::Vector3d& ha,
                   const Eigen::Vector3d& cb, const Eigen::Vector3d& hb) {
  return std::abs(ca.x() - cb.x()) < ha.x() + hb.x() &&
         std::abs(ca.y() - cb.y()) < ha.y() + hb.y() &&
         std::abs(ca.z() - cb.z()) < ha.z() + hb.z();
}

double draw_uniform(std::mt19937_64& rng, double lo, double hi) {
  if (!(lo <= hi)) throw SpecError("uniform range has lo > hi");
  if (lo == hi) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace

std::vector<std::string> TaskSpec::object_order() const {
  std::vector<std::string> names;
  names.reserve(objects.size());
  for (const auto& [name, geom] : objects) names.push_back(name);
  return names;  // std::map iterates in sorted order already.
}

void TaskSpec::validate() const {
  if (name.empty()) throw SpecError("task spec: name must not be empty");
  if (objects.empty()) throw SpecError("task spec: no objects");
  for (const auto& [obj_name, geom] : objects) {
    if (!(geom.half_extents.minCoeff() > 0.0)) {
      throw SpecError("task spec: object \"" + obj_name +
                      "\" needs positive half extents");
    }
  }
  if (subtasks.empty()) throw SpecError("task spec: no subtasks");
  for (std::size_t i = 0; i < subtasks.size(); ++i) {
    const std::string where = "subtask " + std::to_string(i);
    if (!objects.count(subtasks[i].reference_object)) {
      throw SpecError(where + ": unknown reference object \"" +
                      subtasks[i].reference_object + "\"");
    }
    validate_predicate(*this, subtasks[i].completion, where);
  }
  if (success.empty()) throw SpecError("task spec: no success predicates");
  for (std::size_t i = 0; i < success.size(); ++i) {
    validate_predicate(*this, success[i],
                       "success predicate " + std::to_string(i));
  }
  if (horizon < 1) throw SpecError("task spec: horizon must be >= 1");
  if (!(grasp_radius > 0.0)) {
    throw SpecError("task spec: grasp_radius must be positive");
  }
  if (reset_distributions.empty()) {
    throw SpecError("task spec: no reset distributions");
  }
  for (const auto& [variant, dist] : reset_distributions) {
    for (const auto& [obj_name, range] : dist.ranges) {
      if (!objects.count(obj_name)) {
        throw SpecError("reset distribution \"" + variant +
                        "\": unknown object \"" + obj_name + "\"");
      }
      if (range.box.empty()) {
        throw SpecError("reset distribution \"" + variant + "\", object \"" +
                        obj_name + "\": box has min > max");
      }
      if (!(range.yaw_min <= range.yaw_max)) {
        throw SpecError("reset distribution \"" + variant + "\", object \"" +
                        obj_name + "\": yaw range has min > max");
      }
    }
  }
}

std::string task_spec_to_json(const TaskSpec& spec) {
  ordered_json j;
  j["name"] = spec.name;
  j["horizon"] = spec.horizon;
  j["grasp_radius"] = spec.grasp_radius;
  j["home_pose"] = pose_to_array(spec.home_pose);
  ordered_json objs = ordered_json::object();
  for (const auto& [name, geom] : spec.objects) {
    ordered_json o;
    o["half_extents"] = vec3_to_array(geom.half_extents);
    o["fixed_pose"] = pose_to_array(geom.fixed_pose);
    objs[name] = o;
  }
  j["objects"] = objs;
  ordered_json subs = ordered_json::array();
  for (const auto& st : spec.subtasks) {
    ordered_json s;
    s["reference_object"] = st.reference_object;
    s["completion"] = predicate_to_json(st.completion);
    subs.push_back(s);
  }
  j["subtasks"] = subs;
  ordered_json succ = ordered_json::array();
  for (const auto& p : spec.success) succ.push_back(predicate_to_json(p));
  j["success"] = succ;
  ordered_json dists = ordered_json::object();
  for (const auto& [variant, dist] : spec.reset_distributions) {
    ordered_json d = ordered_json::object();
    for (const auto& [obj_name, range] : dist.ranges) {
      ordered_json r;
      r["min"] = vec3_to_array(range.box.min);
      r["max"] = vec3_to_array(range.box.max);
      r["yaw"] = ordered_json{range.yaw_min, range.yaw_max};
      d[obj_name] = r;
    }
    dists[variant] = d;
  }
  j["reset_distributions"] = dists;
  return j.dump(2);
}

TaskSpec task_spec_from_json(const std::string& json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const ordered_json::parse_error& e) {
    throw SpecError(std::string("task spec JSON parse error: ") + e.what());
  }
  TaskSpec spec;
  try {
    spec.name = j.at("name").get<std::string>();
    spec.horizon = j.at("horizon").get<int>();
    if (j.contains("grasp_radius")) {
      spec.grasp_radius = j.at("grasp_radius").get<double>();
    }
    if (j.contains("home_pose")) {
      spec.home_pose = pose_from_array(j.at("home_pose"));
    }
    for (const auto& [name, o] : j.at("objects").items()) {
      ObjectGeometry geom;
      geom.half_extents = vec3_from_array(o.at("half_extents"));
      if (o.contains("fixed_pose")) {
        geom.fixed_pose = pose_from_array(o.at("fixed_pose"));
      }
      spec.objects[name] = geom;
    }
    for (const auto& s : j.at("subtasks")) {
      Subtask st;
      st.reference_object = s.at("reference_object").get<std::string>();
      st.completion = predicate_from_json(s.at("completion"));
      spec.subtasks.push_back(st);
    }
    for (const auto& p : j.at("success")) {
      spec.success.push_back(predicate_from_json(p));
    }
    for (const auto& [variant, d] : j.at("reset_distributions").items()) {
      ResetDistribution dist;
      for (const auto& [obj_name, r] : d.items()) {
        ResetRange range;
        range.box.min = vec3_from_array(r.at("min"));
        range.box.max = vec3_from_array(r.at("max"));
        range.yaw_min = r.at("yaw")[0].get<double>();
        range.yaw_max = r.at("yaw")[1].get<double>();
        dist.ranges[obj_name] = range;
      }
      spec.reset_distributions[variant] = dist;
    }
  } catch (const ordered_json::exception& e) {
    throw SpecError(std::string("task spec JSON: ") + e.what());
  }
  spec.validate();
  return spec;
}

namespace {

TaskSpec make_stack_spec() {
  TaskSpec spec;
  spec.name = "stack";
  spec.horizon = 400;
  spec.home_pose = Pose(Eigen::Vector3d(0.0, -0.25, 0.25),
                        Eigen::Quaterniond::Identity());

  ObjectGeometry cube;
  cube.half_extents = Eigen::Vector3d(0.02, 0.02, 0.02);
  cube.fixed_pose = Pose(Eigen::Vector3d(0.05, 0.00, 0.02),
                         Eigen::Quaterniond::Identity());
  spec.objects["cubeA"] = cube;
  cube.fixed_pose = Pose(Eigen::Vector3d(-0.08, 0.05, 0.02),
                         Eigen::Quaterniond::Identity());
  spec.objects["cubeB"] = cube;

  Subtask pick;
  pick.reference_object = "cubeA";
  pick.completion.kind = PredicateKind::kGrasped;
  pick.completion.object = "cubeA";
  spec.subtasks.push_back(pick);

  Subtask place;
  place.reference_object = "cubeB";
  place.completion.kind = PredicateKind::kPlacedOn;
  place.completion.object = "cubeA";
  place.completion.base = "cubeB";
  spec.subtasks.push_back(place);

  spec.success.push_back(place.completion);

  const double yaw = M_PI / 4.0;  // Cubes have 4-fold yaw symmetry.
  auto box_range = [&](double half_side) {
    ResetRange r;
    r.box.min = Eigen::Vector3d(-half_side, -half_side, 0.02);
    r.box.max = Eigen::Vector3d(half_side, half_side, 0.02);
    r.yaw_min = -yaw;
    r.yaw_max = yaw;
    return r;
  };
  ResetDistribution d0;
  d0.ranges["cubeA"] = box_range(0.08);
  d0.ranges["cubeB"] = box_range(0.08);
  spec.reset_distributions["D0"] = d0;
  ResetDistribution d1;
  d1.ranges["cubeA"] = box_range(0.20);
  d1.ranges["cubeB"] = box_range(0.20);
  spec.reset_distributions["D1"] = d1;
  return spec;
}

TaskSpec make_square_spec() {
  TaskSpec spec;
  spec.name = "square-surrogate";
  spec.horizon = 400;
  spec.home_pose = Pose(Eigen::Vector3d(0.0, -0.25, 0.25),
                        Eigen::Quaterniond::Identity());

  ObjectGeometry peg;
  peg.half_extents = Eigen::Vector3d(0.02, 0.02, 0.05);
  peg.fixed_pose = Pose(Eigen::Vector3d(0.10, 0.15, 0.05),
                        Eigen::Quaterniond::Identity());
  spec.objects["peg"] = peg;

  ObjectGeometry nut;
  nut.half_extents = Eigen::Vector3d(0.03, 0.03, 0.01);
  nut.fixed_pose = Pose(Eigen::Vector3d(-0.10, 0.10, 0.01),
                        Eigen::Quaterniond::Identity());
  spec.objects["nut"] = nut;

  Subtask pick;
  pick.reference_object = "nut";
  pick.completion.kind = PredicateKind::kGrasped;
  pick.completion.object = "nut";
  spec.subtasks.push_back(pick);

  Subtask place;
  place.reference_object = "peg";
  place.completion.kind = PredicateKind::kPlacedOn;
  place.completion.object = "nut";
  place.completion.base = "peg";
  place.completion.xy_tol = 0.008;  // Hole clearance around the post.
  spec.subtasks.push_back(place);

  spec.success.push_back(place.completion);

  auto range = [](double cx, double cy, double ex, double ey, double z,
                  double yaw_lo, double yaw_hi) {
    ResetRange r;
    r.box.min = Eigen::Vector3d(cx - 0.5 * ex, cy - 0.5 * ey, z);
    r.box.max = Eigen::Vector3d(cx + 0.5 * ex, cy + 0.5 * ey, z);
    r.yaw_min = yaw_lo;
    r.yaw_max = yaw_hi;
    return r;
  };
  const double nut_yaw = M_PI / 2.0;  // 4-fold symmetric plate.
  const double peg_yaw = M_PI / 4.0;
  ResetDistribution d0;  // Peg fixed; nut on a thin strip.
  d0.ranges["nut"] = range(-0.10, 0.10, 0.005, 0.115, 0.01, -nut_yaw, nut_yaw);
  spec.reset_distributions["D0"] = d0;
  ResetDistribution d1;
  d1.ranges["peg"] = range(0.10, 0.15, 0.40, 0.40, 0.05, 0.0, 0.0);
  d1.ranges["nut"] = range(-0.10, 0.10, 0.23, 0.51, 0.01, -nut_yaw, nut_yaw);
  spec.reset_distributions["D1"] = d1;
  ResetDistribution d2;
  d2.ranges["peg"] = range(0.0, 0.0, 0.50, 0.50, 0.05, -peg_yaw, peg_yaw);
  d2.ranges["nut"] = range(0.0, 0.0, 0.50, 0.50, 0.01, -nut_yaw, nut_yaw);
  spec.reset_distributions["D2"] = d2;
  return spec;
}

TaskSpec make_mugcleanup_spec() {
  TaskSpec spec;
  spec.name = "mugcleanup-surrogate";
  spec.horizon = 800;
  spec.home_pose = Pose(Eigen::Vector3d(0.0, -0.30, 0.30),
                        Eigen::Quaterniond::Identity());

  ObjectGeometry mug;
  mug.half_extents = Eigen::Vector3d(0.03, 0.03, 0.04);
  mug.fixed_pose = Pose(Eigen::Vector3d(-0.10, 0.03, 0.04),
                        Eigen::Quaterniond::Identity());
  spec.objects["mug"] = mug;

  // The drawer is kinematically reduced to its handle; the cavity and the
  // open/closed states are world-fixed regions on the handle's slide axis.
  ObjectGeometry handle;
  handle.half_extents = Eigen::Vector3d(0.015, 0.01, 0.01);
  handle.fixed_pose = Pose(Eigen::Vector3d(0.20, 0.25, 0.05),
                           Eigen::Quaterniond::Identity());
  spec.objects["handle"] = handle;

  Box open_box;
  open_box.min = Eigen::Vector3d(0.17, 0.11, 0.0);
  open_box.max = Eigen::Vector3d(0.23, 0.15, 0.12);
  Box closed_box;  // Overtravel past the handle's start pose.
  closed_box.min = Eigen::Vector3d(0.17, 0.27, 0.0);
  closed_box.max = Eigen::Vector3d(0.23, 0.31, 0.12);
  Box cavity;
  cavity.min = Eigen::Vector3d(0.12, 0.14, 0.0);
  cavity.max = Eigen::Vector3d(0.28, 0.22, 0.15);

  Subtask open_drawer;
  open_drawer.reference_object = "handle";
  open_drawer.completion.kind = PredicateKind::kInRegion;
  open_drawer.completion.object = "handle";
  open_drawer.completion.region = open_box;
  spec.subtasks.push_back(open_drawer);

  Subtask pick_mug;
  pick_mug.reference_object = "mug";
  pick_mug.completion.kind = PredicateKind::kGrasped;
  pick_mug.completion.object = "mug";
  spec.subtasks.push_back(pick_mug);

  Subtask stow_mug;
  stow_mug.reference_object = "handle";
  stow_mug.completion.kind = PredicateKind::kInRegion;
  stow_mug.completion.object = "mug";
  stow_mug.completion.region = cavity;
  spec.subtasks.push_back(stow_mug);

  Subtask close_drawer;
  close_drawer.reference_object = "handle";
  close_drawer.completion.kind = PredicateKind::kInRegion;
  close_drawer.completion.object = "handle";
  close_drawer.completion.region = closed_box;
  spec.subtasks.push_back(close_drawer);

  spec.success.push_back(stow_mug.completion);
  spec.success.push_back(close_drawer.completion);

  auto mug_range = [](double ex) {
    ResetRange r;
    r.box.min = Eigen::Vector3d(-0.10 - 0.5 * ex, 0.03 - 0.075, 0.04);
    r.box.max = Eigen::Vector3d(-0.10 + 0.5 * ex, 0.03 + 0.075, 0.04);
    r.yaw_min = -M_PI / 4.0;
    r.yaw_max = M_PI / 4.0;
    return r;
  };
  ResetDistribution d0;
  d0.ranges["mug"] = mug_range(0.30);
  spec.reset_distributions["D0"] = d0;
  ResetDistribution d1;
  d1.ranges["mug"] = mug_range(0.40);
  spec.reset_distributions["D1"] = d1;
  return spec;
}

}  // namespace

TaskSpec TaskSpec::builtin(const std::string& name) {
  TaskSpec spec;
  if (name == "stack") {
    spec = make_stack_spec();
  } else if (name == "square-surrogate") {
    spec = make_square_spec();
  } else if (name == "mugcleanup-surrogate") {
    spec = make_mugcleanup_spec();
  } else {
    std::ostringstream msg;
    msg << "unknown task \"" << name << "\"; built-in tasks:";
    for (const auto& n : builtin_names()) msg << " " << n;
    throw SpecError(msg.str());
  }
  spec.validate();
  return spec;
}

std::vector<std::string> TaskSpec::builtin_names() {
  return {"stack", "square-surrogate", "mugcleanup-surrogate"};
}

ControllerModel ControllerModel::perfect() {
  ControllerModel c;
  c.lambda = 1e9;
  c.max_step_translation = 1e9;
  c.max_step_rotation = 1e9;
  return c;
}

SceneState sample_initial_state(const TaskSpec& spec,
                                const std::string& variant,
                                std::mt19937_64& rng) {
  const auto dist_it = spec.reset_distributions.find(variant);
  if (dist_it == spec.reset_distributions.end()) {
    std::ostringstream msg;
    msg << "task \"" << spec.name << "\" has no reset distribution \""
        << variant << "\"; available:";
    for (const auto& [v, d] : spec.reset_distributions) msg << " " << v;
    throw SpecError(msg.str());
  }
  const ResetDistribution& dist = dist_it->second;
  const std::vector<std::string> order = spec.object_order();

  for (int attempt = 0; attempt < kMaxSceneDraws; ++attempt) {
    SceneState state;
    state.ee_pose = spec.home_pose;
    state.gripper = Gripper::kOpen;
    std::map<std::string, double> yaws;
    for (const auto& name : order) {
      const ObjectGeometry& geom = spec.objects.at(name);
      const auto range_it = dist.ranges.find(name);
      if (range_it == dist.ranges.end()) {
        state.object_poses[name] = geom.fixed_pose;
        yaws[name] = yaw_of(geom.fixed_pose.orientation());
        continue;
      }
      const ResetRange& range = range_it->second;
      Eigen::Vector3d pos;
      pos.x() = draw_uniform(rng, range.box.min.x(), range.box.max.x());
      pos.y() = draw_uniform(rng, range.box.min.y(), range.box.max.y());
      pos.z() = draw_uniform(rng, range.box.min.z(), range.box.max.z());
      const double yaw = draw_uniform(rng, range.yaw_min, range.yaw_max);
      state.object_poses[name] = Pose(pos, yaw_quat(yaw));
      yaws[name] = yaw;
    }
    bool crowded = false;
    for (std::size_t i = 0; i < order.size() && !crowded; ++i) {
      for (std::size_t k = i + 1; k < order.size() && !crowded; ++k) {
        const auto& pa = state.object_poses.at(order[i]);
        const auto& pb = state.object_poses.at(order[k]);
        const Eigen::Vector3d ha = yaw_expanded_half(
            spec.objects.at(order[i]).half_extents, yaws.at(order[i]));
        const Eigen::Vector3d hb = yaw_expanded_half(
            spec.objects.at(order[k]).half_extents, yaws.at(order[k]));
        crowded = boxes_overlap(pa.position(), ha, pb.position(), hb);
      }
    }
    if (!crowded) return state;
  }
  throw CrowdedSceneError("could not sample a non-overlapping scene for \"" +
                          spec.name + "\" variant \"" + variant + "\" in " +
                          std::to_string(kMaxSceneDraws) + " draws");
}

SceneState step(const TaskSpec& spec, const SceneState& state,
                const Pose& command_pose, Gripper command_gripper,
                const ControllerModel& controller, double dt) {
  if (state.step >= spec.horizon) {
    throw HorizonExceededError("scene step " + std::to_string(state.step) +
                               " is past the task horizon " +
                               std::to_string(spec.horizon));
  }
  SceneState next = state;

  // First-order lag toward the commanded pose, with per-step caps.
  const double alpha = 1.0 - std::exp(-controller.lambda * dt);
  Eigen::Vector3d delta =
      alpha * (command_pose.position() - state.ee_pose.position());
  const double dist = delta.norm();
  if (dist > controller.max_step_translation) {
    delta *= controller.max_step_translation / dist;
  }
  const Eigen::Vector3d new_pos = state.ee_pose.position() + delta;

  const Eigen::Quaterniond q0 = state.ee_pose.orientation();
  const Eigen::Quaterniond q1 = command_pose.orientation();
  const double full_angle =
      2.0 * std::acos(std::min(1.0, std::abs(q0.dot(q1))));
  Eigen::Quaterniond new_q = q1;
  if (full_angle > 1e-12) {
    const double step_angle =
        std::min(alpha * full_angle, controller.max_step_rotation);
    new_q = q0.slerp(std::min(1.0, step_angle / full_angle), q1);
  }
  next.ee_pose = Pose(new_pos, new_q);

  // An attached object tracks the hand rigidly.
  if (next.attached) {
    next.object_poses.at(*next.attached) =
        compose(next.ee_pose, next.attach_rel);
  }

  // Gripper transitions: attach on open->closed, release on closed->open.
  if (state.gripper == Gripper::kOpen &&
      command_gripper == Gripper::kClosed) {
    std::string nearest;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [name, pose] : next.object_poses) {
      const double d = (pose.position() - next.ee_pose.position()).norm();
      if (d < best) {
        best = d;
        nearest = name;
      }
    }
    if (!nearest.empty() && best <= spec.grasp_radius) {
      next.attached = nearest;
      next.attach_rel =
          relative_target(next.ee_pose, next.object_poses.at(nearest));
    }
  } else if (state.gripper == Gripper::kClosed &&
             command_gripper == Gripper::kOpen) {
    next.attached.reset();
    next.attach_rel = Pose();
  }
  next.gripper = command_gripper;
  next.step = state.step + 1;
  return next;
}

bool eval_predicate(const TaskSpec& spec, const Predicate& predicate,
                    const SceneState& state) {
  const auto obj_it = state.object_poses.find(predicate.object);
  if (obj_it == state.object_poses.end()) {
    throw SpecError("predicate references object \"" + predicate.object +
                    "\" missing from the scene state");
  }
  const Pose& obj = obj_it->second;
  switch (predicate.kind) {
    case PredicateKind::kGrasped:
      return state.attached.has_value() &&
             *state.attached == predicate.object;
    case PredicateKind::kPlacedOn: {
      if (state.attached.has_value() && *state.attached == predicate.object) {
        return false;  // Resting, not held.
      }
      const auto base_it = state.object_poses.find(predicate.base);
      if (base_it == state.object_poses.end()) {
        throw SpecError("placed_on references base \"" + predicate.base +
                        "\" missing from the scene state");
      }
      const Pose& base = base_it->second;
      const double rest_z = base.position().z() +
                            spec.objects.at(predicate.base).half_extents.z() +
                            spec.objects.at(predicate.object).half_extents.z();
      return std::abs(obj.position().x() - base.position().x()) <=
                 predicate.xy_tol &&
             std::abs(obj.position().y() - base.position().y()) <=
                 predicate.xy_tol &&
             std::abs(obj.position().z() - rest_z) <= predicate.z_tol;
    }
    case PredicateKind::kInRegion:
      return predicate.region.contains(obj.position());
    case PredicateKind::kLifted:
      return obj.position().z() >= predicate.height;
  }
  throw SpecError("unreachable predicate kind");
}

void PredicateTracker::update(const TaskSpec& spec, const SceneState& state,
                              int step_index) {
  for (std::size_t i = 0; i < predicates_.size(); ++i) {
    if (first_fire_[i] < 0 && eval_predicate(spec, predicates_[i], state)) {
      first_fire_[i] = step_index;
    }
  }
}

bool PredicateTracker::all_fired() const {
  return std::all_of(first_fire_.begin(), first_fire_.end(),
                     [](std::int64_t s) { return s >= 0; });
}

SceneState apply_perturbation(const TaskSpec& spec, const SceneState& state,
                              const PerturbationSchedule& schedule,
                              std::mt19937_64& rng, int step_index,
                              PerturbationEvent* event_out) {
  if (!state.object_poses.count(schedule.target_object)) {
    throw SpecError("perturbation targets unknown object \"" +
                    schedule.target_object + "\"");
  }
  (void)spec;
  PerturbationEvent event;
  event.step = step_index;
  event.target_object = schedule.target_object;
  event.delta.x() = draw_uniform(rng, schedule.displacement.min.x(),
                                 schedule.displacement.max.x());
  event.delta.y() = draw_uniform(rng, schedule.displacement.min.y(),
                                 schedule.displacement.max.y());
  event.delta.z() = draw_uniform(rng, schedule.displacement.min.z(),
                                 schedule.displacement.max.z());
  event.yaw_delta = draw_uniform(rng, schedule.yaw_min, schedule.yaw_max);
  event.suppressed = state.attached.has_value() &&
                     *state.attached == schedule.target_object;
  SceneState next = state;
  if (!event.suppressed) {
    Pose& pose = next.object_poses.at(schedule.target_object);
    pose = Pose(pose.position() + event.delta,
                yaw_quat(event.yaw_delta) * pose.orientation());
  }
  if (event_out != nullptr) *event_out = event;
  return next;
}

}  // namespace dmg
