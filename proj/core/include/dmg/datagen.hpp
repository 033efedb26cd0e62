#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dmg/demo.hpp"
#include "dmg/dmp.hpp"
#include "dmg/scene.hpp"
#include "dmg/segment.hpp"

namespace dmg {

/// Annotated demonstrations sharing one task spec: the input to dataset
/// generation.
struct SourceDataset {
  TaskSpec spec;
  std::string variant;   ///< Reset distribution the demos were drawn from.
  std::uint64_t seed = 0;
  std::vector<AnnotatedDemo> demos;
};

/// One fitted demo segment ready for retargeted replay.
struct SegmentFit {
  int subtask_index = 0;
  std::string reference_object;
  DmpParams params;
  /// Demo-relative goal: inverse(reference object pose at segment end) *
  /// (ee pose at segment end), both read from the demo.
  Pose relative_goal;
  std::vector<Gripper> gripper_track;
};

/// Precomputed DMP fits for every (demo, segment) pair of a source dataset.
/// Fit once, replayed by every trial.
struct FitCache {
  std::vector<std::vector<SegmentFit>> demos;

  static FitCache build(const SourceDataset& src, const DmpConfig& config);
};

enum class SelectStrategy : std::uint8_t {
  kFirst,        ///< Always demo 0.
  kOrientation,  ///< Closest first-subtask reference-object yaw.
};

/// Picks the demo whose first-subtask reference object yaw (at demo start)
/// is closest to the sampled scene's; exact ties keep the lower index.
int select_demo(const SourceDataset& src, const SceneState& initial,
                SelectStrategy strategy);

/// One executed simulator step of a trial.
struct StepLog {
  SceneState state;     ///< Scene after the step.
  Pose command_pose;
  Gripper command_gripper = Gripper::kOpen;
  Pose goal_pose;       ///< Retargeted live goal used for this step.
  double phase = 1.0;   ///< Canonical phase x at the commanded step.
  int segment_index = 0;
};

enum class Outcome : std::uint8_t { kSuccess = 0, kFailure = 1 };

/// Full log of one generation trial.
struct GenerationRecord {
  std::uint64_t seed = 0;
  std::string variant;
  int selected_demo = 0;
  Outcome outcome = Outcome::kFailure;
  std::string failure_reason;  ///< Empty on success.
  std::vector<std::int64_t> subtask_completion_steps;  ///< -1 = never.
  std::vector<PerturbationEvent> perturbations;
  std::vector<StepLog> log;

  bool success() const { return outcome == Outcome::kSuccess; }
};

/// Per-attempt outcome kept for every seed tried (including filtered-out
/// failures), for reporting.
struct AttemptSummary {
  std::uint64_t seed = 0;
  bool success = false;
  std::string failure_reason;
  std::vector<std::int64_t> subtask_completion_steps;
};

/// Generation output: successful records (the dataset) plus bookkeeping
/// over all attempts.
struct GeneratedDataset {
  TaskSpec spec;
  std::string variant;
  std::uint64_t seed0 = 0;
  std::uint64_t attempts = 0;
  bool target_reached = false;
  std::vector<GenerationRecord> records;
  std::vector<AttemptSummary> attempt_summaries;
  /// The per-(demo, segment) fits the records were generated from.
  std::vector<std::vector<SegmentFit>> fits;

  double dgr() const {
    return attempts == 0
               ? 0.0
               : static_cast<double>(records.size()) /
                     static_cast<double>(attempts);
  }
};

/// Runs one seeded trial: samples the scene, selects a demo, then replays
/// each fitted segment with per-step goal retargeting to the live reference
/// object pose. Missed predicates, horizon exhaustion, and out-of-chart
/// goals are recorded failures, not exceptions.
GenerationRecord generate_trial(
    const SourceDataset& src, const FitCache& fits, const std::string& variant,
    std::uint64_t seed,
    const std::optional<PerturbationSchedule>& perturbation,
    const ControllerModel& controller);

struct GenerateOptions {
  std::string variant = "D0";
  int n_success_target = 100;
  std::uint64_t seed0 = 0;
  std::optional<PerturbationSchedule> perturbation;
  ControllerModel controller;
  DmpConfig dmp_config;
  /// Attempt budget; 0 means 100 * n_success_target.
  std::uint64_t max_attempts = 0;
  /// Worker count; 0 reads DMG_THREADS, falling back to the hardware count.
  unsigned threads = 0;
};

/// Generates trials with seeds seed0, seed0+1, ... (processed in seed order
/// regardless of thread count) until the success target or the attempt
/// budget is reached. Returns successes in seed order plus summaries of
/// every attempt; target_reached is false when the budget ran out first.
GeneratedDataset generate_dataset(const SourceDataset& src,
                                  const GenerateOptions& options);

}  // namespace dmg
