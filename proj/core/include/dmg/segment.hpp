#pragma once

#include <cstddef>
#include <vector>

#include "dmg/demo.hpp"
#include "dmg/scene.hpp"

namespace dmg {

/// Lifts a recorded demonstration into full scene states, reconstructing
/// gripper attachment from open->closed transitions (nearest object within
/// spec.grasp_radius at the transition step) and closed->open releases.
/// Object poses are taken verbatim from the recording.
std::vector<SceneState> demo_to_states(const Demonstration& demo,
                                       const TaskSpec& spec);

/// Object-centric segmentation: scans the demo for the first step at which
/// each subtask's completion predicate fires. Subtask i's segment is
/// [b_{i-1}, b_i) — the firing step opens the next segment — and the final
/// segment extends to the end of the demo. Throws PredicateNeverFiresError
/// if a predicate never fires and OutOfOrderError if firings are not
/// strictly increasing (or the first fires at step 0).
std::vector<SubtaskSegment> segment_demo(const Demonstration& demo,
                                         const TaskSpec& spec);

/// Builds segments from manually supplied boundaries (the firing steps,
/// one per subtask transition; spec.subtasks.size() - 1 entries, strictly
/// increasing, inside (0, len)). Throws InvalidBoundaryError otherwise.
std::vector<SubtaskSegment> annotate_manual(
    const Demonstration& demo, const TaskSpec& spec,
    const std::vector<std::size_t>& boundaries);

/// Maps a rollout step index onto a recorded gripper track of a possibly
/// different length (nearest index). With equal lengths it is the identity.
std::size_t gripper_track_index(std::size_t track_len, std::size_t step,
                                std::size_t rollout_len);

}  // namespace dmg
