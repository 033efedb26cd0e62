#pragma once

#include <cstdint>
#include <string>

#include "dmg/datagen.hpp"

namespace dmg {

/// Synthesizes scripted expert demonstrations for a built-in style task:
/// min-jerk waypoint motions over the kinematic scene with a perfect
/// controller, driven by the task's subtask chain (approach, align to the
/// object yaw, descend, dwell, grasp, lift, traverse, place/drag, release,
/// retreat). The first demo plays on a scene drawn from `variant` with
/// `seed`; with n_demos == 2 the second replays the same scene with the
/// first subtask's reference object yawed by +pi/2. Each demo is validated
/// and auto-segmented before it is returned.
SourceDataset synthesize_source(const TaskSpec& spec,
                                const std::string& variant,
                                std::uint64_t seed, int n_demos);

}  // namespace dmg
