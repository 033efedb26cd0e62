#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "dmg/datagen.hpp"

namespace dmg {

/// Renders successes/attempts as a percentage at 0.1% precision ("94.8%").
/// Zero attempts render as "n/a".
std::string format_dgr_percent(std::uint64_t successes,
                               std::uint64_t attempts);

struct DgrRow {
  std::string label;
  std::uint64_t attempts = 0;
  std::uint64_t successes = 0;
};

/// One row per generation run (labelled by variant). Rows with zero
/// attempts are dropped.
std::vector<DgrRow> dgr_rows(const GeneratedDataset& ds);

/// Aligned text table of DGR rows.
std::string dgr_table(const std::vector<DgrRow>& rows);

/// CSV form: label,attempts,successes,dgr.
std::string dgr_csv(const std::vector<DgrRow>& rows);

/// Per-failure-reason counts over all attempts, with per-subtask completion
/// statistics, as an aligned text table.
std::string failure_breakdown(const GeneratedDataset& ds);

/// Writes one record's step log as CSV: step, time, phase, segment index,
/// end-effector pose, gripper, live goal pose, and every object pose
/// (objects in the task's deterministic order).
void write_replay_csv(std::ostream& out, const GeneratedDataset& ds,
                      std::size_t record_index);

}  // namespace dmg
