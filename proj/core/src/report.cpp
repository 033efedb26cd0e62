#include "dmg/report.hpp"

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <map>
#include <sstream>

#include "dmg/errors.hpp"

namespace dmg {

std::string format_dgr_percent(std::uint64_t successes,
                               std::uint64_t attempts) {
  if (attempts == 0) return "n/a";
  const double pct =
      100.0 * static_cast<double>(successes) / static_cast<double>(attempts);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f%%", pct);
  return buf;
}

std::vector<DgrRow> dgr_rows(const GeneratedDataset& ds) {
  std::vector<DgrRow> rows;
  if (ds.attempts > 0) {
    rows.push_back({ds.variant, ds.attempts, ds.records.size()});
  }
  return rows;
}

std::string dgr_table(const std::vector<DgrRow>& rows) {
  std::size_t label_w = std::string("variant").size();
  for (const auto& r : rows) label_w = std::max(label_w, r.label.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(label_w + 2)) << "variant"
      << std::right << std::setw(10) << "attempts" << std::setw(11)
      << "successes" << std::setw(8) << "dgr" << "\n";
  for (const auto& r : rows) {
    out << std::left << std::setw(static_cast<int>(label_w + 2)) << r.label
        << std::right << std::setw(10) << r.attempts << std::setw(11)
        << r.successes << std::setw(8)
        << format_dgr_percent(r.successes, r.attempts) << "\n";
  }
  return out.str();
}

std::string dgr_csv(const std::vector<DgrRow>& rows) {
  std::ostringstream out;
  out << "variant,attempts,successes,dgr\n";
  for (const auto& r : rows) {
    out << r.label << "," << r.attempts << "," << r.successes << ","
        << format_dgr_percent(r.successes, r.attempts) << "\n";
  }
  return out.str();
}

std::string failure_breakdown(const GeneratedDataset& ds) {
  std::map<std::string, std::uint64_t> reasons;
  std::uint64_t failures = 0;
  for (const auto& a : ds.attempt_summaries) {
    if (!a.success) {
      ++failures;
      ++reasons[a.failure_reason.empty() ? "(unspecified)"
                                         : a.failure_reason];
    }
  }
  std::ostringstream out;
  out << "attempts " << ds.attempts << ", successes " << ds.records.size()
      << ", dgr " << format_dgr_percent(ds.records.size(), ds.attempts)
      << "\n";
  if (failures == 0) {
    out << "no failed attempts\n";
    return out.str();
  }
  out << "failure reasons:\n";
  std::size_t w = 0;
  for (const auto& [reason, n] : reasons) w = std::max(w, reason.size());
  for (const auto& [reason, n] : reasons) {
    out << "  " << std::left << std::setw(static_cast<int>(w + 2)) << reason
        << std::right << std::setw(8) << n << "  "
        << format_dgr_percent(n, failures) << " of failures\n";
  }
  // Subtask completion counts show where attempts stall.
  if (!ds.spec.subtasks.empty()) {
    out << "subtask completion (all attempts):\n";
    for (std::size_t i = 0; i < ds.spec.subtasks.size(); ++i) {
      std::uint64_t completed = 0;
      for (const auto& a : ds.attempt_summaries) {
        if (i < a.subtask_completion_steps.size() &&
            a.subtask_completion_steps[i] >= 0) {
          ++completed;
        }
      }
      out << "  subtask " << i << " (" << ds.spec.subtasks[i].reference_object
          << "): " << completed << "/" << ds.attempts << "\n";
    }
  }
  return out.str();
}

void write_replay_csv(std::ostream& out, const GeneratedDataset& ds,
                      std::size_t record_index) {
  if (record_index >= ds.records.size()) {
    throw SpecError("record index " + std::to_string(record_index) +
                    " out of range; dataset has " +
                    std::to_string(ds.records.size()) + " records");
  }
  const GenerationRecord& rec = ds.records[record_index];
  const std::vector<std::string> order = ds.spec.object_order();
  const double dt =
      ds.fits.empty() || ds.fits[0].empty() ? 0.05
                                            : ds.fits[0][0].params.config.dt;

  out << "step,t,phase,segment,ee_px,ee_py,ee_pz,ee_qw,ee_qx,ee_qy,ee_qz,"
         "gripper,goal_px,goal_py,goal_pz,goal_qw,goal_qx,goal_qy,goal_qz";
  for (const auto& name : order) {
    for (const char* c : {"px", "py", "pz", "qw", "qx", "qy", "qz"}) {
      out << "," << name << "_" << c;
    }
  }
  out << "\n";
  out << std::setprecision(17);
  for (const auto& step : rec.log) {
    out << step.state.step << "," << step.state.step * dt << "," << step.phase
        << "," << step.segment_index;
    for (double v : step.state.ee_pose.to_array()) out << "," << v;
    out << "," << static_cast<int>(step.state.gripper);
    for (double v : step.goal_pose.to_array()) out << "," << v;
    for (const auto& name : order) {
      for (double v : step.state.object_poses.at(name).to_array()) {
        out << "," << v;
      }
    }
    out << "\n";
  }
}

}  // namespace dmg
