// Acceptance gate: end-to-end checks of the library's headline behaviors,
// one PASS/FAIL line per criterion. Exit code 0 only if every criterion
// passes within its wall-clock budget. All tolerances are pinned below.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "dmg/datagen.hpp"
#include "dmg/dataset_io.hpp"
#include "dmg/demo_synth.hpp"
#include "dmg/dmp.hpp"
#include "dmg/errors.hpp"
#include "dmg/scene.hpp"
#include "dmg/se3.hpp"
#include "dmg/segment.hpp"

namespace {

using namespace dmg;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

// ---- pinned tolerances and budgets ----------------------------------------

// C1: a fitted segment must reproduce its demo.
constexpr double kFitRmseFraction = 0.02;   // RMSE per dim, rel. amplitude.
constexpr double kFitFlatTol = 1e-9;        // Abs RMSE for flat dimensions.
constexpr double kFitEndpointTol = 1e-3;    // Endpoint error [m] and [rad].
constexpr double kFitBudgetSec = 1.0;

// C2: regression weights must match an independent least-squares oracle.
constexpr int kLwrDemoCount = 50;
constexpr double kLwrRelTol = 1e-8;
constexpr double kLwrBudgetSec = 10.0;

// C3: goal retargeting must be exact under frame changes.
constexpr int kRetargetTrials = 10000;
constexpr double kRetargetTol = 1e-12;
constexpr double kRetargetBudgetSec = 1.0;

// C4: nominal generation rate on the stacking task.
constexpr std::uint64_t kNominalAttempts = 200;
constexpr double kNominalMinDgr = 0.95;
constexpr double kNominalBudgetSec = 30.0;

// C5: generation under mid-reach target displacement.
constexpr std::uint64_t kPerturbAttempts = 250;
constexpr double kPerturbBoxHalf = 0.05;            // [m] in x and y.
constexpr double kPerturbFractions[] = {0.25, 0.50, 0.75, 0.95};
constexpr double kPerturbMinDgrEarly = 0.60;        // At fraction 0.25.
constexpr double kPerturbMonotoneSlack = 0.015;     // Between fractions.
constexpr double kPerturbBudgetSec = 120.0;

// C6: a goal moved mid-rollout must still be reached -- unless it moves so
// late that no commands remain to converge.
constexpr double kSwitchRelTol = 5e-3;
constexpr double kSwitchBudgetSec = 1.0;

// C7: byte-level determinism and corruption detection.
constexpr int kDeterminismRecords = 10;
constexpr double kDeterminismBudgetSec = 10.0;

// C8: automatic segmentation must agree with manual boundary annotation.
constexpr int kSegmentationDemos = 100;
constexpr double kSegmentationBudgetSec = 5.0;

// ---- harness ---------------------------------------------------------------

struct CriterionResult {
  bool pass = true;
  std::string detail;
};

class Checker {
 public:
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass_ = false;
      if (!first_failure_.empty()) return;
      first_failure_ = what;
    }
  }
  bool pass() const { return pass_; }
  const std::string& first_failure() const { return first_failure_; }

 private:
  bool pass_ = true;
  std::string first_failure_;
};

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

double min_jerk(double u) { return u * u * u * (10.0 + u * (-15.0 + 6.0 * u)); }

std::vector<Pose> min_jerk_segment(int p) {
  const Eigen::Vector3d pos_a(0.0, -0.2, 0.25), pos_b(0.3, 0.05, 0.02);
  const Eigen::Vector3d axis = Eigen::Vector3d(0.3, -0.2, 0.8).normalized();
  std::vector<Pose> out;
  out.reserve(p);
  for (int k = 0; k < p; ++k) {
    const double s = min_jerk(static_cast<double>(k) / (p - 1));
    out.emplace_back(Eigen::Vector3d((1 - s) * pos_a + s * pos_b),
                     quat_exp(s * 0.9 * axis));
  }
  return out;
}

fs::path artifact_dir() {
  const fs::path dir("acceptance_artifacts");
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw IoError("cannot read " + path.string());
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

void spit(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out.good()) throw IoError("cannot write " + path.string());
}

// ---- C1: segment fit reproduction ------------------------------------------

CriterionResult c1_fit_reproduction() {
  Checker check;
  const int p = 101;
  const std::vector<Pose> demo = min_jerk_segment(p);
  const DmpParams params = fit_segment(demo, DmpConfig{});
  const std::vector<Pose> replay = rollout(params, demo.front());
  check.require(replay.size() == demo.size(), "replay length != demo length");

  double worst_frac = 0.0;
  for (int d = 0; d < 6; ++d) {
    double sq = 0.0;
    for (int k = 0; k < p; ++k) {
      const double diff = pose_to_chart(params, replay[k])[d] -
                          pose_to_chart(params, demo[k])[d];
      sq += diff * diff;
    }
    const double rmse = std::sqrt(sq / p);
    const double amplitude = std::abs(params.g_demo[d] - params.y0[d]);
    if (amplitude > kFitFlatTol) {
      worst_frac = std::max(worst_frac, rmse / amplitude);
      check.require(rmse <= kFitRmseFraction * amplitude,
                    fmt("dim %d RMSE %.3g exceeds %.0f%% of amplitude %.3g", d,
                        rmse, 100.0 * kFitRmseFraction, amplitude));
    } else {
      check.require(rmse <= kFitFlatTol,
                    fmt("flat dim %d drifted (RMSE %.3g)", d, rmse));
    }
  }
  const PoseError end = pose_error(replay.back(), demo.back());
  check.require(end.translational <= kFitEndpointTol,
                fmt("endpoint translation %.3g m", end.translational));
  check.require(end.angular <= kFitEndpointTol,
                fmt("endpoint rotation %.3g rad", end.angular));
  return {check.pass(),
          check.pass()
              ? fmt("max RMSE %.2f%% of amplitude, endpoint %.1e m / %.1e rad",
                    100.0 * worst_frac, end.translational, end.angular)
              : check.first_failure()};
}

// ---- C2: regression weights vs. independent oracle -------------------------

double wls_oracle_weight(const BasisLayout& layout, int basis,
                         const Eigen::VectorXd& f,
                         const Eigen::VectorXd& phases, double amplitude) {
  // Per-basis weighted least squares solved by SVD on the sqrt-weighted
  // design -- an independent route to the same optimum as the closed form.
  const Eigen::Index p = phases.size();
  Eigen::MatrixXd design(p, 1);
  Eigen::VectorXd rhs(p);
  double denominator = 0.0;
  for (Eigen::Index t = 0; t < p; ++t) {
    const double d = phases[t] - layout.centers[basis];
    const double psi = std::exp(-layout.widths[basis] * d * d);
    const double xi = phases[t] * amplitude;
    design(t, 0) = std::sqrt(psi) * xi;
    rhs[t] = std::sqrt(psi) * f[t];
    denominator += psi * xi * xi;
  }
  if (denominator < kLwrDenominatorFloor) return 0.0;
  return design.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV)
      .solve(rhs)[0];
}

CriterionResult c2_weights_vs_oracle() {
  Checker check;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const DmpConfig config;
  double worst_rel = 0.0;
  for (int demo = 0; demo < kLwrDemoCount; ++demo) {
    const int p = 50 + static_cast<int>(100 * (0.5 * u(rng) + 0.5));
    const double y0 = u(rng);
    const double g = y0 + 0.2 + std::abs(u(rng));
    const double wiggle_freq = 1.0 + 2.0 * std::abs(u(rng));
    Eigen::VectorXd y(p);
    for (int k = 0; k < p; ++k) {
      const double s = min_jerk(static_cast<double>(k) / (p - 1));
      y[k] = y0 + (g - y0) * s +
             0.2 * std::sin(wiggle_freq * M_PI * s) * s * (1 - s);
    }
    const BasisLayout layout =
        BasisLayout::for_duration(config, (p - 1) * config.dt);
    Eigen::VectorXd phases(p);
    for (int k = 0; k < p; ++k) {
      phases[k] = canonical_value(config, k * config.dt);
    }
    const Eigen::VectorXd f = invert_demo(y, config, g, y0);
    const Eigen::VectorXd w = train_lwr(f, phases, layout, g, y0);
    for (int i = 0; i < config.n_bases; ++i) {
      const double oracle = wls_oracle_weight(layout, i, f, phases, g - y0);
      const double rel =
          std::abs(w[i] - oracle) / std::max(1.0, std::abs(oracle));
      worst_rel = std::max(worst_rel, rel);
      check.require(rel <= kLwrRelTol,
                    fmt("demo %d basis %d: rel deviation %.3g", demo, i, rel));
    }
  }
  return {check.pass(), check.pass() ? fmt("%d demos x %d bases, worst rel "
                                           "deviation %.2e",
                                           kLwrDemoCount, DmpConfig{}.n_bases,
                                           worst_rel)
                                     : check.first_failure()};
}

// ---- C3: goal retargeting consistency ---------------------------------------

CriterionResult c3_retarget_consistency() {
  Checker check;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> n(0.0, 1.0);
  auto random_pose = [&] {
    Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
    q.normalize();
    return Pose(Eigen::Vector3d(u(rng), u(rng), u(rng)), q);
  };
  double worst = 0.0;
  for (int k = 0; k < kRetargetTrials; ++k) {
    const Pose object = random_pose();
    const Pose target = random_pose();
    const Pose relative = relative_target(object, target);
    const Pose back = retarget(relative, object);
    const PoseError err = pose_error(back, target);
    worst = std::max({worst, err.translational, err.angular});

    // Retargeting commutes with a rigid change of the object frame.
    const Pose motion = random_pose();
    const Pose moved = retarget(relative, compose(motion, object));
    const PoseError err2 = pose_error(moved, compose(motion, target));
    worst = std::max({worst, err2.translational, err2.angular});
  }
  check.require(worst <= kRetargetTol,
                fmt("worst reconstruction error %.3g", worst));
  return {check.pass(), check.pass() ? fmt("%d random frames, worst error "
                                           "%.2e (tol %.0e)",
                                           kRetargetTrials, worst, kRetargetTol)
                                     : check.first_failure()};
}

// ---- C4: nominal generation rate --------------------------------------------

CriterionResult c4_nominal_dgr() {
  Checker check;
  const SourceDataset src =
      synthesize_source(TaskSpec::builtin("stack"), "D0", 42, 2);
  GenerateOptions options;
  options.variant = "D0";
  options.n_success_target = static_cast<int>(kNominalAttempts);
  options.max_attempts = kNominalAttempts;
  options.seed0 = 0;
  const GeneratedDataset ds = generate_dataset(src, options);
  check.require(ds.attempts == kNominalAttempts,
                fmt("expected %llu attempts, got %llu",
                    static_cast<unsigned long long>(kNominalAttempts),
                    static_cast<unsigned long long>(ds.attempts)));
  const double dgr = ds.dgr();
  check.require(dgr >= kNominalMinDgr,
                fmt("DGR %.1f%% below the %.0f%% floor", 100.0 * dgr,
                    100.0 * kNominalMinDgr));
  return {check.pass(),
          fmt("DGR %.1f%% (%zu/%llu successes)%s", 100.0 * dgr,
              ds.records.size(),
              static_cast<unsigned long long>(ds.attempts),
              check.pass() ? "" : (" -- " + check.first_failure()).c_str())};
}

// ---- C5: adaptation under mid-reach perturbations ---------------------------

CriterionResult c5_perturbation_adaptation() {
  Checker check;
  const SourceDataset src =
      synthesize_source(TaskSpec::builtin("stack"), "D0", 42, 2);
  std::vector<double> dgrs;
  for (const double fraction : kPerturbFractions) {
    PerturbationSchedule sched;
    sched.target_object = "cubeA";
    sched.trigger_subtask = 0;  // Mid-reach, before the grasp.
    sched.trigger_fraction = fraction;
    sched.displacement.min =
        Eigen::Vector3d(-kPerturbBoxHalf, -kPerturbBoxHalf, 0.0);
    sched.displacement.max =
        Eigen::Vector3d(kPerturbBoxHalf, kPerturbBoxHalf, 0.0);

    GenerateOptions options;
    options.variant = "D0";
    options.n_success_target = static_cast<int>(kPerturbAttempts);
    options.max_attempts = kPerturbAttempts;
    options.seed0 = 0;  // Same seeds across fractions: paired comparison.
    options.perturbation = sched;
    const GeneratedDataset ds = generate_dataset(src, options);
    check.require(ds.attempts == kPerturbAttempts, "attempt budget mismatch");
    dgrs.push_back(ds.dgr());
  }
  check.require(dgrs[0] >= kPerturbMinDgrEarly,
                fmt("DGR %.1f%% at fraction %.2f below the %.0f%% floor",
                    100.0 * dgrs[0], kPerturbFractions[0],
                    100.0 * kPerturbMinDgrEarly));
  for (std::size_t i = 1; i < dgrs.size(); ++i) {
    check.require(
        dgrs[i] <= dgrs[i - 1] + kPerturbMonotoneSlack,
        fmt("DGR rose from %.1f%% (frac %.2f) to %.1f%% (frac %.2f): later "
            "perturbations must not be easier",
            100.0 * dgrs[i - 1], kPerturbFractions[i - 1], 100.0 * dgrs[i],
            kPerturbFractions[i]));
  }
  std::ostringstream detail;
  detail << "DGR by trigger fraction:";
  for (std::size_t i = 0; i < dgrs.size(); ++i) {
    detail << fmt(" %.2f->%.1f%%", kPerturbFractions[i], 100.0 * dgrs[i]);
  }
  if (!check.pass()) detail << " -- " << check.first_failure();
  return {check.pass(), detail.str()};
}

// ---- C6: online goal switching ----------------------------------------------

CriterionResult c6_online_goal_switch() {
  Checker check;
  const int p = 101;
  std::vector<Pose> demo;
  demo.reserve(p);
  for (int k = 0; k < p; ++k) {
    const double s = min_jerk(static_cast<double>(k) / (p - 1));
    demo.emplace_back(Eigen::Vector3d(0.4 * s, 0.0, 0.0),
                      Eigen::Quaterniond::Identity());
  }
  const DmpParams params = fit_segment(demo, DmpConfig{});
  const double shift = 0.1;

  auto error_with_switch = [&](int switch_step) {
    Vector6d g_new = params.g_demo;
    g_new[0] += shift;
    const std::vector<Pose> out =
        rollout(params, demo.front(), [&](int k) -> Vector6d {
          return k >= switch_step ? g_new : params.g_demo;
        });
    return std::abs(out.back().position().x() - g_new[0]);
  };

  const double amplitude = std::abs(params.g_demo[0] + shift - params.y0[0]);
  const double err_quarter = error_with_switch(p / 4);
  const double err_half = error_with_switch(p / 2);
  check.require(err_quarter <= kSwitchRelTol * amplitude,
                fmt("switch at 25%%: error %.3g > %.3g", err_quarter,
                    kSwitchRelTol * amplitude));
  check.require(err_half <= kSwitchRelTol * amplitude,
                fmt("switch at 50%%: error %.3g > %.3g", err_half,
                    kSwitchRelTol * amplitude));

  // With only two commands left the fixed-duration rollout cannot converge;
  // claiming otherwise would mean the goal is not actually live.
  const double err_late = error_with_switch(p - 3);
  check.require(err_late > kSwitchRelTol * shift,
                fmt("switch 2 commands before the end still converged "
                    "(error %.3g)",
                    err_late));
  return {check.pass(),
          check.pass()
              ? fmt("goal +%.2g: err %.1e (25%%), %.1e (50%%), %.1e (late, "
                    "must miss)",
                    shift, err_quarter, err_half, err_late)
              : check.first_failure()};
}

// ---- C7: determinism and integrity -------------------------------------------

CriterionResult c7_determinism() {
  Checker check;
  const SourceDataset src =
      synthesize_source(TaskSpec::builtin("stack"), "D0", 42, 2);
  GenerateOptions options;
  options.variant = "D0";
  options.n_success_target = kDeterminismRecords;
  options.seed0 = 7;
  options.threads = 1;
  const GeneratedDataset serial = generate_dataset(src, options);
  options.threads = 4;
  const GeneratedDataset wide = generate_dataset(src, options);
  check.require(datasets_equal(serial, wide),
                "datasets differ across worker counts");

  const fs::path a = artifact_dir() / "det_a.dmg";
  const fs::path b = artifact_dir() / "det_b.dmg";
  write_generated(serial, a.string());
  write_generated(wide, b.string());
  const std::string bytes_a = slurp(a);
  check.require(bytes_a == slurp(b), "container bytes differ between runs");
  check.require(slurp(fs::path(sidecar_path(a.string()))) ==
                    slurp(fs::path(sidecar_path(b.string()))),
                "sidecar bytes differ between runs");

  const GeneratedDataset back = read_generated(a.string());
  check.require(datasets_equal(serial, back),
                "dataset changed across a write/read cycle");

  // A single flipped payload byte must be detected, not silently accepted.
  std::string corrupt = bytes_a;
  corrupt[40] ^= 0x01;  // Inside the first block's payload.
  const fs::path c = artifact_dir() / "det_corrupt.dmg";
  spit(c, corrupt);
  bool caught = false;
  try {
    read_generated(c.string());
  } catch (const ChecksumMismatchError&) {
    caught = true;
  }
  check.require(caught, "flipped byte was not caught by the checksum");

  return {check.pass(),
          check.pass() ? fmt("%d records: serial==threaded bytes, round-trip "
                             "equal, corruption detected",
                             kDeterminismRecords)
                       : check.first_failure()};
}

// ---- C8: segmentation agreement ----------------------------------------------

CriterionResult c8_segmentation_agreement() {
  Checker check;
  const TaskSpec spec = TaskSpec::builtin("stack");
  int checked = 0;
  for (int seed = 0; seed < kSegmentationDemos && check.pass(); ++seed) {
    const SourceDataset src = synthesize_source(spec, "D0", seed, 1);
    const Demonstration& demo = src.demos[0].demo;
    const std::vector<SubtaskSegment> automatic = segment_demo(demo, spec);
    check.require(automatic.size() == spec.subtasks.size(),
                  fmt("seed %d: segment count mismatch", seed));

    std::size_t covered = 0;
    std::vector<std::size_t> boundaries;
    for (std::size_t i = 0; i < automatic.size(); ++i) {
      check.require(automatic[i].start == covered,
                    fmt("seed %d: segment %zu not contiguous", seed, i));
      check.require(automatic[i].end > automatic[i].start,
                    fmt("seed %d: segment %zu empty", seed, i));
      covered = automatic[i].end;
      if (i + 1 < automatic.size()) boundaries.push_back(automatic[i].end);
    }
    check.require(covered == demo.steps.size(),
                  fmt("seed %d: segments do not cover the demo", seed));

    const std::vector<SubtaskSegment> manual =
        annotate_manual(demo, spec, boundaries);
    check.require(manual.size() == automatic.size(),
                  fmt("seed %d: manual segment count mismatch", seed));
    for (std::size_t i = 0; i < manual.size(); ++i) {
      check.require(manual[i].start == automatic[i].start &&
                        manual[i].end == automatic[i].end &&
                        manual[i].reference_object ==
                            automatic[i].reference_object &&
                        manual[i].gripper_track == automatic[i].gripper_track,
                    fmt("seed %d: manual/automatic disagree on segment %zu",
                        seed, i));
    }
    ++checked;
  }
  return {check.pass(),
          check.pass()
              ? fmt("%d scripted demos: partitions valid, manual boundaries "
                    "reproduce the automatic segmentation",
                    checked)
              : check.first_failure()};
}

// ---- runner -------------------------------------------------------------------

struct Criterion {
  const char* id;
  const char* name;
  double budget_sec;
  std::function<CriterionResult()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"C1", "segment-fit-reproduction", kFitBudgetSec, c1_fit_reproduction},
      {"C2", "regression-weights-vs-oracle", kLwrBudgetSec,
       c2_weights_vs_oracle},
      {"C3", "goal-retargeting-consistency", kRetargetBudgetSec,
       c3_retarget_consistency},
      {"C4", "nominal-generation-rate", kNominalBudgetSec, c4_nominal_dgr},
      {"C5", "perturbation-adaptation", kPerturbBudgetSec,
       c5_perturbation_adaptation},
      {"C6", "online-goal-switch", kSwitchBudgetSec, c6_online_goal_switch},
      {"C7", "determinism-and-integrity", kDeterminismBudgetSec,
       c7_determinism},
      {"C8", "segmentation-agreement", kSegmentationBudgetSec,
       c8_segmentation_agreement},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    CriterionResult result;
    const auto start = Clock::now();
    try {
      result = criterion.run();
    } catch (const std::exception& e) {
      result.pass = false;
      result.detail = std::string("exception: ") + e.what();
    }
    const double seconds =
        std::chrono::duration<double>(Clock::now() - start).count();
    if (seconds > criterion.budget_sec) {
      result.pass = false;
      result.detail += fmt(" [over budget: %.2fs > %.0fs]", seconds,
                           criterion.budget_sec);
    }
    if (!result.pass) ++failures;
    std::printf("[%s] %s %-30s %s (%.2fs, budget %.0fs)\n",
                result.pass ? "PASS" : "FAIL", criterion.id, criterion.name,
                result.detail.c_str(), seconds, criterion.budget_sec);
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
