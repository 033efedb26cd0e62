// dmg: synthesize demonstrations, expand them into datasets, and inspect
// the results.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dmg/datagen.hpp"
#include "dmg/dataset_io.hpp"
#include "dmg/demo_synth.hpp"
#include "dmg/errors.hpp"
#include "dmg/report.hpp"
#include "dmg/scene.hpp"
#include "dmg/segment.hpp"

namespace {

dmg::TaskSpec load_spec(const std::string& task,
                        const std::string& task_json_path) {
  if (!task_json_path.empty()) {
    std::ifstream in(task_json_path);
    if (!in) {
      throw dmg::IoError("cannot open task spec file \"" + task_json_path +
                         "\"");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return dmg::task_spec_from_json(buf.str());
  }
  return dmg::TaskSpec::builtin(task);
}

std::vector<std::size_t> parse_boundaries(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(static_cast<std::size_t>(std::stoull(item)));
  }
  return out;
}

int cmd_demo_synth(const std::string& task, const std::string& task_json,
                   const std::string& variant, std::uint64_t seed,
                   int n_demos, const std::string& out_path) {
  const dmg::TaskSpec spec = load_spec(task, task_json);
  const dmg::SourceDataset src =
      dmg::synthesize_source(spec, variant, seed, n_demos);
  dmg::write_source(src, out_path);
  std::cout << "task " << spec.name << ", variant " << variant << ", seed "
            << seed << "\n";
  for (std::size_t d = 0; d < src.demos.size(); ++d) {
    const auto& demo = src.demos[d];
    std::cout << "demo " << d << ": " << demo.demo.steps.size()
              << " steps, segments";
    for (const auto& seg : demo.segments) {
      std::cout << " [" << seg.start << "," << seg.end << ")";
    }
    std::cout << "\n";
  }
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_generate(const std::string& src_path, const std::string& variant_flag,
                 int n, std::uint64_t seed, const std::string& out_path,
                 const std::optional<double>& perturb_frac,
                 double perturb_box, double perturb_yaw,
                 const std::string& boundaries, std::uint64_t max_attempts,
                 unsigned threads, double ctrl_lambda, double ctrl_max_step,
                 double ctrl_max_rot) {
  dmg::SourceDataset src = dmg::read_source(src_path);
  if (!boundaries.empty()) {
    const std::vector<std::size_t> b = parse_boundaries(boundaries);
    for (auto& annotated : src.demos) {
      annotated.segments = dmg::annotate_manual(annotated.demo, src.spec, b);
    }
  }

  dmg::GenerateOptions options;
  options.variant = variant_flag.empty() ? src.variant : variant_flag;
  options.n_success_target = n;
  options.seed0 = seed;
  options.max_attempts = max_attempts;
  options.threads = threads;
  options.controller.lambda = ctrl_lambda;
  options.controller.max_step_translation = ctrl_max_step;
  options.controller.max_step_rotation = ctrl_max_rot;

  if (perturb_frac.has_value()) {
    dmg::PerturbationSchedule sched;
    // Disturb the object of the first grasp subtask mid-reach; fall back to
    // the first subtask's object if the task has no grasp stage.
    sched.trigger_subtask = 0;
    sched.target_object = src.spec.subtasks.front().completion.object;
    for (std::size_t i = 0; i < src.spec.subtasks.size(); ++i) {
      if (src.spec.subtasks[i].completion.kind ==
          dmg::PredicateKind::kGrasped) {
        sched.trigger_subtask = static_cast<int>(i);
        sched.target_object = src.spec.subtasks[i].completion.object;
        break;
      }
    }
    sched.trigger_fraction = *perturb_frac;
    sched.displacement.min = Eigen::Vector3d(-perturb_box, -perturb_box, 0.0);
    sched.displacement.max = Eigen::Vector3d(perturb_box, perturb_box, 0.0);
    sched.yaw_min = -perturb_yaw;
    sched.yaw_max = perturb_yaw;
    options.perturbation = sched;
  }

  const dmg::GeneratedDataset ds = dmg::generate_dataset(src, options);
  dmg::write_generated(ds, out_path);
  std::cout << dmg::dgr_table(dmg::dgr_rows(ds));
  std::cout << "wrote " << out_path << " (+ sidecar "
            << dmg::sidecar_path(out_path) << ")\n";
  if (!ds.target_reached) {
    std::cerr << "target of " << n << " successes not reached within "
              << ds.attempts << " attempts; partial dataset written\n";
    return 2;
  }
  return 0;
}

int cmd_stats(const std::string& path, bool csv) {
  const dmg::GeneratedDataset ds = dmg::read_generated(path);
  if (csv) {
    std::cout << dmg::dgr_csv(dmg::dgr_rows(ds));
  } else {
    std::cout << dmg::dgr_table(dmg::dgr_rows(ds));
    std::cout << dmg::failure_breakdown(ds);
  }
  return 0;
}

int cmd_replay(const std::string& path, std::size_t index,
               const std::string& csv_path) {
  const dmg::GeneratedDataset ds = dmg::read_generated(path);
  if (csv_path.empty()) {
    dmg::write_replay_csv(std::cout, ds, index);
  } else {
    std::ofstream out(csv_path);
    if (!out) {
      throw dmg::IoError("cannot open \"" + csv_path + "\" for writing");
    }
    dmg::write_replay_csv(out, ds, index);
    std::cout << "wrote " << csv_path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"demonstration-synthesis dataset generator"};
  app.require_subcommand(1);

  // demo-synth ------------------------------------------------------------
  auto* synth = app.add_subcommand(
      "demo-synth", "synthesize scripted source demonstrations");
  std::string task = "stack";
  std::string task_json;
  std::string variant = "D0";
  std::uint64_t seed = 0;
  int n_demos = 1;
  std::string out_path = "source.dmg";
  synth->add_option("--task", task, "built-in task name")
      ->default_str("stack");
  synth->add_option("--task-json", task_json,
                    "task spec JSON file (overrides --task)");
  synth->add_option("--variant", variant, "reset distribution")
      ->default_str("D0");
  synth->add_option("--seed", seed, "scene RNG seed");
  synth->add_option("--n-demos", n_demos, "number of demos (1 or 2)")
      ->check(CLI::Range(1, 2));
  synth->add_option("--out", out_path, "output source dataset path")
      ->required();

  // generate ----------------------------------------------------------------
  auto* gen = app.add_subcommand(
      "generate", "expand a source dataset into a generated dataset");
  std::string src_path;
  std::string gen_variant;
  int n = 100;
  std::uint64_t gen_seed = 0;
  std::string gen_out = "dataset.dmg";
  std::optional<double> perturb_frac;
  double perturb_box = 0.05;
  double perturb_yaw = 0.0;
  std::string boundaries;
  std::uint64_t max_attempts = 0;
  unsigned threads = 0;
  dmg::ControllerModel default_ctrl;
  double ctrl_lambda = default_ctrl.lambda;
  double ctrl_max_step = default_ctrl.max_step_translation;
  double ctrl_max_rot = default_ctrl.max_step_rotation;
  gen->add_option("--src", src_path, "source dataset path")->required();
  gen->add_option("--variant", gen_variant,
                  "reset distribution (default: the source's)");
  gen->add_option("--n", n, "success target")->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed, "first trial seed");
  gen->add_option("--out", gen_out, "output dataset path")->required();
  gen->add_option("--perturb-frac", perturb_frac,
                  "enable a mid-pick perturbation at this fraction of the "
                  "segment");
  gen->add_option("--perturb-box", perturb_box,
                  "perturbation half-range in x/y [m]");
  gen->add_option("--perturb-yaw", perturb_yaw,
                  "perturbation yaw half-range [rad]");
  gen->add_option("--boundaries", boundaries,
                  "manual segment boundaries (comma-separated step indices) "
                  "applied to every demo");
  gen->add_option("--max-attempts", max_attempts,
                  "attempt budget (default 100x target)");
  gen->add_option("--threads", threads,
                  "worker threads (default: DMG_THREADS or hardware)");
  gen->add_option("--ctrl-lambda", ctrl_lambda, "controller lag rate [1/s]");
  gen->add_option("--ctrl-max-step", ctrl_max_step,
                  "controller per-step translation cap [m]");
  gen->add_option("--ctrl-max-rot", ctrl_max_rot,
                  "controller per-step rotation cap [rad]");

  // stats -------------------------------------------------------------------
  auto* stats = app.add_subcommand("stats", "report DGR and failure modes");
  std::string stats_path;
  bool stats_csv = false;
  stats->add_option("file", stats_path, "generated dataset path")->required();
  stats->add_flag("--csv", stats_csv, "emit CSV instead of a table");

  // replay ------------------------------------------------------------------
  auto* replay = app.add_subcommand("replay", "dump one record as CSV");
  std::string replay_path;
  std::size_t replay_index = 0;
  std::string replay_csv;
  replay->add_option("file", replay_path, "generated dataset path")
      ->required();
  replay->add_option("--index", replay_index, "record index");
  replay->add_option("--csv", replay_csv,
                     "output CSV path (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      return cmd_demo_synth(task, task_json, variant, seed, n_demos,
                            out_path);
    }
    if (gen->parsed()) {
      return cmd_generate(src_path, gen_variant, n, gen_seed, gen_out,
                          perturb_frac, perturb_box, perturb_yaw, boundaries,
                          max_attempts, threads, ctrl_lambda, ctrl_max_step,
                          ctrl_max_rot);
    }
    if (stats->parsed()) return cmd_stats(stats_path, stats_csv);
    if (replay->parsed()) {
      return cmd_replay(replay_path, replay_index, replay_csv);
    }
  } catch (const dmg::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
