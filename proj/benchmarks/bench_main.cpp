#include <benchmark/benchmark.h>

#include <random>

#include "dmg/datagen.hpp"
#include "dmg/demo_synth.hpp"
#include "dmg/dmp.hpp"
#include "dmg/scene.hpp"
#include "dmg/se3.hpp"

namespace {

std::vector<dmg::Pose> min_jerk_segment(int n_steps) {
  std::vector<dmg::Pose> poses;
  const Eigen::Vector3d a(0.0, -0.2, 0.25);
  const Eigen::Vector3d b(0.15, 0.1, 0.02);
  for (int k = 0; k < n_steps; ++k) {
    const double u = static_cast<double>(k) / (n_steps - 1);
    const double s = u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
    poses.emplace_back(Eigen::Vector3d((1 - s) * a + s * b),
                       dmg::yaw_quat(0.6 * s));
  }
  return poses;
}

void BM_FitSegment(benchmark::State& state) {
  const auto segment = min_jerk_segment(static_cast<int>(state.range(0)));
  const dmg::DmpConfig config;
  for (auto _ : state) {
    benchmark::DoNotOptimize(dmg::fit_segment(segment, config));
  }
}
BENCHMARK(BM_FitSegment)->Arg(50)->Arg(100)->Arg(200);

void BM_Rollout(benchmark::State& state) {
  const auto segment = min_jerk_segment(static_cast<int>(state.range(0)));
  const dmg::DmpParams params = dmg::fit_segment(segment, dmg::DmpConfig{});
  for (auto _ : state) {
    benchmark::DoNotOptimize(dmg::rollout(params, segment.front()));
  }
}
BENCHMARK(BM_Rollout)->Arg(50)->Arg(100)->Arg(200);

void BM_Retarget(benchmark::State& state) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const dmg::Pose obj(Eigen::Vector3d(u(rng), u(rng), u(rng)),
                      dmg::yaw_quat(u(rng)));
  const dmg::Pose target(Eigen::Vector3d(u(rng), u(rng), u(rng)),
                         dmg::yaw_quat(u(rng)));
  const dmg::Pose rel = dmg::relative_target(obj, target);
  for (auto _ : state) {
    benchmark::DoNotOptimize(dmg::retarget(rel, obj));
  }
}
BENCHMARK(BM_Retarget);

void BM_GenerateTrial(benchmark::State& state) {
  const dmg::TaskSpec spec = dmg::TaskSpec::builtin("stack");
  const dmg::SourceDataset src = dmg::synthesize_source(spec, "D0", 1, 1);
  const dmg::FitCache fits = dmg::FitCache::build(src, dmg::DmpConfig{});
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(dmg::generate_trial(
        src, fits, "D0", seed++, std::nullopt, dmg::ControllerModel{}));
  }
}
BENCHMARK(BM_GenerateTrial);

}  // namespace

BENCHMARK_MAIN();
