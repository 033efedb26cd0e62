#include "dmg/dmp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dmg/errors.hpp"

namespace dmg {
namespace {

// Neighboring bases intersect at this activation height at the midpoint
// between their centers, which keeps the summed activation comfortably
// above the floor for any segment duration.
constexpr double kOverlapHeight = 0.1;

// Largest admissible rotation-vector jump between consecutive demo samples;
// beyond this the sign-continuous unwrap is ambiguous.
constexpr double kMaxSampleRotationJump = 0.5;

}  // namespace

void DmpConfig::validate() const {
  std::ostringstream bad;
  if (!(alpha_y > 0.0)) bad << "alpha_y must be positive; ";
  if (!(beta_y > 0.0)) bad << "beta_y must be positive; ";
  if (!(alpha_x > 0.0)) bad << "alpha_x must be positive; ";
  if (n_bases < 1) bad << "n_bases must be at least 1; ";
  if (!(dt > 0.0)) bad << "dt must be positive; ";
  if (!(tau > 0.0)) bad << "tau must be positive; ";
  const std::string msg = bad.str();
  if (!msg.empty()) throw SpecError("invalid DMP config: " + msg);
}

double canonical_value(const DmpConfig& config, double t) {
  return std::exp(-config.alpha_x * t / config.tau);
}

BasisLayout BasisLayout::for_duration(const DmpConfig& config,
                                      double duration) {
  config.validate();
  if (!(duration > 0.0)) {
    throw SpecError("basis layout requires a positive duration");
  }
  const int n = config.n_bases;
  BasisLayout layout;
  layout.centers.resize(n);
  layout.widths.resize(n);
  for (int i = 0; i < n; ++i) {
    const double t_i = (n == 1) ? 0.0 : duration * i / (n - 1);
    layout.centers[i] = canonical_value(config, t_i);
  }
  const double k = -std::log(kOverlapHeight);
  for (int i = 0; i < n; ++i) {
    if (i + 1 < n) {
      const double gap = layout.centers[i] - layout.centers[i + 1];
      layout.widths[i] = k / (0.25 * gap * gap);
    } else if (n >= 2) {
      layout.widths[i] = layout.widths[i - 1];
    } else {
      layout.widths[i] = 1.0;
    }
  }
  layout.validate(canonical_value(config, duration));
  return layout;
}

void BasisLayout::validate(double x_end) const {
  if (centers.size() < 1 || centers.size() != widths.size()) {
    throw SpecError("basis layout: centers/widths size mismatch");
  }
  if (!(centers[0] <= 1.0)) {
    throw SpecError("basis layout: centers must lie in (0, 1]");
  }
  for (int i = 0; i < centers.size(); ++i) {
    if (!(centers[i] > 0.0)) {
      throw SpecError("basis layout: centers must be positive");
    }
    if (i > 0 && !(centers[i] < centers[i - 1])) {
      throw SpecError("basis layout: centers must be strictly decreasing");
    }
    if (!(widths[i] > 0.0) || !std::isfinite(widths[i])) {
      throw SpecError("basis layout: widths must be positive and finite");
    }
  }
  if (!(x_end > 0.0) || x_end > centers[0]) {
    throw SpecError("basis layout: phase interval end out of range");
  }
  // Probe the summed activation on a dense grid, log-spaced in x (i.e.
  // uniform in time), which is how rollout phases are actually distributed.
  const int n_probe = 4096;
  const double log_start = std::log(centers[0]);
  const double log_end = std::log(x_end);
  for (int j = 0; j <= n_probe; ++j) {
    const double lx = log_start + (log_end - log_start) * j / n_probe;
    const double sum = basis_activations(*this, std::exp(lx)).sum();
    if (!(sum > kActivationFloor)) {
      throw SpecError(
          "basis layout: summed activation underflows the floor inside the "
          "phase interval");
    }
  }
}

Eigen::VectorXd basis_activations(const BasisLayout& layout, double x) {
  Eigen::VectorXd psi(layout.centers.size());
  for (int i = 0; i < layout.centers.size(); ++i) {
    const double d = x - layout.centers[i];
    psi[i] = std::exp(-layout.widths[i] * d * d);
  }
  return psi;
}

double forcing_term(const DmpParams& params, double x, double g, double y0,
                    int dim, bool strict) {
  const double amplitude = g - y0;
  if (std::abs(amplitude) < kAmplitudeFloor) {
    if (strict && params.weights.col(dim).cwiseAbs().maxCoeff() > 0.0) {
      throw DegenerateAmplitudeError(
          "forcing amplitude |g - y0| is below the floor but nonzero basis "
          "weights were fitted for this dimension");
    }
    return 0.0;
  }
  const Eigen::VectorXd psi = basis_activations(params.layout, x);
  const double denom = psi.sum();
  if (!(denom > 0.0)) return 0.0;
  const double blended = psi.dot(params.weights.col(dim)) / denom;
  return blended * x * amplitude;
}

Eigen::VectorXd invert_demo(const Eigen::VectorXd& y, const DmpConfig& config,
                            double g, double y0) {
  (void)y0;  // The transformation system only references g and the samples.
  const Eigen::Index p = y.size();
  if (p < 3) {
    throw TooShortError("demo inversion needs at least 3 samples");
  }
  const double dt = config.dt;
  Eigen::VectorXd yd(p), ydd(p);
  for (Eigen::Index t = 1; t + 1 < p; ++t) {
    yd[t] = (y[t + 1] - y[t - 1]) / (2.0 * dt);
    ydd[t] = (y[t + 1] - 2.0 * y[t] + y[t - 1]) / (dt * dt);
  }
  yd[0] = (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * dt);
  yd[p - 1] = (3.0 * y[p - 1] - 4.0 * y[p - 2] + y[p - 3]) / (2.0 * dt);
  if (p >= 4) {
    ydd[0] = (2.0 * y[0] - 5.0 * y[1] + 4.0 * y[2] - y[3]) / (dt * dt);
    ydd[p - 1] =
        (2.0 * y[p - 1] - 5.0 * y[p - 2] + 4.0 * y[p - 3] - y[p - 4]) /
        (dt * dt);
  } else {
    ydd[0] = (y[0] - 2.0 * y[1] + y[2]) / (dt * dt);
    ydd[p - 1] = ydd[0];
  }
  const double tau = config.tau;
  Eigen::VectorXd f(p);
  for (Eigen::Index t = 0; t < p; ++t) {
    f[t] = tau * tau * ydd[t] -
           config.alpha_y * (config.beta_y * (g - y[t]) - tau * yd[t]);
  }
  return f;
}

Eigen::VectorXd train_lwr(const Eigen::VectorXd& f_target,
                          const Eigen::VectorXd& phases,
                          const BasisLayout& layout, double g, double y0,
                          int* singular_count) {
  if (f_target.size() != phases.size()) {
    throw SpecError("train_lwr: forcing/phase length mismatch");
  }
  const Eigen::Index n = layout.centers.size();
  const double amplitude = g - y0;
  Eigen::VectorXd num = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd den = Eigen::VectorXd::Zero(n);
  for (Eigen::Index t = 0; t < phases.size(); ++t) {
    const double xi = phases[t] * amplitude;
    const Eigen::VectorXd psi = basis_activations(layout, phases[t]);
    num += psi * (xi * f_target[t]);
    den += psi * (xi * xi);
  }
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  int singular = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (den[i] < kLwrDenominatorFloor) {
      ++singular;
    } else {
      w[i] = num[i] / den[i];
    }
  }
  if (singular_count != nullptr) *singular_count = singular;
  return w;
}

namespace {

// Forcing target solved from the semi-implicit Euler recursion itself
// (v_{t+1} = v_t + dt*acc_t, y_{t+1} = y_t + dt*v_{t+1}, v_0 = 0) rather
// than from smooth-derivative estimates. With these samples the integrator
// replays the demo exactly, so basis regression is the only reproduction
// error. That matters once tau is tied to the segment duration: the softer
// spring no longer masks the mismatch between continuum derivatives and the
// discrete update.
Eigen::VectorXd invert_demo_discrete(const Eigen::VectorXd& y,
                                     const DmpConfig& config, double g) {
  const Eigen::Index p = y.size();
  if (p < 3) {
    throw TooShortError("demo inversion needs at least 3 samples");
  }
  const double dt = config.dt;
  const double tau = config.tau;
  Eigen::VectorXd f(p);
  double v = 0.0;
  for (Eigen::Index t = 0; t + 1 < p; ++t) {
    const double v_next = (y[t + 1] - y[t]) / dt;
    const double acc = (v_next - v) / dt;
    f[t] = tau * tau * acc -
           config.alpha_y * (config.beta_y * (g - y[t]) - tau * v);
    v = v_next;
  }
  // The rollout never evaluates forcing at the final sample; continue the
  // sequence with zero acceleration so the last basis trains on a finite,
  // settled value.
  f[p - 1] = -config.alpha_y * (config.beta_y * (g - y[p - 1]) - tau * v);
  return f;
}

}  // namespace

Vector6d pose_to_chart(const DmpParams& params, const Pose& pose) {
  Vector6d y;
  y.head<3>() = pose.position();
  const Eigen::Quaterniond rel =
      (params.chart_base.conjugate() * pose.orientation()).normalized();
  y.tail<3>() = quat_log(rel);
  return y;
}

Pose chart_to_pose(const DmpParams& params, const Vector6d& y) {
  const Eigen::Quaterniond q =
      params.chart_base * quat_exp(Eigen::Vector3d(y.tail<3>()));
  return Pose(y.head<3>(), q);
}

double chart_rotation_angle(const DmpParams& params, const Pose& pose) {
  const double d = std::min(
      1.0, std::abs(params.chart_base.dot(pose.orientation())));
  return 2.0 * std::acos(d);
}

RolloutState rollout_step(const DmpParams& params, const RolloutState& state,
                          const Vector6d& g_now, Vector6d* forcing_out) {
  const DmpConfig& c = params.config;
  Vector6d f;
  for (int d = 0; d < 6; ++d) {
    f[d] = forcing_term(params, state.x, params.g_demo[d], params.y0[d], d);
  }
  if (forcing_out != nullptr) *forcing_out = f;
  const Vector6d acc =
      (c.alpha_y * (c.beta_y * (g_now - state.y) - c.tau * state.y_dot) + f) /
      (c.tau * c.tau);
  RolloutState next;
  next.y_dot = state.y_dot + c.dt * acc;
  next.y = state.y + c.dt * next.y_dot;
  next.step = state.step + 1;
  next.x = canonical_value(c, next.step * c.dt);
  return next;
}

DmpParams fit_segment(const std::vector<Pose>& segment,
                      const DmpConfig& config) {
  config.validate();
  const int p = static_cast<int>(segment.size());
  if (p < 3) {
    throw TooShortError("segment fit needs at least 3 samples, got " +
                        std::to_string(p));
  }
  DmpParams params;
  params.config = config;
  params.n_steps = p;
  params.duration = (p - 1) * config.dt;
  // tau scales the segment's own duration: the transformation and canonical
  // systems run in movement time, so a goal correction settles over a fixed
  // fraction of the segment no matter how many steps it spans. A heavily
  // retargeted long segment eases toward its new goal instead of snapping
  // there within a few control periods.
  params.config.tau = config.tau * params.duration;
  params.layout = BasisLayout::for_duration(params.config, params.duration);
  params.chart_base = segment.front().orientation();

  // 6-D tracks: world position plus the sign-continuous rotation vector
  // relative to the segment-start orientation.
  Eigen::MatrixXd tracks(p, 6);
  Eigen::Vector3d prev_r = Eigen::Vector3d::Zero();
  for (int t = 0; t < p; ++t) {
    tracks.row(t).head<3>() = segment[t].position();
    const Eigen::Quaterniond rel =
        (params.chart_base.conjugate() * segment[t].orientation())
            .normalized();
    Eigen::Vector3d r = quat_log(rel);
    if (t > 0 && r.norm() > 1e-9) {
      const Eigen::Vector3d alt = r - 2.0 * M_PI * r.normalized();
      if ((alt - prev_r).norm() < (r - prev_r).norm()) r = alt;
    }
    if (r.norm() > kChartRadius) {
      throw ChartRangeError(
          "segment orientation leaves the axis-angle chart (rotation " +
          std::to_string(r.norm()) + " rad from the segment start)");
    }
    if (t > 0 && (r - prev_r).norm() > kMaxSampleRotationJump) {
      throw ChartRangeError(
          "segment orientation jumps too far between consecutive samples to "
          "unwrap unambiguously");
    }
    tracks.row(t).tail<3>() = r;
    prev_r = r;
  }

  params.y0 = tracks.row(0);
  params.g_demo = tracks.row(p - 1);
  Eigen::VectorXd phases(p);
  for (int t = 0; t < p; ++t) {
    phases[t] = canonical_value(params.config, t * config.dt);
  }
  params.weights = Eigen::MatrixXd::Zero(config.n_bases, 6);
  for (int d = 0; d < 6; ++d) {
    const double amplitude = params.g_demo[d] - params.y0[d];
    if (std::abs(amplitude) < kAmplitudeFloor) continue;
    const Eigen::VectorXd f_d =
        invert_demo_discrete(tracks.col(d), params.config, params.g_demo[d]);
    params.weights.col(d) =
        train_lwr(f_d, phases, params.layout, params.g_demo[d], params.y0[d]);
  }
  return params;
}

std::vector<Pose> rollout(const DmpParams& params, const Pose& start,
                          const std::function<Vector6d(int)>& goal_provider) {
  std::vector<Pose> out;
  out.reserve(params.n_steps);
  out.push_back(start);
  RolloutState rs;
  rs.y = pose_to_chart(params, start);
  rs.y_dot = Vector6d::Zero();
  rs.x = 1.0;
  rs.step = 0;
  for (int k = 0; k + 1 < params.n_steps; ++k) {
    rs = rollout_step(params, rs, goal_provider(k));
    out.push_back(chart_to_pose(params, rs.y));
  }
  return out;
}

std::vector<Pose> rollout(const DmpParams& params, const Pose& start) {
  const Vector6d g = params.g_demo;
  return rollout(params, start, [&g](int) { return g; });
}

}  // namespace dmg
