#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <functional>
#include <vector>

#include "dmg/se3.hpp"

namespace dmg {

using Vector6d = Eigen::Matrix<double, 6, 1>;

/// Per-dimension demo amplitudes |g - y0| below this floor get zero weights
/// for that dimension (the forcing scale is degenerate).
inline constexpr double kAmplitudeFloor = 1e-6;

/// Minimum summed basis activation allowed anywhere on the phase interval
/// covered by a fit.
inline constexpr double kActivationFloor = 1e-10;

/// Denominator floor for a single basis in locally weighted regression;
/// below it the basis gets weight zero (reported via singular_count).
inline constexpr double kLwrDenominatorFloor = 1e-14;

/// Rotations from the segment-start orientation beyond this angle leave the
/// axis-angle chart (injectivity radius pi minus a safety margin).
inline constexpr double kChartRadius = M_PI - 0.1;

/// Scalar gains and discretization for one DMP. Shared by all 6 dimensions
/// of a segment fit.
struct DmpConfig {
  double alpha_y = 25.0;         ///< Spring gain.
  double beta_y = 25.0 / 4.0;    ///< Damper ratio gain (critical at alpha_y/4).
  double alpha_x = 1.0;          ///< Canonical decay rate.
  int n_bases = 25;              ///< Gaussian bases per dimension.
  double dt = 0.05;              ///< Integration/sample period [s].
  double tau = 1.0;              ///< Dimensionless speed scale. Fits run the
                                 ///< system on tau x segment duration.

  /// Throws SpecError if any field is outside its legal range.
  void validate() const;
};

/// Phase value x(t) = exp(-alpha_x * t / tau), the closed-form solution of
/// the canonical system x' = -alpha_x * x / tau with x(0) = 1.
double canonical_value(const DmpConfig& config, double t);

/// Gaussian basis centers and widths in phase space, laid out for a given
/// segment duration: centers at the phase values of equally spaced times
/// (so c0 = 1, strictly decreasing), widths chosen so each Gaussian decays
/// to a fixed overlap height at the midpoint to its neighbor, keeping the
/// summed activation bounded away from zero for any duration.
struct BasisLayout {
  Eigen::VectorXd centers;
  Eigen::VectorXd widths;

  static BasisLayout for_duration(const DmpConfig& config, double duration);

  /// Throws SpecError unless centers are strictly decreasing in (0, 1],
  /// widths positive, and the summed activation stays above the floor on a
  /// dense grid over [x_end, 1].
  void validate(double x_end) const;
};

/// Activations psi_i(x) = exp(-h_i (x - c_i)^2) for all bases.
Eigen::VectorXd basis_activations(const BasisLayout& layout, double x);

/// One fitted segment: everything needed to roll the motion out again.
/// Dimensions 0..2 are world position; 3..5 are the rotation vector of the
/// orientation relative to `chart_base` (the demo segment-start
/// orientation), which anchors the axis-angle chart.
struct DmpParams {
  DmpConfig config;
  BasisLayout layout;
  Eigen::MatrixXd weights;  ///< n_bases x 6.
  Vector6d y0 = Vector6d::Zero();
  Vector6d g_demo = Vector6d::Zero();
  double duration = 0.0;    ///< Segment duration (n_steps - 1) * dt [s].
  int n_steps = 0;          ///< Demo sample count P; rollouts reproduce it.
  Eigen::Quaterniond chart_base = Eigen::Quaterniond::Identity();
};

/// Forcing term f(x) for one dimension: the basis-weighted average scaled
/// by x * (g - y0). `g` and `y0` are the *demo* endpoint and start for the
/// frozen-amplitude convention. If `strict` and the amplitude is degenerate
/// while weights are nonzero, throws DegenerateAmplitudeError; otherwise a
/// degenerate amplitude yields 0.
double forcing_term(const DmpParams& params, double x, double g, double y0,
                    int dim, bool strict = false);

/// Recovers the forcing profile a 1-D demo implies:
/// f_d = ydd - alpha_y (beta_y (g - y) - tau*yd), with derivatives from
/// central differences (second-order one-sided stencils at the ends).
/// Requires y.size() >= 3 (TooShortError otherwise).
Eigen::VectorXd invert_demo(const Eigen::VectorXd& y, const DmpConfig& config,
                            double g, double y0);

/// Closed-form locally weighted regression (one independent problem per
/// basis): w_i = sum_t psi_i xi_t f_t / sum_t psi_i xi_t^2 with
/// xi_t = x_t (g - y0). Bases whose denominator falls below the floor get
/// weight 0 and are counted in *singular_count (if given).
Eigen::VectorXd train_lwr(const Eigen::VectorXd& f_target,
                          const Eigen::VectorXd& phases,
                          const BasisLayout& layout, double g, double y0,
                          int* singular_count = nullptr);

/// Maps a world pose into the 6-D chart of `params` (position + rotation
/// vector relative to chart_base). Total map; use chart_rotation_angle to
/// check the injectivity radius first.
Vector6d pose_to_chart(const DmpParams& params, const Pose& pose);

/// Inverse of pose_to_chart.
Pose chart_to_pose(const DmpParams& params, const Vector6d& y);

/// Rotation angle between `pose` and the chart anchor, in [0, pi].
double chart_rotation_angle(const DmpParams& params, const Pose& pose);

/// Integration state for step-wise rollout.
struct RolloutState {
  Vector6d y = Vector6d::Zero();
  Vector6d y_dot = Vector6d::Zero();
  double x = 1.0;
  int step = 0;  ///< Index of the sample `y` corresponds to.
};

/// Advances one semi-implicit Euler step against the live goal `g_now`
/// (spring term only; forcing amplitude stays frozen at demo values).
/// If `forcing_out` is non-null it receives the forcing vector used.
RolloutState rollout_step(const DmpParams& params, const RolloutState& state,
                          const Vector6d& g_now,
                          Vector6d* forcing_out = nullptr);

/// Fits the 6-DoF segment DMP: positions fit directly; orientations are
/// charted relative to the first sample's orientation with sign-continuous
/// unwrapping. Throws TooShortError (P < 3) or ChartRangeError (track
/// leaves the chart or jumps more than 0.5 rad between samples).
DmpParams fit_segment(const std::vector<Pose>& segment,
                      const DmpConfig& config);

/// Rolls out a fitted segment from `start`, querying `goal_provider(k)` for
/// the live 6-D goal before computing step k -> k+1. Returns exactly
/// params.n_steps poses with out.front() == start.
std::vector<Pose> rollout(const DmpParams& params, const Pose& start,
                          const std::function<Vector6d(int)>& goal_provider);

/// Convenience rollout with a fixed goal equal to the demo goal.
std::vector<Pose> rollout(const DmpParams& params, const Pose& start);

}  // namespace dmg
