#pragma once

// Discrete and continuous replicator dynamics.
//
//   discrete:    x_i' = x_i f_i(x) / fbar(x)
//   continuous:  dx_i/dt = x_i (f_i(x) - fbar(x))
//
// plus the velocity-rescaled limit of the discrete map and the
// natural-gradient (Shahshahani) form of the continuous field.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "replidyn/core.hpp"
#include "replidyn/ode.hpp"

namespace replidyn {

enum class StopReason { Completed, FixedPoint };
std::string_view to_string(StopReason r);

// Coordinates the dense interpolant of a trajectory lives in.
enum class DenseSpace { Simplex, Logits };

struct Trajectory {
  std::vector<double> times;
  std::vector<Distribution> states;
  std::vector<double> mean_fitness;
  std::vector<double> entropy;
  std::optional<std::vector<double>> kl_to_reference;
  // G(t) of exponential-coordinate runs.
  std::optional<std::vector<double>> normalizer;
  // Per-step D_KL(posterior || prior) of sequential inference; entry 0 is 0.
  std::optional<std::vector<double>> information_gain;
  std::optional<DenseOutput> dense;
  DenseSpace dense_space = DenseSpace::Simplex;
  StopReason stop_reason = StopReason::Completed;

  std::size_t size() const noexcept { return states.size(); }
  std::size_t dimension() const { return states.front().size(); }
  const Distribution& terminal() const { return states.back(); }

  // Interpolated state; requires dense output.
  Distribution state_at(double t) const;
  // Throws InvariantError if times are not strictly increasing or series
  // lengths disagree.
  void validate() const;
};

// Builds a trajectory and fills mean_fitness, entropy and (when a reference
// is given) kl_to_reference.
Trajectory make_trajectory(std::vector<double> times, std::vector<Distribution> states,
                           const FitnessLandscape& landscape,
                           const std::optional<Distribution>& reference = std::nullopt);

// points >= 2 equally spaced values covering [t0, t1].
std::vector<double> uniform_grid(double t0, double t1, std::size_t points);

// Re-samples a dense trajectory onto `grid` (within its time span).
Trajectory resample(const Trajectory& trajectory, std::span<const double> grid,
                    const FitnessLandscape& landscape,
                    const std::optional<Distribution>& reference = std::nullopt);

// max |x' - x| below which a discrete orbit is considered stationary.
inline constexpr double kFixedPointTolerance = 1e-14;
// |sum x - 1| above which integrated states are rescaled onto the simplex.
inline constexpr double kRenormalizationThreshold = 1e-12;

Distribution discrete_step(const Distribution& x, const FitnessLandscape& landscape);

struct DiscreteOrbitOptions {
  bool stop_at_fixed_point = true;
  std::optional<Distribution> reference;
};

// Up to steps+1 states at generations 0..steps; shorter when a fixed point
// is reached (stop_reason = FixedPoint). Errors are rethrown as StepError
// nesting the original.
Trajectory discrete_orbit(const Distribution& x0, const FitnessLandscape& landscape,
                          std::size_t steps, const DiscreteOrbitOptions& options = {});

TangentVector replicator_rhs(const Distribution& x, const FitnessLandscape& landscape);
TangentVector pre_velocity_rhs(const Distribution& x, const FitnessLandscape& landscape);

Trajectory integrate(const Distribution& x0, const FitnessLandscape& landscape, double t_end,
                     const IntegratorConfig& config = {},
                     const std::optional<Distribution>& reference = std::nullopt);

using GradientFn = std::function<std::vector<double>(const Distribution&)>;
using ScalarFn = std::function<double(std::span<const double>)>;

// x_i (g_i - sum_j x_j g_j) with g = potential_gradient(x).
TangentVector natural_gradient(const GradientFn& potential_gradient, const Distribution& x);

// Central differences in ambient coordinates, step 1e-6 * max(1, |x_i|).
std::vector<double> finite_difference_gradient(const ScalarFn& potential, std::span<const double> x);

namespace detail {
// x_i (f_i - weighted_mean(x, f)), last component balanced so that a left to
// right sum is exactly zero.
std::vector<double> replicator_field(std::span<const double> x, std::span<const double> f);
}  // namespace detail

}  // namespace replidyn
