#pragma once

// Exponential-coordinate form of the replicator flow. Writing
// x_i = exp(v_i - G) with dv_i/dt = f_i(x) and G = log sum_j exp(v_j) gives
// dG/dt = fbar(x) and recovers dx_i/dt = x_i (f_i - fbar). For
// f(x) = A log(x) + b with A 1 = 0 the v-equation is linear, dv/dt = A v + b,
// and is solved in closed form.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "replidyn/core.hpp"
#include "replidyn/dynamics.hpp"
#include "replidyn/ode.hpp"

namespace replidyn {

// Gauge-fixed coordinates: sum v = 0, G = log_sum_exp(v).
struct ExponentialCoords {
  std::vector<double> v;
  double G;
};

// p(k; theta) = exp(C(k) + sum_i theta_i F_i(k) - psi) over outcomes 0..n-1.
struct ExponentialFamilySpec {
  std::size_t outcomes = 0;
  std::function<double(std::size_t)> base_measure;
  std::vector<std::function<double(std::size_t)>> statistics;
  std::vector<double> theta;
  double psi = 0.0;

  double density(std::size_t outcome) const;
  std::vector<double> densities() const;
};

ExponentialCoords to_coords(const Distribution& x);
// Accepts any gauge; overflow-safe.
Distribution from_coords(std::span<const double> v);
inline Distribution from_coords(const ExponentialCoords& c) { return from_coords(c.v); }

// Integrates dv/dt = f(softmax(v)) from the gauge-fixed coordinates of x0.
// Log-linear landscapes are evaluated from v directly (log x = v - G), so no
// interiority floor applies along the run.
// The trajectory carries G(t) as its normalizer series and a dense output in
// v-space. Throws NumericsError if the normalizer-rate residual exceeds
// kNormalizerRateTolerance.
Trajectory integrate_in_coords(const Distribution& x0, const FitnessLandscape& landscape,
                               double t_end, const IntegratorConfig& config = {});

inline constexpr double kNormalizerRateTolerance = 1e-5;

// Largest |dG/dt - fbar| / max(|fbar|, max_i |f_i|) over interior sample
// times, with dG/dt taken by centered differences of width min(1e-3, T/4)
// through the dense output.
double normalizer_rate_residual(const Trajectory& coords_trajectory,
                                const FitnessLandscape& landscape);

// Closed-form solution of dv/dt = A v + b at the requested times (strictly
// increasing, >= 0). Requires every row of A to sum to zero.
Trajectory loglinear_solution(const Matrix& A, std::span<const double> b, const Distribution& x0,
                              std::span<const double> ts);

// exp(M); Pade approximant with scaling and squaring.
Matrix matrix_exponential(const Matrix& M);

ExponentialFamilySpec categorical_expfamily(const Distribution& x);

}  // namespace replidyn
