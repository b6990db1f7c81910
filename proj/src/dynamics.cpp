#include "replidyn/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <string>

#include "replidyn/errors.hpp"

namespace replidyn {

std::string_view to_string(StopReason r) {
  return r == StopReason::FixedPoint ? "fixed-point" : "completed";
}

// ---------------------------------------------------------------------------
// Trajectory

Distribution Trajectory::state_at(double t) const {
  if (!dense) throw DomainError("Trajectory::state_at: no dense output recorded");
  std::vector<double> y = (*dense)(t);
  if (dense_space == DenseSpace::Logits) return Distribution(softmax(y));
  return Distribution::normalized(std::move(y));
}

void Trajectory::validate() const {
  if (states.empty() || times.size() != states.size()) {
    throw InvariantError("Trajectory: times and states must be non-empty and of equal length");
  }
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (!(times[k] > times[k - 1])) throw InvariantError("Trajectory: times not strictly increasing");
  }
  auto check = [&](const std::vector<double>& s, const char* name) {
    if (s.size() != states.size()) {
      throw InvariantError(std::string("Trajectory: series '") + name + "' has wrong length");
    }
  };
  check(mean_fitness, "mean_fitness");
  check(entropy, "entropy");
  if (kl_to_reference) check(*kl_to_reference, "kl_to_reference");
  if (normalizer) check(*normalizer, "normalizer");
  if (information_gain) check(*information_gain, "information_gain");
}

Trajectory make_trajectory(std::vector<double> times, std::vector<Distribution> states,
                           const FitnessLandscape& landscape,
                           const std::optional<Distribution>& reference) {
  Trajectory tr;
  tr.times = std::move(times);
  tr.states = std::move(states);
  tr.mean_fitness.reserve(tr.states.size());
  tr.entropy.reserve(tr.states.size());
  for (const auto& s : tr.states) {
    tr.mean_fitness.push_back(mean_fitness(landscape, s));
    tr.entropy.push_back(shannon_entropy(s));
  }
  if (reference) {
    std::vector<double> kl;
    kl.reserve(tr.states.size());
    for (const auto& s : tr.states) kl.push_back(kl_divergence(*reference, s));
    tr.kl_to_reference = std::move(kl);
  }
  tr.validate();
  return tr;
}

std::vector<double> uniform_grid(double t0, double t1, std::size_t points) {
  if (points < 2 || !(t1 > t0)) throw InvariantError("uniform_grid: need points >= 2 and t1 > t0");
  std::vector<double> g(points);
  const double dt = (t1 - t0) / static_cast<double>(points - 1);
  for (std::size_t k = 0; k < points; ++k) g[k] = t0 + dt * static_cast<double>(k);
  g.back() = t1;
  return g;
}

Trajectory resample(const Trajectory& trajectory, std::span<const double> grid,
                    const FitnessLandscape& landscape, const std::optional<Distribution>& reference) {
  std::vector<Distribution> states;
  states.reserve(grid.size());
  for (double t : grid) states.push_back(trajectory.state_at(t));
  Trajectory out = make_trajectory({grid.begin(), grid.end()}, std::move(states), landscape, reference);
  out.dense = trajectory.dense;
  out.dense_space = trajectory.dense_space;
  out.stop_reason = trajectory.stop_reason;
  return out;
}

// ---------------------------------------------------------------------------
// Vector fields

namespace detail {

std::vector<double> replicator_field(std::span<const double> x, std::span<const double> f) {
  const double fbar = weighted_mean(x, f);
  const std::size_t n = x.size();
  std::vector<double> dx(n);
  double partial = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    dx[i] = x[i] * (f[i] - fbar);
    partial += dx[i];
  }
  dx[n - 1] = -partial;
  return dx;
}

}  // namespace detail

TangentVector replicator_rhs(const Distribution& x, const FitnessLandscape& landscape) {
  return TangentVector(detail::replicator_field(x.weights(), evaluate(landscape, x)));
}

TangentVector pre_velocity_rhs(const Distribution& x, const FitnessLandscape& landscape) {
  const std::vector<double> f = evaluate(landscape, x);
  const double fbar = weighted_mean(x.weights(), f);
  if (!(fbar > 0.0)) {
    throw NonpositiveMeanFitnessError("pre_velocity_rhs: mean fitness " + std::to_string(fbar) +
                                      " <= 0");
  }
  std::vector<double> dx = detail::replicator_field(x.weights(), f);
  for (double& c : dx) c /= fbar;
  return TangentVector(std::move(dx));
}

TangentVector natural_gradient(const GradientFn& potential_gradient, const Distribution& x) {
  x.require_interior("natural_gradient");
  const std::vector<double> g = potential_gradient(x);
  if (g.size() != x.size()) throw DimensionError("natural_gradient: gradient has wrong length");
  return TangentVector(detail::replicator_field(x.weights(), g));
}

std::vector<double> finite_difference_gradient(const ScalarFn& potential, std::span<const double> x) {
  std::vector<double> probe(x.begin(), x.end());
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[i]));
    probe[i] = x[i] + h;
    const double up = potential(probe);
    probe[i] = x[i] - h;
    const double down = potential(probe);
    probe[i] = x[i];
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Discrete dynamic

Distribution discrete_step(const Distribution& x, const FitnessLandscape& landscape) {
  const std::vector<double> f = evaluate(landscape, x);
  const double fbar = weighted_mean(x.weights(), f);
  if (!(fbar > 0.0)) {
    throw NonpositiveMeanFitnessError("discrete_step: mean fitness " + std::to_string(fbar) +
                                      " <= 0");
  }
  std::vector<double> next(x.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    next[i] = x[i] * (f[i] / fbar);
    if (next[i] < 0.0) {
      throw NegativeFrequencyError(i, "discrete_step: type " + std::to_string(i + 1) +
                                          " would get negative frequency (fitness " +
                                          std::to_string(f[i]) + ")");
    }
    sum += next[i];
  }
  if (std::abs(sum - 1.0) > 1e-13) {
    for (double& w : next) w /= sum;
  }
  return Distribution(std::move(next));
}

Trajectory discrete_orbit(const Distribution& x0, const FitnessLandscape& landscape,
                          std::size_t steps, const DiscreteOrbitOptions& options) {
  std::vector<double> times{0.0};
  std::vector<Distribution> states{x0};
  StopReason reason = StopReason::Completed;
  for (std::size_t k = 0; k < steps; ++k) {
    const Distribution& x = states.back();
    std::optional<Distribution> next;
    try {
      next = discrete_step(x, landscape);
    } catch (const Error& e) {
      std::throw_with_nested(StepError(k, "discrete_orbit: step " + std::to_string(k) + ": " + e.what()));
    }
    double change = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) change = std::max(change, std::abs((*next)[i] - x[i]));
    states.push_back(std::move(*next));
    times.push_back(static_cast<double>(k + 1));
    if (options.stop_at_fixed_point && change < kFixedPointTolerance) {
      reason = StopReason::FixedPoint;
      break;
    }
  }
  Trajectory tr = make_trajectory(std::move(times), std::move(states), landscape, options.reference);
  tr.stop_reason = reason;
  return tr;
}

// ---------------------------------------------------------------------------
// Continuous dynamic

Trajectory integrate(const Distribution& x0, const FitnessLandscape& landscape, double t_end,
                     const IntegratorConfig& config, const std::optional<Distribution>& reference) {
  x0.require_interior("integrate");
  const auto rhs = [&](double, std::span<const double> y, std::span<double> dy) {
    const std::vector<double> f = evaluate(landscape, y);
    const std::vector<double> v = detail::replicator_field(y, f);
    std::copy(v.begin(), v.end(), dy.begin());
  };
  ode::Hooks hooks;
  hooks.admissible = [](std::span<const double> y) {
    return std::all_of(y.begin(), y.end(), [](double v) { return v > 0.0; });
  };
  hooks.post_step = [](std::span<double> y) {
    const double sum = std::accumulate(y.begin(), y.end(), 0.0);
    if (std::abs(sum - 1.0) <= kRenormalizationThreshold) return false;
    for (double& v : y) v /= sum;
    return true;
  };
  ode::Solution sol = ode::solve(rhs, x0.vector(), t_end, config, hooks);

  std::vector<Distribution> states;
  states.reserve(sol.states.size());
  for (auto& s : sol.states) states.emplace_back(std::move(s));
  Trajectory tr = make_trajectory(std::move(sol.times), std::move(states), landscape, reference);
  tr.dense = std::move(sol.dense);
  tr.dense_space = DenseSpace::Simplex;
  return tr;
}

}  // namespace replidyn
