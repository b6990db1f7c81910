#pragma once

// Explicit Runge-Kutta integration shared by the simplex-space and
// exponential-coordinate replicator solvers.

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace replidyn {

enum class IntegratorMethod { FixedRk4, AdaptiveRk45 };

std::string_view to_string(IntegratorMethod m);
IntegratorMethod integrator_method_from_string(std::string_view s);

struct IntegratorConfig {
  IntegratorMethod method = IntegratorMethod::AdaptiveRk45;
  double step = 0.01;       // FixedRk4 step
  double rel_tol = 1e-10;   // AdaptiveRk45
  double abs_tol = 1e-12;   // AdaptiveRk45
  std::size_t max_steps = 1'000'000;

  // Throws InvariantError on a non-positive step/tolerance or zero max_steps.
  void validate() const;
};

// Piecewise polynomial interpolant over accepted steps. Each segment is stored
// in the nested form y(theta) = r1 + theta (r2 + (1-theta)(r3 + theta (r4 +
// (1-theta) r5))), theta = (t - t0)/h. With r5 = 0 this is the cubic Hermite
// interpolant; Dormand-Prince steps carry their fourth-order continuous
// extension.
class DenseOutput {
 public:
  struct Segment {
    double t0;
    double h;
    std::vector<double> r1, r2, r3, r4, r5;
  };

  bool empty() const noexcept { return segments_.empty(); }
  double t_begin() const;
  double t_end() const;
  // Evaluates at t in [t_begin, t_end]; throws DomainError outside.
  std::vector<double> operator()(double t) const;
  void append(Segment s) { segments_.push_back(std::move(s)); }
  std::size_t segment_count() const noexcept { return segments_.size(); }

 private:
  std::vector<Segment> segments_;
};

namespace ode {

using Rhs = std::function<void(double t, std::span<const double> y, std::span<double> dy)>;

struct Hooks {
  // False rejects a trial step (the positivity guard). Default: accept all.
  std::function<bool(std::span<const double>)> admissible;
  // Applied to every accepted state; returns true if it modified the state.
  std::function<bool(std::span<double>)> post_step;
};

struct Solution {
  std::vector<double> times;
  std::vector<std::vector<double>> states;
  DenseOutput dense;
};

// Integrates y' = rhs(t, y) on [0, t_end]. A trial step that is inadmissible,
// or whose stage evaluation throws DomainError, is retried with half the step
// up to 40 times before StiffnessError. More than config.max_steps step
// attempts raise BudgetError.
Solution solve(const Rhs& rhs, std::vector<double> y0, double t_end, const IntegratorConfig& config,
               const Hooks& hooks = {});

inline constexpr int kMaxPositivityRetries = 40;

}  // namespace ode

}  // namespace replidyn
