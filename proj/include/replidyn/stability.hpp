#pragma once

// Interior equilibria, evolutionary stability and KL potential monitoring.
//
// The potential information of a state x relative to a candidate stable state
// xhat is D_KL(xhat || x). Along the continuous replicator flow its time
// derivative is -(xhat . f(x) - x . f(x)), negative exactly when xhat is a
// better reply to x.

#include <cstdint>
#include <string_view>
#include <vector>

#include "replidyn/core.hpp"
#include "replidyn/dynamics.hpp"

namespace replidyn {

enum class QuadraticFormVerdict { NegativeDefinite, Indefinite, Degenerate, NotApplicable };
std::string_view to_string(QuadraticFormVerdict v);

struct EssReport {
  Distribution candidate;
  QuadraticFormVerdict quadratic_form_verdict = QuadraticFormVerdict::NotApplicable;
  // Eigenvalues of the symmetrized payoff form restricted to the tangent
  // space (Linear landscapes only), ascending.
  std::vector<double> tangent_eigenvalues;
  bool sampling_verdict = false;  // min_margin > 0
  double min_margin = 0.0;
  double radius = 0.0;
  std::size_t sample_count = 0;
};

enum class TraceMode { Continuous, Discrete };
std::string_view to_string(TraceMode m);

// Successive potential differences at or below this count as non-increasing.
inline constexpr double kMonotonicityTolerance = 1e-10;
// Below this potential a state is treated as having reached the reference.
inline constexpr double kPotentialFloor = 1e-10;
inline constexpr double kJensenTolerance = 1e-12;

struct LyapunovTrace {
  std::vector<double> times;
  std::vector<double> potential_series;
  bool monotone_decreasing = true;
  // Every difference < 0 while the earlier potential is above kPotentialFloor.
  bool strictly_decreasing = true;
  // Largest successive difference D_{k+1} - D_k (negative when strictly decreasing).
  double max_increase = 0.0;
  // Discrete mode only: b_k = -log(xhat.f(x_k) / x_k.f(x_k)), one per step,
  // and whether D_{k+1} - D_k >= b_k - kJensenTolerance at every step.
  std::vector<double> bound_series;
  bool jensen_lower_bound_ok = true;
  TraceMode mode = TraceMode::Continuous;
};

// Solves (A_1 - A_i) x = 0 for i = 2..n together with sum x = 1.
Distribution interior_equilibrium(const Matrix& A);

// Counter-based generator (SplitMix64 over seed + counter), so a draw depends
// only on (seed, index) and the generator can be copied freely.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}
  std::uint64_t next_u64();
  double uniform();  // [0, 1)
  double normal();   // standard normal, Box-Muller
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

inline constexpr double kDefaultEssRadius = 0.1;
inline constexpr std::size_t kDefaultEssSamples = 200;

// Samples `samples` points at 1-norm distance <= radius from the candidate
// along random tangent directions, radius scaled by U^(1/(n-1)).
EssReport ess_check(const Distribution& candidate, const FitnessLandscape& landscape,
                    double radius = kDefaultEssRadius, std::size_t samples = kDefaultEssSamples,
                    std::uint64_t seed = 0);

double lyapunov_derivative(const Distribution& ref, const Distribution& x,
                           const FitnessLandscape& landscape);

LyapunovTrace lyapunov_trace(const Trajectory& trajectory, const Distribution& ref,
                             const FitnessLandscape& landscape, TraceMode mode);

}  // namespace replidyn
