#include "replidyn/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "replidyn/errors.hpp"

namespace replidyn {

std::string_view to_string(QuadraticFormVerdict v) {
  switch (v) {
    case QuadraticFormVerdict::NegativeDefinite: return "negative-definite";
    case QuadraticFormVerdict::Indefinite: return "indefinite";
    case QuadraticFormVerdict::Degenerate: return "degenerate";
    case QuadraticFormVerdict::NotApplicable: break;
  }
  return "not-applicable";
}

std::string_view to_string(TraceMode m) {
  return m == TraceMode::Discrete ? "discrete" : "continuous";
}

// ---------------------------------------------------------------------------

Distribution interior_equilibrium(const Matrix& A) {
  if (A.rows() < 2 || A.rows() != A.cols()) {
    throw DimensionError("interior_equilibrium: payoff matrix must be square with n >= 2");
  }
  const Eigen::Index n = A.rows();
  Matrix system(n, n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) system.row(i) = A.row(0) - A.row(i + 1);
  system.row(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs[n - 1] = 1.0;

  Eigen::FullPivLU<Matrix> lu(system);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) {
    throw NoIsolatedEquilibriumError("interior_equilibrium: payoff equalization system is singular");
  }
  const Eigen::VectorXd x = lu.solve(rhs);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(x[i] > kInteriorThreshold)) {
      throw NoInteriorEquilibriumError("interior_equilibrium: equalizing point has coordinate " +
                                       std::to_string(i + 1) + " = " + std::to_string(x[i]));
    }
  }
  Distribution eq = Distribution::normalized({x.data(), x.data() + n});
  const Eigen::VectorXd f = A * Eigen::Map<const Eigen::VectorXd>(eq.weights().data(), n);
  const double fbar = weighted_mean(eq.weights(), {f.data(), static_cast<std::size_t>(n)});
  if ((f.array() - fbar).abs().maxCoeff() >= 1e-10) {
    throw NumericsError("interior_equilibrium: system too ill-conditioned to equalize payoffs");
  }
  return eq;
}

// ---------------------------------------------------------------------------

std::uint64_t CounterRng::next_u64() {
  std::uint64_t z = seed_ + 0x9E3779B97F4A7C15ULL * (++counter_);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double CounterRng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double CounterRng::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

namespace {

// Orthonormal basis of {u : sum u = 0} as the columns of an n x (n-1) matrix.
Matrix tangent_basis(Eigen::Index n) {
  const Matrix projector = Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / static_cast<double>(n));
  Eigen::SelfAdjointEigenSolver<Matrix> eig(projector);
  return eig.eigenvectors().rightCols(n - 1);
}

// (a - b) . f without the f_0 * (sum a - sum b) term, which vanishes for two
// simplex points.
double better_reply_margin(std::span<const double> a, std::span<const double> b,
                           std::span<const double> f) {
  double m = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) m += (a[i] - b[i]) * (f[i] - f[0]);
  return m;
}

}  // namespace

EssReport ess_check(const Distribution& candidate, const FitnessLandscape& landscape, double radius,
                    std::size_t samples, std::uint64_t seed) {
  candidate.require_interior("ess_check");
  if (!(radius > 0.0)) throw RadiusError("ess_check: radius must be > 0");
  const std::size_t n = candidate.size();
  if (auto d = landscape.dimension(); d && *d != n) {
    throw DimensionError("ess_check: landscape dimension does not match candidate");
  }

  EssReport report{candidate, QuadraticFormVerdict::NotApplicable, {}};
  report.radius = radius;
  report.sample_count = samples;

  if (const auto* lin = std::get_if<FitnessLandscape::Linear>(&landscape.variant())) {
    const Matrix Q = tangent_basis(static_cast<Eigen::Index>(n));
    const Matrix sym = 0.5 * (lin->A + lin->A.transpose());
    const Matrix restricted = Q.transpose() * sym * Q;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(restricted);
    const Eigen::VectorXd& lambda = eig.eigenvalues();
    report.tangent_eigenvalues.assign(lambda.data(), lambda.data() + lambda.size());
    const double tol = 1e-12 * std::max(1.0, lin->A.cwiseAbs().maxCoeff());
    if ((lambda.array() < -tol).all()) {
      report.quadratic_form_verdict = QuadraticFormVerdict::NegativeDefinite;
    } else if ((lambda.array().abs() <= tol).any()) {
      report.quadratic_form_verdict = QuadraticFormVerdict::Degenerate;
    } else {
      report.quadratic_form_verdict = QuadraticFormVerdict::Indefinite;
    }
  }

  CounterRng rng(seed);
  const double dim = static_cast<double>(n - 1);
  double min_margin = std::numeric_limits<double>::infinity();
  std::vector<double> u(n), y(n);
  for (std::size_t s = 0; s < samples; ++s) {
    double mean = 0.0;
    for (double& c : u) {
      c = rng.normal();
      mean += c;
    }
    mean /= static_cast<double>(n);
    double norm1 = 0.0;
    for (double& c : u) {
      c -= mean;
      norm1 += std::abs(c);
    }
    if (norm1 == 0.0) continue;
    const double r = radius * std::pow(rng.uniform(), 1.0 / dim);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = candidate[i] + r * u[i] / norm1;
      if (!(y[i] > kInteriorThreshold)) {
        throw RadiusError("ess_check: radius " + std::to_string(radius) +
                          " reaches outside the simplex interior");
      }
    }
    const Distribution point = Distribution::normalized(y);
    const std::vector<double> f = evaluate(landscape, point);
    min_margin = std::min(min_margin, better_reply_margin(candidate.weights(), point.weights(), f));
  }
  report.min_margin = samples == 0 ? 0.0 : min_margin;
  report.sampling_verdict = report.min_margin > 0.0;
  return report;
}

// ---------------------------------------------------------------------------

double lyapunov_derivative(const Distribution& ref, const Distribution& x,
                           const FitnessLandscape& landscape) {
  if (ref.size() != x.size()) throw DimensionError("lyapunov_derivative: length mismatch");
  x.require_interior("lyapunov_derivative");
  const std::vector<double> f = evaluate(landscape, x);
  return -better_reply_margin(ref.weights(), x.weights(), f);
}

LyapunovTrace lyapunov_trace(const Trajectory& trajectory, const Distribution& ref,
                             const FitnessLandscape& landscape, TraceMode mode) {
  LyapunovTrace trace;
  trace.mode = mode;
  trace.times = trajectory.times;
  trace.potential_series.reserve(trajectory.size());
  for (std::size_t k = 0; k < trajectory.size(); ++k) {
    const Distribution& s = trajectory.states[k];
    if (!s.is_interior()) {
      throw DomainError("lyapunov_trace: state " + std::to_string(k) + " is on the boundary");
    }
    trace.potential_series.push_back(kl_divergence(ref, s));
  }

  const auto& D = trace.potential_series;
  trace.max_increase = D.size() < 2 ? 0.0 : -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < D.size(); ++k) {
    const double diff = D[k + 1] - D[k];
    trace.max_increase = std::max(trace.max_increase, diff);
    if (diff > kMonotonicityTolerance) trace.monotone_decreasing = false;
    if (D[k] > kPotentialFloor && !(diff < 0.0)) trace.strictly_decreasing = false;
  }

  if (mode == TraceMode::Discrete) {
    for (std::size_t k = 0; k + 1 < D.size(); ++k) {
      const Distribution& x = trajectory.states[k];
      const std::vector<double> f = evaluate(landscape, x);
      if (std::any_of(f.begin(), f.end(), [](double v) { return !(v > 0.0); })) {
        throw DomainError("lyapunov_trace: discrete bound needs a strictly positive landscape (state " +
                          std::to_string(k) + ")");
      }
      const double ratio = weighted_mean(ref.weights(), f) / weighted_mean(x.weights(), f);
      const double bound = -std::log(ratio);
      trace.bound_series.push_back(bound);
      if (D[k + 1] - D[k] < bound - kJensenTolerance) trace.jensen_lower_bound_ok = false;
    }
  }
  return trace;
}

}  // namespace replidyn
