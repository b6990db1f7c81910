#include "replidyn/expfamily.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <optional>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

#include "replidyn/errors.hpp"

namespace replidyn {

double ExponentialFamilySpec::density(std::size_t outcome) const {
  if (outcome >= outcomes) throw DimensionError("ExponentialFamilySpec: outcome out of range");
  double s = base_measure ? base_measure(outcome) : 0.0;
  for (std::size_t i = 0; i < statistics.size(); ++i) s += theta[i] * statistics[i](outcome);
  return std::exp(s - psi);
}

std::vector<double> ExponentialFamilySpec::densities() const {
  std::vector<double> p(outcomes);
  for (std::size_t k = 0; k < outcomes; ++k) p[k] = density(k);
  return p;
}

ExponentialCoords to_coords(const Distribution& x) {
  x.require_interior("to_coords");
  std::vector<double> v(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) v[i] = std::log(x[i]);
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  for (double& a : v) a -= mean;
  const double G = log_sum_exp(v);
  return {std::move(v), G};
}

Distribution from_coords(std::span<const double> v) {
  if (v.size() < 2) throw DimensionError("from_coords: need at least 2 coordinates");
  return Distribution(softmax(v));
}

// ---------------------------------------------------------------------------

namespace {

// f at x = softmax(v). Log-linear terms use log x = v - G directly, so states
// far below the interiority threshold stay evaluable.
std::vector<double> fitness_at_logits(const FitnessLandscape& landscape, std::span<const double> v) {
  if (const auto* ll = std::get_if<FitnessLandscape::LogLinear>(&landscape.variant())) {
    if (static_cast<std::size_t>(ll->A.rows()) != v.size()) {
      throw DimensionError("evaluate(LogLinear): dimension mismatch");
    }
    const double G = log_sum_exp(v);
    Eigen::VectorXd logx(ll->A.rows());
    for (Eigen::Index i = 0; i < logx.size(); ++i) logx[i] = v[static_cast<std::size_t>(i)] - G;
    const Eigen::VectorXd f = ll->A * logx;
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = f[static_cast<Eigen::Index>(i)] + ll->b[i];
    return out;
  }
  if (const auto* sh = std::get_if<FitnessLandscape::Shifted>(&landscape.variant())) {
    std::vector<double> f = fitness_at_logits(*sh->base, v);
    for (double& fi : f) fi += sh->c;
    return f;
  }
  return evaluate(landscape, softmax(v));
}

Trajectory logits_trajectory(std::vector<double> times, const std::vector<std::vector<double>>& logits,
                             const FitnessLandscape& landscape) {
  Trajectory tr;
  tr.times = std::move(times);
  std::vector<double> G;
  for (const auto& v : logits) {
    Distribution x = from_coords(v);
    const std::vector<double> f = fitness_at_logits(landscape, v);
    tr.mean_fitness.push_back(weighted_mean(x.weights(), f));
    tr.entropy.push_back(shannon_entropy(x));
    tr.states.push_back(std::move(x));
    G.push_back(log_sum_exp(v));
  }
  tr.normalizer = std::move(G);
  tr.validate();
  return tr;
}

}  // namespace

Trajectory integrate_in_coords(const Distribution& x0, const FitnessLandscape& landscape,
                               double t_end, const IntegratorConfig& config) {
  x0.require_interior("integrate_in_coords");
  const auto rhs = [&](double, std::span<const double> v, std::span<double> dv) {
    const std::vector<double> f = fitness_at_logits(landscape, v);
    std::copy(f.begin(), f.end(), dv.begin());
  };
  ode::Solution sol = ode::solve(rhs, to_coords(x0).v, t_end, config, {});

  Trajectory tr = logits_trajectory(std::move(sol.times), sol.states, landscape);
  tr.dense = std::move(sol.dense);
  tr.dense_space = DenseSpace::Logits;

  const double residual = normalizer_rate_residual(tr, landscape);
  if (residual > kNormalizerRateTolerance) {
    throw NumericsError("integrate_in_coords: dG/dt departs from mean fitness by " +
                        std::to_string(residual) + " (relative)");
  }
  return tr;
}

double normalizer_rate_residual(const Trajectory& tr, const FitnessLandscape& landscape) {
  if (!tr.dense || tr.dense_space != DenseSpace::Logits) {
    throw DomainError("normalizer_rate_residual: needs an exponential-coordinate trajectory");
  }
  const double t_end = tr.times.back();
  const double delta = std::min(1e-3, 0.25 * t_end);
  double worst = 0.0;
  for (std::size_t k = 1; k + 1 < tr.size(); ++k) {
    // Sample times closer than delta to an end are evaluated at the nearest
    // point where the centered stencil fits.
    const double t = std::clamp(tr.times[k], delta, t_end - delta);
    const double up = log_sum_exp((*tr.dense)(t + delta));
    const double down = log_sum_exp((*tr.dense)(t - delta));
    const double rate = (up - down) / (2.0 * delta);
    const std::vector<double> v = (*tr.dense)(t);
    const Distribution x = from_coords(v);
    const std::vector<double> f = fitness_at_logits(landscape, v);
    const double fbar = weighted_mean(x.weights(), f);
    double scale = std::abs(fbar);
    for (double fi : f) scale = std::max(scale, std::abs(fi));
    scale = std::max(scale, std::numeric_limits<double>::min());
    worst = std::max(worst, std::abs(rate - fbar) / scale);
  }
  return worst;
}

// ---------------------------------------------------------------------------

Matrix matrix_exponential(const Matrix& M) {
  if (M.rows() != M.cols()) throw DimensionError("matrix_exponential: matrix must be square");
  if (!M.allFinite()) throw DomainError("matrix_exponential: non-finite entry");
  return M.exp();
}

namespace {

using Complex = std::complex<double>;

// (exp(z) - 1) / z, continuous at z = 0.
Complex phi1(Complex z) {
  if (std::abs(z) < 1e-2) {
    Complex term = 1.0;
    Complex sum = 1.0;
    for (int k = 2; k <= 10; ++k) {
      term *= z / static_cast<double>(k);
      sum += term;
    }
    return sum;
  }
  return (std::exp(z) - 1.0) / z;
}

struct Diagonalization {
  Eigen::VectorXcd lambda;
  Eigen::MatrixXcd V;
  Eigen::MatrixXcd V_inv;
};

// Present only when eigenvalues are pairwise separated by more than 1e-10 and
// the eigenvector matrix is well conditioned.
std::optional<Diagonalization> diagonalize(const Matrix& A) {
  Eigen::EigenSolver<Matrix> es(A);
  if (es.info() != Eigen::Success) return std::nullopt;
  const Eigen::VectorXcd lambda = es.eigenvalues();
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    for (Eigen::Index j = i + 1; j < lambda.size(); ++j) {
      if (std::abs(lambda[i] - lambda[j]) <= 1e-10) return std::nullopt;
    }
  }
  const Eigen::MatrixXcd V = es.eigenvectors();
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(V);
  const Eigen::MatrixXcd V_inv = lu.inverse();
  const double cond = V.cwiseAbs().colwise().sum().maxCoeff() *
                      V_inv.cwiseAbs().colwise().sum().maxCoeff();
  if (!std::isfinite(cond) || cond > 1e8) return std::nullopt;
  return Diagonalization{lambda, V, V_inv};
}

}  // namespace

Trajectory loglinear_solution(const Matrix& A, std::span<const double> b, const Distribution& x0,
                              std::span<const double> ts) {
  const std::size_t n = x0.size();
  if (A.rows() != static_cast<Eigen::Index>(n) || A.cols() != A.rows() || b.size() != n) {
    throw DimensionError("loglinear_solution: A, b and x0 dimensions disagree");
  }
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    const double scale = std::max(1.0, A.row(i).cwiseAbs().maxCoeff());
    if (std::abs(A.row(i).sum()) > 1e-12 * scale) {
      throw UnsupportedLandscapeError(
          "loglinear_solution: row " + std::to_string(i + 1) +
          " of A does not sum to zero; use integrate_in_coords for this landscape");
    }
  }
  x0.require_interior("loglinear_solution");
  if (ts.empty()) throw InvariantError("loglinear_solution: no sample times");
  for (std::size_t k = 0; k < ts.size(); ++k) {
    if (!(ts[k] >= 0.0) || (k > 0 && !(ts[k] > ts[k - 1]))) {
      throw InvariantError("loglinear_solution: times must be >= 0 and strictly increasing");
    }
  }

  const Eigen::VectorXd v0 = Eigen::Map<const Eigen::VectorXd>(to_coords(x0).v.data(),
                                                               static_cast<Eigen::Index>(n));
  const Eigen::VectorXd bv = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(n));
  const auto diag = diagonalize(A);
  const auto N = static_cast<Eigen::Index>(n);

  std::vector<std::vector<double>> logits;
  logits.reserve(ts.size());
  for (double t : ts) {
    Eigen::VectorXd v(N);
    if (diag) {
      const Eigen::VectorXcd w0 = diag->V_inv * v0.cast<Complex>();
      const Eigen::VectorXcd wb = diag->V_inv * bv.cast<Complex>();
      Eigen::VectorXcd w(N);
      for (Eigen::Index i = 0; i < N; ++i) {
        const Complex z = diag->lambda[i] * t;
        w[i] = std::exp(z) * w0[i] + t * phi1(z) * wb[i];
      }
      v = (diag->V * w).real();
    } else {
      // Augmented exponential: exp([[A, b], [0, 0]] t) = [[exp(At), phi(t) b], [0, 1]].
      Matrix aug = Matrix::Zero(N + 1, N + 1);
      aug.topLeftCorner(N, N) = A * t;
      aug.topRightCorner(N, 1) = bv * t;
      const Matrix E = matrix_exponential(aug);
      v = E.topLeftCorner(N, N) * v0 + E.topRightCorner(N, 1);
    }
    logits.emplace_back(v.data(), v.data() + N);
  }
  return logits_trajectory({ts.begin(), ts.end()}, logits,
                           FitnessLandscape::log_linear(A, {b.begin(), b.end()}));
}

// ---------------------------------------------------------------------------

ExponentialFamilySpec categorical_expfamily(const Distribution& x) {
  const ExponentialCoords c = to_coords(x);
  ExponentialFamilySpec spec;
  spec.outcomes = x.size();
  spec.base_measure = [](std::size_t) { return 0.0; };
  for (std::size_t i = 0; i < x.size(); ++i) {
    spec.statistics.emplace_back([i](std::size_t k) { return k == i ? 1.0 : 0.0; });
  }
  spec.theta = c.v;
  spec.psi = c.G;
  return spec;
}

}  // namespace replidyn
