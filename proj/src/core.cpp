#include "replidyn/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "replidyn/errors.hpp"

namespace replidyn {

namespace {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double a) { return std::isfinite(a); });
}

void require_same_size(std::size_t a, std::size_t b, std::string_view operation) {
  if (a != b) {
    throw DimensionError(std::string(operation) + ": length mismatch (" + std::to_string(a) +
                         " vs " + std::to_string(b) + ")");
  }
}

void require_interior_raw(std::span<const double> x, std::string_view operation) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > kInteriorThreshold)) {
      throw DomainError(std::string(operation) + ": coordinate " + std::to_string(i + 1) +
                        " is not interior (" + std::to_string(x[i]) + ")");
    }
  }
}

// r - log1p(r), accurate for small |r| where the direct form cancels.
double log1p_remainder(double r) {
  if (std::abs(r) < 1e-3) {
    double term = r * r;
    double sum = 0.0;
    for (int k = 2; k <= 9; ++k) {
      sum += (k % 2 == 0 ? 1.0 : -1.0) * term / k;
      term *= r;
    }
    return sum;
  }
  return r - std::log1p(r);
}

}  // namespace

// ---------------------------------------------------------------------------
// Distribution / TangentVector

Distribution::Distribution(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.size() < 2) {
    throw InvariantError("Distribution: need at least 2 weights, got " +
                         std::to_string(weights_.size()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    const double w = weights_[i];
    if (!std::isfinite(w) || w < 0.0) {
      throw InvariantError("Distribution: weight " + std::to_string(i + 1) +
                           " is negative or non-finite");
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance) {
    throw InvariantError("Distribution: weights sum to " + std::to_string(sum) + ", not 1");
  }
}

Distribution Distribution::normalized(std::vector<double> raw) {
  if (!all_finite(raw) || std::any_of(raw.begin(), raw.end(), [](double a) { return a < 0.0; })) {
    throw InvariantError("Distribution::normalized: weights must be finite and non-negative");
  }
  const double sum = std::accumulate(raw.begin(), raw.end(), 0.0);
  if (!(sum > 0.0)) throw InvariantError("Distribution::normalized: weights sum to zero");
  for (double& w : raw) w /= sum;
  return Distribution(std::move(raw));
}

Distribution Distribution::uniform(std::size_t n) {
  return Distribution(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

Distribution Distribution::vertex(std::size_t n, std::size_t index) {
  std::vector<double> w(n, 0.0);
  if (index >= n) throw DimensionError("Distribution::vertex: index out of range");
  w[index] = 1.0;
  return Distribution(std::move(w));
}

bool Distribution::is_interior() const noexcept {
  return std::all_of(weights_.begin(), weights_.end(),
                     [](double w) { return w > kInteriorThreshold; });
}

void Distribution::require_interior(std::string_view operation) const {
  require_interior_raw(weights_, operation);
}

TangentVector::TangentVector(std::vector<double> components) : components_(std::move(components)) {
  if (!all_finite(components_)) throw InvariantError("TangentVector: non-finite component");
  double sum = 0.0;
  double scale = 1.0;
  for (double c : components_) {
    sum += c;
    scale = std::max(scale, std::abs(c));
  }
  if (std::abs(sum) > kSimplexTolerance * scale) {
    throw InvariantError("TangentVector: components sum to " + std::to_string(sum) + ", not 0");
  }
}

// ---------------------------------------------------------------------------
// FitnessLandscape

FitnessLandscape FitnessLandscape::constant(double c) {
  if (!std::isfinite(c)) throw InvariantError("Constant landscape: value must be finite");
  return FitnessLandscape(Constant{c});
}

FitnessLandscape FitnessLandscape::linear(Matrix A) {
  if (A.rows() < 2 || A.rows() != A.cols()) {
    throw DimensionError("Linear landscape: payoff matrix must be square with n >= 2, got " +
                         std::to_string(A.rows()) + "x" + std::to_string(A.cols()));
  }
  if (!A.allFinite()) throw InvariantError("Linear landscape: non-finite payoff entry");
  return FitnessLandscape(Linear{std::move(A)});
}

FitnessLandscape FitnessLandscape::log_linear(Matrix A, std::vector<double> b) {
  if (A.rows() < 2 || A.rows() != A.cols()) {
    throw DimensionError("LogLinear landscape: matrix must be square with n >= 2, got " +
                         std::to_string(A.rows()) + "x" + std::to_string(A.cols()));
  }
  require_same_size(static_cast<std::size_t>(A.rows()), b.size(), "LogLinear landscape");
  if (!A.allFinite() || !all_finite(b)) throw InvariantError("LogLinear landscape: non-finite entry");
  return FitnessLandscape(LogLinear{std::move(A), std::move(b)});
}

FitnessLandscape FitnessLandscape::likelihood(std::vector<double> L) {
  if (L.size() < 2) throw DimensionError("Likelihood landscape: need at least 2 entries");
  for (std::size_t i = 0; i < L.size(); ++i) {
    if (!(L[i] >= 0.0 && L[i] <= 1.0)) {
      throw InvariantError("Likelihood landscape: entry " + std::to_string(i + 1) +
                           " outside [0,1]");
    }
  }
  return FitnessLandscape(Likelihood{std::move(L)});
}

FitnessLandscape FitnessLandscape::shifted(FitnessLandscape base, double c) {
  if (!std::isfinite(c)) throw InvariantError("Shifted landscape: shift must be finite");
  return FitnessLandscape(Shifted{std::make_shared<const FitnessLandscape>(std::move(base)), c});
}

std::optional<std::size_t> FitnessLandscape::dimension() const {
  return std::visit(
      [](const auto& l) -> std::optional<std::size_t> {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, Constant>) {
          return std::nullopt;
        } else if constexpr (std::is_same_v<T, Linear> || std::is_same_v<T, LogLinear>) {
          return static_cast<std::size_t>(l.A.rows());
        } else if constexpr (std::is_same_v<T, Likelihood>) {
          return l.L.size();
        } else {
          return l.base->dimension();
        }
      },
      variant_);
}

bool FitnessLandscape::requires_interior() const noexcept {
  if (std::holds_alternative<LogLinear>(variant_)) return true;
  if (const auto* s = std::get_if<Shifted>(&variant_)) return s->base->requires_interior();
  return false;
}

std::vector<double> evaluate(const FitnessLandscape& landscape, std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<double> f = std::visit(
      [&](const auto& l) -> std::vector<double> {
        using T = std::decay_t<decltype(l)>;
        using L = FitnessLandscape;
        if constexpr (std::is_same_v<T, L::Constant>) {
          return std::vector<double>(n, l.c);
        } else if constexpr (std::is_same_v<T, L::Linear>) {
          require_same_size(static_cast<std::size_t>(l.A.rows()), n, "evaluate(Linear)");
          const Eigen::VectorXd fx = l.A * Eigen::Map<const Eigen::VectorXd>(x.data(), n);
          return {fx.data(), fx.data() + n};
        } else if constexpr (std::is_same_v<T, L::LogLinear>) {
          require_same_size(static_cast<std::size_t>(l.A.rows()), n, "evaluate(LogLinear)");
          require_interior_raw(x, "evaluate(LogLinear)");
          Eigen::VectorXd logx(n);
          for (std::size_t i = 0; i < n; ++i) logx[i] = std::log(x[i]);
          const Eigen::VectorXd fx =
              l.A * logx + Eigen::Map<const Eigen::VectorXd>(l.b.data(), n);
          return {fx.data(), fx.data() + n};
        } else if constexpr (std::is_same_v<T, L::Likelihood>) {
          require_same_size(l.L.size(), n, "evaluate(Likelihood)");
          return l.L;
        } else {
          std::vector<double> base = evaluate(*l.base, x);
          for (double& v : base) v += l.c;
          return base;
        }
      },
      landscape.variant());
  if (!all_finite(f)) throw DomainError("evaluate: fitness is not finite at this point");
  return f;
}

std::vector<double> evaluate(const FitnessLandscape& landscape, const Distribution& x) {
  return evaluate(landscape, x.weights());
}

double weighted_mean(std::span<const double> x, std::span<const double> f) {
  require_same_size(x.size(), f.size(), "weighted_mean");
  const double f0 = f[0];
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * (f[i] - f0);
  return f0 + acc;
}

double mean_fitness(const FitnessLandscape& landscape, const Distribution& x) {
  return weighted_mean(x.weights(), evaluate(landscape, x));
}

// ---------------------------------------------------------------------------
// Information functionals

// Evaluated as sum_{p_i>0} p_i (r_i - log1p r_i) + sum_{p_i=0} q_i with
// r_i = q_i/p_i - 1. On the simplex this equals sum p_i log(p_i/q_i); every
// term is non-negative, so the result is >= 0 and stays accurate as q -> p.
double kl_divergence(const Distribution& p, const Distribution& q) {
  require_same_size(p.size(), q.size(), "kl_divergence");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) {
      d += q[i];
      continue;
    }
    if (!(q[i] > 0.0)) {
      throw InfiniteDivergenceError("kl_divergence: q_" + std::to_string(i + 1) +
                                    " = 0 where p has mass");
    }
    d += p[i] * log1p_remainder((q[i] - p[i]) / p[i]);
  }
  return d;
}

double shannon_entropy(const Distribution& p) {
  double h = 0.0;
  for (double w : p.weights()) {
    if (w > 0.0) h -= w * std::log(w);
  }
  return h;
}

double product_lyapunov(const Distribution& ref, const Distribution& x) {
  require_same_size(ref.size(), x.size(), "product_lyapunov");
  x.require_interior("product_lyapunov");
  double log_v = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (ref[i] > 0.0) log_v += ref[i] * std::log(x[i]);
  }
  return std::exp(log_v);
}

// ---------------------------------------------------------------------------
// Geometry

double shahshahani_inner(const Distribution& x, const TangentVector& u, const TangentVector& v) {
  require_same_size(x.size(), u.size(), "shahshahani_inner");
  require_same_size(x.size(), v.size(), "shahshahani_inner");
  x.require_interior("shahshahani_inner");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += u[i] * v[i] / x[i];
  return s;
}

Matrix fisher_metric_chart(const Distribution& x) {
  x.require_interior("fisher_metric_chart");
  const auto m = static_cast<Eigen::Index>(x.size() - 1);
  Matrix g = Matrix::Constant(m, m, 1.0 / x[x.size() - 1]);
  for (Eigen::Index i = 0; i < m; ++i) g(i, i) += 1.0 / x[static_cast<std::size_t>(i)];
  return g;
}

TangentVector tangent_project(std::span<const double> w) {
  if (w.empty()) throw DimensionError("tangent_project: empty vector");
  const double mean = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
  std::vector<double> out(w.begin(), w.end());
  for (double& c : out) c -= mean;
  return TangentVector(std::move(out));
}

double log_sum_exp(std::span<const double> v) {
  if (v.empty()) throw DimensionError("log_sum_exp: empty vector");
  if (!all_finite(v)) throw DomainError("log_sum_exp: non-finite input");
  const double vmax = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double a : v) s += std::exp(a - vmax);
  return vmax + std::log(s);
}

std::vector<double> softmax(std::span<const double> v) {
  const double lse = log_sum_exp(v);
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::exp(v[i] - lse);
  return out;
}

}  // namespace replidyn
