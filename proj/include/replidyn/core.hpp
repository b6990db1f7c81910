#pragma once

// Simplex values, information functionals, the Shahshahani/Fisher metric and
// fitness landscapes. All logarithms are natural; every quantity with
// "information" in its name is in nats.

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace replidyn {

using Matrix = Eigen::MatrixXd;

// A coordinate strictly above this counts as interior.
inline constexpr double kInteriorThreshold = 1e-15;
// Allowed |sum - 1| for a Distribution, and |sum| (relative to the largest
// component) for a TangentVector.
inline constexpr double kSimplexTolerance = 1e-12;

// Point of the probability simplex. Used both as a population state x and as
// a prior/posterior over hypotheses.
class Distribution {
 public:
  // Validates: n >= 2, every weight >= 0 and finite, |sum - 1| <= 1e-12.
  explicit Distribution(std::vector<double> weights);

  // Divides by the sum. Weights must be finite, non-negative, with a positive sum.
  static Distribution normalized(std::vector<double> raw);
  static Distribution uniform(std::size_t n);
  static Distribution vertex(std::size_t n, std::size_t index);

  std::size_t size() const noexcept { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  std::span<const double> weights() const noexcept { return weights_; }
  const std::vector<double>& vector() const noexcept { return weights_; }

  bool is_interior() const noexcept;
  // Throws DomainError mentioning `operation` if any weight <= kInteriorThreshold.
  void require_interior(std::string_view operation) const;

  friend bool operator==(const Distribution&, const Distribution&) = default;

 private:
  std::vector<double> weights_;
};

// Velocity at a simplex point; components sum to zero.
class TangentVector {
 public:
  explicit TangentVector(std::vector<double> components);
  static TangentVector zero(std::size_t n) { return TangentVector(std::vector<double>(n, 0.0)); }

  std::size_t size() const noexcept { return components_.size(); }
  double operator[](std::size_t i) const { return components_[i]; }
  std::span<const double> components() const noexcept { return components_; }
  const std::vector<double>& vector() const noexcept { return components_; }

 private:
  std::vector<double> components_;
};

// Map from the simplex to fitness vectors f(x).
class FitnessLandscape {
 public:
  struct Constant {
    double c;
  };
  // f(x) = A x
  struct Linear {
    Matrix A;
  };
  // f(x) = A log(x) + b
  struct LogLinear {
    Matrix A;
    std::vector<double> b;
  };
  // f(x) = L, with L_i = P(E | H_i)
  struct Likelihood {
    std::vector<double> L;
  };
  struct Shifted {
    std::shared_ptr<const FitnessLandscape> base;
    double c;
  };
  using Variant = std::variant<Constant, Linear, LogLinear, Likelihood, Shifted>;

  static FitnessLandscape constant(double c);
  static FitnessLandscape linear(Matrix A);
  static FitnessLandscape log_linear(Matrix A, std::vector<double> b);
  static FitnessLandscape likelihood(std::vector<double> L);
  static FitnessLandscape shifted(FitnessLandscape base, double c);

  const Variant& variant() const noexcept { return variant_; }
  // Number of types the landscape is defined for; empty for Constant.
  std::optional<std::size_t> dimension() const;
  bool is_linear() const noexcept { return std::holds_alternative<Linear>(variant_); }
  bool requires_interior() const noexcept;

 private:
  explicit FitnessLandscape(Variant v) : variant_(std::move(v)) {}
  Variant variant_;
};

std::vector<double> evaluate(const FitnessLandscape& landscape, const Distribution& x);
// Raw-vector form used inside integrators, where stage points are only
// approximately normalized.
std::vector<double> evaluate(const FitnessLandscape& landscape, std::span<const double> x);

double mean_fitness(const FitnessLandscape& landscape, const Distribution& x);

// sum_i x_i f_i evaluated as f_0 + sum_i x_i (f_i - f_0). Equal to the plain
// weighted sum whenever sum x = 1, and exact when all f_i coincide.
double weighted_mean(std::span<const double> x, std::span<const double> f);

double kl_divergence(const Distribution& p, const Distribution& q);
double shannon_entropy(const Distribution& p);
double product_lyapunov(const Distribution& ref, const Distribution& x);

double shahshahani_inner(const Distribution& x, const TangentVector& u, const TangentVector& v);
// Fisher information of the categorical family in the chart of the first n-1
// coordinates: g_ij = delta_ij / x_i + 1 / x_n.
Matrix fisher_metric_chart(const Distribution& x);

TangentVector tangent_project(std::span<const double> w);

double log_sum_exp(std::span<const double> v);
// exp(v_i - log_sum_exp(v)); throws DomainError on non-finite input.
std::vector<double> softmax(std::span<const double> v);

}  // namespace replidyn
