// Prints one PASS/FAIL line per acceptance criterion; exits 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "replidyn/dynamics.hpp"
#include "replidyn/expfamily.hpp"
#include "replidyn/inference.hpp"
#include "replidyn/stability.hpp"
#include "test_support.hpp"

using namespace replidyn;
using namespace replidyn::fixtures;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double relative(double value, double reference) { return std::abs(value - reference) / std::abs(reference); }

std::vector<std::string> labels(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("h" + std::to_string(i));
  return out;
}

Verdict bayes_equivalence() {
  Gen g(1001);
  double post_err = 0.0, marg_err = 0.0;
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = g.integer(2, 6);
    const BayesModel model(labels(n), g.interior(n), {{"e", g.vec(n, 0.05, 1.0)}});
    const auto update = bayes_update(model, "e");
    const auto landscape = likelihood_landscape(model, "e");
    const auto step = discrete_step(model.prior(), landscape);
    post_err = std::max(post_err, max_abs_diff(update.posterior.weights(), step.weights()));
    marg_err = std::max(marg_err, std::abs(update.marginal - mean_fitness(landscape, model.prior())));
  }
  return {post_err <= 1e-12 && marg_err <= 1e-12,
          fmt("max posterior diff %.3g, max marginal diff %.3g (tol 1e-12)", post_err, marg_err)};
}

Verdict hawk_dove_forward() {
  const auto L = FitnessLandscape::linear(hawk_dove());
  const Distribution half({0.5, 0.5});
  const double T = 30.0;
  const auto tr = integrate(Distribution({0.9, 0.1}), L, T, IntegratorConfig{});
  const auto trace = lyapunov_trace(tr, half, L, TraceMode::Continuous);
  double fd_err = 0.0;
  for (std::size_t k = 1; k + 1 < tr.size(); ++k) {
    const double t = tr.times[k];
    const double h = std::min({1e-3, 0.5 * t, 0.5 * (T - t)});
    const double numeric =
        (kl_divergence(half, tr.state_at(t + h)) - kl_divergence(half, tr.state_at(t - h))) / (2 * h);
    fd_err = std::max(fd_err, relative(numeric, lyapunov_derivative(half, tr.states[k], L)));
  }
  const double terminal = max_abs_diff(tr.terminal().weights(), half.weights());
  return {trace.strictly_decreasing && fd_err <= 1e-6 && terminal <= 1e-6,
          fmt("strictly decreasing %s, max FD rel err %.3g (tol 1e-6), terminal dist %.3g (tol 1e-6)",
              trace.strictly_decreasing ? "yes" : "no", fd_err, terminal)};
}

Verdict rps_conservation() {
  const auto tr = integrate(Distribution({0.5, 0.25, 0.25}), FitnessLandscape::linear(zero_sum_rps()), 50.0,
                            IntegratorConfig{}, Distribution::uniform(3));
  const auto& D = *tr.kl_to_reference;
  double drift = 0.0;
  for (double d : D) drift = std::max(drift, std::abs(d - D.front()));
  return {drift <= 1e-8, fmt("max |D(t)-D(0)| %.3g over %zu steps (tol 1e-8)", drift, D.size())};
}

Verdict shifted_hawk_dove_discrete() {
  const auto L = FitnessLandscape::linear(hawk_dove_shifted());
  const Distribution half({0.5, 0.5});
  const auto orbit = discrete_orbit(Distribution({0.25, 0.75}), L, 100);
  const auto trace = lyapunov_trace(orbit, half, L, TraceMode::Discrete);
  const double D0 = trace.potential_series[0], D1 = trace.potential_series[1], b0 = trace.bound_series[0];
  const bool d0_ok = std::abs(D0 - 0.143841) <= 1e-6;
  const bool d1_ok = std::abs(D1 - 0.104818) <= 1e-6;
  const bool b0_ok = std::abs(b0 - -0.042560) <= 1e-6;
  return {d0_ok && d1_ok && b0_ok && trace.strictly_decreasing && trace.jensen_lower_bound_ok &&
              orbit.size() == 101,
          fmt("D_0 %.9f (%s, want 0.143841), D_1 %.9f (%s, want 0.104818), b_0 %.9f (%s, want -0.042560), "
              "strictly decreasing %s over %zu iterations, Jensen bound %s",
              D0, d0_ok ? "ok" : "off", D1, d1_ok ? "ok" : "off", b0, b0_ok ? "ok" : "off",
              trace.strictly_decreasing ? "yes" : "no", orbit.size() - 1,
              trace.jensen_lower_bound_ok ? "holds" : "violated")};
}

Verdict exponential_coords() {
  const auto L = FitnessLandscape::linear(hawk_dove());
  const Distribution x0({0.9, 0.1});
  const auto a = integrate(x0, L, 20.0);
  const auto b = integrate_in_coords(x0, L, 20.0);
  double sup = 0.0;
  for (double t : uniform_grid(0.0, 20.0, 2001)) {
    sup = std::max(sup, max_abs_diff(a.state_at(t).weights(), b.state_at(t).weights()));
  }
  const double residual = normalizer_rate_residual(b, L);
  return {sup <= 1e-8 && residual <= 1e-5,
          fmt("sup-norm %.3g (tol 1e-8), normalizer rate residual %.3g (tol 1e-5)", sup, residual)};
}

Verdict loglinear_closed_form() {
  const std::vector<double> ts{0.0, std::log(3.0)};
  const auto logistic = loglinear_solution(Matrix::Zero(2, 2), std::vector<double>{1.0, 0.0},
                                           Distribution({0.5, 0.5}), ts);
  const double x1 = logistic.terminal()[0];
  Gen g(1006);
  const auto grid = uniform_grid(0.0, 5.0, 51);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Matrix A = g.row_sum_zero(3);
    const auto b = g.vec(3, -1, 1);
    const auto x = g.interior(3, 0.05);
    const auto closed = loglinear_solution(A, b, x, grid);
    const auto numeric = integrate_in_coords(x, FitnessLandscape::log_linear(A, b), 5.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      worst = std::max(worst, max_abs_diff(closed.states[i].weights(), numeric.state_at(grid[i]).weights()));
    }
  }
  return {std::abs(x1 - 0.75) <= 1e-9 && worst <= 1e-6,
          fmt("x_1(ln 3) %.15f (want 0.75 +- 1e-9), 20 random cases max diff %.3g (tol 1e-6)", x1, worst)};
}

Verdict natural_gradient_identity() {
  Gen g(1007);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = g.integer(2, 5);
    const Matrix A = g.symmetric(n);
    const auto x = g.interior(n);
    // Ambient gradient of x^T A x / 2.
    auto grad = [&](const Distribution& p) {
      const Eigen::VectorXd v = A * Eigen::Map<const Eigen::VectorXd>(p.weights().data(), A.rows());
      return std::vector<double>(v.data(), v.data() + v.size());
    };
    const auto ng = natural_gradient(grad, x);
    const auto rhs = replicator_rhs(x, FitnessLandscape::linear(A));
    worst = std::max(worst, max_abs_diff(ng.components(), rhs.components()));
  }
  return {worst <= 1e-12, fmt("max componentwise diff %.3g over 100 games (tol 1e-12)", worst)};
}

Verdict fisher_consistency() {
  Gen g(1008);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = g.integer(2, 6);
    const auto x = g.interior(n);
    const TangentVector u(g.tangent(n));
    const Matrix G = fisher_metric_chart(x);
    const Eigen::VectorXd uc = Eigen::Map<const Eigen::VectorXd>(u.components().data(), G.rows());
    const double ambient = shahshahani_inner(x, u, u);
    worst = std::max(worst, std::abs(uc.dot(G * uc) - ambient) / std::max(1.0, ambient));
  }
  return {worst <= 1e-12, fmt("max |chart - ambient| / max(1, ambient) %.3g (tol 1e-12)", worst)};
}

Verdict fundamental_theorem() {
  Gen g(1009);
  double worst = 0.0;
  std::size_t checked = 0;
  const double T = 5.0;
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = g.integer(2, 5);
    const auto L = FitnessLandscape::linear(g.symmetric(n));
    const auto tr = integrate(g.interior(n, 0.05), L, T);
    for (std::size_t k = 1; k + 1 < tr.size(); ++k) {
      const double t = tr.times[k];
      const double h = std::min({1e-3, 0.5 * t, 0.5 * (T - t)});
      const double rate = (mean_fitness(L, tr.state_at(t + h)) - mean_fitness(L, tr.state_at(t - h))) / (2 * h);
      const auto& x = tr.states[k];
      const auto f = evaluate(L, x);
      const double fbar = weighted_mean(x.weights(), f);
      double var = 0.0;
      for (std::size_t i = 0; i < n; ++i) var += x[i] * (f[i] - fbar) * (f[i] - fbar);
      // Near a rest point both sides vanish and the ratio is noise.
      if (var < 1e-8) continue;
      worst = std::max(worst, relative(rate, 2 * var));
      ++checked;
    }
  }
  return {worst <= 1e-6, fmt("max rel err %.3g at %zu step times over 10 games (tol 1e-6)", worst, checked)};
}

Verdict constant_stationarity() {
  Gen g(1010);
  double rhs = 0.0, step = 0.0;
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = g.integer(2, 6);
    const auto L = FitnessLandscape::constant(g.uniform(0.1, 10.0));
    const auto x = g.interior(n);
    const auto field = replicator_rhs(x, L);
    for (double v : field.components()) rhs = std::max(rhs, std::abs(v));
    step = std::max(step, max_abs_diff(discrete_step(x, L).weights(), x.weights()));
  }
  return {rhs <= 1e-15 && step <= 1e-15, fmt("max |rhs| %.3g, max step displacement %.3g (tol 1e-15)", rhs, step)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Verdict cli_determinism() {
  const fs::path dir = fs::temp_directory_path() / "replidyn_acceptance_cli";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "config.json") << R"({"command":"ess","landscape":{"type":"linear","A":[[-1,2],[0,1]]},
    "initial":[0.9,0.1],"t_end":30,"ess":{"samples":500},"seed":42})";
  for (const char* run : {"a", "b"}) {
    const std::string cmd = std::string(REPLIDYN_TOOL) + " --config " + (dir / "config.json").string() +
                            " --out " + (dir / run).string() + " >/dev/null 2>&1";
    if (std::system(cmd.c_str()) != 0) return {false, "tool exited non-zero"};
  }
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(dir / "a")) {
    const auto other = dir / "b" / entry.path().filename();
    if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) {
      return {false, "output differs: " + entry.path().filename().string()};
    }
    ++files;
  }
  return {files >= 2, fmt("%zu output files byte-identical across two runs", files)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"bayes-replicator equivalence", bayes_equivalence},
      {"hawk-dove KL Lyapunov forward check", hawk_dove_forward},
      {"zero-sum RPS KL conservation", rps_conservation},
      {"shifted hawk-dove discrete values", shifted_hawk_dove_discrete},
      {"exponential-coordinate equivalence", exponential_coords},
      {"log-linear explicit solution", loglinear_closed_form},
      {"natural gradient identity", natural_gradient_identity},
      {"fisher metric consistency", fisher_consistency},
      {"fundamental theorem for symmetric games", fundamental_theorem},
      {"constant landscape stationarity", constant_stationarity},
      {"CLI determinism", cli_determinism},
  };
  const auto start = std::chrono::steady_clock::now();
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v{false, ""};
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("%s %2zu %s: %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, v.detail.c_str());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%zu/%zu passed in %.2f s\n", criteria.size() - failed, criteria.size(), secs);
  return failed == 0 ? 0 : 1;
}
