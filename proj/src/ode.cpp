#include "replidyn/ode.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "replidyn/errors.hpp"

namespace replidyn {

std::string_view to_string(IntegratorMethod m) {
  return m == IntegratorMethod::FixedRk4 ? "rk4" : "rk45";
}

IntegratorMethod integrator_method_from_string(std::string_view s) {
  if (s == "rk4") return IntegratorMethod::FixedRk4;
  if (s == "rk45") return IntegratorMethod::AdaptiveRk45;
  throw InvariantError("unknown integrator method '" + std::string(s) + "' (expected rk4 or rk45)");
}

void IntegratorConfig::validate() const {
  if (!(step > 0.0) || !std::isfinite(step)) throw InvariantError("integrator: step must be > 0");
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) {
    throw InvariantError("integrator: rel_tol and abs_tol must be > 0");
  }
  if (max_steps < 1) throw InvariantError("integrator: max_steps must be >= 1");
}

double DenseOutput::t_begin() const {
  if (segments_.empty()) throw DomainError("DenseOutput: empty");
  return segments_.front().t0;
}

double DenseOutput::t_end() const {
  if (segments_.empty()) throw DomainError("DenseOutput: empty");
  return segments_.back().t0 + segments_.back().h;
}

std::vector<double> DenseOutput::operator()(double t) const {
  const double lo = t_begin();
  const double hi = t_end();
  const double slack = 1e-12 * std::max(1.0, std::abs(hi));
  if (t < lo - slack || t > hi + slack) {
    throw DomainError("DenseOutput: t = " + std::to_string(t) + " outside [" + std::to_string(lo) +
                      ", " + std::to_string(hi) + "]");
  }
  auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                             [](double v, const Segment& s) { return v < s.t0; });
  const Segment& s = (it == segments_.begin()) ? segments_.front() : *std::prev(it);
  const double theta = std::clamp((t - s.t0) / s.h, 0.0, 1.0);
  const double one_m = 1.0 - theta;
  std::vector<double> y(s.r1.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = s.r1[i] + theta * (s.r2[i] + one_m * (s.r3[i] + theta * (s.r4[i] + one_m * s.r5[i])));
  }
  return y;
}

namespace ode {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

using Vec = std::vector<double>;

class Stepper {
 public:
  Stepper(const Rhs& rhs, const Hooks& hooks, std::size_t n)
      : rhs_(rhs), hooks_(hooks), n_(n), k_(7, Vec(n)), tmp_(n) {}

  // Returns false when the stage points leave the domain of the rhs.
  bool eval(double t, const Vec& y, Vec& dy) {
    try {
      rhs_(t, y, dy);
    } catch (const DomainError&) {
      return false;
    }
    return std::all_of(dy.begin(), dy.end(), [](double v) { return std::isfinite(v); });
  }

  bool admissible(const Vec& y) const {
    if (!std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); })) return false;
    return !hooks_.admissible || hooks_.admissible(y);
  }

  // Classic RK4 trial from (t, y) with derivative f0. On success y_new is set.
  bool rk4(double t, const Vec& y, const Vec& f0, double h, Vec& y_new) {
    Vec& k2 = k_[1];
    Vec& k3 = k_[2];
    Vec& k4 = k_[3];
    for (std::size_t i = 0; i < n_; ++i) tmp_[i] = y[i] + 0.5 * h * f0[i];
    if (!eval(t + 0.5 * h, tmp_, k2)) return false;
    for (std::size_t i = 0; i < n_; ++i) tmp_[i] = y[i] + 0.5 * h * k2[i];
    if (!eval(t + 0.5 * h, tmp_, k3)) return false;
    for (std::size_t i = 0; i < n_; ++i) tmp_[i] = y[i] + h * k3[i];
    if (!eval(t + h, tmp_, k4)) return false;
    y_new.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      y_new[i] = y[i] + h / 6.0 * (f0[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return admissible(y_new);
  }

  // Dormand-Prince trial. On success y_new, f_new (FSAL) and the scaled error
  // norm are set.
  bool dopri(double t, const Vec& y, const Vec& f0, double h, const IntegratorConfig& cfg,
             Vec& y_new, Vec& f_new, double& err) {
    Vec& k2 = k_[1];
    Vec& k3 = k_[2];
    Vec& k4 = k_[3];
    Vec& k5 = k_[4];
    Vec& k6 = k_[5];
    const Vec& k1 = f0;
    for (std::size_t i = 0; i < n_; ++i) tmp_[i] = y[i] + h * a21 * k1[i];
    if (!eval(t + c2 * h, tmp_, k2)) return false;
    for (std::size_t i = 0; i < n_; ++i) tmp_[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    if (!eval(t + c3 * h, tmp_, k3)) return false;
    for (std::size_t i = 0; i < n_; ++i)
      tmp_[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    if (!eval(t + c4 * h, tmp_, k4)) return false;
    for (std::size_t i = 0; i < n_; ++i)
      tmp_[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    if (!eval(t + c5 * h, tmp_, k5)) return false;
    for (std::size_t i = 0; i < n_; ++i)
      tmp_[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    if (!eval(t + h, tmp_, k6)) return false;
    y_new.resize(n_);
    for (std::size_t i = 0; i < n_; ++i)
      y_new[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
    if (!admissible(y_new)) return false;
    f_new.resize(n_);
    if (!eval(t + h, y_new, f_new)) return false;
    double acc = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                            e7 * f_new[i]);
      const double scale = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y[i]), std::abs(y_new[i]));
      acc += (e / scale) * (e / scale);
    }
    err = std::sqrt(acc / static_cast<double>(n_));
    return true;
  }

  DenseOutput::Segment dopri_segment(double t, double h, const Vec& y, const Vec& f0,
                                     const Vec& y_new, const Vec& f_new) const {
    DenseOutput::Segment s{t, h, y, Vec(n_), Vec(n_), Vec(n_), Vec(n_)};
    for (std::size_t i = 0; i < n_; ++i) {
      s.r2[i] = y_new[i] - y[i];
      s.r3[i] = h * f0[i] - s.r2[i];
      s.r4[i] = s.r2[i] - h * f_new[i] - s.r3[i];
      s.r5[i] = h * (d1 * f0[i] + d3 * k_[2][i] + d4 * k_[3][i] + d5 * k_[4][i] + d6 * k_[5][i] +
                     d7 * f_new[i]);
    }
    return s;
  }

  DenseOutput::Segment hermite_segment(double t, double h, const Vec& y, const Vec& f0,
                                       const Vec& y_new, const Vec& f_new) const {
    DenseOutput::Segment s{t, h, y, Vec(n_), Vec(n_), Vec(n_), Vec(n_, 0.0)};
    for (std::size_t i = 0; i < n_; ++i) {
      s.r2[i] = y_new[i] - y[i];
      s.r3[i] = h * f0[i] - s.r2[i];
      s.r4[i] = s.r2[i] - h * f_new[i] - s.r3[i];
    }
    return s;
  }

 private:
  const Rhs& rhs_;
  const Hooks& hooks_;
  std::size_t n_;
  std::vector<Vec> k_;
  Vec tmp_;
};

double rms_scaled(const Vec& v, const Vec& y, const IntegratorConfig& cfg) {
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double s = cfg.abs_tol + cfg.rel_tol * std::abs(y[i]);
    acc += (v[i] / s) * (v[i] / s);
  }
  return std::sqrt(acc / static_cast<double>(v.size()));
}

}  // namespace

Solution solve(const Rhs& rhs, std::vector<double> y0, double t_end, const IntegratorConfig& config,
               const Hooks& hooks) {
  config.validate();
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw InvariantError("integrate: t_end must be > 0");
  const std::size_t n = y0.size();
  Stepper stepper(rhs, hooks, n);

  Solution sol;
  Vec y = std::move(y0);
  Vec f(n), y_new, f_new(n);
  if (!stepper.eval(0.0, y, f)) throw DomainError("integrate: initial state outside rhs domain");
  sol.times.push_back(0.0);
  sol.states.push_back(y);

  const bool adaptive = config.method == IntegratorMethod::AdaptiveRk45;
  double h = config.step;
  if (adaptive) {
    // Starting step heuristic from Hairer, Norsett & Wanner.
    const double d0 = rms_scaled(y, y, config);
    const double d1n = rms_scaled(f, y, config);
    double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
    h0 = std::min(h0, t_end);
    Vec y1(n), f1(n);
    for (std::size_t i = 0; i < n; ++i) y1[i] = y[i] + h0 * f[i];
    double d2 = 0.0;
    if (stepper.admissible(y1) && stepper.eval(h0, y1, f1)) {
      Vec diff(n);
      for (std::size_t i = 0; i < n; ++i) diff[i] = f1[i] - f[i];
      d2 = rms_scaled(diff, y, config) / h0;
    }
    const double dmax = std::max(d1n, d2);
    const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 0.2);
    h = std::min(100.0 * h0, h1);
  }

  double t = 0.0;
  std::size_t attempts = 0;
  int positivity_failures = 0;
  const double t_eps = 1e-14 * std::max(1.0, t_end);

  while (t < t_end - t_eps) {
    if (++attempts > config.max_steps) {
      throw BudgetError("integrate: max_steps (" + std::to_string(config.max_steps) +
                        ") exceeded at t = " + std::to_string(t));
    }
    double h_try = std::min(h, t_end - t);
    const bool last = h_try >= t_end - t - t_eps;
    if (last) h_try = t_end - t;

    bool ok = false;
    double err = 0.0;
    if (adaptive) {
      ok = stepper.dopri(t, y, f, h_try, config, y_new, f_new, err);
    } else {
      ok = stepper.rk4(t, y, f, h_try, y_new) && stepper.eval(t + h_try, y_new, f_new);
    }
    if (!ok) {
      if (++positivity_failures > kMaxPositivityRetries) {
        throw StiffnessError(t, "integrate: step leaves the admissible region at t = " +
                                    std::to_string(t) + " after " +
                                    std::to_string(kMaxPositivityRetries) + " step halvings");
      }
      h = 0.5 * h_try;
      continue;
    }
    if (adaptive && err > 1.0) {
      h = h_try * std::max(0.2, 0.9 * std::pow(err, -0.2));
      continue;
    }
    positivity_failures = 0;

    auto segment = adaptive ? stepper.dopri_segment(t, h_try, y, f, y_new, f_new)
                            : stepper.hermite_segment(t, h_try, y, f, y_new, f_new);
    sol.dense.append(std::move(segment));
    const double t_new = last ? t_end : t + h_try;
    if (hooks.post_step && hooks.post_step(y_new)) {
      if (!stepper.eval(t_new, y_new, f_new)) {
        throw DomainError("integrate: post-step state outside rhs domain");
      }
    }
    t = t_new;
    y.swap(y_new);
    f.swap(f_new);
    sol.times.push_back(t);
    sol.states.push_back(y);

    if (adaptive) {
      const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      h = h_try * factor;
    } else {
      h = config.step;
    }
  }
  return sol;
}

}  // namespace ode

}  // namespace replidyn
