#include "replidyn/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "replidyn/dynamics.hpp"
#include "replidyn/expfamily.hpp"
#include "replidyn/stability.hpp"

namespace replidyn::cli {

using json = Json;

std::string_view to_string(Command c) {
  switch (c) {
    case Command::Simulate: return "simulate";
    case Command::Iterate: return "iterate";
    case Command::Bayes: return "bayes";
    case Command::Ess: return "ess";
    case Command::Expfam: break;
  }
  return "expfam";
}

std::string describe(const std::exception& e) {
  std::string msg = e.what();
  try {
    std::rethrow_if_nested(e);
  } catch (const std::exception& inner) {
    const std::string rest = describe(inner);
    if (msg.find(rest) == std::string::npos) msg += ": " + rest;
  } catch (...) {
  }
  return msg;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

std::string join(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

std::string index(const std::string& parent, std::size_t i) {
  return parent + "[" + std::to_string(i) + "]";
}

// A JSON object plus its dotted path. Keys are marked as they are read so
// leftovers can be reported as unknown.
class Object {
 public:
  Object(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& at(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError(join(path_, key), "required field is missing");
    return j_.at(key);
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string field(const std::string& key) const { return join(path_, key); }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) {
        throw ConfigError(join(path_, it.key()), "unknown field, or not used by this command");
      }
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

double number(const json& j, const std::string& field) {
  if (!j.is_number()) throw ConfigError(field, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(field, "must be finite");
  return v;
}

std::uint64_t count(const json& j, const std::string& field) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(j.get<std::int64_t>());
  throw ConfigError(field, "expected a non-negative integer");
}

bool boolean(const json& j, const std::string& field) {
  if (!j.is_boolean()) throw ConfigError(field, "expected true or false");
  return j.get<bool>();
}

std::string text(const json& j, const std::string& field) {
  if (!j.is_string()) throw ConfigError(field, "expected a string");
  return j.get<std::string>();
}

std::vector<double> vector_of(const json& j, const std::string& field) {
  if (!j.is_array()) throw ConfigError(field, "expected an array of numbers");
  std::vector<double> v;
  for (std::size_t i = 0; i < j.size(); ++i) v.push_back(number(j[i], index(field, i)));
  return v;
}

Matrix matrix_of(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) throw ConfigError(field, "expected a non-empty array of rows");
  const std::size_t rows = j.size();
  std::vector<std::vector<double>> data;
  for (std::size_t i = 0; i < rows; ++i) {
    data.push_back(vector_of(j[i], index(field, i)));
    if (data.back().size() != data.front().size()) {
      throw ConfigError(field, "dimension mismatch: row " + std::to_string(i + 1) + " has " +
                                   std::to_string(data.back().size()) + " entries, row 1 has " +
                                   std::to_string(data.front().size()));
    }
  }
  const std::size_t cols = data.front().size();
  if (cols != rows) {
    throw ConfigError(field, "dimension mismatch: matrix is " + std::to_string(rows) + "x" +
                                 std::to_string(cols) + ", expected square");
  }
  Matrix A(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t k = 0; k < cols; ++k)
      A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = data[i][k];
  return A;
}

Distribution distribution_of(const json& j, const std::string& field) {
  try {
    return Distribution(vector_of(j, field));
  } catch (const InvariantError& e) {
    throw ConfigError(field, e.what());
  }
}

FitnessLandscape landscape_of(const json& j, const std::string& path) {
  Object o(j, path);
  const std::string type = text(o.at("type"), o.field("type"));
  std::optional<FitnessLandscape> result;
  try {
    if (type == "constant") {
      result = FitnessLandscape::constant(number(o.at("c"), o.field("c")));
    } else if (type == "linear") {
      result = FitnessLandscape::linear(matrix_of(o.at("A"), o.field("A")));
    } else if (type == "log_linear") {
      Matrix A = matrix_of(o.at("A"), o.field("A"));
      std::vector<double> b = vector_of(o.at("b"), o.field("b"));
      if (b.size() != static_cast<std::size_t>(A.rows())) {
        throw ConfigError(o.field("b"), "dimension mismatch: " + std::to_string(b.size()) +
                                            " entries for a " + std::to_string(A.rows()) + "x" +
                                            std::to_string(A.rows()) + " matrix");
      }
      result = FitnessLandscape::log_linear(std::move(A), std::move(b));
    } else if (type == "likelihood") {
      result = FitnessLandscape::likelihood(vector_of(o.at("L"), o.field("L")));
    } else if (type == "shifted") {
      FitnessLandscape base = landscape_of(o.at("base"), o.field("base"));
      result = FitnessLandscape::shifted(std::move(base), number(o.at("c"), o.field("c")));
    } else {
      throw ConfigError(o.field("type"), "unknown landscape type '" + type +
                                             "' (constant, linear, log_linear, likelihood, shifted)");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(path, e.what());
  }
  o.finish();
  return *result;
}

IntegratorConfig integrator_of(const json& j, const std::string& path) {
  Object o(j, path);
  IntegratorConfig c;
  if (const json* m = o.find("method")) {
    try {
      c.method = integrator_method_from_string(text(*m, o.field("method")));
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(o.field("method"), e.what());
    }
  }
  if (const json* v = o.find("step")) c.step = number(*v, o.field("step"));
  if (const json* v = o.find("rel_tol")) c.rel_tol = number(*v, o.field("rel_tol"));
  if (const json* v = o.find("abs_tol")) c.abs_tol = number(*v, o.field("abs_tol"));
  if (const json* v = o.find("max_steps")) c.max_steps = count(*v, o.field("max_steps"));
  o.finish();
  try {
    c.validate();
  } catch (const Error& e) {
    throw ConfigError(path, e.what());
  }
  return c;
}

BayesModel model_of(const json& j, const std::string& path) {
  Object o(j, path);
  const json& hyp = o.at("hypotheses");
  if (!hyp.is_array()) throw ConfigError(o.field("hypotheses"), "expected an array of strings");
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < hyp.size(); ++i) labels.push_back(text(hyp[i], index(o.field("hypotheses"), i)));
  Distribution prior = distribution_of(o.at("prior"), o.field("prior"));
  const json& lk = o.at("likelihoods");
  if (!lk.is_object()) throw ConfigError(o.field("likelihoods"), "expected an object of evidence rows");
  std::map<std::string, std::vector<double>> table;
  for (auto it = lk.begin(); it != lk.end(); ++it) {
    table[it.key()] = vector_of(it.value(), o.field("likelihoods") + "." + it.key());
  }
  o.finish();
  try {
    return BayesModel(std::move(labels), std::move(prior), std::move(table));
  } catch (const Error& e) {
    throw ConfigError(path, e.what());
  }
}

std::string file_name(const json& j, const std::string& field) {
  const std::string name = text(j, field);
  if (name.empty() || name == "." || name == ".." || name.find_first_of("/\\") != std::string::npos) {
    throw ConfigError(field, "must be a plain file name");
  }
  return name;
}

Command command_of(const std::string& s, const std::string& field) {
  for (Command c : {Command::Simulate, Command::Iterate, Command::Bayes, Command::Ess, Command::Expfam}) {
    if (to_string(c) == s) return c;
  }
  throw ConfigError(field, "unknown command '" + s + "' (simulate, iterate, bayes, ess, expfam)");
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
  Object root(doc, "");
  ExperimentConfig c;
  c.command = command_of(text(root.at("command"), "command"), "command");
  const bool needs_landscape = c.command != Command::Bayes;
  const bool continuous = c.command == Command::Simulate || c.command == Command::Expfam;

  if (needs_landscape) c.landscape = landscape_of(root.at("landscape"), "landscape");
  if (c.command == Command::Bayes) {
    c.model = model_of(root.at("model"), "model");
    const json& ev = root.at("evidence");
    if (!ev.is_array()) throw ConfigError("evidence", "expected an array of evidence ids");
    for (std::size_t i = 0; i < ev.size(); ++i) {
      std::string id = text(ev[i], index("evidence", i));
      if (!c.model->likelihoods().count(id)) {
        throw ConfigError(index("evidence", i), "unknown evidence id '" + id + "'");
      }
      c.evidence.push_back(std::move(id));
    }
  }

  const bool needs_initial = c.command == Command::Simulate || c.command == Command::Iterate ||
                             c.command == Command::Expfam;
  if (needs_initial || (c.command == Command::Ess && root.has("initial"))) {
    c.initial = distribution_of(root.at("initial"), "initial");
  }
  if (continuous || (c.command == Command::Ess && c.initial)) {
    c.t_end = number(root.at("t_end"), "t_end");
    if (!(c.t_end > 0.0)) throw ConfigError("t_end", "must be > 0");
    if (const json* v = root.find("integrator")) c.integrator = integrator_of(*v, "integrator");
    if (const json* v = root.find("samples")) c.samples = count(*v, "samples");
    if (c.samples < 2) throw ConfigError("samples", "must be >= 2");
    if (const json* v = root.find("raw_steps")) c.raw_steps = boolean(*v, "raw_steps");
  }
  if (c.command == Command::Iterate) {
    c.steps = count(root.at("steps"), "steps");
    if (const json* v = root.find("stop_at_fixed_point")) c.stop_at_fixed_point = boolean(*v, "stop_at_fixed_point");
  }
  // ess measures the potential against its candidate instead.
  if (c.command != Command::Ess) {
    if (const json* v = root.find("reference")) c.reference = distribution_of(*v, "reference");
  }
  if (c.command == Command::Ess) {
    if (const json* v = root.find("ess")) {
      Object e(*v, "ess");
      if (const json* cand = e.find("candidate")) c.ess_candidate = distribution_of(*cand, "ess.candidate");
      if (const json* r = e.find("radius")) c.ess_radius = number(*r, "ess.radius");
      if (const json* s = e.find("samples")) c.ess_samples = count(*s, "ess.samples");
      e.finish();
    }
    if (!(c.ess_radius > 0.0)) throw ConfigError("ess.radius", "must be > 0");
    if (!c.ess_candidate && !std::holds_alternative<FitnessLandscape::Linear>(c.landscape->variant())) {
      throw ConfigError("ess.candidate", "required unless the landscape is linear");
    }
  }
  if (c.command == Command::Expfam) {
    if (const json* v = root.find("closed_form")) c.closed_form = boolean(*v, "closed_form");
    if (c.closed_form && !std::holds_alternative<FitnessLandscape::LogLinear>(c.landscape->variant())) {
      throw ConfigError("closed_form", "the explicit solution needs a log_linear landscape");
    }
    if (c.closed_form) {
      const Matrix& A = std::get<FitnessLandscape::LogLinear>(c.landscape->variant()).A;
      for (Eigen::Index i = 0; i < A.rows(); ++i) {
        const double scale = std::max(1.0, A.row(i).cwiseAbs().maxCoeff());
        if (std::abs(A.row(i).sum()) > 1e-12 * scale) {
          throw ConfigError("landscape.A", "row " + std::to_string(i + 1) +
                                               " must sum to zero for the explicit solution");
        }
      }
    }
  }
  if (const json* v = root.find("seed")) c.seed = count(*v, "seed");
  if (const json* v = root.find("output")) {
    Object o(*v, "output");
    if (const json* f = o.find("trajectory")) c.output.trajectory = file_name(*f, "output.trajectory");
    if (const json* f = o.find("summary")) c.output.summary = file_name(*f, "output.summary");
    if (const json* f = o.find("ternary")) c.output.ternary = file_name(*f, "output.ternary");
    o.finish();
  }
  root.finish();

  // Cross-field dimensions.
  std::optional<std::size_t> n;
  std::string n_source;
  if (c.landscape) {
    n = c.landscape->dimension();
    n_source = "landscape";
  }
  if (c.model) {
    n = c.model->size();
    n_source = "model.prior";
  }
  auto agree = [&](const std::optional<Distribution>& d, const std::string& field) {
    if (!d) return;
    if (n) {
      if (d->size() != *n) {
        throw ConfigError(field, "dimension mismatch: " + std::to_string(d->size()) + " entries, " +
                                     n_source + " has " + std::to_string(*n));
      }
    } else {
      n = d->size();
      n_source = field;
    }
  };
  agree(c.initial, "initial");
  agree(c.reference, "reference");
  agree(c.ess_candidate, "ess.candidate");
  if (c.command == Command::Ess && !n && !c.ess_candidate) {
    throw ConfigError("ess.candidate", "cannot infer the number of types");
  }
  if (c.command == Command::Expfam && c.closed_form && c.raw_steps) {
    throw ConfigError("raw_steps", "the explicit solution has no integrator steps");
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(doc);
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json matrix_json(const Matrix& A) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < A.cols(); ++k) row.push_back(A(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

json weights_json(const Distribution& d) { return d.vector(); }

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

json landscape_json(const FitnessLandscape& L) {
  return std::visit(
      Overloaded{
          [](const FitnessLandscape::Constant& v) { return json{{"type", "constant"}, {"c", v.c}}; },
          [](const FitnessLandscape::Linear& v) { return json{{"type", "linear"}, {"A", matrix_json(v.A)}}; },
          [](const FitnessLandscape::LogLinear& v) {
            return json{{"type", "log_linear"}, {"A", matrix_json(v.A)}, {"b", v.b}};
          },
          [](const FitnessLandscape::Likelihood& v) { return json{{"type", "likelihood"}, {"L", v.L}}; },
          [](const FitnessLandscape::Shifted& v) {
            return json{{"type", "shifted"}, {"base", landscape_json(*v.base)}, {"c", v.c}};
          },
      },
      L.variant());
}

json integrator_json(const IntegratorConfig& c) {
  return json{{"method", std::string(to_string(c.method))},
              {"step", c.step},
              {"rel_tol", c.rel_tol},
              {"abs_tol", c.abs_tol},
              {"max_steps", c.max_steps}};
}

}  // namespace

json to_json(const ExperimentConfig& c) {
  json j;
  j["command"] = std::string(to_string(c.command));
  if (c.landscape) j["landscape"] = landscape_json(*c.landscape);
  if (c.model) {
    json lk = json::object();
    for (const auto& [id, row] : c.model->likelihoods()) lk[id] = row;
    j["model"] = {{"hypotheses", c.model->hypothesis_labels()},
                  {"prior", weights_json(c.model->prior())},
                  {"likelihoods", lk}};
    j["evidence"] = c.evidence;
  }
  if (c.initial) j["initial"] = weights_json(*c.initial);
  const bool continuous = c.command == Command::Simulate || c.command == Command::Expfam ||
                          (c.command == Command::Ess && c.initial);
  if (continuous) {
    j["t_end"] = c.t_end;
    j["integrator"] = integrator_json(c.integrator);
    j["samples"] = c.samples;
    j["raw_steps"] = c.raw_steps;
  }
  if (c.command == Command::Iterate) {
    j["steps"] = c.steps;
    j["stop_at_fixed_point"] = c.stop_at_fixed_point;
  }
  if (c.reference) j["reference"] = weights_json(*c.reference);
  if (c.command == Command::Ess) {
    json e = {{"radius", c.ess_radius}, {"samples", c.ess_samples}};
    if (c.ess_candidate) e["candidate"] = weights_json(*c.ess_candidate);
    j["ess"] = e;
  }
  if (c.command == Command::Expfam) j["closed_form"] = c.closed_form;
  j["seed"] = c.seed;
  j["output"] = {{"trajectory", c.output.trajectory}, {"summary", c.output.summary}, {"ternary", c.output.ternary}};
  return j;
}

// ---------------------------------------------------------------------------
// Running

namespace {

class ExperimentError : public Error {
 public:
  using Error::Error;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ExperimentError("cannot write " + path.string());
  out << body;
  if (!out) throw ExperimentError("write failed for " + path.string());
}

std::string trajectory_csv(const Trajectory& tr) {
  const std::size_t n = tr.dimension();
  std::ostringstream os;
  os << "t";
  for (std::size_t i = 0; i < n; ++i) os << ",x_" << i + 1;
  os << ",mean_fitness,entropy";
  if (tr.kl_to_reference) os << ",kl_to_ref";
  os << "\n";
  for (std::size_t k = 0; k < tr.size(); ++k) {
    os << fmt(tr.times[k]);
    for (double w : tr.states[k].weights()) os << ',' << fmt(w);
    os << ',' << fmt(tr.mean_fitness[k]) << ',' << fmt(tr.entropy[k]);
    if (tr.kl_to_reference) os << ',' << fmt((*tr.kl_to_reference)[k]);
    os << "\n";
  }
  return os.str();
}

std::string ternary_csv(const Trajectory& tr) {
  std::ostringstream os;
  os << "u,v\n";
  const double h = std::sqrt(3.0) / 2.0;
  for (const auto& s : tr.states) os << fmt(s[1] + 0.5 * s[2]) << ',' << fmt(h * s[2]) << "\n";
  return os.str();
}

void attach_reference(Trajectory& tr, const std::optional<Distribution>& ref) {
  if (!ref) return;
  std::vector<double> kl;
  for (const auto& s : tr.states) kl.push_back(kl_divergence(*ref, s));
  tr.kl_to_reference = std::move(kl);
}

json lyapunov_json(const LyapunovTrace& t) {
  json j = {{"mode", std::string(to_string(t.mode))},
            {"times", t.times},
            {"potential_series", t.potential_series},
            {"monotone_decreasing", t.monotone_decreasing},
            {"strictly_decreasing", t.strictly_decreasing},
            {"max_increase", t.max_increase}};
  if (t.mode == TraceMode::Discrete) {
    j["bound_series"] = t.bound_series;
    j["jensen_lower_bound_ok"] = t.jensen_lower_bound_ok;
  }
  return j;
}

json ess_json(const EssReport& r) {
  return json{{"candidate", weights_json(r.candidate)},
              {"quadratic_form_verdict", std::string(to_string(r.quadratic_form_verdict))},
              {"tangent_eigenvalues", r.tangent_eigenvalues},
              {"sampling_verdict", r.sampling_verdict},
              {"min_margin", r.min_margin},
              {"radius", r.radius},
              {"sample_count", r.sample_count}};
}

json terminal_json(const Trajectory& tr) {
  return json{{"t", tr.times.back()},
              {"state", weights_json(tr.terminal())},
              {"mean_fitness", tr.mean_fitness.back()},
              {"entropy", tr.entropy.back()}};
}

// Continuous output: raw accepted steps or the uniform grid.
Trajectory for_output(const Trajectory& raw, const ExperimentConfig& c,
                      const std::optional<Distribution>& ref) {
  if (c.raw_steps) {
    Trajectory out = raw;
    attach_reference(out, ref);
    return out;
  }
  Trajectory out = resample(raw, uniform_grid(0.0, c.t_end, c.samples), *c.landscape, std::nullopt);
  attach_reference(out, ref);
  return out;
}

struct Outcome {
  std::optional<Trajectory> output;
  json summary = json::object();
};

Outcome run_simulate(const ExperimentConfig& c) {
  Outcome o;
  const Trajectory raw = integrate(*c.initial, *c.landscape, c.t_end, c.integrator);
  o.output = for_output(raw, c, c.reference);
  o.summary["terminal"] = terminal_json(raw);
  o.summary["accepted_steps"] = raw.size() - 1;
  o.summary["stop_reason"] = std::string(to_string(raw.stop_reason));
  if (c.reference) {
    o.summary["lyapunov"] = lyapunov_json(lyapunov_trace(raw, *c.reference, *c.landscape, TraceMode::Continuous));
  }
  return o;
}

Outcome run_iterate(const ExperimentConfig& c) {
  Outcome o;
  DiscreteOrbitOptions opt;
  opt.stop_at_fixed_point = c.stop_at_fixed_point;
  opt.reference = c.reference;
  Trajectory orbit = discrete_orbit(*c.initial, *c.landscape, c.steps, opt);
  o.summary["terminal"] = terminal_json(orbit);
  o.summary["generations"] = orbit.size() - 1;
  o.summary["stop_reason"] = std::string(to_string(orbit.stop_reason));
  if (c.reference) {
    o.summary["lyapunov"] = lyapunov_json(lyapunov_trace(orbit, *c.reference, *c.landscape, TraceMode::Discrete));
  }
  o.output = std::move(orbit);
  return o;
}

Outcome run_bayes(const ExperimentConfig& c) {
  Outcome o;
  Trajectory tr = sequential_inference(*c.model, c.evidence);
  attach_reference(tr, c.reference);
  const std::vector<double> marginals(tr.mean_fitness.begin() + 1, tr.mean_fitness.end());
  o.summary["hypotheses"] = c.model->hypothesis_labels();
  o.summary["posterior"] = weights_json(tr.terminal());
  o.summary["marginals"] = marginals;
  o.summary["information_gain"] = *tr.information_gain;
  o.summary["total_information_gain"] = information_gain(c.model->prior(), tr.terminal());
  o.output = std::move(tr);
  return o;
}

Outcome run_ess(const ExperimentConfig& c) {
  Outcome o;
  const Distribution candidate =
      c.ess_candidate ? *c.ess_candidate
                      : interior_equilibrium(std::get<FitnessLandscape::Linear>(c.landscape->variant()).A);
  o.summary["ess"] = ess_json(ess_check(candidate, *c.landscape, c.ess_radius, c.ess_samples, c.seed));
  if (c.initial) {
    const Trajectory raw = integrate(*c.initial, *c.landscape, c.t_end, c.integrator);
    o.output = for_output(raw, c, candidate);
    o.summary["terminal"] = terminal_json(raw);
    o.summary["lyapunov_derivative_at_initial"] = lyapunov_derivative(candidate, *c.initial, *c.landscape);
    o.summary["lyapunov"] = lyapunov_json(lyapunov_trace(raw, candidate, *c.landscape, TraceMode::Continuous));
  }
  return o;
}

Outcome run_expfam(const ExperimentConfig& c) {
  Outcome o;
  if (c.closed_form) {
    const auto& ll = std::get<FitnessLandscape::LogLinear>(c.landscape->variant());
    const auto grid = uniform_grid(0.0, c.t_end, c.samples);
    Trajectory tr = loglinear_solution(ll.A, ll.b, *c.initial, grid);
    attach_reference(tr, c.reference);
    o.summary["terminal"] = terminal_json(tr);
    o.summary["normalizer_terminal"] = tr.normalizer->back();
    o.summary["method"] = "closed_form";
    o.output = std::move(tr);
    return o;
  }
  const Trajectory raw = integrate_in_coords(*c.initial, *c.landscape, c.t_end, c.integrator);
  o.output = for_output(raw, c, c.reference);
  o.summary["terminal"] = terminal_json(raw);
  o.summary["normalizer_initial"] = raw.normalizer->front();
  o.summary["normalizer_terminal"] = raw.normalizer->back();
  o.summary["normalizer_rate_residual"] = normalizer_rate_residual(raw, *c.landscape);
  o.summary["accepted_steps"] = raw.size() - 1;
  o.summary["method"] = "integrate";
  return o;
}

}  // namespace

void run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  Outcome outcome;
  try {
    switch (config.command) {
      case Command::Simulate: outcome = run_simulate(config); break;
      case Command::Iterate: outcome = run_iterate(config); break;
      case Command::Bayes: outcome = run_bayes(config); break;
      case Command::Ess: outcome = run_ess(config); break;
      case Command::Expfam: outcome = run_expfam(config); break;
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ExperimentError(std::string(to_string(config.command)) + ": " + describe(e));
  }

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw ExperimentError("cannot create " + out_dir.string() + ": " + ec.message());

  json files = json::object();
  if (outcome.output) {
    write_text(out_dir / config.output.trajectory, trajectory_csv(*outcome.output));
    files["trajectory"] = config.output.trajectory;
    if (outcome.output->dimension() == 3) {
      write_text(out_dir / config.output.ternary, ternary_csv(*outcome.output));
      files["ternary"] = config.output.ternary;
    }
  }
  json summary;
  summary["command"] = std::string(to_string(config.command));
  for (auto& [key, value] : outcome.summary.items()) summary[key] = value;
  summary["files"] = files;
  summary["config"] = to_json(config);
  write_text(out_dir / config.output.summary, summary.dump(2) + "\n");
}

}  // namespace replidyn::cli
