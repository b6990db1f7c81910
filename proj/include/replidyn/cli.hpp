#pragma once

// Experiment runner behind the `replidyn` command-line tool. A config is a
// single JSON document (schema in docs/config.md); running it writes a
// trajectory CSV, a summary JSON and, for three types, a ternary projection.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "replidyn/core.hpp"
#include "replidyn/errors.hpp"
#include "replidyn/inference.hpp"
#include "replidyn/ode.hpp"

namespace replidyn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitRuntime = 3;

// Invalid configuration; `field` is a dotted path such as "landscape.A".
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error("config error at '" + field + "': " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Insertion-ordered, so summaries read top to bottom in a fixed order.
using Json = nlohmann::ordered_json;

enum class Command { Simulate, Iterate, Bayes, Ess, Expfam };
std::string_view to_string(Command c);

struct OutputNames {
  std::string trajectory = "trajectory.csv";
  std::string summary = "summary.json";
  std::string ternary = "ternary.csv";
};

struct ExperimentConfig {
  Command command = Command::Simulate;
  std::optional<FitnessLandscape> landscape;
  std::optional<Distribution> initial;
  double t_end = 10.0;
  std::size_t steps = 100;
  bool stop_at_fixed_point = true;
  IntegratorConfig integrator;
  std::optional<Distribution> reference;

  std::optional<BayesModel> model;
  std::vector<std::string> evidence;

  std::optional<Distribution> ess_candidate;  // defaults to the interior equilibrium
  double ess_radius = 0.1;
  std::size_t ess_samples = 200;

  bool closed_form = false;  // expfam: use the explicit log-linear solution

  std::size_t samples = 200;  // uniform output grid for continuous runs
  bool raw_steps = false;
  std::uint64_t seed = 0;
  OutputNames output;
};

ExperimentConfig parse_config(const Json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

// Normalized form with every default spelled out; parse_config(to_json(c))
// reproduces c.
Json to_json(const ExperimentConfig& config);

// Runs the experiment and writes its files into out_dir (created if needed).
// Library failures are rethrown as replidyn::Error with the command prefixed.
void run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir);

// Flattens a nested exception chain into "outer: inner: ...".
std::string describe(const std::exception& e);

}  // namespace replidyn::cli
