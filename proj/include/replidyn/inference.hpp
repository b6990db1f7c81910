#pragma once

// Bayesian updating over a finite hypothesis set, expressed through the
// discrete replicator: prior <-> population state, P(E|H_i) <-> fitness,
// P(E) <-> mean fitness, posterior <-> next generation.

#include <map>
#include <string>
#include <vector>

#include "replidyn/core.hpp"
#include "replidyn/dynamics.hpp"

namespace replidyn {

class BayesModel {
 public:
  // likelihoods[e][i] = P(E_e | H_i). Validates sizes, entries in [0,1] and
  // that each evidence row has a positive entry.
  BayesModel(std::vector<std::string> hypothesis_labels, Distribution prior,
             std::map<std::string, std::vector<double>> likelihoods);

  const std::vector<std::string>& hypothesis_labels() const noexcept { return labels_; }
  const Distribution& prior() const noexcept { return prior_; }
  const std::map<std::string, std::vector<double>>& likelihoods() const noexcept {
    return likelihoods_;
  }
  // Throws LookupError for an unknown id.
  const std::vector<double>& likelihood(const std::string& evidence) const;
  std::size_t size() const noexcept { return prior_.size(); }

  BayesModel with_prior(Distribution prior) const;

 private:
  std::vector<std::string> labels_;
  Distribution prior_;
  std::map<std::string, std::vector<double>> likelihoods_;
};

struct BayesUpdate {
  Distribution posterior;
  double marginal;  // P(E)
};

BayesUpdate bayes_update(const BayesModel& model, const std::string& evidence);

FitnessLandscape likelihood_landscape(const BayesModel& model, const std::string& evidence);

// States 0..m at times 0..m. mean_fitness[k] is the marginal P(E_k) of the
// observation that produced state k (1 for the prior row); information_gain[k]
// is D_KL(state_k || state_{k-1}) (0 for the prior row).
Trajectory sequential_inference(const BayesModel& model,
                                const std::vector<std::string>& evidence_sequence);

// D_KL(posterior || prior).
double information_gain(const Distribution& prior, const Distribution& posterior);

}  // namespace replidyn
