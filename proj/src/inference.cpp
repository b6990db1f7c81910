#include "replidyn/inference.hpp"

#include <exception>

#include "replidyn/errors.hpp"

namespace replidyn {

BayesModel::BayesModel(std::vector<std::string> hypothesis_labels, Distribution prior,
                       std::map<std::string, std::vector<double>> likelihoods)
    : labels_(std::move(hypothesis_labels)),
      prior_(std::move(prior)),
      likelihoods_(std::move(likelihoods)) {
  if (labels_.size() != prior_.size()) {
    throw DimensionError("BayesModel: " + std::to_string(labels_.size()) + " labels for " +
                         std::to_string(prior_.size()) + " prior weights");
  }
  for (const auto& [id, row] : likelihoods_) {
    if (row.size() != prior_.size()) {
      throw DimensionError("BayesModel: likelihood row '" + id + "' has " +
                           std::to_string(row.size()) + " entries, expected " +
                           std::to_string(prior_.size()));
    }
    bool any_positive = false;
    for (double l : row) {
      if (!(l >= 0.0 && l <= 1.0)) {
        throw InvariantError("BayesModel: likelihood row '" + id + "' has an entry outside [0,1]");
      }
      any_positive = any_positive || l > 0.0;
    }
    if (!any_positive) throw InvariantError("BayesModel: likelihood row '" + id + "' is all zero");
  }
}

const std::vector<double>& BayesModel::likelihood(const std::string& evidence) const {
  auto it = likelihoods_.find(evidence);
  if (it == likelihoods_.end()) throw LookupError("unknown evidence id '" + evidence + "'");
  return it->second;
}

BayesModel BayesModel::with_prior(Distribution prior) const {
  return BayesModel(labels_, std::move(prior), likelihoods_);
}

BayesUpdate bayes_update(const BayesModel& model, const std::string& evidence) {
  const std::vector<double>& L = model.likelihood(evidence);
  const Distribution& prior = model.prior();
  double marginal = 0.0;
  for (std::size_t i = 0; i < L.size(); ++i) marginal += L[i] * prior[i];
  if (!(marginal > 0.0)) {
    throw ImpossibleEvidenceError("bayes_update: evidence '" + evidence +
                                  "' has zero probability under the prior");
  }
  std::vector<double> post(L.size());
  for (std::size_t i = 0; i < L.size(); ++i) post[i] = L[i] * prior[i] / marginal;
  return {Distribution::normalized(std::move(post)), marginal};
}

FitnessLandscape likelihood_landscape(const BayesModel& model, const std::string& evidence) {
  return FitnessLandscape::likelihood(model.likelihood(evidence));
}

double information_gain(const Distribution& prior, const Distribution& posterior) {
  return kl_divergence(posterior, prior);
}

Trajectory sequential_inference(const BayesModel& model,
                                const std::vector<std::string>& evidence_sequence) {
  for (const auto& id : evidence_sequence) (void)model.likelihood(id);

  Trajectory tr;
  tr.times.push_back(0.0);
  tr.states.push_back(model.prior());
  tr.mean_fitness.push_back(1.0);
  tr.entropy.push_back(shannon_entropy(model.prior()));
  std::vector<double> gains{0.0};

  BayesModel current = model;
  for (std::size_t k = 0; k < evidence_sequence.size(); ++k) {
    std::optional<BayesUpdate> up;
    try {
      up = bayes_update(current, evidence_sequence[k]);
    } catch (const Error& e) {
      std::throw_with_nested(
          StepError(k, "sequential_inference: observation " + std::to_string(k) + ": " + e.what()));
    }
    gains.push_back(information_gain(current.prior(), up->posterior));
    tr.times.push_back(static_cast<double>(k + 1));
    tr.mean_fitness.push_back(up->marginal);
    tr.entropy.push_back(shannon_entropy(up->posterior));
    tr.states.push_back(up->posterior);
    current = current.with_prior(std::move(up->posterior));
  }
  tr.information_gain = std::move(gains);
  tr.validate();
  return tr;
}

}  // namespace replidyn
