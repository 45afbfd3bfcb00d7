#include "gapfill/markov.hpp"

#include <algorithm>
#include <cmath>

namespace gapfill {

PairwiseModel::PairwiseModel(double activity, double interaction, double range, double horizon)
    : activity_(activity), interaction_(interaction), range_(range), horizon_(horizon) {
  if (!(activity > 0.0) || !std::isfinite(activity)) throw DomainError("beta1 must be positive");
  if (!(interaction >= 0.0 && interaction <= 1.0)) throw DomainError("gamma must lie in [0, 1]");
  if (!(range > 0.0) || !std::isfinite(range)) throw DomainError("range must be positive");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw DomainError("horizon must be positive");
}

double PairwiseModel::intensity_for(std::size_t close_neighbours) const {
  if (close_neighbours == 0) return activity_;
  return activity_ * std::pow(interaction_, static_cast<double>(close_neighbours));
}

std::size_t close_pairs(const OrderedConfig& config, double range) {
  std::size_t pairs = 0;
  std::size_t lo = 0;
  for (std::size_t j = 0; j < config.size(); ++j) {
    while (config[j] - config[lo] > range) ++lo;
    pairs += j - lo;
  }
  return pairs;
}

std::size_t neighbours_within(std::span<const double> points, double t, double range) {
  const auto lo = std::lower_bound(points.begin(), points.end(), t - range);
  const auto hi = std::upper_bound(points.begin(), points.end(), t + range);
  std::size_t count = static_cast<std::size_t>(hi - lo);
  // Exclude t itself if present; callers insert points not yet in the set.
  if (std::binary_search(lo, hi, t)) --count;
  return count;
}

double log_density(const PairwiseModel& model, const OrderedConfig& config) {
  if (!config.within(0.0, model.horizon())) throw DomainError("configuration outside [0, T]");
  const auto pairs = close_pairs(config, model.range());
  const double n = static_cast<double>(config.size());
  if (pairs == 0) return n * std::log(model.activity());
  if (model.interaction() == 0.0) return kLogZero;
  return n * std::log(model.activity()) + static_cast<double>(pairs) * std::log(model.interaction());
}

double papangelou(const PairwiseModel& model, const OrderedConfig& config, double t) {
  if (!(t >= 0.0 && t <= model.horizon())) throw DomainError("insertion time outside [0, T]");
  if (config.contains(t)) throw DomainError("insertion time already present in configuration");
  // Zero by convention when the configuration itself has zero density.
  if (model.interaction() == 0.0 && close_pairs(config, model.range()) > 0) return 0.0;
  return model.intensity_for(neighbours_within(config.view(), t, model.range()));
}

double conditional_first_order(const PairwiseModel& model, const BrokenWindow& window,
                               const OrderedConfig& left, const OrderedConfig& right, double t) {
  if (!window.in_gap(t)) throw DomainError("insertion time outside the gap");
  return model.intensity_for(neighbours_within(left.view(), t, model.range()) +
                             neighbours_within(right.view(), t, model.range()));
}

double PairwiseDensity::log_density(const OrderedConfig& config) const {
  return gapfill::log_density(model_, config);
}

double PairwiseDensity::papangelou(const OrderedConfig& config, double t) const {
  return gapfill::papangelou(model_, config, t);
}

}  // namespace gapfill
