#pragma once

// Strauss-type pairwise interaction process on [0, T]: first-order term beta1
// per point, factor gamma for every pair at distance <= range. The density is
// unnormalised with f(empty) = 1.

#include <cstddef>
#include <span>

#include "gapfill/core.hpp"

namespace gapfill {

class PairwiseModel {
 public:
  PairwiseModel(double activity, double interaction, double range, double horizon);

  double activity() const { return activity_; }
  double interaction() const { return interaction_; }
  double range() const { return range_; }
  double horizon() const { return horizon_; }

  // activity * interaction^close_neighbours
  double intensity_for(std::size_t close_neighbours) const;

 private:
  double activity_;
  double interaction_;
  double range_;
  double horizon_;
};

// Number of pairs t_i < t_j with t_j - t_i <= range.
std::size_t close_pairs(const OrderedConfig& config, double range);

// Points of a sorted sequence within distance `range` of t (closed).
std::size_t neighbours_within(std::span<const double> points, double t, double range);

double log_density(const PairwiseModel& model, const OrderedConfig& config);
double papangelou(const PairwiseModel& model, const OrderedConfig& config, double t);

// First-order interaction of the hidden process given the observed points:
// beta1 * gamma^(observed points within range of t).
double conditional_first_order(const PairwiseModel& model, const BrokenWindow& window,
                               const OrderedConfig& left, const OrderedConfig& right, double t);

class PairwiseDensity final : public ModelDensity {
 public:
  explicit PairwiseDensity(PairwiseModel model) : model_(model) {}
  double horizon() const override { return model_.horizon(); }
  double log_density(const OrderedConfig& config) const override;
  double papangelou(const OrderedConfig& config, double t) const override;
  const PairwiseModel& model() const { return model_; }

 private:
  PairwiseModel model_;
};

}  // namespace gapfill
