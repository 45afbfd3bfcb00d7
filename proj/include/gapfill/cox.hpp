#pragma once

// Two-level compound Poisson process: a Cox process whose constant intensity
// is lambda1 or lambda2 with probability 1/2 each.

#include <cstddef>
#include <utility>
#include <vector>

#include "gapfill/core.hpp"

namespace gapfill {

class CompoundPoissonModel {
 public:
  CompoundPoissonModel(double lambda1, double lambda2, BrokenWindow window);

  double lambda1() const { return lambda1_; }
  double lambda2() const { return lambda2_; }
  const BrokenWindow& window() const { return window_; }

 private:
  double lambda1_;
  double lambda2_;
  BrokenWindow window_;
};

struct LevelPosterior {
  double p1 = 0.5;
  double p2 = 0.5;
};

// Posterior level probabilities after seeing n_observed points in a region of
// total length observed_length.
LevelPosterior posterior_level_prob(double lambda1, double lambda2, double observed_length,
                                    std::size_t n_observed);
LevelPosterior posterior_level_prob(const CompoundPoissonModel& model, std::size_t n_observed);

// Conditional Janossy density of the hidden points; depends on the gap only
// through its size.
double conditional_gap_janossy(const CompoundPoissonModel& model, std::size_t n_observed,
                               const OrderedConfig& gap);

// P(n hidden points | observations), n = 0..n_max.
std::vector<double> gap_count_posterior(const CompoundPoissonModel& model, std::size_t n_observed,
                                        std::size_t n_max);

// Unconditional mixture density on [0, T], for use with the quadrature oracle.
class CompoundPoissonDensity final : public ModelDensity {
 public:
  CompoundPoissonDensity(double lambda1, double lambda2, double horizon);
  double horizon() const override { return horizon_; }
  double log_density(const OrderedConfig& config) const override;

 private:
  double lambda1_;
  double lambda2_;
  double horizon_;
};

}  // namespace gapfill
