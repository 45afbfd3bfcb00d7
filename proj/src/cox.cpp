#include "gapfill/cox.hpp"

#include <cmath>

namespace gapfill {
namespace {

double log_poisson_pmf(double mean, std::size_t n) {
  const double k = static_cast<double>(n);
  if (mean == 0.0) return n == 0 ? 0.0 : kLogZero;
  return k * std::log(mean) - mean - std::lgamma(k + 1.0);
}

}  // namespace

CompoundPoissonModel::CompoundPoissonModel(double lambda1, double lambda2, BrokenWindow window)
    : lambda1_(lambda1), lambda2_(lambda2), window_(window) {
  if (!(lambda1 > 0.0) || !(lambda2 > 0.0)) throw DomainError("levels must be positive");
  if (lambda1 == lambda2) throw DomainError("levels must differ");
}

LevelPosterior posterior_level_prob(double lambda1, double lambda2, double observed_length,
                                    std::size_t n_observed) {
  if (!(observed_length >= 0.0)) throw DomainError("observed length must be non-negative");
  const double n = static_cast<double>(n_observed);
  const double w1 = n * std::log(lambda1) - lambda1 * observed_length;
  const double w2 = n * std::log(lambda2) - lambda2 * observed_length;
  // p1 = 1 / (1 + exp(w2 - w1)), evaluated on the stable side.
  const double d = w2 - w1;
  LevelPosterior out;
  if (d > 0) {
    const double e = std::exp(-d);
    out.p1 = e / (1.0 + e);
    out.p2 = 1.0 / (1.0 + e);
  } else {
    const double e = std::exp(d);
    out.p1 = 1.0 / (1.0 + e);
    out.p2 = e / (1.0 + e);
  }
  return out;
}

LevelPosterior posterior_level_prob(const CompoundPoissonModel& model, std::size_t n_observed) {
  return posterior_level_prob(model.lambda1(), model.lambda2(), model.window().observed_length(),
                              n_observed);
}

double conditional_gap_janossy(const CompoundPoissonModel& model, std::size_t n_observed,
                               const OrderedConfig& gap) {
  const auto& w = model.window();
  for (double t : gap) {
    if (!w.in_gap(t)) return 0.0;
  }
  const auto post = posterior_level_prob(model, n_observed);
  const double n = static_cast<double>(gap.size());
  const double L = w.gap_length();
  return post.p1 * std::exp(n * std::log(model.lambda1()) - model.lambda1() * L) +
         post.p2 * std::exp(n * std::log(model.lambda2()) - model.lambda2() * L);
}

std::vector<double> gap_count_posterior(const CompoundPoissonModel& model, std::size_t n_observed,
                                        std::size_t n_max) {
  const auto post = posterior_level_prob(model, n_observed);
  const double L = model.window().gap_length();
  std::vector<double> pmf(n_max + 1);
  for (std::size_t n = 0; n <= n_max; ++n) {
    pmf[n] = post.p1 * std::exp(log_poisson_pmf(model.lambda1() * L, n)) +
             post.p2 * std::exp(log_poisson_pmf(model.lambda2() * L, n));
  }
  return pmf;
}

CompoundPoissonDensity::CompoundPoissonDensity(double lambda1, double lambda2, double horizon)
    : lambda1_(lambda1), lambda2_(lambda2), horizon_(horizon) {
  if (!(lambda1 > 0.0) || !(lambda2 > 0.0)) throw DomainError("levels must be positive");
  if (!(horizon > 0.0)) throw DomainError("horizon must be positive");
}

double CompoundPoissonDensity::log_density(const OrderedConfig& config) const {
  if (!config.within(0.0, horizon_)) throw DomainError("configuration outside [0, T]");
  const double n = static_cast<double>(config.size());
  const double terms[2] = {n * std::log(lambda1_) - lambda1_ * horizon_,
                           n * std::log(lambda2_) - lambda2_ * horizon_};
  return horizon_ + std::log(0.5) + log_sum_exp(terms);
}

}  // namespace gapfill
