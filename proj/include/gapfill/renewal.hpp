#pragma once

// Renewal process on [0, T] started at 0 with Erlang(shape, rate)
// inter-arrival times.

#include <cstddef>
#include <cstdint>
#include <span>

#include "gapfill/core.hpp"
#include "gapfill/random.hpp"

namespace gapfill {

class ErlangModel {
 public:
  ErlangModel(double rate, int shape, double horizon);

  double rate() const { return rate_; }
  int shape() const { return shape_; }
  double horizon() const { return horizon_; }

  // log of lambda^alpha / (alpha-1)!
  double log_pdf_constant() const { return log_const_; }

  ErlangModel with_rate(double rate) const { return {rate, shape_, horizon_}; }

 private:
  double rate_;
  int shape_;
  double horizon_;
  double log_const_;
};

// Inter-arrival law. Negative arguments throw DomainError.
double erlang_pdf(const ErlangModel& model, double x);
double erlang_cdf(const ErlangModel& model, double x);
double erlang_survival(const ErlangModel& model, double x);
double erlang_log_pdf(const ErlangModel& model, double x);
// Survival computed from the Poisson sum exp(-rate x) sum_{i<shape} (rate x)^i / i!.
double erlang_log_survival(const ErlangModel& model, double x);

// Arrival times falling in (0, T].
OrderedConfig simulate(const ErlangModel& model, Rng& rng);
OrderedConfig simulate(const ErlangModel& model, std::uint64_t seed);

// log f(t_1..t_n) = T + log S(T - t_n) + sum log pi(t_i - t_{i-1}), t_0 = 0.
double log_density(const ErlangModel& model, const OrderedConfig& config);

// Density ratio for inserting t at its chronological position. Depends only on
// the flanking points.
double papangelou(const ErlangModel& model, const OrderedConfig& config, double t);

// Intensity for inserting t into the hidden configuration `gap` given the
// observed points, with t in the open gap.
double conditional_papangelou(const ErlangModel& model, const BrokenWindow& window,
                              const OrderedConfig& left, const OrderedConfig& right,
                              std::span<const double> gap, double t);

// Same quantity from the neighbours alone: predecessor p, successor q (if
// any). Without a successor the survival form to the horizon is used.
double flanked_intensity(const ErlangModel& model, double predecessor, const double* successor,
                         double t);

struct SufficientStats {
  std::size_t n = 0;
  // T - t_n; T for the empty configuration.
  double backward_recurrence = 0.0;
};

SufficientStats sufficient_stats(const OrderedConfig& config, double horizon);

// log f_rate / f_rate0 evaluated from sufficient statistics.
double log_likelihood_ratio(double rate, double rate0, int shape, double horizon,
                            const SufficientStats& stats);
double log_likelihood_ratio(const ErlangModel& model, const ErlangModel& reference,
                            const OrderedConfig& config);

// Renewal density behind the generic ModelDensity interface.
class RenewalDensity final : public ModelDensity {
 public:
  explicit RenewalDensity(ErlangModel model) : model_(model) {}
  double horizon() const override { return model_.horizon(); }
  double log_density(const OrderedConfig& config) const override;
  double papangelou(const OrderedConfig& config, double t) const override;
  const ErlangModel& model() const { return model_; }

 private:
  ErlangModel model_;
};

}  // namespace gapfill
