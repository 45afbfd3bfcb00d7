#pragma once

// Rate estimation for an Erlang renewal process observed on a broken window:
// the naive estimator from fully observed inter-arrival times, and Monte Carlo
// maximum likelihood with the hidden points imputed by the MH sampler.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gapfill/core.hpp"
#include "gapfill/renewal.hpp"
#include "gapfill/samplers.hpp"

namespace gapfill {

class NoObservableIntervals : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Observed data of a broken-window experiment; the horizon is window.t_end().
struct ObservedData {
  BrokenWindow window;
  OrderedConfig left;
  OrderedConfig right;

  // Restrict a pattern on [0, T'] (T' >= t_end) to the observed part of window.
  static ObservedData observe(const OrderedConfig& pattern, const BrokenWindow& window);
};

struct NaiveOptions {
  // Count the interval from time 0 to the first point.
  bool include_origin_interval = false;
  int alpha_max = 10;
};

// Inter-arrival times whose both endpoints are observed points within the
// same observed segment (plus the origin interval when enabled).
std::vector<double> observed_intervals(const OrderedConfig& left, const OrderedConfig& right,
                                       bool include_origin_interval = false);

struct NaiveEstimate {
  double lambda_hat = 0.0;
  int alpha_hat = 0;
  std::size_t n_intervals = 0;
};

// lambda_hat = alpha * n / sum(l). With no shape given, alpha is chosen by
// profile likelihood over 1..alpha_max. Throws NoObservableIntervals.
NaiveEstimate naive_estimate(const OrderedConfig& left, const OrderedConfig& right,
                             std::optional<int> alpha, const NaiveOptions& options = {});

struct ScoreFisher {
  double score = 0.0;
  double fisher = 0.0;
};

// Monte Carlo log-likelihood ratio L_N(rate) against the reference rate at
// which the imputed hidden configurations were drawn.
class McLikelihood {
 public:
  McLikelihood(int shape, double horizon, double reference_rate,
               std::vector<SufficientStats> samples);

  double value(double rate) const;
  // First derivative and negated second derivative of value().
  ScoreFisher score_fisher(double rate) const;

  double reference_rate() const { return reference_rate_; }
  std::size_t size() const { return samples_.size(); }

 private:
  int shape_;
  double horizon_;
  double reference_rate_;
  std::vector<SufficientStats> samples_;
};

double mc_log_likelihood_ratio(const RenewalGapTarget& reference_target,
                               std::span<const OrderedConfig> samples, double rate);
ScoreFisher mc_score_and_fisher(const RenewalGapTarget& reference_target,
                                std::span<const OrderedConfig> samples, double rate);

// Draw conditional samples at `rate` and return the completed sufficient
// statistics.
std::vector<SufficientStats> sample_completed_stats(const ObservedData& data, int shape,
                                                    double rate, const ChainConfig& chain);

struct NewtonOptions {
  std::size_t steps = 10;
  ChainConfig chain;
  std::size_t max_halvings = 30;
};

struct NewtonTrace {
  double reference = 0.0;
  std::vector<double> iterates;
};

// rate <- rate + score / fisher with fresh conditional samples at every step.
NewtonTrace newton_raphson_reference(const ObservedData& data, int shape, double start,
                                     const NewtonOptions& options);

// Maximiser of L_N: Newton from the reference, checked against a grid.
struct Maximum {
  double rate = 0.0;
  double value = 0.0;
  double fisher = 0.0;
};
Maximum maximise(const McLikelihood& likelihood, std::span<const double> grid);

struct McmlOptions {
  std::size_t newton_steps = 10;
  ChainConfig newton_chain;
  ChainConfig final_chain;
  // Curve and bracketing grid relative to the reference: [lo, hi] * reference.
  double grid_lo = 0.5;
  double grid_hi = 1.5;
  std::size_t grid_points = 201;
};

struct McmlResult {
  double lambda_hat = 0.0;
  double mc_inverse_fisher = 0.0;
  double reference_rate = 0.0;
  std::size_t n_samples = 0;
  std::vector<double> newton_iterates;
  std::vector<std::pair<double, double>> llr_curve;
};

McmlResult fit_mcml(const ObservedData& data, int shape, double start, const McmlOptions& options);

enum class Estimator { kNaive, kMcml };

struct BiasStudyConfig {
  double true_rate = 40.0;
  int true_shape = 2;
  double horizon = 4.0;
  std::vector<BrokenWindow> scenarios;
  std::size_t replicates = 100;
  Estimator estimator = Estimator::kNaive;
  // burn_in, thin and n_samples of every chain; seeds are derived per job.
  ChainConfig chain;
  std::size_t newton_steps = 10;
  std::uint64_t seed = 0;
  NaiveOptions naive;
  // Fix the shape at true_shape for the naive estimator instead of profiling.
  bool fix_shape = true;
  std::size_t threads = 0;
};

struct ScenarioSummary {
  BrokenWindow scenario;
  double mean = 0.0;
  // Sample variance (n - 1 denominator) over successful replicates.
  double variance = 0.0;
  std::size_t n_used = 0;
  std::size_t n_failed = 0;
  std::vector<std::optional<double>> estimates;
};

// Broken windows studied for the length-bias table.
std::vector<BrokenWindow> default_bias_scenarios();

std::vector<ScenarioSummary> run_bias_study(const BiasStudyConfig& config);

std::string scenario_label(const BrokenWindow& window);

}  // namespace gapfill
