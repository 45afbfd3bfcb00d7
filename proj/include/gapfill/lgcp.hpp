#pragma once

// Discretised log-Gaussian Cox model for daily counts: N_i ~ Poisson(mu0(i)
// exp(S(i))) given an Ornstein-Uhlenbeck log-intensity S with E exp(S) = 1.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "gapfill/core.hpp"
#include "gapfill/random.hpp"

namespace gapfill::lgcp {

struct OuParams {
  double sigma2 = 0.0;
  double beta = 1.0;

  void validate() const;
  // Variance of the innovations Gamma(i), i >= 1.
  double innovation_variance() const;
};

// log mu0(i) = delta_{i mod 7} + a1 cos(2 pi i / P) + b1 sin(2 pi i / P)
//            + a2 cos(4 pi i / P) + b2 sin(4 pi i / P) + trend * i
struct Mu0Model {
  std::array<double, 7> day_effects{};
  double a1 = 0.0;
  double b1 = 0.0;
  double a2 = 0.0;
  double b2 = 0.0;
  double trend = 0.0;
  double period = 365.0;

  double log_mu(std::int64_t day) const;
  double mu(std::int64_t day) const;
  std::vector<double> mu_range(std::int64_t first_day, std::size_t days) const;
};

// Consecutive days first_day .. first_day + size() - 1. Hidden days carry a
// zero count.
struct DailyCounts {
  std::int64_t first_day = 0;
  std::vector<std::int64_t> counts;
  std::vector<bool> observed;

  std::size_t size() const { return counts.size(); }
  std::int64_t day(std::size_t i) const { return first_day + static_cast<std::int64_t>(i); }
  std::size_t n_observed() const;
  void validate() const;
};

// The naive reading of a gap: hidden days become observed zeros.
DailyCounts hidden_as_zero(const DailyCounts& counts);

struct LatentField {
  std::vector<double> gammas;
  std::vector<double> s;
};

// S from the innovations by the one-step recursion.
std::vector<double> field_recursive(const OuParams& params, std::span<const double> gammas);
// S from the innovations by the discounted-sum closed form (quadratic cost).
std::vector<double> field_closed_form(const OuParams& params, std::span<const double> gammas);

LatentField simulate_field(const OuParams& params, std::size_t days, Rng& rng);
DailyCounts simulate_counts(const Mu0Model& mu0, const LatentField& field, Rng& rng,
                            std::int64_t first_day = 0);

class RankDeficientDesign : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NotConverged : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

struct Mu0Fit {
  Mu0Model model;
  int iterations = 0;
  double log_likelihood = 0.0;
  std::size_t n_observed = 0;
};

inline constexpr std::size_t kMu0Coefficients = 12;

// Poisson log-linear regression on the observed days by iteratively
// reweighted least squares.
Mu0Fit fit_mu0(const DailyCounts& counts);

// Mean of mu0 over consecutive 7-day blocks starting at first_day.
std::vector<double> weekly_average(const Mu0Model& mu0, std::int64_t first_day, std::size_t days);

// Mean of N_i N_{i-lag} / (mu0(i) mu0(i-lag)) over pairs with both days
// observed. Throws NumericalError when no pair is admissible.
double pair_corr_statistic(const DailyCounts& counts, const Mu0Model& mu0, std::size_t lag);
std::vector<double> pair_corr_statistics(const DailyCounts& counts, const Mu0Model& mu0,
                                         std::size_t max_lag);

// Model value exp(sigma2 exp(-beta lag)).
double pair_corr_model(const OuParams& params, double lag);

// Sum over lags 1..m of squared differences between the statistics and the
// model value.
double contrast_objective(std::span<const double> statistics, const OuParams& params);

struct ContrastFit {
  OuParams params;
  double objective = 0.0;
  std::vector<double> statistics;
  // Best point of the initial search grid.
  OuParams grid_start;
  double grid_objective = 0.0;
};

inline constexpr std::size_t kDefaultLags = 14;

ContrastFit minimum_contrast(std::span<const double> statistics);
ContrastFit minimum_contrast(const DailyCounts& counts, const Mu0Model& mu0,
                             std::size_t lags = kDefaultLags);

// Conditional law of the innovations over a window of days given the counts
// on the influence days.
struct StateProblem {
  OuParams params;
  std::int64_t first_day = 0;
  std::vector<double> counts;
  std::vector<double> mu0;
  std::vector<bool> influence;
  // Window indices of the hidden days.
  std::vector<std::size_t> gap;

  std::size_t size() const { return mu0.size(); }

  // Window [first_day, last_day] of `data`; influence days are the observed
  // days within `radius` days of the hidden block.
  static StateProblem build(const DailyCounts& data, const Mu0Model& mu0, const OuParams& params,
                            std::int64_t first_day, std::int64_t last_day,
                            std::size_t radius = 7);
};

struct ValueGrad {
  double value = 0.0;
  std::vector<double> gradient;
};

// Log density of the innovations up to an additive constant, and its
// gradient.
ValueGrad conditional_logpdf_and_grad(std::span<const double> gammas, const StateProblem& problem);

using LogTarget = std::function<ValueGrad(std::span<const double>)>;

struct MalaState {
  std::vector<double> x;
  ValueGrad current;

  MalaState(std::vector<double> start, const LogTarget& target);
};

// log q(from -> to) of the Langevin proposal N(from + h/2 grad, h I), up to
// the normalising constant shared by both directions.
double mala_log_proposal(std::span<const double> from, std::span<const double> grad_from,
                         std::span<const double> to, double h);

// log of the Metropolis-Hastings ratio for moving from x to y.
double mala_log_ratio(std::span<const double> x, const ValueGrad& at_x, std::span<const double> y,
                      const ValueGrad& at_y, double h);

// One Metropolis-adjusted Langevin step; returns whether the move was
// accepted.
bool mala_step(MalaState& state, const LogTarget& target, double h, Rng& rng);

struct MalaRun {
  // Per sample: S over the hidden days.
  std::vector<std::vector<double>> gap_fields;
  // Per sample: S over the whole window.
  std::vector<std::vector<double>> window_fields;
  double acceptance_rate = 0.0;
};

struct MalaSchedule {
  double h = 0.5;
  std::uint64_t burn_in = 10000;
  std::uint64_t thin = 1000;
  std::size_t n_samples = 100;
  std::uint64_t seed = 0;
};

MalaRun run_mala(const StateProblem& problem, const MalaSchedule& schedule);

struct GapIntensitySummary {
  std::vector<double> totals;
  double mean = 0.0;
  double q025 = 0.0;
  double q50 = 0.0;
  double q975 = 0.0;
  std::vector<double> bin_edges;
  std::vector<std::size_t> bin_counts;
};

// Total intensity sum_i mu0(i) exp(S(i)) over the hidden days, per sample.
GapIntensitySummary gap_intensity_posterior(const std::vector<std::vector<double>>& gap_fields,
                                            std::span<const double> gap_mu0,
                                            std::size_t bins = 30);

// Replace hidden days by Poisson draws from mu0 exp(S) of a window sample.
DailyCounts impute_counts(const DailyCounts& data, const StateProblem& problem,
                          std::span<const double> window_field, Rng& rng);

// Synthetic stand-in for the call series: two years of days with a hidden
// block in September of the first year.
inline constexpr std::size_t kSeriesDays = 730;
inline constexpr std::int64_t kGapFirstDay = 255;
inline constexpr std::int64_t kGapLastDay = 272;
inline constexpr std::int64_t kStateFirstDay = 243;
inline constexpr std::int64_t kStateLastDay = 303;

Mu0Model nhs_like_mu0();

struct SyntheticSeries {
  DailyCounts counts;
  DailyCounts complete;
  LatentField field;
};

SyntheticSeries synthetic_series(const Mu0Model& mu0, const OuParams& params, std::size_t days,
                                 std::int64_t gap_first, std::int64_t gap_last, Rng& rng);

}  // namespace gapfill::lgcp
