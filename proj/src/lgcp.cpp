#include "gapfill/lgcp.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace gapfill::lgcp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

int weekday(std::int64_t day) { return static_cast<int>(((day % 7) + 7) % 7); }

double quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) return kNaN;
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// Regressor row for one day; the trend column is in years to keep the
// design well conditioned.
Eigen::RowVectorXd design_row(std::int64_t day, double period) {
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(kMu0Coefficients));
  row(weekday(day)) = 1.0;
  const double w = 2.0 * std::numbers::pi * static_cast<double>(day) / period;
  row(7) = std::cos(w);
  row(8) = std::sin(w);
  row(9) = std::cos(2.0 * w);
  row(10) = std::sin(2.0 * w);
  row(11) = static_cast<double>(day) / period;
  return row;
}

double poisson_loglik(const Eigen::VectorXd& y, const Eigen::VectorXd& eta) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    total += y(i) * eta(i) - std::exp(eta(i)) - std::lgamma(y(i) + 1.0);
  }
  return total;
}

}  // namespace

void OuParams::validate() const {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
    throw DomainError("sigma2 must be positive and finite");
  }
  if (!(beta > 0.0) || !std::isfinite(beta)) throw DomainError("beta must be positive and finite");
}

double OuParams::innovation_variance() const { return -std::expm1(-2.0 * beta); }

double Mu0Model::log_mu(std::int64_t day) const {
  const double w = 2.0 * std::numbers::pi * static_cast<double>(day) / period;
  return day_effects[static_cast<std::size_t>(weekday(day))] + a1 * std::cos(w) + b1 * std::sin(w) +
         a2 * std::cos(2.0 * w) + b2 * std::sin(2.0 * w) + trend * static_cast<double>(day);
}

double Mu0Model::mu(std::int64_t day) const { return std::exp(log_mu(day)); }

std::vector<double> Mu0Model::mu_range(std::int64_t first_day, std::size_t days) const {
  std::vector<double> out(days);
  for (std::size_t i = 0; i < days; ++i) out[i] = mu(first_day + static_cast<std::int64_t>(i));
  return out;
}

std::size_t DailyCounts::n_observed() const {
  return static_cast<std::size_t>(std::count(observed.begin(), observed.end(), true));
}

void DailyCounts::validate() const {
  if (counts.size() != observed.size()) {
    throw DomainError("counts and observation mask differ in length");
  }
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] < 0) throw DomainError("negative count on day " + std::to_string(day(i)));
    if (!observed[i] && counts[i] != 0) {
      throw DomainError("hidden day " + std::to_string(day(i)) + " carries a count");
    }
  }
}

DailyCounts hidden_as_zero(const DailyCounts& counts) {
  DailyCounts out = counts;
  std::fill(out.observed.begin(), out.observed.end(), true);
  return out;
}

std::vector<double> field_recursive(const OuParams& params, std::span<const double> gammas) {
  params.validate();
  std::vector<double> s(gammas.size());
  if (gammas.empty()) return s;
  const double sigma = std::sqrt(params.sigma2);
  const double decay = std::exp(-params.beta);
  const double drift = -0.5 * params.sigma2 * (1.0 - decay);
  s[0] = -0.5 * params.sigma2 + sigma * gammas[0];
  for (std::size_t i = 1; i < gammas.size(); ++i) {
    s[i] = drift + decay * s[i - 1] + sigma * gammas[i];
  }
  return s;
}

std::vector<double> field_closed_form(const OuParams& params, std::span<const double> gammas) {
  params.validate();
  const double sigma = std::sqrt(params.sigma2);
  std::vector<double> s(gammas.size());
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j <= i; ++j) {
      sum += std::exp(-params.beta * static_cast<double>(i - j)) * gammas[j];
    }
    s[i] = -0.5 * params.sigma2 + sigma * sum;
  }
  return s;
}

LatentField simulate_field(const OuParams& params, std::size_t days, Rng& rng) {
  params.validate();
  if (days == 0) throw DomainError("days must be at least 1");
  std::normal_distribution<double> normal;
  const double sd = std::sqrt(params.innovation_variance());
  LatentField field;
  field.gammas.resize(days);
  field.gammas[0] = normal(rng);
  for (std::size_t i = 1; i < days; ++i) field.gammas[i] = sd * normal(rng);
  field.s = field_recursive(params, field.gammas);
  return field;
}

DailyCounts simulate_counts(const Mu0Model& mu0, const LatentField& field, Rng& rng,
                            std::int64_t first_day) {
  DailyCounts out;
  out.first_day = first_day;
  out.counts.resize(field.s.size());
  out.observed.assign(field.s.size(), true);
  for (std::size_t i = 0; i < field.s.size(); ++i) {
    const double mean = mu0.mu(out.day(i)) * std::exp(field.s[i]);
    if (mean > 0.0) {
      std::poisson_distribution<std::int64_t> poisson(mean);
      out.counts[i] = poisson(rng);
    }
  }
  return out;
}

Mu0Fit fit_mu0(const DailyCounts& counts) {
  counts.validate();
  const std::size_t n = counts.n_observed();
  if (n <= kMu0Coefficients) {
    throw DomainError("at least 13 observed days are needed to fit mu0, got " + std::to_string(n));
  }
  const auto p = static_cast<Eigen::Index>(kMu0Coefficients);
  Mu0Model model;
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), p);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (!counts.observed[i]) continue;
    x.row(row) = design_row(counts.day(i), model.period);
    y(row) = static_cast<double>(counts.counts[i]);
    ++row;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> rank_check(x);
  if (rank_check.rank() < p) {
    throw RankDeficientDesign("mu0 design has rank " + std::to_string(rank_check.rank()) +
                              " < " + std::to_string(p));
  }

  Eigen::VectorXd coef = Eigen::VectorXd::Zero(p);
  const double start = std::log(std::max(y.mean(), 0.5));
  coef.head(7).setConstant(start);
  Eigen::VectorXd eta = x * coef;
  double loglik = poisson_loglik(y, eta);

  constexpr int kMaxIterations = 100;
  for (int iter = 1; iter <= kMaxIterations; ++iter) {
    const Eigen::VectorXd mu = eta.array().exp();
    const Eigen::VectorXd z = eta.array() + (y - mu).array() / mu.array();
    const Eigen::VectorXd root_w = mu.array().sqrt();
    const Eigen::MatrixXd xw = root_w.asDiagonal() * x;
    const Eigen::VectorXd target = root_w.cwiseProduct(z);
    Eigen::VectorXd proposal = xw.colPivHouseholderQr().solve(target);

    // Step halving keeps the likelihood monotone when a full step overshoots.
    double next = kNaN;
    Eigen::VectorXd next_eta;
    for (int halving = 0; halving < 30; ++halving) {
      next_eta = x * proposal;
      next = poisson_loglik(y, next_eta);
      if (std::isfinite(next) && next >= loglik - 1e-12 * std::abs(loglik)) break;
      proposal = 0.5 * (proposal + coef);
    }
    if (!std::isfinite(next)) throw NotConverged("mu0 regression diverged");
    const double change = std::abs(next - loglik) / std::max(std::abs(next), 1e-300);
    coef = proposal;
    eta = next_eta;
    loglik = next;
    if (change < 1e-10) {
      for (std::size_t d = 0; d < 7; ++d) model.day_effects[d] = coef(static_cast<Eigen::Index>(d));
      model.a1 = coef(7);
      model.b1 = coef(8);
      model.a2 = coef(9);
      model.b2 = coef(10);
      model.trend = coef(11) / model.period;
      return Mu0Fit{model, iter, loglik, n};
    }
  }
  throw NotConverged("mu0 regression did not converge in 100 iterations");
}

std::vector<double> weekly_average(const Mu0Model& mu0, std::int64_t first_day, std::size_t days) {
  std::vector<double> out;
  for (std::size_t start = 0; start + 7 <= days; start += 7) {
    double sum = 0.0;
    for (std::size_t k = 0; k < 7; ++k) sum += mu0.mu(first_day + static_cast<std::int64_t>(start + k));
    out.push_back(sum / 7.0);
  }
  return out;
}

double pair_corr_statistic(const DailyCounts& counts, const Mu0Model& mu0, std::size_t lag) {
  if (lag == 0) throw DomainError("lag must be at least 1");
  counts.validate();
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = lag; i < counts.size(); ++i) {
    const std::size_t j = i - lag;
    if (!counts.observed[i] || !counts.observed[j]) continue;
    const double mi = mu0.mu(counts.day(i));
    const double mj = mu0.mu(counts.day(j));
    if (!(mi > 0.0) || !(mj > 0.0)) throw DomainError("mu0 must be positive on used days");
    sum += static_cast<double>(counts.counts[i]) * static_cast<double>(counts.counts[j]) / (mi * mj);
    ++pairs;
  }
  if (pairs == 0) {
    throw NumericalError("no admissible pairs at lag " + std::to_string(lag));
  }
  return sum / static_cast<double>(pairs);
}

std::vector<double> pair_corr_statistics(const DailyCounts& counts, const Mu0Model& mu0,
                                         std::size_t max_lag) {
  std::vector<double> out(max_lag);
  for (std::size_t lag = 1; lag <= max_lag; ++lag) out[lag - 1] = pair_corr_statistic(counts, mu0, lag);
  return out;
}

double pair_corr_model(const OuParams& params, double lag) {
  return std::exp(params.sigma2 * std::exp(-params.beta * lag));
}

double contrast_objective(std::span<const double> statistics, const OuParams& params) {
  double total = 0.0;
  for (std::size_t k = 0; k < statistics.size(); ++k) {
    if (std::isnan(statistics[k])) continue;
    const double r = statistics[k] - pair_corr_model(params, static_cast<double>(k + 1));
    total += r * r;
  }
  return total;
}

namespace {

// Search box for the simplex. Without it the simplex can run off along the
// ridge sigma2 exp(-beta) = const, where only the lag-1 term is matched.
constexpr double kSigma2Min = 1e-4, kSigma2Max = 10.0;
constexpr double kBetaMin = 1e-3, kBetaMax = 10.0;

double contrast_in_logs(const gsl_vector* v, void* data) {
  const auto* stats = static_cast<const std::span<const double>*>(data);
  const double ls = gsl_vector_get(v, 0), lb = gsl_vector_get(v, 1);
  if (ls < std::log(kSigma2Min) || ls > std::log(kSigma2Max) || lb < std::log(kBetaMin) ||
      lb > std::log(kBetaMax)) {
    return std::numeric_limits<double>::max();
  }
  const OuParams params{std::exp(ls), std::exp(lb)};
  const double value = contrast_objective(*stats, params);
  return std::isfinite(value) ? value : std::numeric_limits<double>::max();
}

}  // namespace

ContrastFit minimum_contrast(std::span<const double> statistics) {
  const auto defined = std::count_if(statistics.begin(), statistics.end(),
                                     [](double s) { return !std::isnan(s); });
  if (defined < 2) throw NumericalError("fewer than two lags carry a pair-correlation statistic");

  ContrastFit fit;
  fit.statistics.assign(statistics.begin(), statistics.end());

  constexpr int kGrid = 40;
  const double ls_lo = std::log(0.01), ls_hi = std::log(1.0);
  const double lb_lo = std::log(0.05), lb_hi = std::log(3.0);
  fit.grid_objective = std::numeric_limits<double>::infinity();
  for (int a = 0; a < kGrid; ++a) {
    for (int b = 0; b < kGrid; ++b) {
      const OuParams p{std::exp(ls_lo + (ls_hi - ls_lo) * a / (kGrid - 1)),
                       std::exp(lb_lo + (lb_hi - lb_lo) * b / (kGrid - 1))};
      const double value = contrast_objective(statistics, p);
      if (value < fit.grid_objective) {
        fit.grid_objective = value;
        fit.grid_start = p;
      }
    }
  }

  gsl_multimin_function fn;
  fn.n = 2;
  fn.f = contrast_in_logs;
  fn.params = &statistics;
  gsl_vector* x = gsl_vector_alloc(2);
  gsl_vector* step = gsl_vector_alloc(2);
  gsl_vector_set(x, 0, std::log(fit.grid_start.sigma2));
  gsl_vector_set(x, 1, std::log(fit.grid_start.beta));
  gsl_vector_set_all(step, 0.1);
  gsl_multimin_fminimizer* solver = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 2);
  gsl_multimin_fminimizer_set(solver, &fn, x, step);
  for (int iter = 0; iter < 10000; ++iter) {
    if (gsl_multimin_fminimizer_iterate(solver) != GSL_SUCCESS) break;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(solver), 1e-12) == GSL_SUCCESS) break;
  }
  const OuParams refined{std::exp(gsl_vector_get(solver->x, 0)),
                         std::exp(gsl_vector_get(solver->x, 1))};
  const double refined_value = solver->fval;
  gsl_multimin_fminimizer_free(solver);
  gsl_vector_free(step);
  gsl_vector_free(x);

  if (refined_value <= fit.grid_objective) {
    fit.params = refined;
    fit.objective = contrast_objective(statistics, refined);
  } else {
    fit.params = fit.grid_start;
    fit.objective = fit.grid_objective;
  }
  return fit;
}

ContrastFit minimum_contrast(const DailyCounts& counts, const Mu0Model& mu0, std::size_t lags) {
  if (lags < 2) throw DomainError("minimum contrast needs at least two lags");
  std::vector<double> stats(lags, kNaN);
  for (std::size_t lag = 1; lag <= lags; ++lag) {
    try {
      stats[lag - 1] = pair_corr_statistic(counts, mu0, lag);
    } catch (const NumericalError&) {
    }
  }
  return minimum_contrast(stats);
}

StateProblem StateProblem::build(const DailyCounts& data, const Mu0Model& mu0,
                                 const OuParams& params, std::int64_t first_day,
                                 std::int64_t last_day, std::size_t radius) {
  params.validate();
  data.validate();
  if (last_day < first_day) throw DomainError("state window is empty");
  if (first_day < data.first_day || last_day >= data.day(data.size())) {
    throw DomainError("state window exceeds the counts");
  }
  StateProblem problem;
  problem.params = params;
  problem.first_day = first_day;
  const auto days = static_cast<std::size_t>(last_day - first_day + 1);
  const auto offset = static_cast<std::size_t>(first_day - data.first_day);
  problem.counts.resize(days);
  problem.mu0 = mu0.mu_range(first_day, days);
  problem.influence.assign(days, false);
  for (std::size_t i = 0; i < days; ++i) {
    problem.counts[i] = static_cast<double>(data.counts[offset + i]);
    if (!data.observed[offset + i]) problem.gap.push_back(i);
  }
  if (problem.gap.empty()) return problem;
  const std::size_t lo = problem.gap.front();
  const std::size_t hi = problem.gap.back();
  for (std::size_t i = 0; i < days; ++i) {
    if (!data.observed[offset + i]) continue;
    const bool before = i < lo && lo - i <= radius;
    const bool after = i > hi && i - hi <= radius;
    problem.influence[i] = before || after;
  }
  return problem;
}

ValueGrad conditional_logpdf_and_grad(std::span<const double> gammas, const StateProblem& problem) {
  const std::size_t n = problem.size();
  if (gammas.size() != n) throw DomainError("innovations do not cover the state window");
  const OuParams& params = problem.params;
  const double v = params.innovation_variance();
  const double sigma = std::sqrt(params.sigma2);
  const double decay = std::exp(-params.beta);
  const std::vector<double> s = field_recursive(params, gammas);

  ValueGrad out;
  out.gradient.assign(n, 0.0);
  std::vector<double> w(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double g = gammas[i];
    if (i == 0) {
      out.value -= 0.5 * g * g;
      out.gradient[i] = -g;
    } else {
      out.value -= g * g / (2.0 * v);
      out.gradient[i] = -g / v;
    }
    if (problem.influence[i]) {
      const double intensity = problem.mu0[i] * std::exp(s[i]);
      out.value += problem.counts[i] * s[i] - intensity;
      w[i] = problem.counts[i] - intensity;
    }
  }
  // dS(i)/dgamma(j) = sigma decay^(i-j): accumulate backwards.
  double acc = 0.0;
  for (std::size_t j = n; j-- > 0;) {
    acc = w[j] + decay * acc;
    out.gradient[j] += sigma * acc;
  }
  return out;
}

MalaState::MalaState(std::vector<double> start, const LogTarget& target)
    : x(std::move(start)), current(target(x)) {}

double mala_log_proposal(std::span<const double> from, std::span<const double> grad_from,
                         std::span<const double> to, double h) {
  double sq = 0.0;
  for (std::size_t k = 0; k < from.size(); ++k) {
    const double r = to[k] - from[k] - 0.5 * h * grad_from[k];
    sq += r * r;
  }
  return -sq / (2.0 * h);
}

double mala_log_ratio(std::span<const double> x, const ValueGrad& at_x, std::span<const double> y,
                      const ValueGrad& at_y, double h) {
  return at_y.value - at_x.value + mala_log_proposal(y, at_y.gradient, x, h) -
         mala_log_proposal(x, at_x.gradient, y, h);
}

bool mala_step(MalaState& state, const LogTarget& target, double h, Rng& rng) {
  if (!(h > 0.0)) throw DomainError("MALA step size must be positive");
  std::normal_distribution<double> normal;
  const double root_h = std::sqrt(h);
  std::vector<double> y(state.x.size());
  for (std::size_t k = 0; k < y.size(); ++k) {
    y[k] = state.x[k] + 0.5 * h * state.current.gradient[k] + root_h * normal(rng);
  }
  ValueGrad proposed = target(y);
  const double log_ratio = mala_log_ratio(state.x, state.current, y, proposed, h);
  const double u = uniform01(rng);
  if (std::isfinite(log_ratio) && std::log(u) < log_ratio) {
    state.x = std::move(y);
    state.current = std::move(proposed);
    return true;
  }
  return false;
}

MalaRun run_mala(const StateProblem& problem, const MalaSchedule& schedule) {
  if (schedule.thin == 0) throw DomainError("thin must be at least 1");
  const LogTarget target = [&problem](std::span<const double> g) {
    return conditional_logpdf_and_grad(g, problem);
  };
  Rng rng = make_rng(schedule.seed);
  MalaState state(std::vector<double>(problem.size(), 0.0), target);
  std::uint64_t accepted = 0, steps = 0;
  auto advance = [&](std::uint64_t count) {
    for (std::uint64_t k = 0; k < count; ++k) {
      accepted += mala_step(state, target, schedule.h, rng) ? 1 : 0;
      ++steps;
    }
  };
  advance(schedule.burn_in);
  MalaRun run;
  for (std::size_t sample = 0; sample < schedule.n_samples; ++sample) {
    advance(schedule.thin);
    std::vector<double> s = field_recursive(problem.params, state.x);
    std::vector<double> gap_s;
    gap_s.reserve(problem.gap.size());
    for (std::size_t i : problem.gap) gap_s.push_back(s[i]);
    run.gap_fields.push_back(std::move(gap_s));
    run.window_fields.push_back(std::move(s));
  }
  run.acceptance_rate = steps == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(steps);
  return run;
}

GapIntensitySummary gap_intensity_posterior(const std::vector<std::vector<double>>& gap_fields,
                                            std::span<const double> gap_mu0, std::size_t bins) {
  if (gap_fields.empty()) throw DomainError("no chain samples");
  if (bins == 0) throw DomainError("histogram needs at least one bin");
  GapIntensitySummary out;
  out.totals.reserve(gap_fields.size());
  for (const auto& s : gap_fields) {
    if (s.size() != gap_mu0.size()) throw DomainError("sample does not match the gap days");
    double total = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) total += gap_mu0[i] * std::exp(s[i]);
    out.totals.push_back(total);
  }
  std::vector<double> sorted = out.totals;
  std::sort(sorted.begin(), sorted.end());
  double sum = 0.0;
  for (double t : sorted) sum += t;
  out.mean = sum / static_cast<double>(sorted.size());
  out.q025 = quantile(sorted, 0.025);
  out.q50 = quantile(sorted, 0.5);
  out.q975 = quantile(sorted, 0.975);

  double lo = sorted.front();
  double hi = sorted.back();
  if (hi <= lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double width = (hi - lo) / static_cast<double>(bins);
  out.bin_edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) out.bin_edges[b] = lo + width * static_cast<double>(b);
  out.bin_edges.back() = hi;
  out.bin_counts.assign(bins, 0);
  for (double t : sorted) {
    auto b = static_cast<std::size_t>((t - lo) / width);
    out.bin_counts[std::min(b, bins - 1)] += 1;
  }
  return out;
}

DailyCounts impute_counts(const DailyCounts& data, const StateProblem& problem,
                          std::span<const double> window_field, Rng& rng) {
  if (window_field.size() != problem.size()) throw DomainError("field does not cover the window");
  DailyCounts out = data;
  const auto offset = static_cast<std::size_t>(problem.first_day - data.first_day);
  for (std::size_t i : problem.gap) {
    const double mean = problem.mu0[i] * std::exp(window_field[i]);
    std::poisson_distribution<std::int64_t> poisson(mean);
    out.counts[offset + i] = poisson(rng);
    out.observed[offset + i] = true;
  }
  return out;
}

Mu0Model nhs_like_mu0() {
  Mu0Model m;
  // Quieter midweek, busier weekends; roughly 8 to 12 calls a day.
  m.day_effects = {2.30, 2.17, 2.13, 2.12, 2.15, 2.24, 2.38};
  m.a1 = 0.06;
  m.b1 = 0.08;
  m.a2 = 0.03;
  m.b2 = -0.02;
  m.trend = 2e-4;
  return m;
}

SyntheticSeries synthetic_series(const Mu0Model& mu0, const OuParams& params, std::size_t days,
                                 std::int64_t gap_first, std::int64_t gap_last, Rng& rng) {
  SyntheticSeries out;
  out.field = simulate_field(params, days, rng);
  out.complete = simulate_counts(mu0, out.field, rng, 0);
  out.counts = out.complete;
  for (std::int64_t d = std::max<std::int64_t>(gap_first, 0);
       d <= gap_last && d < static_cast<std::int64_t>(days); ++d) {
    out.counts.counts[static_cast<std::size_t>(d)] = 0;
    out.counts.observed[static_cast<std::size_t>(d)] = false;
  }
  return out;
}

}  // namespace gapfill::lgcp
