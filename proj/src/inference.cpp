#include "gapfill/inference.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "gapfill/parallel.hpp"

namespace gapfill {
namespace {

// Ratios of the Poisson head S(rate) = sum_{i<shape} (rate x)^i / i! and its
// rate derivatives: S'/S and S''/S.
struct HeadRatios {
  double d1 = 0.0;
  double d2 = 0.0;
};

HeadRatios head_ratios(double rate, int shape, double x) {
  if (shape == 1 || x <= 0.0) return {};
  const double lz = std::log(rate * x);
  double hi = kLogZero;
  for (int i = 0; i < shape; ++i) hi = std::max(hi, i * lz - std::lgamma(i + 1.0));
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < shape; ++i) {
    const double a = std::exp(i * lz - std::lgamma(i + 1.0) - hi);
    s0 += a;
    s1 += i * a;
    s2 += static_cast<double>(i) * (i - 1) * a;
  }
  return {s1 / (rate * s0), s2 / (rate * rate * s0)};
}

std::string short_number(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

}  // namespace

ObservedData ObservedData::observe(const OrderedConfig& pattern, const BrokenWindow& window) {
  std::vector<double> left, right;
  for (double t : pattern) {
    if (window.in_left(t)) {
      left.push_back(t);
    } else if (window.in_right(t)) {
      right.push_back(t);
    }
  }
  return {window, OrderedConfig(std::move(left)), OrderedConfig(std::move(right))};
}

std::vector<double> observed_intervals(const OrderedConfig& left, const OrderedConfig& right,
                                       bool include_origin_interval) {
  std::vector<double> out;
  if (include_origin_interval && !left.empty()) out.push_back(left.front());
  for (std::size_t i = 1; i < left.size(); ++i) out.push_back(left[i] - left[i - 1]);
  for (std::size_t i = 1; i < right.size(); ++i) out.push_back(right[i] - right[i - 1]);
  return out;
}

NaiveEstimate naive_estimate(const OrderedConfig& left, const OrderedConfig& right,
                             std::optional<int> alpha, const NaiveOptions& options) {
  const auto intervals = observed_intervals(left, right, options.include_origin_interval);
  if (intervals.empty()) throw NoObservableIntervals("no fully observed inter-arrival intervals");
  const double n = static_cast<double>(intervals.size());
  const double total = std::accumulate(intervals.begin(), intervals.end(), 0.0);
  double sum_log = 0.0;
  for (double l : intervals) sum_log += std::log(l);

  if (alpha) {
    if (*alpha < 1) throw DomainError("shape must be at least 1");
    return {*alpha * n / total, *alpha, intervals.size()};
  }
  if (options.alpha_max < 1) throw DomainError("alpha_max must be at least 1");
  NaiveEstimate best{0.0, 0, intervals.size()};
  double best_ll = kLogZero;
  for (int a = 1; a <= options.alpha_max; ++a) {
    const double rate = a * n / total;
    const double ll = n * (a * std::log(rate) - std::lgamma(a)) + (a - 1) * sum_log - rate * total;
    if (ll > best_ll) {
      best_ll = ll;
      best.lambda_hat = rate;
      best.alpha_hat = a;
    }
  }
  return best;
}

McLikelihood::McLikelihood(int shape, double horizon, double reference_rate,
                           std::vector<SufficientStats> samples)
    : shape_(shape), horizon_(horizon), reference_rate_(reference_rate),
      samples_(std::move(samples)) {
  if (shape < 1) throw DomainError("shape must be at least 1");
  if (!(reference_rate > 0.0)) throw DomainError("reference rate must be positive");
  if (samples_.empty()) throw DomainError("Monte Carlo likelihood needs at least one sample");
}

double McLikelihood::value(double rate) const {
  if (rate == reference_rate_) return 0.0;
  std::vector<double> terms;
  terms.reserve(samples_.size());
  for (const auto& s : samples_) {
    terms.push_back(log_likelihood_ratio(rate, reference_rate_, shape_, horizon_, s));
  }
  return log_sum_exp(terms) - std::log(static_cast<double>(samples_.size()));
}

ScoreFisher McLikelihood::score_fisher(double rate) const {
  std::vector<double> log_w(samples_.size());
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    log_w[i] = log_likelihood_ratio(rate, reference_rate_, shape_, horizon_, samples_[i]);
  }
  const double hi = *std::max_element(log_w.begin(), log_w.end());
  double sw = 0.0, sd = 0.0, sdd = 0.0;
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const double w = std::exp(log_w[i] - hi);
    const double na = static_cast<double>(samples_[i].n) * shape_;
    const auto h = head_ratios(rate, shape_, samples_[i].backward_recurrence);
    const double d = na / rate - horizon_ + h.d1;
    const double d_prime = -na / (rate * rate) + h.d2 - h.d1 * h.d1;
    sw += w;
    sd += w * d;
    sdd += w * (d_prime + d * d);
  }
  const double score = sd / sw;
  return {score, -(sdd / sw - score * score)};
}

std::vector<SufficientStats> sample_completed_stats(const ObservedData& data, int shape,
                                                    double rate, const ChainConfig& chain) {
  const RenewalGapTarget target(ErlangModel(rate, shape, data.window.t_end()), data.window,
                                data.left, data.right);
  std::vector<SufficientStats> stats;
  stats.reserve(chain.n_samples);
  run_mh(target, chain, [&](std::size_t, std::span<const double> gap) {
    stats.push_back(target.completed_stats(gap));
  });
  return stats;
}

namespace {

std::vector<SufficientStats> stats_of(const RenewalGapTarget& target,
                                      std::span<const OrderedConfig> samples) {
  std::vector<SufficientStats> stats;
  stats.reserve(samples.size());
  for (const auto& s : samples) stats.push_back(target.completed_stats(s.view()));
  return stats;
}

}  // namespace

double mc_log_likelihood_ratio(const RenewalGapTarget& reference_target,
                               std::span<const OrderedConfig> samples, double rate) {
  const auto& m = reference_target.model();
  return McLikelihood(m.shape(), m.horizon(), m.rate(), stats_of(reference_target, samples))
      .value(rate);
}

ScoreFisher mc_score_and_fisher(const RenewalGapTarget& reference_target,
                                std::span<const OrderedConfig> samples, double rate) {
  const auto& m = reference_target.model();
  return McLikelihood(m.shape(), m.horizon(), m.rate(), stats_of(reference_target, samples))
      .score_fisher(rate);
}

NewtonTrace newton_raphson_reference(const ObservedData& data, int shape, double start,
                                     const NewtonOptions& options) {
  if (options.steps < 1) throw DomainError("Newton-Raphson needs at least one step");
  if (!(start > 0.0)) throw DomainError("starting rate must be positive");
  NewtonTrace trace;
  double rate = start;
  trace.iterates.push_back(rate);
  for (std::size_t k = 0; k < options.steps; ++k) {
    ChainConfig chain = options.chain;
    chain.seed = derive_seed(options.chain.seed, {k});
    const McLikelihood ll(shape, data.window.t_end(), rate,
                          sample_completed_stats(data, shape, rate, chain));
    const auto sf = ll.score_fisher(rate);
    double step;
    if (sf.fisher > 0.0 && std::isfinite(sf.fisher)) {
      step = sf.score / sf.fisher;
    } else {
      step = (sf.score > 0.0 ? 0.25 : -0.25) * rate;
    }
    // An iterate may at most double per step.
    step = std::min(step, rate);
    std::size_t halvings = 0;
    while (!(rate + step > 0.0)) {
      if (++halvings > options.max_halvings) {
        throw NumericalError("Newton-Raphson iterate left the positive half-line");
      }
      step *= 0.5;
    }
    rate += step;
    trace.iterates.push_back(rate);
  }
  trace.reference = rate;
  return trace;
}

Maximum maximise(const McLikelihood& likelihood, std::span<const double> grid) {
  // Newton from the reference rate.
  double rate = likelihood.reference_rate();
  bool converged = false;
  for (int it = 0; it < 100; ++it) {
    const auto sf = likelihood.score_fisher(rate);
    if (!(sf.fisher > 0.0) || !std::isfinite(sf.score)) break;
    double step = std::clamp(sf.score / sf.fisher, -0.5 * rate, 0.5 * rate);
    rate += step;
    if (std::abs(step) <= 1e-12 * rate) {
      converged = true;
      break;
    }
  }
  Maximum best{};
  if (converged) best = {rate, likelihood.value(rate), 0.0};

  // Grid check; polish the best grid cell by golden section if it wins.
  std::size_t arg = 0;
  double grid_best = kLogZero;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = likelihood.value(grid[i]);
    if (v > grid_best) {
      grid_best = v;
      arg = i;
    }
  }
  if (!grid.empty() && (!converged || grid_best > best.value + 1e-12)) {
    double lo = grid[arg == 0 ? 0 : arg - 1];
    double hi = grid[std::min(arg + 1, grid.size() - 1)];
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
    double f1 = likelihood.value(x1), f2 = likelihood.value(x2);
    for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
      if (f1 < f2) {
        lo = x1; x1 = x2; f1 = f2;
        x2 = lo + phi * (hi - lo); f2 = likelihood.value(x2);
      } else {
        hi = x2; x2 = x1; f2 = f1;
        x1 = hi - phi * (hi - lo); f1 = likelihood.value(x1);
      }
    }
    const double x = 0.5 * (lo + hi);
    const double v = likelihood.value(x);
    best = v >= grid_best ? Maximum{x, v, 0.0} : Maximum{grid[arg], grid_best, 0.0};
  }
  best.fisher = likelihood.score_fisher(best.rate).fisher;
  return best;
}

McmlResult fit_mcml(const ObservedData& data, int shape, double start, const McmlOptions& options) {
  McmlResult result;
  NewtonOptions newton{options.newton_steps, options.newton_chain, 30};
  const auto trace = newton_raphson_reference(data, shape, start, newton);
  result.newton_iterates = trace.iterates;
  result.reference_rate = trace.reference;

  const McLikelihood ll(shape, data.window.t_end(), trace.reference,
                        sample_completed_stats(data, shape, trace.reference, options.final_chain));
  result.n_samples = ll.size();

  std::vector<double> grid(options.grid_points);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double f = grid.size() == 1 ? 0.0 : static_cast<double>(i) / (grid.size() - 1);
    grid[i] = trace.reference * (options.grid_lo + f * (options.grid_hi - options.grid_lo));
  }
  const auto best = maximise(ll, grid);
  result.lambda_hat = best.rate;
  result.mc_inverse_fisher = best.fisher > 0.0 ? 1.0 / best.fisher
                                               : std::numeric_limits<double>::infinity();

  grid.push_back(best.rate);
  std::sort(grid.begin(), grid.end());
  for (double x : grid) result.llr_curve.emplace_back(x, x == best.rate ? best.value : ll.value(x));
  return result;
}

std::vector<BrokenWindow> default_bias_scenarios() {
  return {BrokenWindow(1.0, 3.0, 4.0), BrokenWindow(0.25, 0.75, 1.0),
          BrokenWindow(0.0625, 0.1875, 0.25)};
}

std::string scenario_label(const BrokenWindow& w) {
  return "[0," + short_number(w.t1()) + "]U[" + short_number(w.t2()) + "," +
         short_number(w.t_end()) + "]";
}

std::vector<ScenarioSummary> run_bias_study(const BiasStudyConfig& config) {
  if (config.replicates < 1) throw DomainError("replicates must be at least 1");
  if (config.scenarios.empty()) throw DomainError("at least one scenario is required");
  for (const auto& s : config.scenarios) {
    if (s.t_end() > config.horizon) throw DomainError("scenario extends beyond the horizon");
  }
  if (config.estimator == Estimator::kMcml) config.chain.validate();
  const ErlangModel truth(config.true_rate, config.true_shape, config.horizon);

  const std::size_t n_scen = config.scenarios.size();
  const std::size_t jobs = n_scen * config.replicates;
  std::vector<std::optional<double>> estimates(jobs);
  parallel_for(jobs, config.threads, [&](std::size_t job) {
    const std::size_t rep = job / n_scen;
    const std::size_t s = job % n_scen;
    // Every scenario sees the same simulated pattern of a replicate.
    const auto pattern = simulate(truth, derive_seed(config.seed, {0, rep}));
    const auto& window = config.scenarios[s];
    const auto data = ObservedData::observe(pattern, window);
    try {
      if (config.estimator == Estimator::kNaive) {
        const auto shape = config.fix_shape ? std::optional<int>(config.true_shape) : std::nullopt;
        estimates[job] = naive_estimate(data.left, data.right, shape, config.naive).lambda_hat;
      } else {
        McmlOptions options;
        options.newton_steps = config.newton_steps;
        options.newton_chain = config.chain;
        options.newton_chain.seed = derive_seed(config.seed, {1, s, rep});
        options.final_chain = config.chain;
        options.final_chain.seed = derive_seed(config.seed, {2, s, rep});
        options.grid_points = 101;
        estimates[job] = fit_mcml(data, config.true_shape, config.true_rate, options).lambda_hat;
      }
    } catch (const NumericalError&) {
      estimates[job] = std::nullopt;
    }
  });

  std::vector<ScenarioSummary> out;
  for (std::size_t s = 0; s < n_scen; ++s) {
    ScenarioSummary summary{config.scenarios[s], 0.0, 0.0, 0, 0, {}};
    double sum = 0.0;
    for (std::size_t rep = 0; rep < config.replicates; ++rep) {
      const auto& e = estimates[rep * n_scen + s];
      summary.estimates.push_back(e);
      if (e) {
        ++summary.n_used;
        sum += *e;
      } else {
        ++summary.n_failed;
      }
    }
    if (summary.n_used > 0) summary.mean = sum / summary.n_used;
    double ss = 0.0;
    for (const auto& e : summary.estimates) {
      if (e) ss += (*e - summary.mean) * (*e - summary.mean);
    }
    summary.variance = summary.n_used > 1 ? ss / (summary.n_used - 1)
                                          : std::numeric_limits<double>::quiet_NaN();
    out.push_back(std::move(summary));
  }
  return out;
}

}  // namespace gapfill
