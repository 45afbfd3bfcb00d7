#include "gapfill/renewal.hpp"

#include <algorithm>
#include <cmath>

namespace gapfill {
namespace {

// log sum_{i<shape} (rate x)^i / i!
double log_poisson_head(double rate, int shape, double x) {
  if (shape == 1) return 0.0;
  const double z = rate * x;
  if (z <= 0.0) return 0.0;
  // Terms grow while i < z; sum from the largest term down for stability.
  const double lz = std::log(z);
  double hi = kLogZero;
  for (int i = 0; i < shape; ++i) hi = std::max(hi, i * lz - std::lgamma(i + 1.0));
  double acc = 0.0;
  for (int i = 0; i < shape; ++i) acc += std::exp(i * lz - std::lgamma(i + 1.0) - hi);
  return hi + std::log(acc);
}

void require_nonnegative(double x) {
  if (!(x >= 0.0)) throw DomainError("inter-arrival argument must be non-negative");
}

}  // namespace

ErlangModel::ErlangModel(double rate, int shape, double horizon)
    : rate_(rate), shape_(shape), horizon_(horizon) {
  if (!(rate > 0.0) || !std::isfinite(rate)) throw DomainError("Erlang rate must be positive");
  if (shape < 1) throw DomainError("Erlang shape must be an integer >= 1");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw DomainError("horizon must be positive");
  log_const_ = shape * std::log(rate) - std::lgamma(static_cast<double>(shape));
}

double erlang_log_pdf(const ErlangModel& model, double x) {
  require_nonnegative(x);
  if (x == 0.0) return model.shape() == 1 ? std::log(model.rate()) : kLogZero;
  return model.log_pdf_constant() + (model.shape() - 1) * std::log(x) - model.rate() * x;
}

double erlang_log_survival(const ErlangModel& model, double x) {
  require_nonnegative(x);
  return -model.rate() * x + log_poisson_head(model.rate(), model.shape(), x);
}

double erlang_pdf(const ErlangModel& model, double x) { return std::exp(erlang_log_pdf(model, x)); }

double erlang_survival(const ErlangModel& model, double x) {
  return std::exp(erlang_log_survival(model, x));
}

double erlang_cdf(const ErlangModel& model, double x) { return -std::expm1(erlang_log_survival(model, x)); }

OrderedConfig simulate(const ErlangModel& model, Rng& rng) {
  std::vector<double> times;
  double t = 0.0;
  for (;;) {
    double gap = 0.0;
    for (int k = 0; k < model.shape(); ++k) gap -= std::log(uniform01(rng));
    t += gap / model.rate();
    if (t > model.horizon()) break;
    times.push_back(t);
  }
  return OrderedConfig(std::move(times));
}

OrderedConfig simulate(const ErlangModel& model, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return simulate(model, rng);
}

double log_density(const ErlangModel& model, const OrderedConfig& config) {
  const double T = model.horizon();
  if (!config.within(0.0, T)) throw DomainError("configuration outside [0, T]");
  double acc = T;
  double prev = 0.0;
  for (double t : config) {
    acc += erlang_log_pdf(model, t - prev);
    if (acc == kLogZero) return kLogZero;
    prev = t;
  }
  return acc + erlang_log_survival(model, T - prev);
}

double flanked_intensity(const ErlangModel& model, double predecessor, const double* successor,
                         double t) {
  if (model.shape() == 1) return model.rate();
  const int k = model.shape() - 1;
  const double left = t - predecessor;
  if (successor) {
    // pi(t-p) pi(q-t) / pi(q-p); the exponential factors cancel.
    const double q = *successor;
    const double ratio = left * (q - t) / (q - predecessor);
    return std::exp(model.log_pdf_constant() + k * std::log(ratio));
  }
  // pi(t-p) S(T-t) / S(T-p); the exponential factors cancel as well.
  const double T = model.horizon();
  const double log_ratio = log_poisson_head(model.rate(), model.shape(), T - t) -
                           log_poisson_head(model.rate(), model.shape(), T - predecessor);
  return std::exp(model.log_pdf_constant() + k * std::log(left) + log_ratio);
}

double papangelou(const ErlangModel& model, const OrderedConfig& config, double t) {
  if (!(t > 0.0 && t <= model.horizon())) throw DomainError("insertion time outside (0, T]");
  if (config.contains(t)) throw DomainError("insertion time already present in configuration");
  const auto pos = config.insertion_index(t);
  const double pred = pos == 0 ? 0.0 : config[pos - 1];
  if (pos == config.size()) return flanked_intensity(model, pred, nullptr, t);
  const double succ = config[pos];
  return flanked_intensity(model, pred, &succ, t);
}

double conditional_papangelou(const ErlangModel& model, const BrokenWindow& window,
                              const OrderedConfig& left, const OrderedConfig& right,
                              std::span<const double> gap, double t) {
  if (!window.in_gap(t)) throw DomainError("insertion time outside the gap");
  const auto it = std::lower_bound(gap.begin(), gap.end(), t);
  if (it != gap.end() && *it == t) throw DomainError("insertion time already present in gap");
  double pred = left.empty() ? 0.0 : left.back();
  if (it != gap.begin()) pred = *(it - 1);
  if (it != gap.end()) return flanked_intensity(model, pred, &*it, t);
  if (!right.empty()) {
    const double s1 = right.front();
    return flanked_intensity(model, pred, &s1, t);
  }
  return flanked_intensity(model, pred, nullptr, t);
}

SufficientStats sufficient_stats(const OrderedConfig& config, double horizon) {
  if (config.empty()) return {0, horizon};
  return {config.size(), horizon - config.back()};
}

double log_likelihood_ratio(double rate, double rate0, int shape, double horizon,
                            const SufficientStats& stats) {
  const double n_alpha = static_cast<double>(stats.n) * shape;
  return n_alpha * std::log(rate / rate0) - (rate - rate0) * horizon +
         log_poisson_head(rate, shape, stats.backward_recurrence) -
         log_poisson_head(rate0, shape, stats.backward_recurrence);
}

double log_likelihood_ratio(const ErlangModel& model, const ErlangModel& reference,
                            const OrderedConfig& config) {
  if (model.shape() != reference.shape() || model.horizon() != reference.horizon()) {
    throw DomainError("likelihood ratio requires equal shape and horizon");
  }
  return log_likelihood_ratio(model.rate(), reference.rate(), model.shape(), model.horizon(),
                              sufficient_stats(config, model.horizon()));
}

double RenewalDensity::log_density(const OrderedConfig& config) const {
  return gapfill::log_density(model_, config);
}

double RenewalDensity::papangelou(const OrderedConfig& config, double t) const {
  return gapfill::papangelou(model_, config, t);
}

}  // namespace gapfill
