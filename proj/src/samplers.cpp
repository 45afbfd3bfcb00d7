#include "gapfill/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gapfill {
namespace {

void check_observed(const BrokenWindow& window, double horizon, const OrderedConfig& left,
                    const OrderedConfig& right) {
  if (std::abs(horizon - window.t_end()) > 1e-12 * window.t_end()) {
    throw DomainError("model horizon differs from window end");
  }
  if (!left.within(0.0, window.t1())) throw DomainError("left points outside [0, t1]");
  if (!right.within(window.t2(), window.t_end())) throw DomainError("right points outside [t2, T]");
}

std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
}

// Relative slack for the domination check; bound and intensity are computed
// along different floating-point paths.
constexpr double kBoundSlack = 1e-9;

}  // namespace

RenewalGapTarget::RenewalGapTarget(ErlangModel model, BrokenWindow window, OrderedConfig left,
                                   OrderedConfig right)
    : model_(model), window_(window), left_(std::move(left)), right_(std::move(right)) {
  check_observed(window_, model_.horizon(), left_, right_);
  anchor_ = left_.empty() ? 0.0 : left_.back();
}

double RenewalGapTarget::intensity(std::span<const double> gap, std::size_t pos, double t) const {
  const double pred = pos == 0 ? anchor_ : gap[pos - 1];
  if (pos < gap.size()) return flanked_intensity(model_, pred, &gap[pos], t);
  if (!right_.empty()) return flanked_intensity(model_, pred, &right_.times().front(), t);
  return flanked_intensity(model_, pred, nullptr, t);
}

SufficientStats RenewalGapTarget::completed_stats(std::span<const double> gap) const {
  const std::size_t n = left_.size() + gap.size() + right_.size();
  double last = 0.0;
  if (!right_.empty()) {
    last = right_.back();
  } else if (!gap.empty()) {
    last = gap.back();
  } else if (!left_.empty()) {
    last = left_.back();
  } else {
    return {0, model_.horizon()};
  }
  return {n, model_.horizon() - last};
}

PairwiseGapTarget::PairwiseGapTarget(PairwiseModel model, BrokenWindow window, OrderedConfig left,
                                     OrderedConfig right)
    : model_(model), window_(window), left_(std::move(left)), right_(std::move(right)) {
  check_observed(window_, model_.horizon(), left_, right_);
}

double PairwiseGapTarget::intensity(std::span<const double> gap, std::size_t, double t) const {
  const double r = model_.range();
  return model_.intensity_for(neighbours_within(left_.view(), t, r) +
                              neighbours_within(gap, t, r) +
                              neighbours_within(right_.view(), t, r));
}

void ChainConfig::validate() const {
  if (thin < 1) throw DomainError("thin must be at least 1");
  if (n_samples < 1) throw DomainError("n_samples must be at least 1");
}

double mh_birth_ratio(const GapTarget& target, std::span<const double> gap, std::size_t pos,
                      double t) {
  const double n = static_cast<double>(gap.size());
  return target.intensity(gap, pos, t) * target.window().gap_length() / (n + 1.0);
}

double mh_death_ratio(const GapTarget& target, std::span<const double> gap, std::size_t i) {
  thread_local std::vector<double> rest;
  rest.assign(gap.begin(), gap.end());
  rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(i));
  const double lambda = target.intensity(rest, i, gap[i]);
  // lambda == 0 makes the ratio infinite: always accept.
  if (lambda == 0.0) return std::numeric_limits<double>::infinity();
  return static_cast<double>(gap.size()) / (lambda * target.window().gap_length());
}

MhMove mh_step(const GapTarget& target, std::vector<double>& gap, Rng& rng) {
  const auto& w = target.window();
  if (uniform01(rng) < 0.5) {
    const double u = uniform(rng, w.t1(), w.t2());
    const auto it = std::lower_bound(gap.begin(), gap.end(), u);
    if (it != gap.end() && *it == u) return MhMove::kBirthRejected;
    const auto pos = static_cast<std::size_t>(it - gap.begin());
    if (uniform01(rng) < mh_birth_ratio(target, gap, pos, u)) {
      gap.insert(it, u);
      return MhMove::kBirthAccepted;
    }
    return MhMove::kBirthRejected;
  }
  if (gap.empty()) return MhMove::kDeathEmpty;
  const std::size_t i = uniform_index(rng, gap.size());
  if (uniform01(rng) < mh_death_ratio(target, gap, i)) {
    gap.erase(gap.begin() + static_cast<std::ptrdiff_t>(i));
    return MhMove::kDeathAccepted;
  }
  return MhMove::kDeathRejected;
}

ChainStats run_mh(const GapTarget& target, const ChainConfig& chain, const SampleVisitor& visit,
                  std::vector<double> initial) {
  chain.validate();
  Rng rng = make_rng(chain.seed);
  std::vector<double> gap = std::move(initial);
  ChainStats stats;
  auto step = [&] {
    switch (mh_step(target, gap, rng)) {
      case MhMove::kBirthAccepted: ++stats.births_accepted; [[fallthrough]];
      case MhMove::kBirthRejected: ++stats.birth_proposals; break;
      case MhMove::kDeathAccepted: ++stats.deaths_accepted; [[fallthrough]];
      case MhMove::kDeathRejected:
      case MhMove::kDeathEmpty: ++stats.death_proposals; break;
    }
    ++stats.steps;
  };
  for (std::uint64_t k = 0; k < chain.burn_in; ++k) step();
  for (std::size_t s = 0; s < chain.n_samples; ++s) {
    for (std::uint64_t k = 0; k < chain.thin; ++k) step();
    visit(s, gap);
  }
  return stats;
}

std::vector<OrderedConfig> run_mh(const GapTarget& target, const ChainConfig& chain) {
  std::vector<OrderedConfig> out;
  out.reserve(chain.n_samples);
  run_mh(target, chain, [&](std::size_t, std::span<const double> gap) {
    out.emplace_back(std::vector<double>(gap.begin(), gap.end()));
  });
  return out;
}

ConstantBound::ConstantBound(double value) : value_(value) {
  if (!(value > 0.0) || !std::isfinite(value)) throw DomainError("bound must be positive and finite");
}

ConstantBound pairwise_local_bound(const PairwiseModel& model) {
  return ConstantBound(model.activity());
}

ErlangLocalBound::ErlangLocalBound(ErlangModel model, BrokenWindow window, double anchor,
                                   std::optional<double> first_right)
    : model_(model), window_(window), anchor_(anchor), first_right_(first_right) {
  const int k = model_.shape() - 1;
  cap_ = std::exp(model_.log_pdf_constant() + k * std::log(model_.horizon()));
}

double ErlangLocalBound::cell_bound(std::span<const double> gap, std::size_t cell) const {
  const double lambda = model_.rate();
  const int alpha = model_.shape();
  if (alpha == 1) return lambda;
  const std::size_t n = gap.size();
  const double lo = cell == 0 ? window_.t1() : gap[cell - 1];
  const double hi = cell == n ? window_.t2() : gap[cell];
  const double a = cell == 0 ? anchor_ : gap[cell - 1];
  const double log_c = model_.log_pdf_constant();
  const int k = alpha - 1;

  std::optional<double> b;
  if (cell < n) {
    b = gap[cell];
  } else if (first_right_) {
    b = first_right_;
  }

  if (b) {
    // pi(x-a) pi(b-x) / pi(b-a) is unimodal with its maximum c ((b-a)/4)^k at
    // the midpoint; off-cell midpoints leave it monotone on the cell.
    const double mid = 0.5 * (a + *b);
    if (mid >= lo && mid <= hi) return std::exp(log_c + k * std::log((*b - a) / 4.0));
    const double x = std::clamp(mid, lo, hi);
    return flanked_intensity(model_, a, &*b, x);
  }

  const double span = model_.horizon() - a;
  if (lambda - k / span < 0.0) {
    // Increasing on (a, T): the right end of the cell attains the supremum.
    return flanked_intensity(model_, a, nullptr, hi);
  }
  double num = 0.0, den = 0.0, term_num = 1.0, term_den = 1.0;
  for (int i = 0; i < alpha; ++i) {
    if (i > 0) {
      term_num *= lambda * span / 4.0 / i;
      term_den *= lambda * span / i;
    }
    num += term_num;
    den += term_den;
  }
  return std::exp(log_c + k * std::log(span)) * num / den;
}

ErlangLocalBound erlang_local_bound(const ErlangModel& model, const BrokenWindow& window,
                                    const OrderedConfig& left, const OrderedConfig& right) {
  check_observed(window, model.horizon(), left, right);
  return ErlangLocalBound(model, window, left.empty() ? 0.0 : left.back(),
                          right.empty() ? std::nullopt : std::optional<double>(right.front()));
}

BdStep bd_step(const GapTarget& target, const LocalBound& bound, std::vector<double>& gap,
               Rng& rng) {
  const auto& w = target.window();
  const std::size_t n = gap.size();
  thread_local std::vector<double> mass;
  mass.resize(n + 1);
  double total_birth = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    const double lo = i == 0 ? w.t1() : gap[i - 1];
    const double hi = i == n ? w.t2() : gap[i];
    total_birth += (hi - lo) * bound.cell_bound(gap, i);
    mass[i] = total_birth;
  }
  const double total = total_birth + static_cast<double>(n);
  if (!(total > 0.0)) throw NumericalError("birth-and-death process has zero total rate");

  BdStep out;
  out.sojourn = -std::log(uniform01(rng)) / total;
  if (uniform01(rng) * total < total_birth) {
    const double target_mass = uniform01(rng) * total_birth;
    std::size_t cell = static_cast<std::size_t>(
        std::upper_bound(mass.begin(), mass.end(), target_mass) - mass.begin());
    cell = std::min(cell, n);
    const double lo = cell == 0 ? w.t1() : gap[cell - 1];
    const double hi = cell == n ? w.t2() : gap[cell];
    const double u = uniform(rng, lo, hi);
    const double g = bound.cell_bound(gap, cell);
    const double lambda = target.intensity(gap, cell, u);
    if (lambda > g * (1.0 + kBoundSlack)) {
      throw BoundViolation("intensity " + std::to_string(lambda) + " exceeds local bound " +
                           std::to_string(g));
    }
    if (uniform01(rng) * g < lambda && u > lo && u < hi) {
      gap.insert(gap.begin() + static_cast<std::ptrdiff_t>(cell), u);
      out.move = BdMove::kBirthAccepted;
    } else {
      out.move = BdMove::kBirthRejected;
    }
    return out;
  }
  gap.erase(gap.begin() + static_cast<std::ptrdiff_t>(uniform_index(rng, n)));
  out.move = BdMove::kDeath;
  return out;
}

void BdSchedule::validate() const {
  if (!(spacing > 0.0) || !std::isfinite(spacing)) throw DomainError("spacing must be positive");
  if (n_samples < 1) throw DomainError("n_samples must be at least 1");
}

BdStats run_bd(const GapTarget& target, const LocalBound& bound, const BdSchedule& schedule,
               const SampleVisitor& visit, std::vector<double> initial) {
  schedule.validate();
  Rng rng = make_rng(schedule.seed);
  std::vector<double> gap = std::move(initial);
  std::vector<double> before;
  BdStats stats;
  auto tally = [&](BdMove move) {
    ++stats.jumps;
    switch (move) {
      case BdMove::kBirthAccepted: ++stats.births_accepted; [[fallthrough]];
      case BdMove::kBirthRejected: ++stats.birth_proposals; break;
      case BdMove::kDeath: ++stats.deaths; break;
    }
  };
  for (std::uint64_t k = 0; k < schedule.burn_in_jumps; ++k) tally(bd_step(target, bound, gap, rng).move);

  double clock = 0.0;
  double next_sample = schedule.spacing;
  std::size_t recorded = 0;
  while (recorded < schedule.n_samples) {
    before = gap;
    const BdStep step = bd_step(target, bound, gap, rng);
    tally(step.move);
    const double until = clock + step.sojourn;
    while (recorded < schedule.n_samples && next_sample < until) {
      visit(recorded++, before);
      next_sample += schedule.spacing;
    }
    clock = until;
  }
  stats.elapsed = clock;
  return stats;
}

std::vector<OrderedConfig> run_bd(const GapTarget& target, const LocalBound& bound,
                                  const BdSchedule& schedule) {
  std::vector<OrderedConfig> out;
  out.reserve(schedule.n_samples);
  run_bd(target, bound, schedule, [&](std::size_t, std::span<const double> gap) {
    out.emplace_back(std::vector<double>(gap.begin(), gap.end()));
  });
  return out;
}

}  // namespace gapfill
