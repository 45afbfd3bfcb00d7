#include "gapfill/core.hpp"

#include <algorithm>
#include <cmath>

namespace gapfill {

double log_sum_exp(std::span<const double> values) {
  double hi = kLogZero;
  for (double v : values) hi = std::max(hi, v);
  if (hi == kLogZero) return kLogZero;
  if (std::isinf(hi)) return hi;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - hi);
  return hi + std::log(acc);
}

OrderedConfig::OrderedConfig(std::vector<double> times) : times_(std::move(times)) {
  for (std::size_t i = 0; i < times_.size(); ++i) {
    if (!std::isfinite(times_[i])) throw DomainError("event time is not finite");
    if (i > 0 && !(times_[i - 1] < times_[i])) {
      throw DomainError("event times must be strictly increasing (tie or disorder at index " +
                        std::to_string(i) + ")");
    }
  }
}

OrderedConfig::OrderedConfig(std::initializer_list<double> times)
    : OrderedConfig(std::vector<double>(times)) {}

bool OrderedConfig::within(double lo, double hi) const {
  return times_.empty() || (times_.front() >= lo && times_.back() <= hi);
}

bool OrderedConfig::contains(double t) const {
  return std::binary_search(times_.begin(), times_.end(), t);
}

std::size_t OrderedConfig::insertion_index(double t) const {
  return static_cast<std::size_t>(std::lower_bound(times_.begin(), times_.end(), t) -
                                  times_.begin());
}

OrderedConfig OrderedConfig::with_point(double t) const {
  if (!std::isfinite(t)) throw DomainError("event time is not finite");
  if (contains(t)) throw DomainError("point already present in configuration");
  OrderedConfig out;
  out.times_.reserve(times_.size() + 1);
  const auto pos = insertion_index(t);
  out.times_.assign(times_.begin(), times_.begin() + static_cast<std::ptrdiff_t>(pos));
  out.times_.push_back(t);
  out.times_.insert(out.times_.end(), times_.begin() + static_cast<std::ptrdiff_t>(pos),
                    times_.end());
  return out;
}

OrderedConfig OrderedConfig::without_index(std::size_t i) const {
  if (i >= times_.size()) throw DomainError("point index out of range");
  OrderedConfig out = *this;
  out.times_.erase(out.times_.begin() + static_cast<std::ptrdiff_t>(i));
  return out;
}

BrokenWindow::BrokenWindow(double t1, double t2, double t_end)
    : t1_(t1), t2_(t2), t_end_(t_end) {
  if (!(0.0 < t1 && t1 < t2 && t2 < t_end) || !std::isfinite(t_end)) {
    throw DomainError("broken window requires 0 < t1 < t2 < t_end");
  }
}

OrderedConfig SplitConfig::joined() const { return concat(left, gap.view(), right); }

SplitConfig split(const OrderedConfig& config, const BrokenWindow& window) {
  if (!config.within(0.0, window.t_end())) {
    throw DomainError("configuration extends outside [0, t_end]");
  }
  std::vector<double> left, gap, right;
  for (double t : config) {
    if (window.in_left(t)) {
      left.push_back(t);
    } else if (window.in_gap(t)) {
      gap.push_back(t);
    } else {
      right.push_back(t);
    }
  }
  return {OrderedConfig(std::move(left)), OrderedConfig(std::move(gap)),
          OrderedConfig(std::move(right))};
}

OrderedConfig concat(const OrderedConfig& left, std::span<const double> gap,
                     const OrderedConfig& right) {
  std::vector<double> all;
  all.reserve(left.size() + gap.size() + right.size());
  all.insert(all.end(), left.begin(), left.end());
  all.insert(all.end(), gap.begin(), gap.end());
  all.insert(all.end(), right.begin(), right.end());
  return OrderedConfig(std::move(all));
}

double ModelDensity::papangelou(const OrderedConfig& config, double t) const {
  const double base = log_density(config);
  if (base == kLogZero) return 0.0;
  const double with = log_density(config.with_point(t));
  return std::exp(with - base);
}

}  // namespace gapfill
