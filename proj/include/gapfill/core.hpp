#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gapfill {

// Invalid parameters or inputs (bad model values, unordered configurations,
// points outside their carrier).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// File or stream failures.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numerical procedure could not produce a result (non-convergence, rank
// deficiency, infeasible conditioning, exhausted budgets).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// log(0). Densities are carried in log space throughout.
inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

// log(sum(exp(values))) without overflow; kLogZero for an empty range.
double log_sum_exp(std::span<const double> values);

// A chronologically ordered, strictly increasing sequence of event times.
class OrderedConfig {
 public:
  OrderedConfig() = default;

  // Throws DomainError on ties, disorder or non-finite entries.
  explicit OrderedConfig(std::vector<double> times);
  OrderedConfig(std::initializer_list<double> times);

  std::size_t size() const { return times_.size(); }
  bool empty() const { return times_.empty(); }
  double operator[](std::size_t i) const { return times_[i]; }
  double front() const { return times_.front(); }
  double back() const { return times_.back(); }
  auto begin() const { return times_.begin(); }
  auto end() const { return times_.end(); }
  std::span<const double> view() const { return times_; }
  const std::vector<double>& times() const { return times_; }

  // True if every point lies in [lo, hi].
  bool within(double lo, double hi) const;
  bool contains(double t) const;

  // Chronological insertion index of t (number of points strictly below t).
  std::size_t insertion_index(double t) const;

  // Copy with t inserted; throws DomainError if t is already present.
  OrderedConfig with_point(double t) const;
  OrderedConfig without_index(std::size_t i) const;

  friend bool operator==(const OrderedConfig&, const OrderedConfig&) = default;

 private:
  std::vector<double> times_;
};

// Observation window [0, t1] U [t2, t_end]; the hidden gap is (t1, t2).
class BrokenWindow {
 public:
  BrokenWindow(double t1, double t2, double t_end);

  double t1() const { return t1_; }
  double t2() const { return t2_; }
  double t_end() const { return t_end_; }
  double gap_length() const { return t2_ - t1_; }
  double observed_length() const { return t1_ + (t_end_ - t2_); }

  // Observed parts are closed, the gap is open.
  bool in_gap(double t) const { return t > t1_ && t < t2_; }
  bool in_left(double t) const { return t >= 0.0 && t <= t1_; }
  bool in_right(double t) const { return t >= t2_ && t <= t_end_; }

 private:
  double t1_;
  double t2_;
  double t_end_;
};

struct SplitConfig {
  OrderedConfig left;
  OrderedConfig gap;
  OrderedConfig right;

  OrderedConfig joined() const;
};

// Partition a configuration on [0, t_end] into observed and hidden parts.
SplitConfig split(const OrderedConfig& config, const BrokenWindow& window);

// left || gap || right; throws DomainError if the result is not increasing.
OrderedConfig concat(const OrderedConfig& left, std::span<const double> gap,
                     const OrderedConfig& right);

// A sequential point process on [0, T] given by its density with respect to
// the unit-rate Poisson process on the carrier. Janossy densities follow as
// j_n = exp(-T) f.
class ModelDensity {
 public:
  virtual ~ModelDensity() = default;

  virtual double horizon() const = 0;
  virtual double log_density(const OrderedConfig& config) const = 0;

  // Papangelou intensity of inserting t at its chronological position. The
  // default is the density ratio; models with closed forms override it.
  virtual double papangelou(const OrderedConfig& config, double t) const;
};

}  // namespace gapfill
