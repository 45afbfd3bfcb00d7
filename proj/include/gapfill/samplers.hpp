#pragma once

// Samplers for the conditional law of the hidden points in the gap (t1, t2):
// a Metropolis-Hastings birth/death chain and a continuous-time
// birth-and-death process thinned against a piecewise-constant local bound.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "gapfill/core.hpp"
#include "gapfill/markov.hpp"
#include "gapfill/random.hpp"
#include "gapfill/renewal.hpp"

namespace gapfill {

// Conditional law of the hidden points given the observed ones, described by
// its Papangelou intensity.
class GapTarget {
 public:
  virtual ~GapTarget() = default;
  virtual const BrokenWindow& window() const = 0;
  // Intensity of inserting t into the sorted hidden points at index pos, i.e.
  // gap[pos - 1] < t < gap[pos].
  virtual double intensity(std::span<const double> gap, std::size_t pos, double t) const = 0;
};

class RenewalGapTarget final : public GapTarget {
 public:
  RenewalGapTarget(ErlangModel model, BrokenWindow window, OrderedConfig left, OrderedConfig right);

  const BrokenWindow& window() const override { return window_; }
  double intensity(std::span<const double> gap, std::size_t pos, double t) const override;

  const ErlangModel& model() const { return model_; }
  const OrderedConfig& left() const { return left_; }
  const OrderedConfig& right() const { return right_; }

  // Sufficient statistics of left || gap || right.
  SufficientStats completed_stats(std::span<const double> gap) const;

 private:
  ErlangModel model_;
  BrokenWindow window_;
  OrderedConfig left_;
  OrderedConfig right_;
  double anchor_;
};

class PairwiseGapTarget final : public GapTarget {
 public:
  PairwiseGapTarget(PairwiseModel model, BrokenWindow window, OrderedConfig left,
                    OrderedConfig right);

  const BrokenWindow& window() const override { return window_; }
  double intensity(std::span<const double> gap, std::size_t pos, double t) const override;
  const PairwiseModel& model() const { return model_; }

 private:
  PairwiseModel model_;
  BrokenWindow window_;
  OrderedConfig left_;
  OrderedConfig right_;
};

struct ChainConfig {
  std::uint64_t burn_in = 1000;
  std::uint64_t thin = 1000;
  std::size_t n_samples = 1000;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ChainStats {
  std::uint64_t steps = 0;
  std::uint64_t birth_proposals = 0;
  std::uint64_t births_accepted = 0;
  std::uint64_t death_proposals = 0;
  std::uint64_t deaths_accepted = 0;
};

enum class MhMove { kBirthAccepted, kBirthRejected, kDeathAccepted, kDeathRejected, kDeathEmpty };

// Hastings ratios of the birth/death chain: inserting t at index pos of the
// hidden points, and deleting the point at index i.
double mh_birth_ratio(const GapTarget& target, std::span<const double> gap, std::size_t pos,
                      double t);
double mh_death_ratio(const GapTarget& target, std::span<const double> gap, std::size_t i);

// One birth-or-death proposal, applied in place. The hidden points must have
// positive target density.
MhMove mh_step(const GapTarget& target, std::vector<double>& gap, Rng& rng);

using SampleVisitor = std::function<void(std::size_t index, std::span<const double> gap)>;

// burn_in steps, then n_samples draws spaced thin steps apart. The chain starts
// from `initial` (empty by default).
ChainStats run_mh(const GapTarget& target, const ChainConfig& chain, const SampleVisitor& visit,
                  std::vector<double> initial = {});
std::vector<OrderedConfig> run_mh(const GapTarget& target, const ChainConfig& chain);

// Piecewise-constant upper bound on the intensity, constant on the cells
// (t1, x_1), (x_1, x_2), ..., (x_n, t2) cut by the hidden points.
class LocalBound {
 public:
  virtual ~LocalBound() = default;
  virtual double cell_bound(std::span<const double> gap, std::size_t cell) const = 0;
  // Global bound on every cell value.
  virtual double cap() const = 0;
};

class ConstantBound final : public LocalBound {
 public:
  explicit ConstantBound(double value);
  double cell_bound(std::span<const double>, std::size_t) const override { return value_; }
  double cap() const override { return value_; }

 private:
  double value_;
};

class ErlangLocalBound final : public LocalBound {
 public:
  ErlangLocalBound(ErlangModel model, BrokenWindow window, double anchor,
                   std::optional<double> first_right);
  double cell_bound(std::span<const double> gap, std::size_t cell) const override;
  double cap() const override { return cap_; }

 private:
  ErlangModel model_;
  BrokenWindow window_;
  double anchor_;
  std::optional<double> first_right_;
  double cap_;
};

ErlangLocalBound erlang_local_bound(const ErlangModel& model, const BrokenWindow& window,
                                    const OrderedConfig& left, const OrderedConfig& right);

// A bound beta1 suffices for gamma <= 1.
ConstantBound pairwise_local_bound(const PairwiseModel& model);

class BoundViolation : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

enum class BdMove { kBirthAccepted, kBirthRejected, kDeath };

struct BdStep {
  double sojourn = 0.0;
  BdMove move = BdMove::kBirthRejected;
};

// One jump of the birth-and-death process. Rejected births are self-loops
// that still consume their sojourn. Throws BoundViolation when the intensity
// exceeds the bound at a proposed point.
BdStep bd_step(const GapTarget& target, const LocalBound& bound, std::vector<double>& gap,
               Rng& rng);

struct BdSchedule {
  std::uint64_t burn_in_jumps = 1000;
  // Clock time between recorded states; sampling on a regular clock grid
  // weights states by their sojourn.
  double spacing = 1.0;
  std::size_t n_samples = 1000;
  std::uint64_t seed = 0;

  void validate() const;
};

struct BdStats {
  std::uint64_t jumps = 0;
  std::uint64_t birth_proposals = 0;
  std::uint64_t births_accepted = 0;
  std::uint64_t deaths = 0;
  double elapsed = 0.0;
};

BdStats run_bd(const GapTarget& target, const LocalBound& bound, const BdSchedule& schedule,
               const SampleVisitor& visit, std::vector<double> initial = {});
std::vector<OrderedConfig> run_bd(const GapTarget& target, const LocalBound& bound,
                                  const BdSchedule& schedule);

}  // namespace gapfill
