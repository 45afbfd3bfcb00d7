#pragma once

// Brute-force quadrature for the marginal and conditional laws of a process
// observed on a broken window. Small instances only: the n-th term of the sum
// over hidden counts integrates over ordered n-tuples in the gap with a
// tensor product rule in collapsed coordinates
//   t_n = t1 + L w_n,  t_k = t1 + (t_{k+1} - t1) w_k,
// Gauss-Jacobi in each w_k so the Jacobian w_k^(k-1) is integrated exactly.
// Smooth integrands converge spectrally.

#include <cstddef>
#include <optional>
#include <vector>

#include "gapfill/core.hpp"

namespace gapfill {

struct OracleOptions {
  // Highest hidden count summed. When unset the sum stops at the first term
  // below 1e-12 of the running total, or at 40.
  std::optional<std::size_t> n_max;
  // Gauss nodes per dimension. Without n_max, higher terms use fewer nodes
  // (down to a single node) so that each term stays within an equal share of the
  // ceiling.
  std::size_t quad_points = 16;
  // Maximum number of density evaluations.
  double cost_ceiling = 2e7;
};

// log of  int_{H_n(gap)} j^Y(left, t, right) dt  for n = 0, 1, ...
std::vector<double> log_marginal_terms(const ModelDensity& model, const BrokenWindow& window,
                                       const OrderedConfig& left, const OrderedConfig& right,
                                       const OracleOptions& options = {});

// Janossy density of the observed part.
double marginal_janossy_oracle(const ModelDensity& model, const BrokenWindow& window,
                               const OrderedConfig& left, const OrderedConfig& right,
                               const OracleOptions& options = {});

// Janossy density j_n(gap | left, right) of the hidden points. Zero for gap
// configurations that leave (t1, t2). Throws NumericalError when the
// observations are numerically infeasible.
double conditional_density_oracle(const ModelDensity& model, const BrokenWindow& window,
                                  const OrderedConfig& left, const OrderedConfig& right,
                                  const OrderedConfig& gap, const OracleOptions& options = {});

// Conditional probability of n hidden points, n = 0..n_max.
std::vector<double> gap_count_oracle(const ModelDensity& model, const BrokenWindow& window,
                                     const OrderedConfig& left, const OrderedConfig& right,
                                     const OracleOptions& options = {});

// Number of tuples evaluated for counts 0..n_max at a fixed node count.
double oracle_cost(std::size_t n_max, std::size_t quad_points);

}  // namespace gapfill
