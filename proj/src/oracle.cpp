#include "gapfill/oracle.hpp"

#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <string>

namespace gapfill {
namespace {

constexpr std::size_t kAutoCap = 40;
constexpr double kAutoRelTol = 1e-12;

void check_inputs(const ModelDensity& model, const BrokenWindow& window,
                  const OrderedConfig& left, const OrderedConfig& right,
                  const OracleOptions& options) {
  if (std::abs(model.horizon() - window.t_end()) > 1e-12 * window.t_end()) {
    throw DomainError("model horizon differs from window end");
  }
  if (!left.within(0.0, window.t1())) throw DomainError("left points outside [0, t1]");
  if (!right.within(window.t2(), window.t_end())) throw DomainError("right points outside [t2, T]");
  if (options.quad_points < 2) throw DomainError("quad_points must be at least 2");
}

// Integral of exp(log f - T) over ordered n-tuples in the gap, in collapsed
// coordinates t_k = t1 + L w_k w_{k+1} ... w_n. The Jacobian L^n prod w_k^(k-1)
// is absorbed into a Gauss-Jacobi rule per coordinate.
class TermIntegrator {
 public:
  TermIntegrator(const ModelDensity& model, const BrokenWindow& window,
                 const OrderedConfig& left, const OrderedConfig& right)
      : model_(model), left_(left), right_(right), t1_(window.t1()),
        length_(window.gap_length()), horizon_(model.horizon()) {}

  double log_term(std::size_t n, std::size_t nodes) {
    terms_.clear();
    tuple_.assign(n, 0.0);
    if (n == 0) {
      const double lf = model_.log_density(concat(left_, tuple_, right_));
      return lf == kLogZero ? kLogZero : lf - horizon_;
    }
    rules_.clear();
    for (std::size_t k = 1; k <= n; ++k) rules_.push_back(jacobi_rule(nodes, k - 1));
    recurse(n, length_, 0.0);
    if (terms_.empty()) return kLogZero;
    return log_sum_exp(terms_) - horizon_ + static_cast<double>(n) * std::log(length_);
  }

 private:
  struct Rule {
    std::vector<double> nodes;
    std::vector<double> log_weights;
  };

  // Nodes and weights on [0, 1] for the weight x^power.
  static Rule jacobi_rule(std::size_t nodes, std::size_t power) {
    gsl_integration_fixed_workspace* ws = gsl_integration_fixed_alloc(
        gsl_integration_fixed_jacobi, nodes, 0.0, 1.0, 0.0, static_cast<double>(power));
    if (!ws) throw NumericalError("cannot build Gauss-Jacobi rule");
    const double* x = gsl_integration_fixed_nodes(ws);
    const double* w = gsl_integration_fixed_weights(ws);
    Rule rule;
    for (std::size_t i = 0; i < nodes; ++i) {
      rule.nodes.push_back(x[i]);
      rule.log_weights.push_back(std::log(w[i]));
    }
    gsl_integration_fixed_free(ws);
    return rule;
  }

  // Fill tuple_[k-1]; `scale` is the product L w_{k+1} ... w_n.
  void recurse(std::size_t k, double scale, double log_weight) {
    const Rule& rule = rules_[k - 1];
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double inner = scale * rule.nodes[i];
      tuple_[k - 1] = t1_ + inner;
      const double lw = log_weight + rule.log_weights[i];
      if (k == 1) {
        const double lf = model_.log_density(concat(left_, tuple_, right_));
        if (lf != kLogZero) terms_.push_back(lf + lw);
      } else {
        recurse(k - 1, inner, lw);
      }
    }
  }

  const ModelDensity& model_;
  const OrderedConfig& left_;
  const OrderedConfig& right_;
  double t1_;
  double length_;
  double horizon_;
  std::vector<Rule> rules_;
  std::vector<double> tuple_;
  std::vector<double> terms_;
};

}  // namespace

double oracle_cost(std::size_t n_max, std::size_t quad_points) {
  double cost = 0.0;
  for (std::size_t n = 0; n <= n_max; ++n) cost += std::pow(static_cast<double>(quad_points), n);
  return cost;
}

std::vector<double> log_marginal_terms(const ModelDensity& model, const BrokenWindow& window,
                                       const OrderedConfig& left, const OrderedConfig& right,
                                       const OracleOptions& options) {
  check_inputs(model, window, left, right, options);
  const std::size_t q = options.quad_points;
  TermIntegrator integrator(model, window, left, right);
  std::vector<double> terms;

  if (options.n_max) {
    const double cost = oracle_cost(*options.n_max, q);
    if (cost > options.cost_ceiling) {
      throw DomainError("oracle budget of " + std::to_string(cost) +
                        " evaluations exceeds the cost ceiling");
    }
    for (std::size_t n = 0; n <= *options.n_max; ++n) terms.push_back(integrator.log_term(n, q));
    return terms;
  }

  const double share = options.cost_ceiling / static_cast<double>(kAutoCap + 1);
  double log_total = kLogZero;
  for (std::size_t n = 0; n <= kAutoCap; ++n) {
    std::size_t nodes = q;
    if (n > 0) {
      const double affordable = std::floor(std::pow(share, 1.0 / static_cast<double>(n)) + 1e-9);
      nodes = std::min(q, static_cast<std::size_t>(std::max(affordable, 0.0)));
    }
    if (n > 0 && nodes < 1) {
      throw DomainError("oracle truncation not reached within the cost ceiling");
    }
    const double term = integrator.log_term(n, nodes);
    terms.push_back(term);
    const double pair[2] = {log_total, term};
    log_total = log_sum_exp(pair);
    if (n > 0 && (term == kLogZero || term < log_total + std::log(kAutoRelTol))) break;
  }
  return terms;
}

double marginal_janossy_oracle(const ModelDensity& model, const BrokenWindow& window,
                               const OrderedConfig& left, const OrderedConfig& right,
                               const OracleOptions& options) {
  const auto terms = log_marginal_terms(model, window, left, right, options);
  return std::exp(log_sum_exp(terms));
}

double conditional_density_oracle(const ModelDensity& model, const BrokenWindow& window,
                                  const OrderedConfig& left, const OrderedConfig& right,
                                  const OrderedConfig& gap, const OracleOptions& options) {
  const auto terms = log_marginal_terms(model, window, left, right, options);
  const double log_marginal = log_sum_exp(terms);
  if (log_marginal == kLogZero || !std::isfinite(log_marginal)) {
    throw NumericalError("infeasible conditioning: marginal Janossy density is zero");
  }
  for (double t : gap) {
    if (!window.in_gap(t)) return 0.0;
  }
  const double lf = model.log_density(concat(left, gap.view(), right));
  return std::exp(lf - model.horizon() - log_marginal);
}

std::vector<double> gap_count_oracle(const ModelDensity& model, const BrokenWindow& window,
                                     const OrderedConfig& left, const OrderedConfig& right,
                                     const OracleOptions& options) {
  const auto terms = log_marginal_terms(model, window, left, right, options);
  const double log_marginal = log_sum_exp(terms);
  if (log_marginal == kLogZero) {
    throw NumericalError("infeasible conditioning: marginal Janossy density is zero");
  }
  std::vector<double> pmf;
  pmf.reserve(terms.size());
  for (double term : terms) pmf.push_back(std::exp(term - log_marginal));
  return pmf;
}

}  // namespace gapfill
