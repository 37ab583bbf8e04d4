#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "configspace.hpp"
#include "svr.hpp"

namespace perfmap {

enum class SolveStatus { global_optimal, local, time_limit };

std::string solve_status_to_string(SolveStatus s);

struct CsspSolution {
  Configuration config;
  double objective = 0.0;
  SolveStatus status = SolveStatus::local;
  std::uint64_t nodes_or_moves = 0;
  double elapsed_s = 0.0;
};

/// Minimization of the learned map over the feasible configuration set, with
/// the query features frozen in. Because both c and the support configs are
/// binary, the exponent splits as ||f_i - q||^2 + H(c_i, c), so each support
/// point contributes a_i * exp(-gamma * H) with a_i = beta_i *
/// exp(-gamma * ||f_i - q||^2). Support points with identical config bits are
/// merged before search. Immutable; solvers may share one instance.
class CsspProblem {
 public:
  /// One merged objective term: config bits of the support points (on the
  /// model's config columns) and their summed coefficient.
  struct Term {
    std::vector<std::uint8_t> bits;
    double coef = 0.0;
  };

  CsspProblem(const SvrModel& model, ConfigurationSpace space, std::vector<double> query_features);

  const ConfigurationSpace& space() const { return space_; }
  double gamma() const { return gamma_; }
  double bias() const { return bias_; }
  const std::vector<Term>& terms() const { return terms_; }
  /// Positions in the space encoding that the model reads, in model column
  /// order.
  const std::vector<std::size_t>& kept_bits() const { return kept_bits_; }

  /// Per-support-point coefficients before merging (for consistency checks).
  const std::vector<double>& support_coefficients() const { return atilde_; }
  const std::vector<std::vector<std::uint8_t>>& support_bits() const { return support_bits_; }

  double objective_of_encoding(const std::vector<std::uint8_t>& encoding) const;
  /// exp(-gamma * h) for integer Hamming distances h = 0..kept bit count.
  const std::vector<double>& exp_table() const { return exp_table_; }

 private:
  ConfigurationSpace space_;
  double gamma_ = 1.0;
  double bias_ = 0.0;
  std::vector<std::size_t> kept_bits_;
  std::vector<double> atilde_;
  std::vector<std::vector<std::uint8_t>> support_bits_;
  std::vector<Term> terms_;
  std::vector<double> exp_table_;
};

CsspProblem build_problem(const SvrModel& model, const ConfigurationSpace& space,
                          const std::vector<double>& query_features);

/// Objective of a feasible configuration; throws InfeasibleConfig otherwise.
double objective(const CsspProblem& problem, const Configuration& config);

/// Exact argmin by exhaustive enumeration. Ties break to the
/// lexicographically smallest encoding. Throws BudgetExceeded / EmptySpace.
CsspSolution solve_enumerate(const CsspProblem& problem, std::uint64_t budget = 1000000);

/// Depth-first branch and bound over the one-hot blocks. Within the time
/// limit returns the incumbent; status is global_optimal iff the tree was
/// exhausted. Prunes only on strictly greater bounds so exact ties keep the
/// lexicographic rule.
CsspSolution solve_bnb(const CsspProblem& problem, double time_limit_s = 60.0);

/// Multi-restart best-improvement local search; one move changes a single
/// parameter's value and must stay feasible. Throws NoFeasibleStart.
CsspSolution solve_local(const CsspProblem& problem, std::size_t restarts, std::uint64_t seed,
                         double time_limit_s = 60.0);

/// Lower bound on the objective over the subtree where the listed blocks are
/// fixed to the given value indices (entries >= block size mean free).
/// Exposed so the bound can be audited against exhaustive sub-enumeration.
double node_lower_bound(const CsspProblem& problem, const std::vector<std::size_t>& fixed_choices);

/// Human- and machine-readable solution report.
std::string solution_to_text(const ConfigurationSpace& space, const CsspSolution& solution);

}  // namespace perfmap
