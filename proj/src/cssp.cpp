#include "cssp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <sstream>

#include "error.hpp"
#include "rng.hpp"
#include "textio.hpp"

namespace perfmap {

namespace {

double elapsed_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// (objective, encoding) with the lexicographic tie rule shared by all
// solvers. Exact equality on purpose: ties must be bit-equal to be ties.
bool better(double obj_a, const std::vector<std::uint8_t>& enc_a, double obj_b,
            const std::vector<std::uint8_t>& enc_b) {
  if (obj_a != obj_b) return obj_a < obj_b;
  return enc_a < enc_b;
}

}  // namespace

std::string solve_status_to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::global_optimal: return "global_optimal";
    case SolveStatus::local: return "local";
    case SolveStatus::time_limit: return "time_limit";
  }
  return "local";
}

CsspProblem::CsspProblem(const SvrModel& model, ConfigurationSpace space,
                         std::vector<double> query_features)
    : space_(std::move(space)), gamma_(model.hyper.kernel.gamma), bias_(model.bias) {
  if (query_features.size() != model.feature_dim)
    fail(Errc::dimension_mismatch,
         "query has " + std::to_string(query_features.size()) + " features, model expects " +
             std::to_string(model.feature_dim));
  kept_bits_.reserve(model.config_columns.size());
  for (const std::string& name : model.config_columns) kept_bits_.push_back(space_.bit_index(name));

  const std::size_t d = model.feature_dim;
  const std::size_t k = model.config_columns.size();
  for (std::size_t i = 0; i < model.support_points.size(); ++i) {
    const std::vector<double>& p = model.support_points[i];
    double sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      double diff = p[j] - query_features[j];
      sq += diff * diff;
    }
    atilde_.push_back(model.dual_weights[i] * std::exp(-gamma_ * sq));
    std::vector<std::uint8_t> bits(k);
    for (std::size_t j = 0; j < k; ++j) {
      double v = p[d + j];
      double r = std::round(v);
      if (std::abs(v - r) > 1e-9 || (r != 0.0 && r != 1.0))
        fail(Errc::not_one_hot, "support point " + std::to_string(i) + " has non-binary config entry");
      bits[j] = std::uint8_t(r);
    }
    support_bits_.push_back(std::move(bits));
  }

  // Merge support points with identical config bits; the objective depends on
  // c only through the Hamming distance to those bits.
  std::map<std::vector<std::uint8_t>, double> merged;
  for (std::size_t i = 0; i < atilde_.size(); ++i) merged[support_bits_[i]] += atilde_[i];
  for (const auto& [bits, coef] : merged) {
    if (coef == 0.0) continue;
    terms_.push_back({bits, coef});
  }

  exp_table_.resize(k + 1);
  for (std::size_t h = 0; h <= k; ++h) exp_table_[h] = std::exp(-gamma_ * double(h));
}

CsspProblem build_problem(const SvrModel& model, const ConfigurationSpace& space,
                          const std::vector<double>& query_features) {
  return CsspProblem(model, space, query_features);
}

double CsspProblem::objective_of_encoding(const std::vector<std::uint8_t>& encoding) const {
  double acc = bias_;
  for (const Term& t : terms_) {
    std::size_t h = 0;
    for (std::size_t j = 0; j < kept_bits_.size(); ++j) h += t.bits[j] != encoding[kept_bits_[j]];
    acc += t.coef * exp_table_[h];
  }
  return acc;
}

double objective(const CsspProblem& problem, const Configuration& config) {
  if (config.encoding.size() != problem.space().encoding_length())
    fail(Errc::bad_length, "configuration does not match the problem's space");
  if (!is_feasible_encoding(problem.space(), config.encoding))
    fail(Errc::infeasible_config, "configuration violates the space constraints");
  return problem.objective_of_encoding(config.encoding);
}

CsspSolution solve_enumerate(const CsspProblem& problem, std::uint64_t budget) {
  auto t0 = std::chrono::steady_clock::now();
  const ConfigurationSpace& space = problem.space();
  if (cartesian_count(space) > budget)
    fail(Errc::budget_exceeded,
         "space has " + std::to_string(cartesian_count(space)) + " configurations, budget is " +
             std::to_string(budget));
  CsspSolution sol;
  bool have = false;
  std::uint64_t seen = 0;
  enumerate(space, [&](const std::vector<std::size_t>&, const std::vector<std::uint8_t>& enc) {
    ++seen;
    double obj = problem.objective_of_encoding(enc);
    if (!have || better(obj, enc, sol.objective, sol.config.encoding)) {
      have = true;
      sol.objective = obj;
      sol.config.encoding = enc;
    }
    return true;
  });
  if (!have) fail(Errc::empty_space, "no feasible configuration exists");
  sol.config.assignment = decode(space, sol.config.encoding);
  sol.status = SolveStatus::global_optimal;
  sol.nodes_or_moves = seen;
  sol.elapsed_s = elapsed_since(t0);
  return sol;
}

namespace {

// Shared precomputation for the branch-and-bound: per-term Hamming
// contribution of every (block, value) choice, and per-constraint weight of
// every choice.
struct BnbTables {
  const CsspProblem& problem;
  std::size_t n_blocks;
  // ham[t][b][v]: Hamming contribution of block b choosing value v, term t
  std::vector<std::vector<std::vector<std::size_t>>> ham;
  std::vector<std::vector<std::size_t>> hmin, hmax;  // per term, per block
  // constraint weight tables
  std::vector<std::vector<std::vector<double>>> cw;  // [c][b][v]
  std::vector<std::vector<double>> cwmin, cwmax;

  explicit BnbTables(const CsspProblem& p) : problem(p) {
    const ConfigurationSpace& space = p.space();
    const auto& params = space.parameters();
    n_blocks = params.size();
    const auto& terms = p.terms();

    // kept positions of each block: (term bit index, offset within block)
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> block_kept(n_blocks);
    for (std::size_t j = 0; j < p.kept_bits().size(); ++j) {
      std::size_t pos = p.kept_bits()[j];
      for (std::size_t b = 0; b < n_blocks; ++b) {
        std::size_t off = space.block_offset(b);
        if (pos >= off && pos < off + space.block_size(b)) {
          block_kept[b].emplace_back(j, pos - off);
          break;
        }
      }
    }

    ham.assign(terms.size(), {});
    hmin.assign(terms.size(), std::vector<std::size_t>(n_blocks, 0));
    hmax.assign(terms.size(), std::vector<std::size_t>(n_blocks, 0));
    for (std::size_t t = 0; t < terms.size(); ++t) {
      ham[t].resize(n_blocks);
      for (std::size_t b = 0; b < n_blocks; ++b) {
        std::size_t nv = space.block_size(b);
        ham[t][b].assign(nv, 0);
        for (std::size_t v = 0; v < nv; ++v) {
          std::size_t h = 0;
          for (const auto& [j, within] : block_kept[b]) {
            std::uint8_t bit = within == v ? 1 : 0;
            h += terms[t].bits[j] != bit;
          }
          ham[t][b][v] = h;
        }
        hmin[t][b] = *std::min_element(ham[t][b].begin(), ham[t][b].end());
        hmax[t][b] = *std::max_element(ham[t][b].begin(), ham[t][b].end());
      }
    }

    const auto& constraints = space.constraints();
    cw.assign(constraints.size(), {});
    cwmin.assign(constraints.size(), {});
    cwmax.assign(constraints.size(), {});
    for (std::size_t c = 0; c < constraints.size(); ++c) {
      cw[c].resize(n_blocks);
      cwmin[c].assign(n_blocks, 0.0);
      cwmax[c].assign(n_blocks, 0.0);
      for (std::size_t b = 0; b < n_blocks; ++b) cw[c][b].assign(space.block_size(b), 0.0);
      for (const ConstraintTerm& term : constraints[c].terms) {
        std::size_t b = space.param_index(term.param);
        std::size_t v = space.value_index(b, term.value);
        cw[c][b][v] += term.coef;
      }
      for (std::size_t b = 0; b < n_blocks; ++b) {
        cwmin[c][b] = *std::min_element(cw[c][b].begin(), cw[c][b].end());
        cwmax[c][b] = *std::max_element(cw[c][b].begin(), cw[c][b].end());
      }
    }
  }
};

class BnbSolver {
 public:
  BnbSolver(const CsspProblem& p, double time_limit_s)
      : p_(p), tables_(p), limit_(time_limit_s), t0_(std::chrono::steady_clock::now()) {
    const auto& terms = p.terms();
    const std::size_t nb = tables_.n_blocks;

    // Branching order: blocks by descending influence on the objective.
    std::vector<double> influence(nb, 0.0);
    for (std::size_t t = 0; t < terms.size(); ++t)
      for (std::size_t b = 0; b < nb; ++b)
        influence[b] += std::abs(terms[t].coef) * double(tables_.hmax[t][b] - tables_.hmin[t][b]);
    order_.resize(nb);
    for (std::size_t b = 0; b < nb; ++b) order_[b] = b;
    std::stable_sort(order_.begin(), order_.end(),
                     [&](std::size_t a, std::size_t b) { return influence[a] > influence[b]; });

    h_fixed_.assign(terms.size(), 0);
    free_min_.assign(terms.size(), 0);
    free_max_.assign(terms.size(), 0);
    for (std::size_t t = 0; t < terms.size(); ++t)
      for (std::size_t b = 0; b < nb; ++b) {
        free_min_[t] += tables_.hmin[t][b];
        free_max_[t] += tables_.hmax[t][b];
      }
    const auto& constraints = p.space().constraints();
    c_fixed_.assign(constraints.size(), 0.0);
    c_free_min_.assign(constraints.size(), 0.0);
    c_free_max_.assign(constraints.size(), 0.0);
    for (std::size_t c = 0; c < constraints.size(); ++c)
      for (std::size_t b = 0; b < nb; ++b) {
        c_free_min_[c] += tables_.cwmin[c][b];
        c_free_max_[c] += tables_.cwmax[c][b];
      }
    choice_.assign(nb, 0);
  }

  CsspSolution run() {
    dfs(0);
    if (!have_) fail(Errc::empty_space, "no feasible configuration exists");
    CsspSolution sol;
    sol.config.encoding = best_enc_;
    sol.config.assignment = decode(p_.space(), best_enc_);
    sol.objective = best_obj_;
    sol.status = timed_out_ ? SolveStatus::time_limit : SolveStatus::global_optimal;
    sol.nodes_or_moves = nodes_;
    sol.elapsed_s = elapsed_since(t0_);
    return sol;
  }

 private:
  double bound() const {
    double acc = p_.bias();
    const auto& terms = p_.terms();
    for (std::size_t t = 0; t < terms.size(); ++t) {
      double coef = terms[t].coef;
      std::size_t h = coef > 0 ? h_fixed_[t] + free_max_[t] : h_fixed_[t] + free_min_[t];
      acc += coef * p_.exp_table()[h];
    }
    return acc;
  }

  bool constraints_can_hold() const {
    const auto& constraints = p_.space().constraints();
    for (std::size_t c = 0; c < constraints.size(); ++c) {
      double lo = c_fixed_[c] + c_free_min_[c];
      double hi = c_fixed_[c] + c_free_max_[c];
      double rhs = constraints[c].rhs;
      // conservative slack: a false keep dies at the leaf, a false prune
      // would lose solutions
      switch (constraints[c].relation) {
        case Relation::le:
          if (lo > rhs + 1e-9) return false;
          break;
        case Relation::ge:
          if (hi < rhs - 1e-9) return false;
          break;
        case Relation::eq:
          if (lo > rhs + 1e-9 || hi < rhs - 1e-9) return false;
          break;
      }
    }
    return true;
  }

  void apply(std::size_t b, std::size_t v, int sign) {
    const auto& terms = p_.terms();
    for (std::size_t t = 0; t < terms.size(); ++t) {
      if (sign > 0) {
        h_fixed_[t] += tables_.ham[t][b][v];
        free_min_[t] -= tables_.hmin[t][b];
        free_max_[t] -= tables_.hmax[t][b];
      } else {
        h_fixed_[t] -= tables_.ham[t][b][v];
        free_min_[t] += tables_.hmin[t][b];
        free_max_[t] += tables_.hmax[t][b];
      }
    }
    const auto& constraints = p_.space().constraints();
    for (std::size_t c = 0; c < constraints.size(); ++c) {
      if (sign > 0) {
        c_fixed_[c] += tables_.cw[c][b][v];
        c_free_min_[c] -= tables_.cwmin[c][b];
        c_free_max_[c] -= tables_.cwmax[c][b];
      } else {
        c_fixed_[c] -= tables_.cw[c][b][v];
        c_free_min_[c] += tables_.cwmin[c][b];
        c_free_max_[c] += tables_.cwmax[c][b];
      }
    }
  }

  void leaf() {
    ++nodes_;
    std::vector<std::size_t> idx(tables_.n_blocks);
    for (std::size_t d = 0; d < tables_.n_blocks; ++d) idx[order_[d]] = choice_[d];
    std::vector<std::uint8_t> enc = encoding_of_value_indices(p_.space(), idx);
    if (!is_feasible_encoding(p_.space(), enc)) return;  // interval check was conservative
    double obj = p_.bias();
    const auto& terms = p_.terms();
    for (std::size_t t = 0; t < terms.size(); ++t) obj += terms[t].coef * p_.exp_table()[h_fixed_[t]];
    if (!have_ || better(obj, enc, best_obj_, best_enc_)) {
      have_ = true;
      best_obj_ = obj;
      best_enc_ = std::move(enc);
    }
  }

  void dfs(std::size_t depth) {
    if (timed_out_) return;
    if (depth == tables_.n_blocks) {
      leaf();
      if (have_ && elapsed_since(t0_) > limit_) timed_out_ = true;
      return;
    }
    ++nodes_;
    if (have_ && (nodes_ & 0xff) == 0 && elapsed_since(t0_) > limit_) {
      timed_out_ = true;
      return;
    }
    std::size_t b = order_[depth];
    for (std::size_t v = 0; v < p_.space().block_size(b); ++v) {
      apply(b, v, +1);
      choice_[depth] = v;
      bool keep = constraints_can_hold();
      // strictly-greater pruning keeps equal-bound subtrees alive for the
      // lexicographic tie rule
      if (keep && have_ && bound() > best_obj_) keep = false;
      if (keep) dfs(depth + 1);
      apply(b, v, -1);
      if (timed_out_) return;
    }
  }

  const CsspProblem& p_;
  BnbTables tables_;
  double limit_;
  std::chrono::steady_clock::time_point t0_;

  std::vector<std::size_t> order_;
  std::vector<std::size_t> choice_;
  std::vector<std::size_t> h_fixed_, free_min_, free_max_;
  std::vector<double> c_fixed_, c_free_min_, c_free_max_;

  bool have_ = false;
  bool timed_out_ = false;
  double best_obj_ = 0.0;
  std::vector<std::uint8_t> best_enc_;
  std::uint64_t nodes_ = 0;
};

}  // namespace

CsspSolution solve_bnb(const CsspProblem& problem, double time_limit_s) {
  return BnbSolver(problem, time_limit_s).run();
}

double node_lower_bound(const CsspProblem& problem, const std::vector<std::size_t>& fixed_choices) {
  BnbTables tables(problem);
  const auto& terms = problem.terms();
  double acc = problem.bias();
  for (std::size_t t = 0; t < terms.size(); ++t) {
    std::size_t h_fixed = 0, free_min = 0, free_max = 0;
    for (std::size_t b = 0; b < tables.n_blocks; ++b) {
      bool fixed = b < fixed_choices.size() && fixed_choices[b] < problem.space().block_size(b);
      if (fixed) {
        h_fixed += tables.ham[t][b][fixed_choices[b]];
      } else {
        free_min += tables.hmin[t][b];
        free_max += tables.hmax[t][b];
      }
    }
    double coef = terms[t].coef;
    std::size_t h = coef > 0 ? h_fixed + free_max : h_fixed + free_min;
    acc += coef * problem.exp_table()[h];
  }
  return acc;
}

CsspSolution solve_local(const CsspProblem& problem, std::size_t restarts, std::uint64_t seed,
                         double time_limit_s) {
  if (restarts < 1) fail(Errc::bad_config, "solve_local: restarts must be >= 1");
  auto t0 = std::chrono::steady_clock::now();
  const ConfigurationSpace& space = problem.space();
  const auto& params = space.parameters();
  Rng rng(seed);

  CsspSolution sol;
  bool have = false;
  std::uint64_t moves = 0;
  for (std::size_t r = 0; r < restarts; ++r) {
    // rejection-sample a feasible start
    std::vector<std::size_t> idx(params.size());
    std::vector<std::uint8_t> enc;
    bool found = false;
    for (int tries = 0; tries < 1000 && !found; ++tries) {
      for (std::size_t p = 0; p < params.size(); ++p) idx[p] = rng.next_index(params[p].values.size());
      enc = encoding_of_value_indices(space, idx);
      found = is_feasible_encoding(space, enc);
    }
    if (!found) continue;

    double obj = problem.objective_of_encoding(enc);
    bool improved = true;
    while (improved && elapsed_since(t0) <= time_limit_s) {
      improved = false;
      double best_obj = obj;
      std::size_t best_p = 0, best_v = 0;
      for (std::size_t p = 0; p < params.size(); ++p) {
        std::size_t cur = idx[p];
        std::size_t off = space.block_offset(p);
        for (std::size_t v = 0; v < params[p].values.size(); ++v) {
          if (v == cur) continue;
          enc[off + cur] = 0;
          enc[off + v] = 1;
          if (is_feasible_encoding(space, enc)) {
            double cand = problem.objective_of_encoding(enc);
            if (cand < best_obj) {  // first best-improving move in scan order
              best_obj = cand;
              best_p = p;
              best_v = v;
              improved = true;
            }
          }
          enc[off + v] = 0;
          enc[off + cur] = 1;
        }
      }
      if (improved) {
        std::size_t off = space.block_offset(best_p);
        enc[off + idx[best_p]] = 0;
        enc[off + best_v] = 1;
        idx[best_p] = best_v;
        obj = best_obj;
        ++moves;
      }
    }
    if (!have || better(obj, enc, sol.objective, sol.config.encoding)) {
      have = true;
      sol.objective = obj;
      sol.config.encoding = enc;
    }
    if (elapsed_since(t0) > time_limit_s) break;
  }
  if (!have)
    fail(Errc::no_feasible_start, "no feasible configuration found in " + std::to_string(restarts) +
                                      " restarts of rejection sampling");
  sol.config.assignment = decode(space, sol.config.encoding);
  sol.status = SolveStatus::local;
  sol.nodes_or_moves = moves;
  sol.elapsed_s = elapsed_since(t0);
  return sol;
}

std::string solution_to_text(const ConfigurationSpace& space, const CsspSolution& solution) {
  std::ostringstream out;
  out << "status=" << solve_status_to_string(solution.status) << "\n";
  out << "objective=" << format_double(solution.objective) << "\n";
  out << "nodes_or_moves=" << solution.nodes_or_moves << "\n";
  out << "elapsed_s=" << format_double(solution.elapsed_s) << "\n";
  for (const Parameter& p : space.parameters()) {
    auto it = solution.config.assignment.find(p.name);
    out << p.name << "=" << (it == solution.config.assignment.end() ? "?" : it->second) << "\n";
  }
  std::string enc;
  for (std::uint8_t b : solution.config.encoding) {
    if (!enc.empty()) enc += ',';
    enc += b ? '1' : '0';
  }
  out << "encoding=" << enc << "\n";
  return out.str();
}

}  // namespace perfmap
