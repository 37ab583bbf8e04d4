#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cssp.hpp"
#include "error.hpp"
#include "rng.hpp"
#include "support/oracles.hpp"
#include "svr.hpp"

using namespace perfmap;
using perfmap::testing::PlantedProblem;
using perfmap::testing::PlantedSpec;

namespace {

std::vector<double> concat(const std::vector<double>& f, const std::vector<std::uint8_t>& c) {
  std::vector<double> out = f;
  for (std::uint8_t b : c) out.push_back(double(b));
  return out;
}

Configuration random_feasible(Rng& rng, const ConfigurationSpace& space) {
  for (int tries = 0; tries < 10000; ++tries) {
    std::vector<std::size_t> idx(space.parameters().size());
    for (std::size_t p = 0; p < idx.size(); ++p)
      idx[p] = rng.next_index(space.parameters()[p].values.size());
    auto enc = encoding_of_value_indices(space, idx);
    if (is_feasible_encoding(space, enc)) {
      Configuration c;
      c.encoding = enc;
      c.assignment = decode(space, enc);
      return c;
    }
  }
  FAIL("no feasible configuration found");
  return {};
}

}  // namespace

TEST_CASE("squared distance between binary vectors is the Hamming distance") {
  std::vector<double> a = {1, 0, 0, 1}, b = {0, 1, 0, 1};
  double sq = 0;
  for (int i = 0; i < 4; ++i) sq += (a[i] - b[i]) * (a[i] - b[i]);
  CHECK(sq == 2.0);
}

TEST_CASE("a single support point at the query with matching bits contributes its weight") {
  ConfigurationSpace space({{"A", {"a0", "a1"}}}, {});
  SvrModel m;
  m.hyper.kernel.gamma = 0.8;
  m.feature_dim = 2;
  m.config_columns = space.bit_names();
  m.support_points = {{0.5, -1.0, 1.0, 0.0}};
  m.dual_weights = {0.7};
  m.bias = 0.0;
  CsspProblem p = build_problem(m, space, {0.5, -1.0});
  Configuration same = encode(space, {{"A", "a0"}});
  CHECK(objective(p, same) == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("the factored objective equals direct kernel evaluation at random configs") {
  Rng rng(21);
  PlantedSpec spec;
  spec.max_constraints = 2;
  for (int it = 0; it < 10; ++it) {
    PlantedProblem planted = testing::make_planted_problem(rng, spec);
    CsspProblem problem = build_problem(planted.model, planted.space, planted.query);
    for (int k = 0; k < 10; ++k) {
      Configuration c = random_feasible(rng, planted.space);
      double factored = objective(problem, c);
      double direct = predict(planted.model, concat(planted.query, c.encoding));
      CHECK(std::abs(factored - direct) <= 1e-12 * std::max({1.0, std::abs(factored), std::abs(direct)}));
    }
  }
}

TEST_CASE("precomputed support coefficients match recomputation from scratch") {
  Rng rng(22);
  PlantedProblem planted = testing::make_planted_problem(rng, {});
  CsspProblem problem = build_problem(planted.model, planted.space, planted.query);
  const SvrModel& m = planted.model;
  REQUIRE(problem.support_coefficients().size() == m.support_points.size());
  for (std::size_t i = 0; i < m.support_points.size(); ++i) {
    double sq = 0.0;
    for (std::size_t j = 0; j < m.feature_dim; ++j) {
      double d = m.support_points[i][j] - planted.query[j];
      sq += d * d;
    }
    double expected = m.dual_weights[i] * std::exp(-m.hyper.kernel.gamma * sq);
    double got = problem.support_coefficients()[i];
    CHECK(std::abs(got - expected) <= 1e-12 * std::max(1.0, std::abs(expected)));
  }
}

TEST_CASE("objective is invariant to support point order and merges duplicates") {
  Rng rng(23);
  PlantedProblem planted = testing::make_planted_problem(rng, {});
  CsspProblem original = build_problem(planted.model, planted.space, planted.query);

  SvrModel shuffled = planted.model;
  std::vector<std::size_t> perm(shuffled.support_points.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  rng.shuffle(perm);
  SvrModel reordered = shuffled;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    reordered.support_points[i] = planted.model.support_points[perm[i]];
    reordered.dual_weights[i] = planted.model.dual_weights[perm[i]];
  }
  CsspProblem permuted = build_problem(reordered, planted.space, planted.query);
  for (int k = 0; k < 20; ++k) {
    Configuration c = random_feasible(rng, planted.space);
    CHECK(std::abs(objective(original, c) - objective(permuted, c)) <= 1e-12);
  }
  // identical config bits fold into single terms
  CHECK(original.terms().size() <= original.support_coefficients().size());
}

TEST_CASE("objective gives bias when every coefficient is zero") {
  ConfigurationSpace space({{"A", {"a0", "a1"}}, {"B", {"b0", "b1"}}}, {});
  SvrModel m;
  m.hyper.kernel.gamma = 0.5;
  m.feature_dim = 1;
  m.config_columns = space.bit_names();
  m.bias = 0.125;
  CsspProblem p = build_problem(m, space, {0.0});
  for (const Configuration& c : enumerate_all(space)) CHECK(objective(p, c) == 0.125);
}

TEST_CASE("large gamma isolates the exactly-matching support configuration") {
  ConfigurationSpace space({{"A", {"a0", "a1"}}, {"B", {"b0", "b1"}}}, {});
  SvrModel m;
  m.hyper.kernel.gamma = 1e3;
  m.feature_dim = 1;
  m.config_columns = space.bit_names();
  m.bias = 0.0;
  Configuration target = encode(space, {{"A", "a1"}, {"B", "b0"}});
  m.support_points.push_back(concat({0.0}, target.encoding));
  m.dual_weights = {0.42};
  Configuration other = encode(space, {{"A", "a0"}, {"B", "b1"}});
  m.support_points.push_back(concat({0.0}, other.encoding));
  m.dual_weights.push_back(-0.3);
  CsspProblem p = build_problem(m, space, {0.0});
  CHECK(objective(p, target) == doctest::Approx(0.42).epsilon(1e-10));
}

TEST_CASE("objective rejects infeasible configurations") {
  LinearConstraint no_a1{{{"A", "a1", 1.0}}, Relation::le, 0.0};
  ConfigurationSpace space({{"A", {"a0", "a1"}}}, {no_a1});
  SvrModel m;
  m.hyper.kernel.gamma = 1.0;
  m.feature_dim = 0;
  m.config_columns = space.bit_names();
  CsspProblem p = build_problem(m, space, {});
  Configuration bad;
  bad.encoding = {0, 1};
  bad.assignment = {{"A", "a1"}};
  CHECK_THROWS_AS(objective(p, bad), Error);
}

TEST_CASE("solve_enumerate returns the exact argmin with lexicographic ties") {
  SUBCASE("single feasible configuration") {
    LinearConstraint pin_a{{{"A", "a1", 1.0}}, Relation::ge, 1.0};
    LinearConstraint pin_b{{{"B", "b0", 1.0}}, Relation::ge, 1.0};
    ConfigurationSpace space({{"A", {"a0", "a1"}}, {"B", {"b0", "b1"}}}, {pin_a, pin_b});
    SvrModel m;
    m.hyper.kernel.gamma = 1.0;
    m.feature_dim = 0;
    m.config_columns = space.bit_names();
    CsspProblem p = build_problem(m, space, {});
    CsspSolution sol = solve_enumerate(p);
    CHECK(sol.config.assignment.at("A") == "a1");
    CHECK(sol.config.assignment.at("B") == "b0");
    CHECK(sol.status == SolveStatus::global_optimal);
  }

  SUBCASE("constant objective picks the lexicographically smallest encoding") {
    ConfigurationSpace space({{"A", {"a0", "a1"}}, {"B", {"b0", "b1", "b2"}}}, {});
    SvrModel m;
    m.hyper.kernel.gamma = 1.0;
    m.feature_dim = 0;
    m.config_columns = space.bit_names();
    m.bias = 1.0;
    CsspProblem p = build_problem(m, space, {});
    CsspSolution sol = solve_enumerate(p);
    // every objective ties, so the winner has the lex-smallest bits: each
    // block's one-hot at its last position
    CHECK(sol.config.encoding == std::vector<std::uint8_t>{0, 1, 0, 0, 1});
  }

  SUBCASE("budget and empty spaces raise") {
    ConfigurationSpace space({{"A", {"a0", "a1"}}, {"B", {"b0", "b1", "b2"}}}, {});
    SvrModel m;
    m.hyper.kernel.gamma = 1.0;
    m.feature_dim = 0;
    m.config_columns = space.bit_names();
    CsspProblem p = build_problem(m, space, {});
    CHECK_THROWS_AS(solve_enumerate(p, 3), Error);

    LinearConstraint c1{{{"A", "a0", 1.0}}, Relation::ge, 1.0};
    LinearConstraint c2{{{"A", "a1", 1.0}}, Relation::ge, 1.0};
    ConfigurationSpace empty({{"A", {"a0", "a1"}}}, {c1, c2});
    SvrModel m2 = m;
    m2.config_columns = empty.bit_names();
    CsspProblem p2 = build_problem(m2, empty, {});
    CHECK_THROWS_AS(solve_enumerate(p2), Error);
  }
}

TEST_CASE("branch-and-bound matches enumeration on random problems") {
  Rng rng(24);
  PlantedSpec spec;
  spec.max_constraints = 3;
  spec.min_configs = 24;
  spec.max_configs = 1024;
  for (int it = 0; it < 25; ++it) {
    PlantedProblem planted = testing::make_planted_problem(rng, spec);
    CsspProblem problem = build_problem(planted.model, planted.space, planted.query);
    CsspSolution exact = solve_enumerate(problem);
    CsspSolution bnb = solve_bnb(problem, 60.0);
    CHECK(bnb.status == SolveStatus::global_optimal);
    CHECK(std::abs(bnb.objective - exact.objective) <= 1e-9);
    CHECK(is_feasible_encoding(planted.space, bnb.config.encoding));
  }
}

TEST_CASE("node bounds under-estimate every subtree minimum") {
  Rng rng(25);
  PlantedSpec spec;
  spec.max_constraints = 0;
  spec.min_configs = 24;
  spec.max_configs = 512;
  for (int it = 0; it < 8; ++it) {
    PlantedProblem planted = testing::make_planted_problem(rng, spec);
    CsspProblem problem = build_problem(planted.model, planted.space, planted.query);
    const auto& params = planted.space.parameters();
    for (int node = 0; node < 20; ++node) {
      // random partial fixing: a prefix of blocks in declaration order
      std::size_t depth = rng.next_index(params.size() + 1);
      std::vector<std::size_t> fixed(params.size(), SIZE_MAX);
      for (std::size_t b = 0; b < depth; ++b) fixed[b] = rng.next_index(params[b].values.size());
      double bound = node_lower_bound(problem, fixed);
      double subtree_min = 1e300;
      enumerate(planted.space,
                [&](const std::vector<std::size_t>& idx, const std::vector<std::uint8_t>& enc) {
                  for (std::size_t b = 0; b < depth; ++b)
                    if (idx[b] != fixed[b]) return true;
                  subtree_min = std::min(subtree_min, problem.objective_of_encoding(enc));
                  return true;
                });
      if (subtree_min < 1e300) CHECK(bound <= subtree_min + 1e-9);
    }
  }
}

TEST_CASE("branch-and-bound with a zero time limit returns its first feasible leaf") {
  Rng rng(26);
  PlantedProblem planted = testing::make_planted_problem(rng, {});
  CsspProblem problem = build_problem(planted.model, planted.space, planted.query);
  CsspSolution sol = solve_bnb(problem, 0.0);
  CHECK(sol.status == SolveStatus::time_limit);
  CHECK(is_feasible_encoding(planted.space, sol.config.encoding));
}

TEST_CASE("single-block spaces solve exactly at the root") {
  ConfigurationSpace space({{"A", {"a0", "a1", "a2", "a3"}}}, {});
  SvrModel m;
  m.hyper.kernel.gamma = 0.5;
  m.feature_dim = 0;
  m.config_columns = space.bit_names();
  m.support_points = {{0.0, 0.0, 1.0, 0.0}};
  m.dual_weights = {-1.0};
  CsspProblem p = build_problem(m, space, {});
  CsspSolution bnb = solve_bnb(p, 60.0);
  CsspSolution exact = solve_enumerate(p);
  CHECK(bnb.objective == exact.objective);
  CHECK(bnb.config.assignment.at("A") == "a2");
}

TEST_CASE("local search never beats enumeration and hits on single-parameter spaces") {
  Rng rng(27);
  SUBCASE("single parameter: the neighborhood covers the whole space") {
    ConfigurationSpace space({{"A", {"a0", "a1", "a2"}}}, {});
    SvrModel m;
    m.hyper.kernel.gamma = 0.5;
    m.feature_dim = 0;
    m.config_columns = space.bit_names();
    m.support_points = {{0.0, 1.0, 0.0}};
    m.dual_weights = {-2.0};
    CsspProblem p = build_problem(m, space, {});
    CsspSolution local = solve_local(p, 1, 5, 60.0);
    CsspSolution exact = solve_enumerate(p);
    CHECK(local.objective == exact.objective);
  }

  SUBCASE("random problems: local >= global, equality iff hit") {
    PlantedSpec spec;
    spec.max_constraints = 2;
    for (int it = 0; it < 15; ++it) {
      PlantedProblem planted = testing::make_planted_problem(rng, spec);
      CsspProblem problem = build_problem(planted.model, planted.space, planted.query);
      CsspSolution exact = solve_enumerate(problem);
      CsspSolution local = solve_local(problem, 5, 17 + it, 60.0);
      CHECK(local.objective >= exact.objective - 1e-12);
      CHECK(is_feasible_encoding(planted.space, local.config.encoding));
      CHECK(local.status == SolveStatus::local);
    }
  }

  SUBCASE("constant objective returns the first feasible start with zero moves") {
    ConfigurationSpace space({{"A", {"a0", "a1"}}, {"B", {"b0", "b1"}}}, {});
    SvrModel m;
    m.hyper.kernel.gamma = 1.0;
    m.feature_dim = 0;
    m.config_columns = space.bit_names();
    m.bias = 3.0;
    CsspProblem p = build_problem(m, space, {});
    CsspSolution sol = solve_local(p, 1, 9, 60.0);
    CHECK(sol.nodes_or_moves == 0);
    CHECK(sol.objective == 3.0);
  }

  SUBCASE("infeasible spaces raise NoFeasibleStart") {
    LinearConstraint c1{{{"A", "a0", 1.0}}, Relation::ge, 1.0};
    LinearConstraint c2{{{"A", "a1", 1.0}}, Relation::ge, 1.0};
    ConfigurationSpace empty({{"A", {"a0", "a1"}}}, {c1, c2});
    SvrModel m;
    m.hyper.kernel.gamma = 1.0;
    m.feature_dim = 0;
    m.config_columns = empty.bit_names();
    CsspProblem p = build_problem(m, empty, {});
    try {
      solve_local(p, 3, 1, 60.0);
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::no_feasible_start);
    }
  }
}

TEST_CASE("local search is reproducible for a fixed seed") {
  Rng rng(28);
  PlantedProblem planted = testing::make_planted_problem(rng, {});
  CsspProblem problem = build_problem(planted.model, planted.space, planted.query);
  CsspSolution a = solve_local(problem, 4, 1234, 60.0);
  CsspSolution b = solve_local(problem, 4, 1234, 60.0);
  CHECK(a.objective == b.objective);
  CHECK(a.config.encoding == b.config.encoding);
  CHECK(a.nodes_or_moves == b.nodes_or_moves);
}

TEST_CASE("a model that kept only some config columns still optimizes over the full space") {
  ConfigurationSpace space({{"A", {"a0", "a1"}}, {"B", {"b0", "b1"}}}, {});
  SvrModel m;
  m.hyper.kernel.gamma = 0.9;
  m.feature_dim = 0;
  m.config_columns = {"A=a1"};  // scenario kept a single bit
  m.support_points = {{1.0}};   // config part only
  m.dual_weights = {-1.0};
  CsspProblem p = build_problem(m, space, {});
  CsspSolution sol = solve_enumerate(p);
  // optimum wants A=a1; B is tie-broken to its last value (lex-smallest bits)
  CHECK(sol.config.assignment.at("A") == "a1");
  CHECK(sol.config.assignment.at("B") == "b1");
  CsspSolution bnb = solve_bnb(p, 60.0);
  CHECK(bnb.objective == sol.objective);
  CHECK(bnb.config.encoding == sol.config.encoding);
}

TEST_CASE("solution text lists status, objective and the assignment") {
  ConfigurationSpace space({{"A", {"a0", "a1"}}}, {});
  CsspSolution sol;
  sol.config = encode(space, {{"A", "a1"}});
  sol.objective = 0.5;
  sol.status = SolveStatus::global_optimal;
  std::string text = solution_to_text(space, sol);
  CHECK(text.find("status=global_optimal") != std::string::npos);
  CHECK(text.find("A=a1") != std::string::npos);
  CHECK(text.find("encoding=0,1") != std::string::npos);
}
