// Acceptance suite: one line per criterion, PASS or FAIL, nonzero exit on
// any failure. Run it via ctest (-R acceptance) or directly.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "adapter.hpp"
#include "configspace.hpp"
#include "cssp.hpp"
#include "dataset.hpp"
#include "evaluate.hpp"
#include "features.hpp"
#include "modelsel.hpp"
#include "pipeline.hpp"
#include "rng.hpp"
#include "support/oracles.hpp"
#include "svr.hpp"
#include "synth.hpp"
#include "textio.hpp"

using namespace perfmap;
using perfmap::testing::PlantedProblem;
using perfmap::testing::PlantedSpec;

namespace {

namespace fs = std::filesystem;

int g_failures = 0;

void report(int number, const std::string& name, bool pass, const std::string& detail) {
  std::printf("%s  criterion %d  %-28s %s\n", pass ? "PASS" : "FAIL", number, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

void run(int number, const std::string& name, const std::function<std::pair<bool, std::string>()>& fn) {
  try {
    auto [pass, detail] = fn();
    report(number, name, pass, detail);
  } catch (const std::exception& e) {
    report(number, name, false, std::string("exception: ") + e.what());
  }
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// The 50 random problems shared by criteria 1 and 7.
std::vector<PlantedProblem>& shared_problems() {
  static std::vector<PlantedProblem> problems = [] {
    Rng rng(20260809);
    PlantedSpec spec;
    spec.min_support = 20;
    spec.max_support = 500;
    spec.min_configs = 24;
    spec.max_configs = 4096;
    spec.max_constraints = 3;
    std::vector<PlantedProblem> out;
    for (int i = 0; i < 50; ++i) out.push_back(testing::make_planted_problem(rng, spec));
    return out;
  }();
  return problems;
}

std::pair<bool, std::string> cssp_exactness() {
  auto t0 = std::chrono::steady_clock::now();
  int agree = 0, exhausted = 0;
  double worst = 0.0;
  for (PlantedProblem& planted : shared_problems()) {
    CsspProblem problem = build_problem(planted.model, planted.space, planted.query);
    CsspSolution exact = solve_enumerate(problem);
    CsspSolution bnb = solve_bnb(problem, 60.0);
    double gap = std::abs(bnb.objective - exact.objective);
    worst = std::max(worst, gap);
    if (gap <= 1e-9) ++agree;
    if (bnb.status == SolveStatus::global_optimal) ++exhausted;
  }
  double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  bool pass = agree == 50 && exhausted == 50;
  return {pass, std::to_string(agree) + "/50 objectives within 1e-9, " + std::to_string(exhausted) +
                    "/50 exhausted trees, worst gap " + fmt(worst) + ", " + fmt(elapsed) + "s"};
}

std::pair<bool, std::string> objective_consistency() {
  Rng rng(7321);
  PlantedSpec spec;
  spec.max_constraints = 2;
  double worst = 0.0;
  int checked = 0;
  while (checked < 100) {
    PlantedProblem planted = testing::make_planted_problem(rng, spec);
    CsspProblem problem = build_problem(planted.model, planted.space, planted.query);
    std::vector<Configuration> all = enumerate_all(planted.space);
    if (all.empty()) continue;
    for (int k = 0; k < 10 && checked < 100; ++k, ++checked) {
      const Configuration& c = all[rng.next_index(all.size())];
      double factored = objective(problem, c);
      std::vector<double> concat = planted.query;
      for (std::uint8_t b : c.encoding) concat.push_back(double(b));
      double direct = predict(planted.model, concat);
      double rel = std::abs(factored - direct) / std::max({1.0, std::abs(factored), std::abs(direct)});
      worst = std::max(worst, rel);
    }
  }
  return {worst <= 1e-9, "100 pairs, worst relative difference " + fmt(worst)};
}

std::pair<bool, std::string> svr_optimality() {
  Rng rng(5150);
  double worst_gap = 0.0, worst_kkt = -1e300;
  bool pass = true;
  for (int it = 0; it < 20; ++it) {
    std::size_t n = 10 + rng.next_index(41);  // 10..50 points
    std::size_t d = 2 + rng.next_index(3);
    std::vector<std::vector<double>> pts(n, std::vector<double>(d));
    for (auto& p : pts)
      for (double& v : p) v = rng.next_normal();
    std::vector<double> labels(n);
    for (double& y : labels) y = rng.uniform(0.0, 1.0);
    SvrHyper hyper{rng.uniform(0.5, 8.0), rng.uniform(0.005, 0.05), {rng.uniform(0.2, 1.5)}};

    TrainResult tr = train(pts, labels, hyper, {1e-8, 400000, 64});
    testing::QpOracleResult ref = testing::qp_reference_solve(pts, labels, hyper);
    double gap = std::abs(tr.dual_objective - ref.dual_objective);
    worst_gap = std::max(worst_gap, gap);
    if (gap > 1e-6) pass = false;

    // KKT: the admissible-bias intervals must intersect within 1e-3
    const double C = hyper.C, eps = hyper.epsilon, tau = 1e-10 * std::max(1.0, C);
    double lo = -1e300, hi = 1e300;
    for (std::size_t i = 0; i < n; ++i) {
      double g = -labels[i];
      for (std::size_t j = 0; j < n; ++j)
        g += tr.beta[j] * kernel_eval(hyper.kernel, pts[i], pts[j]);
      double b = tr.beta[i];
      if (b >= C - tau)
        hi = std::min(hi, -eps - g);
      else if (b > tau)
        lo = std::max(lo, -eps - g), hi = std::min(hi, -eps - g);
      else if (b >= -tau)
        lo = std::max(lo, -eps - g), hi = std::min(hi, eps - g);
      else if (b > -C + tau)
        lo = std::max(lo, eps - g), hi = std::min(hi, eps - g);
      else
        lo = std::max(lo, eps - g);
    }
    worst_kkt = std::max(worst_kkt, lo - hi);
    if (lo - hi > 1e-3) pass = false;
    double sum = 0.0;
    for (double b : tr.beta) {
      sum += b;
      if (std::abs(b) > C + 1e-12) pass = false;
    }
    if (std::abs(sum) > 1e-8) pass = false;
  }
  return {pass, "20 problems, worst |dual gap| " + fmt(worst_gap) + ", worst KKT violation " +
                    fmt(worst_kkt)};
}

std::pair<bool, std::string> metric_fidelity() {
  bool pass = true;
  double case1 = cmae({0.3}, {0.1}, 0.2);
  if (std::abs(case1 - 0.3099672) > 1e-6) pass = false;
  double case2 = cmae({0.7}, {0.9}, 0.2);
  if (std::abs(case2 - 0.3099672) > 1e-6) pass = false;
  Rng rng(99);
  for (int it = 0; it < 200; ++it) {
    double p = rng.next_double();
    if (cmae({p}, {p}, 0.2) != 0.0) pass = false;
  }
  double mid = cmae({0.6}, {0.5}, 0.2);
  if (std::abs(mid - (-0.1)) > 1e-12) pass = false;
  return {pass, "case1 " + fmt(case1) + ", case2 " + fmt(case2) + ", signed midband " + fmt(mid)};
}

std::pair<bool, std::string> preprocessing_fidelity() {
  auto [norm, params] = normalize_performance({0.5, 3.0, 2e5, 1e9}, 1e5);
  bool pass = std::abs(norm[0] - 0.0) <= 1e-9 && std::abs(norm[1] - 2.5 / 102.5) <= 1e-9 &&
              std::abs(norm[2] - 1.0) <= 1e-9 && std::abs(norm[3] - 1.0) <= 1e-9;
  Rng rng(4242);
  int order_ok = 0;
  for (int it = 0; it < 1000; ++it) {
    std::size_t n = 2 + rng.next_index(30);
    std::vector<double> raw(n);
    for (double& v : raw) v = rng.uniform(0.0, 2e5);
    raw[rng.next_index(n)] = rng.uniform(0.0, 1e5);
    auto [nv, np] = normalize_performance(raw, 1e5);
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i)
      for (std::size_t j = 0; j < n && ok; ++j)
        if (raw[i] < raw[j] && raw[j] <= 1e5 && nv[i] > nv[j]) ok = false;
    if (ok) ++order_ok;
  }
  pass = pass && order_ok == 1000;
  return {pass, "clip example normalized to (0, " + fmt(norm[1]) + ", 1, 1); order preserved on " +
                    std::to_string(order_ok) + "/1000 random vectors"};
}

std::pair<bool, std::string> closed_loop_recovery() {
  auto t0 = std::chrono::steady_clock::now();
  fs::path dir = fs::temp_directory_path() /
                 ("perfmap_accept_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto file = [&](const std::string& name) { return (dir / name).string(); };

  RunConfig c;
  c.synth.out_dir = file("bundle");
  c.synth.bundle.value_counts = {2, 3, 4, 4};  // 96 configurations
  c.synth.bundle.n_instances = 60;             // 40 IS + 20 OS
  c.synth.bundle.feature_dim = 4;
  c.synth.bundle.target.kind = "rbf";
  c.synth.bundle.target.centers = 10;
  c.synth.bundle.target.gamma = 0.6;
  c.synth.bundle.target.noise = 0.0;
  c.synth.bundle.target.seed = 20260809;
  cmd_synth(c);

  c.space_file = file("bundle/space.json");
  c.instances_file = file("bundle/instances.json");
  c.dataset_file = file("dataset.csv");
  c.prepared_file = file("prepared.csv");
  c.pipeline_file = file("pipeline.json");
  c.model_file = file("model.json");
  c.report_dir = file("reports");
  c.adapter.kind = "synthetic";
  c.adapter.target_file = file("bundle/target.json");
  c.seeds = {1};
  c.threshold = 1e5;
  c.os_fraction = 20.0 / 60.0;
  c.split_seed = 17;
  c.jobs = 2;
  c.cv.outer_folds = 2;
  c.cv.inner_folds = 2;
  c.cv.draws = 6;
  c.cv.metric = Metric::mae;
  c.cv.seed = 7;
  c.search.c_lo = 1.0;
  c.search.c_hi = 300.0;
  c.search.gamma_lo = 0.02;
  c.search.gamma_hi = 2.0;
  c.search.eps_lo = 1e-4;
  c.search.eps_hi = 5e-3;
  c.svr.max_passes = 300000;
  c.solver.kind = "enumerate";

  cmd_collect(c);
  cmd_prepare(c);
  cmd_train(c);

  // held-out instances = the OS side of the split prepare used
  Dataset ds = Dataset::load(c.dataset_file);
  split_instances(ds, c.os_fraction, c.split_seed);
  InstanceSet all = InstanceSet::load(c.instances_file);
  InstanceSet held_out;
  held_out.schema = all.schema;
  for (const InstanceFeatures& inst : all.instances)
    if (ds.split.at(inst.instance_id) == Split::out_sample) held_out.instances.push_back(inst);
  std::string os_file = file("held_out.json");
  held_out.save(os_file);

  std::string text;
  cmd_configure(c, os_file, &text);

  // recommended encoding per instance, from the solution text
  std::map<std::string, std::vector<std::uint8_t>> recommended;
  {
    std::istringstream in(text);
    std::string line, current;
    while (std::getline(in, line)) {
      if (line.rfind("instance=", 0) == 0) current = line.substr(9);
      if (line.rfind("encoding=", 0) == 0) {
        std::vector<std::uint8_t> enc;
        for (char ch : line.substr(9))
          if (ch == '0' || ch == '1') enc.push_back(ch == '1' ? 1 : 0);
        recommended[current] = enc;
      }
    }
  }

  SyntheticTarget target = SyntheticTarget::load(c.adapter.target_file);
  ConfigurationSpace space = ConfigurationSpace::load(c.space_file);
  std::vector<Configuration> configs = enumerate_all(space);
  const std::size_t top_k = (configs.size() + 9) / 10;  // best 10%
  int in_top = 0;
  for (const InstanceFeatures& inst : held_out.instances) {
    const auto& enc = recommended.at(inst.instance_id);
    double rec_perf = target.true_performance(inst.values, enc);
    std::size_t strictly_better = 0;
    for (const Configuration& cfg : configs)
      if (target.true_performance(inst.values, cfg.encoding) < rec_perf) ++strictly_better;
    if (strictly_better + 1 <= top_k) ++in_top;
  }
  double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  fs::remove_all(dir);
  bool pass = in_top >= 18;  // >= 90% of 20
  return {pass, std::to_string(in_top) + "/20 held-out instances in the best 10% (need 18), " +
                    fmt(elapsed) + "s"};
}

std::pair<bool, std::string> local_search_quality() {
  bool pass = true;
  std::vector<std::pair<CsspSolution, CsspSolution>> pairs;
  for (PlantedProblem& planted : shared_problems()) {
    CsspProblem problem = build_problem(planted.model, planted.space, planted.query);
    CsspSolution exact = solve_enumerate(problem);
    CsspSolution local = solve_local(problem, 5, 4711, 60.0);
    if (local.objective < exact.objective - 1e-12) pass = false;  // may never beat the optimum
    pairs.emplace_back(local, exact);
  }
  CsspQuality q = cssp_quality(pairs);
  if (!(q.avg_loc_mins >= 0.0)) pass = false;
  if ((q.pct_glob_mins == 100.0) != (q.avg_loc_mins == 0.0)) pass = false;  // hit <=> zero gap
  return {pass, "hit rate " + fmt(q.pct_glob_mins) +
                    "% (reference heuristic context: 83.69-93.25%), mean gap " + fmt(q.avg_loc_mins) +
                    ", mean solve time " + fmt(q.avg_time_s) + "s"};
}

std::pair<bool, std::string> determinism_roundtrips() {
  bool pass = true;
  Rng rng(31337);

  // model file round-trip: bit-identical predictions on 100 inputs
  std::vector<std::vector<double>> pts(25, std::vector<double>(4));
  for (auto& p : pts)
    for (double& v : p) v = rng.next_normal();
  std::vector<double> labels(25);
  for (double& y : labels) y = rng.uniform(0.0, 1.0);
  TrainResult tr = train(pts, labels, {2.0, 0.02, {0.5}});
  SvrModel back = SvrModel::from_json_text(tr.model.to_json_text());
  for (int it = 0; it < 100; ++it) {
    std::vector<double> x(4);
    for (double& v : x) v = rng.next_normal();
    if (predict(tr.model, x) != predict(back, x)) pass = false;
  }

  // encode/decode round-trip on 1000 random assignments
  PlantedSpec spec;
  PlantedProblem planted = testing::make_planted_problem(rng, spec);
  const ConfigurationSpace& space = planted.space;
  for (int it = 0; it < 1000; ++it) {
    std::map<std::string, std::string> assignment;
    for (const Parameter& p : space.parameters())
      assignment[p.name] = p.values[rng.next_index(p.values.size())];
    if (decode(space, encode(space, assignment).encoding) != assignment) pass = false;
  }

  // split and folds reproducible
  Dataset ds;
  ds.feature_names = {"f"};
  std::vector<std::string> row_instances;
  for (int i = 0; i < 40; ++i) {
    std::string id = "inst" + std::to_string(i);
    ds.features[id] = {id, {double(i)}, std::nullopt};
    PerformanceRecord r;
    r.instance_id = id;
    r.seed_values = {1.0};
    ds.records.push_back(r);
    for (int k = 0; k < 3; ++k) row_instances.push_back(id);
  }
  Dataset ds2 = ds;
  split_instances(ds, 0.25, 12345);
  split_instances(ds2, 0.25, 12345);
  if (ds.split != ds2.split) pass = false;
  if (instance_folds(row_instances, 5, 777) != instance_folds(row_instances, 5, 777)) pass = false;

  return {pass, "model file, encode/decode, splits and folds all reproduce"};
}

std::pair<bool, std::string> evaluation_arithmetic() {
  WinStats s = win_stats({0.1, 0.5, 0.5}, {0.2, 0.5, 0.4}, {0.1, 0.5, 0.4}, 16);
  bool pass = std::abs(s.pct_w - 33.33) <= 1e-2 && std::abs(s.pct_wd - 66.67) <= 1e-2 &&
              std::abs(s.pct_w_nond - 50.0) <= 1e-2;

  CsspSolution hit_h, hit_g, miss_h, miss_g;
  hit_h.objective = hit_g.objective = 0.5;
  miss_h.objective = 0.54;
  miss_g.objective = 0.50;
  CsspQuality q = cssp_quality({{hit_h, hit_g}, {miss_h, miss_g}});
  pass = pass && q.pct_glob_mins == 50.0 && std::abs(q.avg_loc_mins - 0.02) <= 1e-15;
  return {pass, "win_stats (" + fmt(s.pct_w) + ", " + fmt(s.pct_wd) + ", " + fmt(s.pct_w_nond) +
                    "), cssp_quality (" + fmt(q.pct_glob_mins) + ", " + fmt(q.avg_loc_mins) + ")"};
}

}  // namespace

int main() {
  run(1, "CSSP exactness", cssp_exactness);
  run(2, "objective consistency", objective_consistency);
  run(3, "SVR optimality", svr_optimality);
  run(4, "metric fidelity", metric_fidelity);
  run(5, "preprocessing fidelity", preprocessing_fidelity);
  run(6, "closed-loop recovery", closed_loop_recovery);
  run(7, "local-search quality", local_search_quality);
  run(8, "determinism & round-trips", determinism_roundtrips);
  run(9, "evaluation arithmetic", evaluation_arithmetic);
  if (g_failures) std::printf("%d criterion(s) FAILED\n", g_failures);
  else std::printf("all 9 criteria passed\n");
  return g_failures == 0 ? 0 : 1;
}
