#include "pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include <json.hpp>

#include "adapter.hpp"
#include "cssp.hpp"
#include "error.hpp"
#include "evaluate.hpp"
#include "rng.hpp"
#include "textio.hpp"

namespace perfmap {

namespace fs = std::filesystem;

namespace {

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) fail(Errc::bad_config, what + " path is not set in the run config");
  if (!fs::exists(path)) fail(Errc::io_error, what + " not found: " + path);
}

void ensure_parent_dir(const std::string& path) {
  fs::path parent = fs::path(path).parent_path();
  if (parent.empty()) return;
  std::error_code ec;
  fs::create_directories(parent, ec);
  if (ec) fail(Errc::io_error, "cannot create directory " + parent.string() + ": " + ec.message());
}

std::unique_ptr<PerformanceSource> make_source(const RunConfig& config) {
  if (config.adapter.kind == "synthetic") {
    require_file(config.adapter.target_file, "synthetic target file");
    return std::make_unique<SyntheticTarget>(SyntheticTarget::load(config.adapter.target_file));
  }
  if (config.adapter.command_template.empty())
    fail(Errc::bad_config, "adapter.template is empty (or set PERFMAP_ADAPTER_CMD)");
  return std::make_unique<SubprocessAdapter>(config.adapter.command_template, config.adapter.grace_s);
}

std::set<int> load_holidays(const std::string& path) {
  std::set<int> out;
  if (path.empty()) return out;
  require_file(path, "holiday file");
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    out.insert(parse_date_ymd(line));
  }
  return out;
}

FeaturePipeline fit_pipeline(const RunConfig& config, const Dataset& ds) {
  FeaturePipeline::Config pc;
  pc.date_column = config.features.date_column;
  pc.holidays = load_holidays(config.features.holiday_file);
  pc.cyclical = config.features.cyclical;
  pc.stat_groups = config.features.stat_groups;
  pc.standardize = config.features.standardize;
  FeaturePipeline pipeline(pc);
  // fit on the distinct IS instances
  std::vector<const InstanceFeatures*> fit_rows;
  for (const auto& [id, feat] : ds.features) {
    auto it = ds.split.find(id);
    if (it != ds.split.end() && it->second == Split::in_sample) fit_rows.push_back(&feat);
  }
  if (fit_rows.empty()) fail(Errc::empty_input, "no in-sample instances to fit the feature pipeline on");
  pipeline.fit(ds.feature_names, fit_rows);
  return pipeline;
}

Dataset transform_features(const Dataset& ds, const FeaturePipeline& pipeline) {
  Dataset out = ds;
  out.feature_names = pipeline.output_schema();
  for (auto& [id, feat] : out.features) feat.values = pipeline.transform(ds.features_of(id).values);
  return out;
}

/// Query vector for the model: pipeline output projected onto the model's
/// feature columns (the scenario may have dropped some).
std::vector<double> project_query(const FeaturePipeline& pipeline, const SvrModel& model,
                                  const std::vector<double>& raw) {
  if (model.feature_dim == 0) return {};
  std::vector<double> transformed = pipeline.transform(raw);
  if (model.feature_columns.empty()) {
    if (transformed.size() != model.feature_dim)
      fail(Errc::dimension_mismatch, "pipeline emits " + std::to_string(transformed.size()) +
                                         " features, model expects " + std::to_string(model.feature_dim));
    return transformed;
  }
  std::vector<double> out;
  out.reserve(model.feature_columns.size());
  const auto& schema = pipeline.output_schema();
  for (const std::string& name : model.feature_columns) {
    auto it = std::find(schema.begin(), schema.end(), name);
    if (it == schema.end())
      fail(Errc::unknown_column, "model feature column '" + name + "' is not produced by the pipeline");
    out.push_back(transformed[std::size_t(it - schema.begin())]);
  }
  return out;
}

CsspSolution run_solver(const CsspProblem& problem, const RunConfig& config) {
  if (config.solver.kind == "enumerate") return solve_enumerate(problem, config.solver.enum_budget);
  if (config.solver.kind == "bnb") return solve_bnb(problem, config.time_limit_s);
  return solve_local(problem, config.solver.restarts, config.solver.seed, config.time_limit_s);
}

// A model trained against a different pipeline fit would silently predict
// garbage; the standardization constants recorded in the model file catch
// the mismatch.
void check_model_pipeline_consistency(const SvrModel& model, const FeaturePipeline& pipeline) {
  if (model.scaler_means.empty() || model.feature_columns.empty()) return;
  const auto& schema = pipeline.output_schema();
  for (std::size_t i = 0; i < model.feature_columns.size(); ++i) {
    auto it = std::find(schema.begin(), schema.end(), model.feature_columns[i]);
    if (it == schema.end()) continue;  // project_query reports this case
    std::size_t j = std::size_t(it - schema.begin());
    if (std::abs(pipeline.means()[j] - model.scaler_means[i]) > 1e-12 ||
        std::abs(pipeline.scales()[j] - model.scaler_scales[i]) > 1e-12)
      fail(Errc::bad_config, "model and pipeline files disagree on the scaling of column '" +
                                 model.feature_columns[i] + "'; they come from different runs");
  }
}

}  // namespace

PipelineOutcome cmd_collect(const RunConfig& config) {
  require_file(config.space_file, "space file");
  require_file(config.instances_file, "instances file");
  ConfigurationSpace space = ConfigurationSpace::load(config.space_file);
  InstanceSet instances = InstanceSet::load(config.instances_file);
  std::unique_ptr<PerformanceSource> source = make_source(config);

  CollectOptions opt;
  opt.seeds = config.seeds;
  opt.time_limit_s = config.time_limit_s;
  opt.threshold = config.threshold;
  opt.gap_eps = config.gap_eps;
  opt.jobs = config.jobs;
  opt.enum_budget = config.solver.enum_budget;
  ensure_parent_dir(config.dataset_file);
  opt.journal_path = config.journal_path();

  CollectStats stats;
  Dataset ds = collect(*source, instances, space, opt, &stats);
  ds.save(config.dataset_file);

  PipelineOutcome out;
  out.adapter_failures = stats.failures;
  std::ostringstream msg;
  msg << "collected " << ds.records.size() << " records (" << stats.runs << " runs, " << stats.resumed
      << " from journal, " << stats.failures << " failures) -> " << config.dataset_file;
  out.summary = msg.str();
  return out;
}

PipelineOutcome cmd_prepare(const RunConfig& config) {
  require_file(config.dataset_file, "dataset file");
  Dataset ds = Dataset::load(config.dataset_file);

  split_instances(ds, config.os_fraction, config.split_seed);
  normalize_dataset(ds, config.threshold);

  FeaturePipeline pipeline = fit_pipeline(config, ds);
  Dataset engineered = transform_features(ds, pipeline);

  SelectionScenario scenario;
  if (!config.scenario_file.empty()) {
    require_file(config.scenario_file, "scenario file");
    scenario = SelectionScenario::load(config.scenario_file);
  } else if (config.features.selection.enabled) {
    Dataset is_rows = filter_split(engineered, Split::in_sample);
    scenario = select_by_correlation(is_rows, config.features.selection.max_features,
                                     config.features.selection.redundancy_cutoff);
  } else {
    scenario.name = "noFS";
    scenario.feature_columns = engineered.feature_names;
    scenario.config_columns = engineered.config_columns;
  }

  Dataset prepared = apply_scenario(engineered, scenario);
  prepared = subsample_rows(prepared, config.subsample_size, config.subsample_seed);

  ensure_parent_dir(config.prepared_file);
  prepared.save(config.prepared_file);
  ensure_parent_dir(config.pipeline_file);
  pipeline.save(config.pipeline_file);
  scenario.save(config.prepared_file + ".scenario.json");

  PipelineOutcome out;
  std::ostringstream msg;
  msg << "prepared " << prepared.records.size() << " rows (scenario " << scenario.name << ", "
      << scenario.feature_columns.size() << " feature cols, " << scenario.config_columns.size()
      << " config cols) -> " << config.prepared_file;
  out.summary = msg.str();
  return out;
}

PipelineOutcome cmd_train(const RunConfig& config) {
  require_file(config.prepared_file, "prepared dataset");
  require_file(config.pipeline_file, "pipeline file");
  Dataset ds = Dataset::load(config.prepared_file);
  FeaturePipeline pipeline = FeaturePipeline::load(config.pipeline_file);

  TrainingMatrix matrix = make_training_matrix(ds, Split::in_sample);
  if (matrix.points.empty()) fail(Errc::empty_input, "prepared dataset has no in-sample rows");

  CvPlan plan = config.cv;
  NestedCvResult ncv = nested_cv(matrix, config.search, plan, config.svr);
  SearchResult final_search = random_search(matrix, config.search, plan.inner_folds, plan.draws,
                                            plan.metric, seed_stream(plan.seed, 7771), plan.jobs,
                                            config.svr);
  TrainResult fit = fit_final(matrix, final_search.best, config.svr);

  // stamp the upstream standardization for self-containment checks
  const auto& schema = pipeline.output_schema();
  for (const std::string& name : matrix.feature_columns) {
    auto it = std::find(schema.begin(), schema.end(), name);
    if (it == schema.end())
      fail(Errc::unknown_column, "prepared column '" + name + "' is not produced by the pipeline");
    std::size_t j = std::size_t(it - schema.begin());
    fit.model.scaler_means.push_back(pipeline.means()[j]);
    fit.model.scaler_scales.push_back(pipeline.scales()[j]);
  }

  ensure_parent_dir(config.model_file);
  fit.model.save(config.model_file);
  ensure_parent_dir(config.cv_report_path());
  write_file(config.cv_report_path(), draw_records_to_csv(ncv.draws));

  nlohmann::json meta;
  meta["metric"] = metric_to_string(plan.metric);
  meta["error_estimate"] = format_double(ncv.error_estimate);
  meta["outer_scores"] = nlohmann::json::array();
  for (const FoldReport& f : ncv.folds)
    meta["outer_scores"].push_back({{"fold", f.fold},
                                    {"score", format_double(f.outer_score)},
                                    {"test_rows", f.test_rows},
                                    {"C", format_double(f.winner.C)},
                                    {"gamma", format_double(f.winner.kernel.gamma)},
                                    {"epsilon", format_double(f.winner.epsilon)}});
  meta["final"] = {{"C", format_double(final_search.best.C)},
                   {"gamma", format_double(final_search.best.kernel.gamma)},
                   {"epsilon", format_double(final_search.best.epsilon)},
                   {"inner_score", format_double(final_search.best_score)},
                   {"converged", fit.converged},
                   {"support_vectors", fit.model.support_points.size()},
                   {"dual_objective", format_double(fit.dual_objective)}};
  write_file(config.model_file + ".train.json", meta.dump(2) + "\n");

  PipelineOutcome out;
  out.solver_warning = !fit.converged;
  std::ostringstream msg;
  msg << "trained on " << matrix.points.size() << " rows; NCV " << metric_to_string(plan.metric)
      << " estimate " << format_double(ncv.error_estimate) << "; final C="
      << format_double(final_search.best.C) << " gamma=" << format_double(final_search.best.kernel.gamma)
      << " epsilon=" << format_double(final_search.best.epsilon) << "; "
      << fit.model.support_points.size() << " support vectors -> " << config.model_file;
  if (!fit.converged) msg << " (warning: iteration cap hit before KKT tolerance)";
  out.summary = msg.str();
  return out;
}

PipelineOutcome cmd_configure(const RunConfig& config, const std::string& instance_features_file,
                              std::string* solution_text) {
  require_file(config.model_file, "model file");
  require_file(config.pipeline_file, "pipeline file");
  require_file(config.space_file, "space file");
  require_file(instance_features_file, "instance features file");
  SvrModel model = SvrModel::load(config.model_file);
  FeaturePipeline pipeline = FeaturePipeline::load(config.pipeline_file);
  check_model_pipeline_consistency(model, pipeline);
  ConfigurationSpace space = ConfigurationSpace::load(config.space_file);
  InstanceSet instances = InstanceSet::load(instance_features_file);
  if (instances.instances.empty()) fail(Errc::empty_input, "instance features file lists no instances");

  std::ostringstream text;
  for (const InstanceFeatures& inst : instances.instances) {
    std::vector<double> query = project_query(pipeline, model, inst.values);
    CsspProblem problem = build_problem(model, space, query);
    CsspSolution sol = run_solver(problem, config);
    text << "instance=" << inst.instance_id << "\n" << solution_to_text(space, sol) << "\n";
  }
  if (!config.solution_file.empty()) {
    ensure_parent_dir(config.solution_file);
    write_file(config.solution_file, text.str());
  }
  if (solution_text) *solution_text = text.str();

  PipelineOutcome out;
  out.summary = "configured " + std::to_string(instances.instances.size()) + " instance(s) with solver " +
                config.solver.kind;
  return out;
}

PipelineOutcome cmd_evaluate(const RunConfig& config) {
  require_file(config.dataset_file, "dataset file");
  require_file(config.model_file, "model file");
  require_file(config.pipeline_file, "pipeline file");
  require_file(config.space_file, "space file");
  SvrModel model = SvrModel::load(config.model_file);
  FeaturePipeline pipeline = FeaturePipeline::load(config.pipeline_file);
  check_model_pipeline_consistency(model, pipeline);
  ConfigurationSpace space = ConfigurationSpace::load(config.space_file);
  Dataset ds = Dataset::load(config.dataset_file);

  // Re-derive the IS/OS partition when the dataset carries no tags; the seed
  // makes it identical to the one prepare used.
  if (ds.split.empty()) split_instances(ds, config.os_fraction, config.split_seed);

  std::string scenario_name = "noFS";
  if (!config.scenario_file.empty()) {
    scenario_name = SelectionScenario::load(config.scenario_file).name;
  } else if (fs::exists(config.prepared_file + ".scenario.json")) {
    scenario_name = SelectionScenario::load(config.prepared_file + ".scenario.json").name;
  }

  // per-instance lookup: encoding -> record
  std::map<std::string, std::map<std::vector<std::uint8_t>, const PerformanceRecord*>> by_instance;
  for (const PerformanceRecord& r : ds.records) by_instance[r.instance_id][r.encoding] = &r;
  Configuration default_config = encode(space, space.default_assignment());

  EvalReport report;
  for (Split which : {Split::in_sample, Split::out_sample}) {
    std::vector<std::pair<CsspSolution, CsspSolution>> pairs;
    std::vector<double> p_sol, p_default, p_best;
    std::vector<GapRecord> gaps_sol, gaps_default;
    for (const auto& [id, rows] : by_instance) {
      auto tag = ds.split.find(id);
      if (tag == ds.split.end() || tag->second != which) continue;
      std::vector<double> query = project_query(pipeline, model, ds.features_of(id).values);
      CsspProblem problem = build_problem(model, space, query);
      CsspSolution heur = run_solver(problem, config);
      CsspSolution glob = solve_enumerate(problem, config.solver.enum_budget);
      pairs.emplace_back(heur, glob);

      auto sol_row = rows.find(heur.config.encoding);
      auto def_row = rows.find(default_config.encoding);
      if (sol_row == rows.end() || def_row == rows.end())
        fail(Errc::unknown_column, "dataset is missing rows for instance '" + id +
                                       "'; evaluate needs the full enumeration collected");
      double best = sol_row->second->p_raw;
      for (const auto& [enc, rec] : rows) best = std::min(best, rec->p_raw);
      p_sol.push_back(sol_row->second->p_raw);
      p_default.push_back(def_row->second->p_raw);
      p_best.push_back(best);
      gaps_sol.push_back({sol_row->second->primal_gap, sol_row->second->dual_gap});
      gaps_default.push_back({def_row->second->primal_gap, def_row->second->dual_gap});
    }
    if (pairs.empty()) continue;
    EvalRow row;
    row.split = which == Split::in_sample ? "IS" : "OS";
    row.scenario = scenario_name;
    row.metric = metric_to_string(config.cv.metric);
    row.quality = cssp_quality(pairs);
    row.wins = win_stats(p_sol, p_default, p_best, 16);
    row.feas = feasibility_stats(gaps_sol, gaps_default);
    report.rows.push_back(std::move(row));
  }
  if (report.rows.empty()) fail(Errc::empty_input, "no instances to evaluate");

  std::error_code ec;
  fs::create_directories(config.report_dir, ec);
  if (ec) fail(Errc::io_error, "cannot create report dir " + config.report_dir + ": " + ec.message());
  std::string base = (fs::path(config.report_dir) / ("eval_" + scenario_name)).string();
  write_file(base + ".csv", report.to_csv());
  write_file(base + ".txt", report.to_text());

  PipelineOutcome out;
  out.summary = "evaluated " + std::to_string(report.rows.size()) + " split(s) -> " + base + ".{csv,txt}";
  return out;
}

PipelineOutcome cmd_synth(const RunConfig& config) {
  generate_bundle(config.synth.out_dir, config.synth.bundle);

  // a ready-to-run config pointing at the bundle
  nlohmann::json rc;
  auto in_dir = [&](const char* name) { return (fs::path(config.synth.out_dir) / name).string(); };
  rc["space"] = in_dir("space.json");
  rc["instances"] = in_dir("instances.json");
  rc["dataset"] = in_dir("dataset.csv");
  rc["prepared"] = in_dir("prepared.csv");
  rc["pipeline"] = in_dir("pipeline.json");
  rc["model"] = in_dir("model.json");
  rc["report_dir"] = in_dir("reports");
  rc["adapter"] = {{"kind", "synthetic"}, {"target", in_dir("target.json")}};
  rc["seeds"] = config.seeds;
  rc["threshold"] = config.threshold;
  rc["time_limit_s"] = config.time_limit_s;
  rc["cv"] = {{"outer_folds", 2}, {"inner_folds", 2}, {"draws", 6}, {"metric", "mae"}, {"seed", 7}};
  rc["search"] = {{"c_lo", 1.0}, {"c_hi", 300.0}, {"eps_lo", 1e-4}, {"eps_hi", 1e-2}};
  rc["svr"] = {{"max_passes", 200000}};
  write_file(in_dir("run_config.json"), rc.dump(2) + "\n");

  PipelineOutcome out;
  out.summary = "synthetic bundle (" + std::to_string(config.synth.bundle.n_instances) + " instances) -> " +
                config.synth.out_dir;
  return out;
}

}  // namespace perfmap
