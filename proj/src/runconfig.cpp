#include "runconfig.hpp"

#include <cstdlib>
#include <set>

#include <json.hpp>

#include "error.hpp"
#include "textio.hpp"

namespace perfmap {

using json = nlohmann::json;

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key))
      fail(Errc::bad_config, "unknown key '" + key + "' in " + where + " section of the run config");
  }
}

double num(const json& v, const std::string& where) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return parse_double(v.get<std::string>());
  fail(Errc::bad_config, where + " must be a number");
}

RunConfig parse_config_fields(const json& doc);

}  // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(Errc::bad_config, std::string("run config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail(Errc::bad_config, "run config must be a JSON object");
  try {
    return parse_config_fields(doc);
  } catch (const json::exception& e) {
    fail(Errc::bad_config, std::string("run config field has the wrong type: ") + e.what());
  }
}

namespace {

RunConfig parse_config_fields(const json& doc) {
  check_keys(doc, {"space", "instances", "dataset", "prepared", "pipeline", "model", "scenario",
                   "report_dir", "journal", "cv_report", "solution", "threshold", "seeds",
                   "time_limit_s", "jobs", "gap_eps", "adapter", "split", "subsample", "features",
                   "search", "cv", "svr", "solver", "synth"},
             "top-level");

  RunConfig c;
  c.space_file = doc.value("space", c.space_file);
  c.instances_file = doc.value("instances", c.instances_file);
  c.dataset_file = doc.value("dataset", c.dataset_file);
  c.prepared_file = doc.value("prepared", c.prepared_file);
  c.pipeline_file = doc.value("pipeline", c.pipeline_file);
  c.model_file = doc.value("model", c.model_file);
  c.scenario_file = doc.value("scenario", c.scenario_file);
  c.report_dir = doc.value("report_dir", c.report_dir);
  c.journal_file = doc.value("journal", c.journal_file);
  c.cv_report_file = doc.value("cv_report", c.cv_report_file);
  c.solution_file = doc.value("solution", c.solution_file);
  if (doc.contains("threshold")) c.threshold = num(doc["threshold"], "threshold");
  if (doc.contains("seeds")) {
    c.seeds.clear();
    for (const auto& s : doc["seeds"]) c.seeds.push_back(s.get<std::uint64_t>());
    if (c.seeds.empty()) fail(Errc::bad_config, "seeds must be a nonempty list");
  }
  if (doc.contains("time_limit_s")) c.time_limit_s = num(doc["time_limit_s"], "time_limit_s");
  c.jobs = doc.value("jobs", c.jobs);
  if (c.jobs < 1) fail(Errc::bad_config, "jobs must be >= 1");
  c.gap_eps = doc.value("gap_eps", c.gap_eps);

  if (doc.contains("adapter")) {
    const json& a = doc["adapter"];
    check_keys(a, {"kind", "template", "target", "grace_s"}, "adapter");
    c.adapter.kind = a.value("kind", c.adapter.kind);
    c.adapter.command_template = a.value("template", c.adapter.command_template);
    c.adapter.target_file = a.value("target", c.adapter.target_file);
    if (a.contains("grace_s")) c.adapter.grace_s = num(a["grace_s"], "adapter.grace_s");
    if (c.adapter.kind != "command" && c.adapter.kind != "synthetic")
      fail(Errc::bad_config, "adapter.kind must be command or synthetic");
  }
  if (const char* env = std::getenv("PERFMAP_ADAPTER_CMD"); env && *env) {
    c.adapter.kind = "command";
    c.adapter.command_template = env;
  }

  if (doc.contains("split")) {
    const json& s = doc["split"];
    check_keys(s, {"os_fraction", "seed"}, "split");
    if (s.contains("os_fraction")) c.os_fraction = num(s["os_fraction"], "split.os_fraction");
    c.split_seed = s.value("seed", c.split_seed);
  }
  if (doc.contains("subsample")) {
    const json& s = doc["subsample"];
    check_keys(s, {"size", "seed"}, "subsample");
    c.subsample_size = s.value("size", c.subsample_size);
    c.subsample_seed = s.value("seed", c.subsample_seed);
  }

  if (doc.contains("features")) {
    const json& f = doc["features"];
    check_keys(f, {"date_column", "holiday_file", "cyclical", "stat_groups", "standardize", "selection"},
               "features");
    if (f.contains("date_column") && !f["date_column"].is_null())
      c.features.date_column = f["date_column"].get<std::string>();
    c.features.holiday_file = f.value("holiday_file", c.features.holiday_file);
    for (const auto& cy : f.value("cyclical", json::array()))
      c.features.cyclical.push_back({cy.at("column").get<std::string>(), num(cy.at("period"), "period")});
    for (const auto& g : f.value("stat_groups", json::array())) {
      StatGroup sg;
      sg.name = g.at("name").get<std::string>();
      for (const auto& col : g.at("columns")) sg.columns.push_back(col.get<std::string>());
      c.features.stat_groups.push_back(std::move(sg));
    }
    c.features.standardize = f.value("standardize", c.features.standardize);
    if (f.contains("selection")) {
      const json& sel = f["selection"];
      check_keys(sel, {"enabled", "max_features", "redundancy_cutoff"}, "features.selection");
      c.features.selection.enabled = sel.value("enabled", false);
      c.features.selection.max_features = sel.value("max_features", c.features.selection.max_features);
      if (sel.contains("redundancy_cutoff"))
        c.features.selection.redundancy_cutoff = num(sel["redundancy_cutoff"], "redundancy_cutoff");
    }
  }

  if (doc.contains("search")) {
    const json& s = doc["search"];
    check_keys(s, {"c_lo", "c_hi", "gamma_lo", "gamma_hi", "eps_lo", "eps_hi"}, "search");
    if (s.contains("c_lo")) c.search.c_lo = num(s["c_lo"], "search.c_lo");
    if (s.contains("c_hi")) c.search.c_hi = num(s["c_hi"], "search.c_hi");
    if (s.contains("gamma_lo")) c.search.gamma_lo = num(s["gamma_lo"], "search.gamma_lo");
    if (s.contains("gamma_hi")) c.search.gamma_hi = num(s["gamma_hi"], "search.gamma_hi");
    if (s.contains("eps_lo")) c.search.eps_lo = num(s["eps_lo"], "search.eps_lo");
    if (s.contains("eps_hi")) c.search.eps_hi = num(s["eps_hi"], "search.eps_hi");
  }

  if (doc.contains("cv")) {
    const json& v = doc["cv"];
    check_keys(v, {"outer_folds", "inner_folds", "draws", "metric", "seed"}, "cv");
    c.cv.outer_folds = v.value("outer_folds", c.cv.outer_folds);
    c.cv.inner_folds = v.value("inner_folds", c.cv.inner_folds);
    c.cv.draws = v.value("draws", c.cv.draws);
    if (v.contains("metric")) c.cv.metric = metric_from_string(v["metric"].get<std::string>());
    c.cv.seed = v.value("seed", c.cv.seed);
  }
  c.cv.jobs = c.jobs;

  if (doc.contains("svr")) {
    const json& s = doc["svr"];
    check_keys(s, {"tol", "max_passes", "cache_mb"}, "svr");
    if (s.contains("tol")) c.svr.tol = num(s["tol"], "svr.tol");
    c.svr.max_passes = s.value("max_passes", c.svr.max_passes);
    c.svr.cache_mb = s.value("cache_mb", c.svr.cache_mb);
  }

  if (doc.contains("solver")) {
    const json& s = doc["solver"];
    check_keys(s, {"kind", "enum_budget", "restarts", "seed"}, "solver");
    c.solver.kind = s.value("kind", c.solver.kind);
    if (c.solver.kind != "enumerate" && c.solver.kind != "bnb" && c.solver.kind != "local")
      fail(Errc::bad_config, "solver.kind must be enumerate, bnb or local");
    c.solver.enum_budget = s.value("enum_budget", c.solver.enum_budget);
    c.solver.restarts = s.value("restarts", c.solver.restarts);
    c.solver.seed = s.value("seed", c.solver.seed);
  }

  if (doc.contains("synth")) {
    const json& s = doc["synth"];
    check_keys(s, {"out_dir", "value_counts", "n_instances", "feature_dim", "target"}, "synth");
    c.synth.out_dir = s.value("out_dir", c.synth.out_dir);
    if (s.contains("value_counts")) {
      c.synth.bundle.value_counts.clear();
      for (const auto& v : s["value_counts"]) c.synth.bundle.value_counts.push_back(v.get<std::size_t>());
    }
    c.synth.bundle.n_instances = s.value("n_instances", c.synth.bundle.n_instances);
    c.synth.bundle.feature_dim = s.value("feature_dim", c.synth.bundle.feature_dim);
    if (s.contains("target")) {
      const json& t = s["target"];
      check_keys(t, {"kind", "centers", "gamma", "noise", "seed"}, "synth.target");
      c.synth.bundle.target.kind = t.value("kind", c.synth.bundle.target.kind);
      c.synth.bundle.target.centers = t.value("centers", c.synth.bundle.target.centers);
      if (t.contains("gamma")) c.synth.bundle.target.gamma = num(t["gamma"], "synth.target.gamma");
      if (t.contains("noise")) c.synth.bundle.target.noise = num(t["noise"], "synth.target.noise");
      c.synth.bundle.target.seed = t.value("seed", c.synth.bundle.target.seed);
    }
  }
  return c;
}

}  // namespace

RunConfig RunConfig::load(const std::string& path) { return from_json_text(read_file(path)); }

}  // namespace perfmap
