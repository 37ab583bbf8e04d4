// Command-line front end. Everything goes through the shared library's C
// API; this file only parses flags, merges them into the run-config JSON
// (flags win) and prints results.

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "perfmap/perfmap.h"

namespace {

using nlohmann::json;

struct CommonFlags {
  std::string config_path;
  std::optional<std::string> scenario;
  std::optional<std::string> metric;
  std::optional<std::string> solver;
  std::optional<double> threshold;
  std::optional<double> time_limit;
  std::optional<long long> seed;
  std::optional<int> jobs;
  bool gap_eps = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "run config JSON file");
  cmd->add_option("--scenario", flags.scenario,
                  "scenario file path, or 'none' to keep every column");
  cmd->add_option("--metric", flags.metric, "mae|cmae02|cmae03|cmae04")
      ->check(CLI::IsMember({"mae", "cmae02", "cmae03", "cmae04"}));
  cmd->add_option("--solver", flags.solver, "enumerate|bnb|local")
      ->check(CLI::IsMember({"enumerate", "bnb", "local"}));
  cmd->add_option("--threshold", flags.threshold, "performance clip threshold");
  cmd->add_option("--time-limit", flags.time_limit, "per-run / per-solve time limit in seconds");
  cmd->add_option("--seed", flags.seed, "seed for the command's primary random draw");
  cmd->add_option("--jobs", flags.jobs, "parallel worker count");
  cmd->add_flag("--gap-eps", flags.gap_eps, "tolerate zero optima in gap computation");
}

json load_config_doc(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) {
    std::fprintf(stderr, "error: cannot open config %s\n", path.c_str());
    std::exit(PM_ERR_IO);
  }
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return json::parse(text.str());
  } catch (const json::exception& e) {
    std::fprintf(stderr, "error: config %s is not valid JSON: %s\n", path.c_str(), e.what());
    std::exit(PM_ERR_USAGE);
  }
}

// --seed targets the command's primary draw: the seed list for collect, the
// split for prepare, CV for train, the solver for configure/evaluate, the
// target for synth.
std::string merge_flags(const CommonFlags& flags, const std::string& command) {
  json doc = load_config_doc(flags.config_path);
  if (flags.scenario) doc["scenario"] = (*flags.scenario == "none") ? "" : *flags.scenario;
  if (flags.metric) doc["cv"]["metric"] = *flags.metric;
  if (flags.solver) doc["solver"]["kind"] = *flags.solver;
  if (flags.threshold) doc["threshold"] = *flags.threshold;
  if (flags.time_limit) doc["time_limit_s"] = *flags.time_limit;
  if (flags.jobs) doc["jobs"] = *flags.jobs;
  if (flags.gap_eps) doc["gap_eps"] = true;
  if (flags.seed) {
    if (command == "collect")
      doc["seeds"] = json::array({*flags.seed});
    else if (command == "prepare")
      doc["split"]["seed"] = *flags.seed;
    else if (command == "train")
      doc["cv"]["seed"] = *flags.seed;
    else if (command == "synth")
      doc["synth"]["target"]["seed"] = *flags.seed;
    else
      doc["solver"]["seed"] = *flags.seed;
  }
  return doc.dump();
}

int finish(pm_status status, char* summary) {
  if (summary) {
    std::printf("%s\n", summary);
    pm_string_free(summary);
  }
  if (status != PM_OK) std::fprintf(stderr, "error: %s\n", pm_last_error());
  return int(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"perfmap: learn a per-instance performance map of a parameterized algorithm "
               "and search its configuration space"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  CommonFlags flags;
  std::string instances_path;
  std::string out_path;

  CLI::App* collect = app.add_subcommand("collect", "measure every (instance, configuration, seed)");
  CLI::App* prepare = app.add_subcommand("prepare", "split, normalize, engineer features, dedup");
  CLI::App* train = app.add_subcommand("train", "nested CV + randomized search + final SVR fit");
  CLI::App* configure =
      app.add_subcommand("configure", "recommend a configuration for new instances");
  configure->add_option("instances", instances_path, "instance features JSON file")->required();
  configure->add_option("--out", out_path, "also write solutions to this file");
  CLI::App* evaluate = app.add_subcommand("evaluate", "solver quality / win-loss / gap reports");
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic verification bundle");
  for (CLI::App* cmd : {collect, prepare, train, configure, evaluate, synth})
    add_common_flags(cmd, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return PM_ERR_USAGE;
  }

  CLI::App* chosen = app.get_subcommands().front();
  const std::string command = chosen->get_name();
  std::string config_json = merge_flags(flags, command);

  char* summary = nullptr;
  if (command == "collect") {
    pm_status status = pm_run_collect(config_json.c_str(), &summary);
    return finish(status, summary);
  }
  if (command == "prepare") {
    pm_status status = pm_run_prepare(config_json.c_str(), &summary);
    return finish(status, summary);
  }
  if (command == "train") {
    pm_status status = pm_run_train(config_json.c_str(), &summary);
    return finish(status, summary);
  }
  if (command == "configure") {
    if (!out_path.empty()) {
      json doc = json::parse(config_json);
      doc["solution"] = out_path;
      config_json = doc.dump();
    }
    char* text = nullptr;
    pm_status status =
        pm_run_configure(config_json.c_str(), instances_path.c_str(), &text, &summary);
    if (text) {
      std::printf("%s", text);
      pm_string_free(text);
    }
    return finish(status, summary);
  }
  if (command == "evaluate") {
    pm_status status = pm_run_evaluate(config_json.c_str(), &summary);
    return finish(status, summary);
  }
  if (command == "synth") {
    pm_status status = pm_run_synth(config_json.c_str(), &summary);
    return finish(status, summary);
  }
  return PM_ERR_USAGE;
}
