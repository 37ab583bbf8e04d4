#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "features.hpp"
#include "modelsel.hpp"
#include "svr.hpp"
#include "synth.hpp"

namespace perfmap {

struct AdapterConfig {
  std::string kind = "command";  // command | synthetic
  std::string command_template;
  std::string target_file;  // synthetic target JSON
  double grace_s = 10.0;
};

struct SolverConfig {
  std::string kind = "enumerate";  // enumerate | bnb | local
  std::uint64_t enum_budget = 1000000;
  std::size_t restarts = 5;
  std::uint64_t seed = 3;
};

struct FeatureSelectionConfig {
  bool enabled = false;
  std::size_t max_features = 22;
  double redundancy_cutoff = 0.95;
};

struct FeaturesConfig {
  std::optional<std::string> date_column;
  std::string holiday_file;  // one ISO date per line
  std::vector<CyclicalSpec> cyclical;
  std::vector<StatGroup> stat_groups;
  bool standardize = true;
  FeatureSelectionConfig selection;
};

struct SynthRunConfig {
  std::string out_dir = "synth";
  SynthBundleOptions bundle;
};

/// The single source of truth for a run. Loaded from JSON; CLI flags are
/// merged into the document before parsing, so flags win.
struct RunConfig {
  // paths
  std::string space_file;
  std::string instances_file;
  std::string dataset_file = "dataset.csv";
  std::string prepared_file = "prepared.csv";
  std::string pipeline_file = "pipeline.json";
  std::string model_file = "model.json";
  std::string scenario_file;  // empty = keep every column
  std::string report_dir = "reports";
  std::string journal_file;      // empty = dataset_file + ".journal"
  std::string cv_report_file;    // empty = model_file + ".cv.csv"
  std::string solution_file;     // empty = stdout only

  double threshold = 1e5;
  std::vector<std::uint64_t> seeds = {101, 102, 103};
  double time_limit_s = 60.0;
  int jobs = 1;
  bool gap_eps = false;

  AdapterConfig adapter;
  double os_fraction = 0.25;
  std::uint64_t split_seed = 7;
  std::size_t subsample_size = 0;
  std::uint64_t subsample_seed = 1;

  FeaturesConfig features;
  SearchSpace search;
  CvPlan cv;
  TrainOptions svr;
  SolverConfig solver;
  SynthRunConfig synth;

  std::string journal_path() const { return journal_file.empty() ? dataset_file + ".journal" : journal_file; }
  std::string cv_report_path() const { return cv_report_file.empty() ? model_file + ".cv.csv" : cv_report_file; }

  /// Parses the JSON document; unknown keys are rejected to catch typos. The
  /// PERFMAP_ADAPTER_CMD environment variable, when set, overrides the
  /// adapter with a command template.
  static RunConfig from_json_text(const std::string& text);
  static RunConfig load(const std::string& path);
};

}  // namespace perfmap
