#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dataset.hpp"

namespace perfmap {

/// Calendar-derived features of one date.
/// season: 0 winter (Dec-Feb), 1 spring, 2 summer, 3 autumn.
/// weekday: 0 = Monday ... 6 = Sunday. yearday: 1..366.
struct DateFeatures {
  double season = 0;
  double weekday = 0;
  double yearday = 0;
  double is_weekend = 0;
  double is_holiday = 0;
  double weekday_sin = 0, weekday_cos = 0;  // period 7
  double yearday_sin = 0, yearday_cos = 0;  // period 365.25
};

/// `holidays` holds dates as yyyymmdd integers. Throws InvalidDate.
DateFeatures expand_date(int year, int month, int day, const std::set<int>& holidays = {});

/// Parses "YYYY-MM-DD" or a yyyymmdd numeric literal.
int parse_date_ymd(const std::string& text);

struct StatFeatures {
  double min = 0, max = 0, mean = 0, sd = 0, sum = 0;  // population sd
};

/// Summary statistics of a nonempty group of values.
StatFeatures augment_stats(const std::vector<double>& group);

struct StatGroup {
  std::string name;
  std::vector<std::string> columns;
};

struct CyclicalSpec {
  std::string column;
  double period = 1.0;
};

/// Feature engineering steps plus fitted standardization constants. Fit once,
/// then apply deterministically; the output schema is fixed after fit.
class FeaturePipeline {
 public:
  struct Config {
    std::optional<std::string> date_column;
    std::set<int> holidays;  // yyyymmdd
    std::vector<CyclicalSpec> cyclical;
    std::vector<StatGroup> stat_groups;
    bool standardize = true;
  };

  FeaturePipeline() = default;
  explicit FeaturePipeline(Config config) : config_(std::move(config)) {}

  /// Learns the output schema and standardization constants from the rows of
  /// `ids` (pass the IS instances). Throws if a named column is missing.
  void fit(const std::vector<std::string>& input_schema,
           const std::vector<const InstanceFeatures*>& fit_rows);

  /// Transform one raw feature vector (input schema order).
  std::vector<double> transform(const std::vector<double>& raw) const;

  bool fitted() const { return fitted_; }
  const std::vector<std::string>& input_schema() const { return input_schema_; }
  const std::vector<std::string>& output_schema() const { return output_schema_; }
  const std::vector<double>& means() const { return means_; }
  const std::vector<double>& scales() const { return scales_; }
  const Config& config() const { return config_; }

  std::string to_json_text() const;
  static FeaturePipeline from_json_text(const std::string& text);
  void save(const std::string& path) const;
  static FeaturePipeline load(const std::string& path);

 private:
  std::vector<double> engineer(const std::vector<double>& raw) const;  // pre-standardization

  Config config_;
  bool fitted_ = false;
  std::vector<std::string> input_schema_;
  std::vector<std::string> output_schema_;
  std::vector<std::size_t> passthrough_;            // input indices kept as-is
  std::optional<std::size_t> date_index_;
  std::vector<std::pair<std::size_t, double>> cyclical_;  // (input index, period)
  std::vector<std::vector<std::size_t>> stat_indices_;
  std::vector<double> means_, scales_;  // per output column; scale 1 where sd ~ 0
};

/// A named choice of retained feature and config columns.
struct SelectionScenario {
  std::string name;
  std::vector<std::string> feature_columns;
  std::vector<std::string> config_columns;

  std::string to_json_text() const;
  static SelectionScenario from_json_text(const std::string& text);
  void save(const std::string& path) const;
  static SelectionScenario load(const std::string& path);
};

/// Ranks feature columns by |Pearson correlation with p_norm|, greedily keeps
/// the top ones while skipping columns whose |pairwise correlation| with an
/// already-kept column exceeds redundancy_cutoff. Constant columns are
/// dropped first. Keeps every config column.
SelectionScenario select_by_correlation(const Dataset& ds, std::size_t max_features,
                                        double redundancy_cutoff, const std::string& name = "corrFS");

/// Projects the dataset onto the scenario's columns and deduplicates with
/// group-averaged labels.
Dataset apply_scenario(const Dataset& ds, const SelectionScenario& scenario);

}  // namespace perfmap
