#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace perfmap {

/// Named feature values of one instance. All instances in a dataset share one
/// schema (the dataset owns the names; this holds values in schema order).
struct InstanceFeatures {
  std::string instance_id;
  std::vector<double> values;
  std::optional<double> opt_value;  // known optimum of the instance, for gap computation
};

/// One (instance, configuration) measurement row.
struct PerformanceRecord {
  std::string instance_id;
  std::vector<std::uint8_t> encoding;
  std::vector<double> seed_values;
  double p_raw = 0.0;
  std::optional<double> p_norm;
  std::optional<double> primal_gap;
  std::optional<double> dual_gap;
};

enum class Split { in_sample, out_sample };

struct Dataset {
  std::vector<std::string> feature_names;  // schema, fixed order
  std::vector<std::string> config_columns; // one name per encoding bit
  std::vector<PerformanceRecord> records;
  std::map<std::string, InstanceFeatures> features;
  std::map<std::string, Split> split;

  std::size_t seed_count() const;
  const InstanceFeatures& features_of(const std::string& instance_id) const;
  std::vector<std::string> instance_ids() const;  // sorted

  std::string to_csv() const;
  static Dataset from_csv(const std::string& text);
  void save(const std::string& path) const;
  static Dataset load(const std::string& path);
};

/// Median: middle order statistic, mean of the two central values for even
/// counts.
double aggregate_seeds(const std::vector<double>& values);

/// Clip-then-rescale constants. apply() reproduces the fitted transform on
/// new data; outputs are only guaranteed to lie in [0,1] for the fit values.
struct NormalizationParams {
  double threshold = 0.0;
  double clip_to = 0.0;  // max of values <= threshold, plus 100
  double lo = 0.0;       // post-clip minimum (maps to 0)
  double hi = 0.0;       // post-clip maximum (maps to 1)

  double apply(double raw) const;
};

/// Values above `threshold` are reset to (max of values <= threshold) + 100,
/// then the list is affinely mapped onto [0,1]. All-equal lists map to 0.
std::pair<std::vector<double>, NormalizationParams> normalize_performance(
    const std::vector<double>& raw, double threshold);

/// Fills p_norm for every record from the pooled p_raw distribution.
NormalizationParams normalize_dataset(Dataset& ds, double threshold);

struct GapResult {
  std::optional<double> primal;
  std::optional<double> dual;
};

/// primal = |opt - incumbent| / |opt|, dual = |bound - opt| / |opt|.
/// A zero optimum is an error unless gap_eps is set, in which case the
/// denominator becomes max(|opt|, 1e-10).
GapResult compute_gaps(double opt_value, std::optional<double> incumbent,
                       std::optional<double> best_bound, bool gap_eps = false);

/// Groups rows by the kept feature and config columns; each group collapses
/// to one row labelled with the mean p_norm. Output columns are the kept
/// ones; auxiliary fields (seeds, p_raw, gaps, instance_id) descend from the
/// group's first row in input order.
Dataset dedup_group_average(const Dataset& ds, const std::vector<std::string>& kept_feature_columns,
                            const std::vector<std::string>& kept_config_columns);

/// Tags instances (not rows) IS/OS uniformly at random;
/// |OS| = round(os_fraction * n).
void split_instances(Dataset& ds, double os_fraction, std::uint64_t seed);

/// Uniform random subsample of rows without replacement; size 0 keeps all.
Dataset subsample_rows(const Dataset& ds, std::size_t size, std::uint64_t seed);

/// Rows of instances tagged with the given split.
Dataset filter_split(const Dataset& ds, Split which);

/// Instance list with shared schema. JSON layout:
/// {"schema": ["f0", ...], "instances": [{"id": "...", "values": [...],
///  "opt_value": 1.5}]}. Date-valued entries may be "YYYY-MM-DD" strings and
/// are stored as yyyymmdd numbers.
struct InstanceSet {
  std::vector<std::string> schema;
  std::vector<InstanceFeatures> instances;

  std::string to_json_text() const;
  static InstanceSet from_json_text(const std::string& text);
  void save(const std::string& path) const;
  static InstanceSet load(const std::string& path);
};

}  // namespace perfmap
