#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adapter.hpp"
#include "configspace.hpp"
#include "dataset.hpp"

namespace perfmap {

/// Deterministic stand-in for an external solver: a planted performance
/// function evaluable at any (features, configuration), so pipeline output
/// can be verified against ground truth. Two kinds: "rbf" (a kernel
/// expansion over sampled centers) and "interaction" (linear terms plus
/// feature x bit products).
class SyntheticTarget : public PerformanceSource {
 public:
  struct Spec {
    std::string kind = "rbf";
    std::size_t centers = 12;   // rbf expansion size
    double gamma = 0.5;         // rbf width
    double noise = 0.0;         // stddev of additive measurement noise
    std::uint64_t seed = 1;
  };

  static SyntheticTarget generate(const ConfigurationSpace& space, std::size_t feature_dim,
                                  const Spec& spec);

  /// Noise-free planted value.
  double true_performance(const std::vector<double>& features,
                          const std::vector<std::uint8_t>& encoding) const;

  /// Planted value plus deterministic noise keyed on (instance, encoding,
  /// seed). Reports the measurement as the incumbent; no bound.
  RunResult run(const InstanceFeatures& instance, const std::map<std::string, std::string>& assignment,
                std::uint64_t seed, double time_limit_s) const override;

  std::size_t feature_dim() const { return feature_dim_; }
  const ConfigurationSpace& space() const { return space_; }

  std::string to_json_text() const;
  static SyntheticTarget from_json_text(const std::string& text);
  void save(const std::string& path) const;
  static SyntheticTarget load(const std::string& path);

 private:
  SyntheticTarget() : space_({{"_", {"0", "1"}}}, {}) {}

  Spec spec_;
  ConfigurationSpace space_;
  std::size_t feature_dim_ = 0;
  double offset_ = 0.0;
  // rbf
  std::vector<std::vector<double>> center_features_;
  std::vector<std::vector<std::uint8_t>> center_encodings_;
  std::vector<double> weights_;
  // interaction
  std::vector<double> linear_f_, linear_c_;
  std::vector<std::vector<double>> cross_;  // [feature][bit]
};

/// Uniform-[0,1] feature vectors with ids inst0001, inst0002, ...
InstanceSet sample_instances(std::size_t n, std::size_t feature_dim, std::uint64_t seed);

/// Unconstrained space p1..pk with value counts as given (values v1..vm).
ConfigurationSpace make_synthetic_space(const std::vector<std::size_t>& value_counts);

struct SynthBundleOptions {
  std::vector<std::size_t> value_counts = {2, 3, 4};
  std::size_t n_instances = 10;
  std::size_t feature_dim = 4;
  SyntheticTarget::Spec target;
};

/// Writes space.json, target.json, instances.json (opt_value = planted
/// optimum per instance), truth.csv (per-instance best configuration) and
/// ground_truth.csv (every per-config planted value) into out_dir.
void generate_bundle(const std::string& out_dir, const SynthBundleOptions& options);

}  // namespace perfmap
