#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace perfmap {

struct KernelSpec {
  double gamma = 1.0;  // gaussian: exp(-gamma * ||x - y||^2)
};

struct SvrHyper {
  double C = 1.0;
  double epsilon = 0.1;
  KernelSpec kernel;
};

/// exp(-gamma * ||x - y||^2). Throws DimensionMismatch.
double kernel_eval(const KernelSpec& spec, const std::vector<double>& x, const std::vector<double>& y);

/// Kernel expansion over the support set. Inputs to predict() are in the
/// prepared space: the feature block already standardized, config bits raw
/// 0/1. The scaler block records the upstream standardization so a model
/// file is self-describing and artifact pairs can be cross-checked.
struct SvrModel {
  SvrHyper hyper;
  std::vector<std::vector<double>> support_points;
  std::vector<double> dual_weights;  // beta_i = alpha_i - alpha_i*
  double bias = 0.0;
  bool converged = true;

  std::size_t feature_dim = 0;              // leading entries of each point
  std::vector<std::string> feature_columns; // their names, when known
  std::vector<std::string> config_columns;  // trailing entries, one per bit
  std::vector<double> scaler_means;         // feature block only
  std::vector<double> scaler_scales;

  std::size_t input_dim() const { return feature_dim + config_columns.size(); }

  std::string to_json_text() const;
  static SvrModel from_json_text(const std::string& text);
  void save(const std::string& path) const;
  static SvrModel load(const std::string& path);
};

double predict(const SvrModel& model, const std::vector<double>& x);

struct TrainResult {
  SvrModel model;
  bool converged = true;
  std::size_t pair_updates = 0;
  double dual_objective = 0.0;  // -1/2 b'Kb - eps*sum|b| + y'b at the solution
  std::vector<double> beta;     // dual weight of every training point (zeros included)
};

struct TrainOptions {
  double tol = 1e-3;
  std::size_t max_passes = 0;     // pair updates; 0 means 10 * n_points
  std::size_t cache_mb = 256;     // kernel row cache bound
};

/// Solves the epsilon-SVR dual by SMO over beta = alpha - alpha*:
///   max  -1/2 sum_ij beta_i beta_j K_ij - eps sum|beta_i| + sum y_i beta_i
///   s.t. sum beta_i = 0,  |beta_i| <= C.
/// Working pair: maximal KKT violation, ties by lowest index. Deterministic.
/// Exhausting max_passes is not fatal; the result carries converged = false.
TrainResult train(const std::vector<std::vector<double>>& points, const std::vector<double>& labels,
                  const SvrHyper& hyper, const TrainOptions& options = {});

/// Dual objective of an arbitrary beta for the given problem (test support,
/// O(n^2 d)).
double dual_objective(const std::vector<std::vector<double>>& points, const std::vector<double>& labels,
                      const SvrHyper& hyper, const std::vector<double>& beta);

/// Sum of absolute errors (the metric is a sum over the sample, not a mean).
double mae(const std::vector<double>& preds, const std::vector<double>& labels);

/// Asymmetric metric amplifying overestimates near 0 and underestimates near
/// 1; the middle band contributes the signed difference. delta in (0, 0.5].
double cmae(const std::vector<double>& preds, const std::vector<double>& labels, double delta);

/// Variant of cmae with the middle band taken in absolute value, so signed
/// midband terms cannot cancel the boundary penalties. Not the standard
/// metric; provided for comparison only.
double cmae_abs_midband(const std::vector<double>& preds, const std::vector<double>& labels, double delta);

}  // namespace perfmap
