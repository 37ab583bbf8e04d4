#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "svr.hpp"

namespace perfmap {

/// Sampling ranges for the randomized search: C and gamma log-uniform,
/// epsilon uniform.
struct SearchSpace {
  double c_lo = 1e-2, c_hi = 1e3;
  double gamma_lo = 0.0, gamma_hi = 0.0;  // 0 means scale-aware default [1e-4/d, 1e2/d]
  double eps_lo = 1e-4, eps_hi = 1e-1;
};

enum class Metric { mae, cmae02, cmae03, cmae04 };

Metric metric_from_string(const std::string& s);
std::string metric_to_string(Metric m);
double metric_value(Metric m, const std::vector<double>& preds, const std::vector<double>& labels);

struct CvPlan {
  std::size_t outer_folds = 3;
  std::size_t inner_folds = 2;
  std::size_t draws = 8;
  Metric metric = Metric::mae;
  std::uint64_t seed = 0;
  int jobs = 1;
};

/// Rows assembled from a prepared dataset: input = engineered feature columns
/// followed by config bits, label = p_norm.
struct TrainingMatrix {
  std::vector<std::vector<double>> points;
  std::vector<double> labels;
  std::vector<std::string> row_instance;  // instance of each row, for fold grouping
  std::size_t feature_dim = 0;
  std::vector<std::string> feature_columns;
  std::vector<std::string> config_columns;
};

TrainingMatrix make_training_matrix(const Dataset& ds, std::optional<Split> only_split);

/// Fold index per row; folds never split one instance's rows. Instances are
/// shuffled by the seed and dealt round-robin.
std::vector<std::size_t> instance_folds(const std::vector<std::string>& row_instance, std::size_t k,
                                        std::uint64_t seed);

struct DrawRecord {
  std::size_t fold = 0;  // outer fold the draw belongs to (0 when standalone)
  std::size_t draw = 0;
  SvrHyper hyper;
  double score = 0.0;
};

struct SearchResult {
  SvrHyper best;
  double best_score = 0.0;
  std::vector<DrawRecord> draws;
};

/// Samples `draws` hyperparameter triples with fixed-prefix streams (draw k
/// is the same no matter how many draws run), scores each by inner-fold CV
/// (mean over folds of the summed metric), returns the argmin. Ties go to
/// the earliest draw.
SearchResult random_search(const TrainingMatrix& rows, const SearchSpace& space, std::size_t inner_folds,
                           std::size_t draws, Metric metric, std::uint64_t seed, int jobs = 1,
                           const TrainOptions& train_options = {});

struct FoldReport {
  std::size_t fold = 0;
  SvrHyper winner;
  double outer_score = 0.0;
  std::size_t test_rows = 0;
};

struct NestedCvResult {
  double error_estimate = 0.0;  // mean of outer fold scores
  std::vector<FoldReport> folds;
  std::vector<DrawRecord> draws;  // every inner draw, for the fold report CSV
};

/// Outer folds estimate generalization error; each fold's winner comes from
/// an inner randomized search on the outer-train part.
NestedCvResult nested_cv(const TrainingMatrix& rows, const SearchSpace& space, const CvPlan& plan,
                         const TrainOptions& train_options = {});

/// Trains on the full matrix (callers pass IS rows) and stamps the model's
/// input layout.
TrainResult fit_final(const TrainingMatrix& rows, const SvrHyper& hyper,
                      const TrainOptions& train_options = {});

std::string draw_records_to_csv(const std::vector<DrawRecord>& draws);

/// Resolves gamma_lo/gamma_hi = 0 to the scale-aware default for dimension d.
SearchSpace resolve_search_space(const SearchSpace& space, std::size_t input_dim);

}  // namespace perfmap
