#include "modelsel.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "error.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "textio.hpp"

namespace perfmap {

Metric metric_from_string(const std::string& s) {
  if (s == "mae") return Metric::mae;
  if (s == "cmae02") return Metric::cmae02;
  if (s == "cmae03") return Metric::cmae03;
  if (s == "cmae04") return Metric::cmae04;
  fail(Errc::bad_config, "unknown metric '" + s + "' (expected mae|cmae02|cmae03|cmae04)");
}

std::string metric_to_string(Metric m) {
  switch (m) {
    case Metric::mae: return "mae";
    case Metric::cmae02: return "cmae02";
    case Metric::cmae03: return "cmae03";
    case Metric::cmae04: return "cmae04";
  }
  return "mae";
}

double metric_value(Metric m, const std::vector<double>& preds, const std::vector<double>& labels) {
  switch (m) {
    case Metric::mae: return mae(preds, labels);
    case Metric::cmae02: return cmae(preds, labels, 0.2);
    case Metric::cmae03: return cmae(preds, labels, 0.3);
    case Metric::cmae04: return cmae(preds, labels, 0.4);
  }
  return mae(preds, labels);
}

TrainingMatrix make_training_matrix(const Dataset& ds, std::optional<Split> only_split) {
  TrainingMatrix out;
  out.feature_dim = ds.feature_names.size();
  out.feature_columns = ds.feature_names;
  out.config_columns = ds.config_columns;
  for (const PerformanceRecord& r : ds.records) {
    if (only_split) {
      auto it = ds.split.find(r.instance_id);
      if (it == ds.split.end() || it->second != *only_split) continue;
    }
    if (!r.p_norm) fail(Errc::empty_input, "training matrix needs normalized labels (run prepare first)");
    const auto& fv = ds.features_of(r.instance_id).values;
    std::vector<double> x;
    x.reserve(fv.size() + r.encoding.size());
    x.insert(x.end(), fv.begin(), fv.end());
    for (std::uint8_t b : r.encoding) x.push_back(double(b));
    out.points.push_back(std::move(x));
    out.labels.push_back(*r.p_norm);
    out.row_instance.push_back(r.instance_id);
  }
  return out;
}

std::vector<std::size_t> instance_folds(const std::vector<std::string>& row_instance, std::size_t k,
                                        std::uint64_t seed) {
  std::set<std::string> distinct(row_instance.begin(), row_instance.end());
  if (distinct.size() < k)
    fail(Errc::too_few_instances, "need at least " + std::to_string(k) + " distinct instances for " +
                                      std::to_string(k) + " folds, have " + std::to_string(distinct.size()));
  std::vector<std::string> ids(distinct.begin(), distinct.end());
  Rng rng(seed);
  rng.shuffle(ids);
  std::map<std::string, std::size_t> fold_of;
  for (std::size_t i = 0; i < ids.size(); ++i) fold_of[ids[i]] = i % k;
  std::vector<std::size_t> out;
  out.reserve(row_instance.size());
  for (const std::string& id : row_instance) out.push_back(fold_of[id]);
  return out;
}

SearchSpace resolve_search_space(const SearchSpace& space, std::size_t input_dim) {
  SearchSpace out = space;
  double d = double(std::max<std::size_t>(input_dim, 1));
  if (out.gamma_lo <= 0.0) out.gamma_lo = 1e-4 / d;
  if (out.gamma_hi <= 0.0) out.gamma_hi = 1e2 / d;
  if (!(out.c_lo > 0 && out.c_lo < out.c_hi) || !(out.gamma_lo < out.gamma_hi) ||
      !(out.eps_lo >= 0 && out.eps_lo < out.eps_hi))
    fail(Errc::bad_config, "search space ranges must satisfy lo < hi with positive C and gamma");
  return out;
}

namespace {

SvrHyper sample_hyper(const SearchSpace& space, std::uint64_t seed, std::size_t draw) {
  Rng rng(seed_stream(seed, draw));
  SvrHyper h;
  h.C = std::exp(rng.uniform(std::log(space.c_lo), std::log(space.c_hi)));
  h.kernel.gamma = std::exp(rng.uniform(std::log(space.gamma_lo), std::log(space.gamma_hi)));
  h.epsilon = rng.uniform(space.eps_lo, space.eps_hi);
  return h;
}

TrainingMatrix take_rows(const TrainingMatrix& rows, const std::vector<std::size_t>& folds,
                         std::size_t fold, bool keep_fold) {
  TrainingMatrix out;
  out.feature_dim = rows.feature_dim;
  out.feature_columns = rows.feature_columns;
  out.config_columns = rows.config_columns;
  for (std::size_t i = 0; i < rows.points.size(); ++i) {
    if ((folds[i] == fold) != keep_fold) continue;
    out.points.push_back(rows.points[i]);
    out.labels.push_back(rows.labels[i]);
    out.row_instance.push_back(rows.row_instance[i]);
  }
  return out;
}

double cv_score(const TrainingMatrix& rows, const SvrHyper& hyper, std::size_t k, std::uint64_t fold_seed,
                Metric metric, const TrainOptions& options) {
  std::vector<std::size_t> folds = instance_folds(rows.row_instance, k, fold_seed);
  double total = 0.0;
  for (std::size_t f = 0; f < k; ++f) {
    TrainingMatrix train_part = take_rows(rows, folds, f, false);
    TrainingMatrix test_part = take_rows(rows, folds, f, true);
    TrainResult tr = train(train_part.points, train_part.labels, hyper, options);
    std::vector<double> preds(test_part.points.size());
    for (std::size_t i = 0; i < preds.size(); ++i) preds[i] = predict(tr.model, test_part.points[i]);
    total += metric_value(metric, preds, test_part.labels);
  }
  return total / double(k);
}

}  // namespace

SearchResult random_search(const TrainingMatrix& rows, const SearchSpace& space, std::size_t inner_folds,
                           std::size_t draws, Metric metric, std::uint64_t seed, int jobs,
                           const TrainOptions& train_options) {
  if (draws < 1) fail(Errc::bad_config, "random_search: draws must be >= 1");
  SearchSpace resolved = resolve_search_space(space, rows.points.empty() ? 1 : rows.points[0].size());
  // One fold split shared by every draw, so scores are comparable.
  const std::uint64_t fold_seed = seed_stream(seed, 0x0f01d);
  std::vector<DrawRecord> records(draws);
  parallel_for(draws, jobs, [&](std::size_t d) {
    DrawRecord rec;
    rec.draw = d;
    rec.hyper = sample_hyper(resolved, seed, d);
    rec.score = cv_score(rows, rec.hyper, inner_folds, fold_seed, metric, train_options);
    records[d] = rec;
  });
  SearchResult out;
  out.draws = records;
  std::size_t best = 0;
  for (std::size_t d = 1; d < draws; ++d)
    if (records[d].score < records[best].score) best = d;  // strict: ties keep the earlier draw
  out.best = records[best].hyper;
  out.best_score = records[best].score;
  return out;
}

NestedCvResult nested_cv(const TrainingMatrix& rows, const SearchSpace& space, const CvPlan& plan,
                         const TrainOptions& train_options) {
  if (plan.outer_folds < 2 || plan.inner_folds < 2)
    fail(Errc::bad_config, "nested_cv: need at least 2 outer and 2 inner folds");
  std::vector<std::size_t> outer = instance_folds(rows.row_instance, plan.outer_folds, plan.seed);
  NestedCvResult out;
  out.folds.resize(plan.outer_folds);
  std::vector<std::vector<DrawRecord>> fold_draws(plan.outer_folds);
  for (std::size_t f = 0; f < plan.outer_folds; ++f) {
    TrainingMatrix train_part = take_rows(rows, outer, f, false);
    TrainingMatrix test_part = take_rows(rows, outer, f, true);
    SearchResult search = random_search(train_part, space, plan.inner_folds, plan.draws, plan.metric,
                                        seed_stream(plan.seed, f + 1), plan.jobs, train_options);
    TrainResult refit = train(train_part.points, train_part.labels, search.best, train_options);
    std::vector<double> preds(test_part.points.size());
    for (std::size_t i = 0; i < preds.size(); ++i) preds[i] = predict(refit.model, test_part.points[i]);
    FoldReport fr;
    fr.fold = f;
    fr.winner = search.best;
    fr.outer_score = metric_value(plan.metric, preds, test_part.labels);
    fr.test_rows = test_part.points.size();
    out.folds[f] = fr;
    for (DrawRecord d : search.draws) {
      d.fold = f;
      fold_draws[f].push_back(d);
    }
  }
  double sum = 0.0;
  for (const FoldReport& fr : out.folds) sum += fr.outer_score;
  out.error_estimate = sum / double(plan.outer_folds);
  for (auto& v : fold_draws)
    for (auto& d : v) out.draws.push_back(d);
  return out;
}

TrainResult fit_final(const TrainingMatrix& rows, const SvrHyper& hyper, const TrainOptions& train_options) {
  if (rows.points.empty()) fail(Errc::empty_input, "fit_final: no training rows");
  TrainResult tr = train(rows.points, rows.labels, hyper, train_options);
  tr.model.feature_dim = rows.feature_dim;
  tr.model.feature_columns = rows.feature_columns;
  tr.model.config_columns = rows.config_columns;
  return tr;
}

std::string draw_records_to_csv(const std::vector<DrawRecord>& draws) {
  std::ostringstream out;
  out << "fold,draw,C,gamma,epsilon,score\n";
  for (const DrawRecord& d : draws) {
    out << d.fold << ',' << d.draw << ',' << format_double(d.hyper.C) << ','
        << format_double(d.hyper.kernel.gamma) << ',' << format_double(d.hyper.epsilon) << ','
        << format_double(d.score) << "\n";
  }
  return out.str();
}

}  // namespace perfmap
