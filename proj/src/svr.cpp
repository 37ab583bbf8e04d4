#include "svr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <list>
#include <unordered_map>

#include <json.hpp>

#include "error.hpp"
#include "textio.hpp"

namespace perfmap {

using json = nlohmann::json;

namespace {

double sq_dist(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double d = x[i] - y[i];
    s += d * d;
  }
  return s;
}

// LRU cache of Gram-matrix rows. A full n x n matrix does not fit in memory
// once training sets reach the tens of thousands of rows, so rows are
// computed on demand and evicted least-recently-used under a byte budget.
class KernelRowCache {
 public:
  KernelRowCache(const std::vector<std::vector<double>>& points, double gamma, std::size_t cache_mb)
      : points_(points), gamma_(gamma) {
    std::size_t row_bytes = points.size() * sizeof(double);
    max_rows_ = row_bytes == 0 ? 1 : std::max<std::size_t>(2, cache_mb * 1024 * 1024 / row_bytes);
  }

  const std::vector<double>& row(std::size_t i) {
    auto it = index_.find(i);
    if (it != index_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second.first);
      return it->second.second;
    }
    if (index_.size() >= max_rows_) {
      index_.erase(lru_.back());
      lru_.pop_back();
    }
    lru_.push_front(i);
    std::vector<double> r(points_.size());
    for (std::size_t j = 0; j < points_.size(); ++j)
      r[j] = std::exp(-gamma_ * sq_dist(points_[i], points_[j]));
    auto [pos, inserted] = index_.emplace(i, std::make_pair(lru_.begin(), std::move(r)));
    return pos->second.second;
  }

 private:
  const std::vector<std::vector<double>>& points_;
  double gamma_;
  std::size_t max_rows_;
  std::list<std::size_t> lru_;
  std::unordered_map<std::size_t, std::pair<std::list<std::size_t>::iterator, std::vector<double>>> index_;
};

}  // namespace

double kernel_eval(const KernelSpec& spec, const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size())
    fail(Errc::dimension_mismatch, "kernel_eval: dimensions " + std::to_string(x.size()) + " vs " +
                                       std::to_string(y.size()));
  return std::exp(-spec.gamma * sq_dist(x, y));
}

double predict(const SvrModel& model, const std::vector<double>& x) {
  double acc = model.bias;
  for (std::size_t i = 0; i < model.support_points.size(); ++i)
    acc += model.dual_weights[i] * kernel_eval(model.hyper.kernel, model.support_points[i], x);
  return acc;
}

TrainResult train(const std::vector<std::vector<double>>& points, const std::vector<double>& labels,
                  const SvrHyper& hyper, const TrainOptions& options) {
  const std::size_t n = points.size();
  if (n < 2 || labels.size() != n)
    fail(Errc::empty_input, "train: need at least 2 points with matching labels");
  for (double y : labels)
    if (!std::isfinite(y)) fail(Errc::empty_input, "train: labels must be finite");
  for (const auto& p : points)
    if (p.size() != points[0].size()) fail(Errc::dimension_mismatch, "train: ragged point dimensions");
  if (!(hyper.C > 0) || !(hyper.epsilon >= 0) || !(hyper.kernel.gamma > 0))
    fail(Errc::bad_config, "train: require C > 0, epsilon >= 0, gamma > 0");

  const double C = hyper.C;
  const double eps = hyper.epsilon;
  const double bound_tau = 1e-12 * std::max(1.0, C);
  const std::size_t max_updates = options.max_passes ? options.max_passes : 10 * n;

  KernelRowCache cache(points, hyper.kernel.gamma, options.cache_mb);
  std::vector<double> beta(n, 0.0);
  std::vector<double> g(n);  // g_i = sum_j K_ij beta_j - y_i
  for (std::size_t i = 0; i < n; ++i) g[i] = -labels[i];

  // Admissible bias interval of one point given its beta classification.
  const double inf = std::numeric_limits<double>::infinity();
  auto interval = [&](std::size_t i, double& lo, double& hi) {
    double b = beta[i];
    if (b >= C - bound_tau) {
      lo = -inf;
      hi = -eps - g[i];
    } else if (b > bound_tau) {
      lo = hi = -eps - g[i];
    } else if (b >= -bound_tau) {
      lo = -eps - g[i];
      hi = eps - g[i];
    } else if (b > -C + bound_tau) {
      lo = hi = eps - g[i];
    } else {
      lo = eps - g[i];
      hi = inf;
    }
  };

  std::size_t updates = 0;
  bool converged = false;
  while (true) {
    // maximal-violation pair: u = argmax lower bias bound, v = argmin upper
    double b_lo = -inf, b_hi = inf;
    std::size_t u = n, v = n;
    for (std::size_t i = 0; i < n; ++i) {
      double lo, hi;
      interval(i, lo, hi);
      if (lo > b_lo) {
        b_lo = lo;
        u = i;
      }
      if (hi < b_hi) {
        b_hi = hi;
        v = i;
      }
    }
    if (u >= n || v >= n || u == v || b_lo - b_hi <= options.tol) {
      converged = true;
      break;
    }
    if (updates >= max_updates) break;

    // References stay valid: the cache holds at least two rows and no other
    // row is fetched while these are live.
    const std::vector<double>& Ku = cache.row(u);
    const std::vector<double>& Kv = cache.row(v);
    // One-dimensional problem in t along (e_u - e_v), piecewise quadratic:
    //   phi(t) = t*(g_u - g_v) + t^2*eta/2
    //          + eps*(|beta_u + t| - |beta_u|) + eps*(|beta_v - t| - |beta_v|)
    const double eta = Ku[u] + Kv[v] - 2.0 * Ku[v];
    const double t_lo = std::max(-C - beta[u], beta[v] - C);
    const double t_hi = std::min(C - beta[u], beta[v] + C);
    auto phi = [&](double t) {
      return t * (g[u] - g[v]) + 0.5 * eta * t * t + eps * (std::abs(beta[u] + t) - std::abs(beta[u])) +
             eps * (std::abs(beta[v] - t) - std::abs(beta[v]));
    };
    // Candidates cover every possible minimizer: box ends, the two kink
    // points, and the stationary point of each smooth piece. Extra
    // candidates are harmless since phi is evaluated exactly.
    std::vector<double> cand = {t_lo, t_hi};
    auto add_cand = [&](double t) {
      if (t > t_lo && t < t_hi) cand.push_back(t);
    };
    add_cand(-beta[u]);
    add_cand(beta[v]);
    if (eta > 1e-12) {
      double base = g[u] - g[v];
      for (double kink : {-2.0 * eps, 0.0, 2.0 * eps}) add_cand(-(base + kink) / eta);
    }
    double best_t = 0.0, best_phi = 0.0;
    for (double t : cand) {
      double p = phi(t);
      if (p < best_phi) {
        best_phi = p;
        best_t = t;
      }
    }
    if (best_t == 0.0) break;  // no representable decrease; converged flag stays false

    beta[u] += best_t;
    beta[v] -= best_t;
    for (std::size_t k = 0; k < n; ++k) g[k] += best_t * (Ku[k] - Kv[k]);
    ++updates;
  }

  // Bias: average implied bias over free support vectors, else interval
  // midpoint.
  double b_lo = -inf, b_hi = inf;
  double bias_sum = 0.0;
  std::size_t n_free = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double lo, hi;
    interval(i, lo, hi);
    b_lo = std::max(b_lo, lo);
    b_hi = std::min(b_hi, hi);
    bool free_pos = beta[i] > bound_tau && beta[i] < C - bound_tau;
    bool free_neg = beta[i] < -bound_tau && beta[i] > -C + bound_tau;
    if (free_pos || free_neg) {
      bias_sum += free_pos ? -eps - g[i] : eps - g[i];
      ++n_free;
    }
  }
  double bias;
  if (n_free > 0)
    bias = bias_sum / double(n_free);
  else if (std::isfinite(b_lo) && std::isfinite(b_hi))
    bias = 0.5 * (b_lo + b_hi);
  else if (std::isfinite(b_lo))
    bias = b_lo;
  else if (std::isfinite(b_hi))
    bias = b_hi;
  else
    bias = 0.0;

  TrainResult result;
  result.converged = converged;
  result.pair_updates = updates;
  // W = -1/2 b'Kb - eps sum|b| + y'b, with b'Kb = sum_i beta_i (g_i + y_i)
  double w = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    w += -0.5 * beta[i] * (g[i] + labels[i]) - eps * std::abs(beta[i]) + labels[i] * beta[i];
  result.dual_objective = w;

  SvrModel& model = result.model;
  model.hyper = hyper;
  model.bias = bias;
  model.converged = converged;
  model.feature_dim = points.empty() ? 0 : points[0].size();
  for (std::size_t i = 0; i < n; ++i) {
    if (beta[i] != 0.0) {
      model.support_points.push_back(points[i]);
      model.dual_weights.push_back(beta[i]);
    }
  }
  result.beta = std::move(beta);
  return result;
}

double dual_objective(const std::vector<std::vector<double>>& points, const std::vector<double>& labels,
                      const SvrHyper& hyper, const std::vector<double>& beta) {
  double quad = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = 0; j < points.size(); ++j)
      quad += beta[i] * beta[j] * kernel_eval(hyper.kernel, points[i], points[j]);
  double w = -0.5 * quad;
  for (std::size_t i = 0; i < points.size(); ++i)
    w += -hyper.epsilon * std::abs(beta[i]) + labels[i] * beta[i];
  return w;
}

double mae(const std::vector<double>& preds, const std::vector<double>& labels) {
  if (preds.size() != labels.size()) fail(Errc::length_mismatch, "mae: length mismatch");
  if (preds.empty()) fail(Errc::empty_input, "mae: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) s += std::abs(labels[i] - preds[i]);
  return s;
}

namespace {

double cmae_impl(const std::vector<double>& preds, const std::vector<double>& labels, double delta,
                 bool abs_midband) {
  if (preds.size() != labels.size()) fail(Errc::length_mismatch, "cmae: length mismatch");
  if (preds.empty()) fail(Errc::empty_input, "cmae: empty input");
  if (!(delta > 0.0 && delta <= 0.5)) fail(Errc::bad_delta, "cmae: delta must lie in (0, 0.5]");
  double s = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    double p = labels[i], q = preds[i];
    // cases evaluated in order, first match wins
    if (p <= delta && q > p) {
      s += (q - p) * (1.0 + 1.0 / (1.0 + std::exp(p - q)));
    } else if (p >= 1.0 - delta && q < p) {
      s += (p - q) * (1.0 + 1.0 / (1.0 + std::exp(q - p)));
    } else if (p >= delta && p <= 1.0 - delta) {
      s += abs_midband ? std::abs(p - q) : (p - q);
    }
    // otherwise: contributes 0
  }
  return s;
}

}  // namespace

double cmae(const std::vector<double>& preds, const std::vector<double>& labels, double delta) {
  return cmae_impl(preds, labels, delta, false);
}

double cmae_abs_midband(const std::vector<double>& preds, const std::vector<double>& labels, double delta) {
  return cmae_impl(preds, labels, delta, true);
}

std::string SvrModel::to_json_text() const {
  json doc;
  doc["kernel"] = {{"kind", "gaussian"}, {"gamma", format_double(hyper.kernel.gamma)}};
  doc["C"] = format_double(hyper.C);
  doc["epsilon"] = format_double(hyper.epsilon);
  doc["bias"] = format_double(bias);
  doc["converged"] = converged;
  doc["feature_dim"] = feature_dim;
  doc["feature_columns"] = feature_columns;
  doc["config_columns"] = config_columns;
  json means = json::array(), scales = json::array();
  for (double m : scaler_means) means.push_back(format_double(m));
  for (double s : scaler_scales) scales.push_back(format_double(s));
  doc["scaler"] = {{"means", means}, {"scales", scales}};
  json sp = json::array(), dw = json::array();
  for (const auto& p : support_points) {
    json row = json::array();
    for (double v : p) row.push_back(format_double(v));
    sp.push_back(row);
  }
  for (double w : dual_weights) dw.push_back(format_double(w));
  doc["support_points"] = sp;
  doc["dual_weights"] = dw;
  return doc.dump(2) + "\n";
}

SvrModel SvrModel::from_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(Errc::parse, std::string("model file is not valid JSON: ") + e.what());
  }
  SvrModel m;
  if (doc.at("kernel").at("kind").get<std::string>() != "gaussian")
    fail(Errc::parse, "model file: only the gaussian kernel is supported");
  m.hyper.kernel.gamma = parse_double(doc["kernel"].at("gamma").get<std::string>());
  m.hyper.C = parse_double(doc.at("C").get<std::string>());
  m.hyper.epsilon = parse_double(doc.at("epsilon").get<std::string>());
  m.bias = parse_double(doc.at("bias").get<std::string>());
  m.converged = doc.value("converged", true);
  m.feature_dim = doc.at("feature_dim").get<std::size_t>();
  for (const auto& c : doc.value("feature_columns", json::array()))
    m.feature_columns.push_back(c.get<std::string>());
  for (const auto& c : doc.at("config_columns")) m.config_columns.push_back(c.get<std::string>());
  for (const auto& v : doc.at("scaler").at("means")) m.scaler_means.push_back(parse_double(v.get<std::string>()));
  for (const auto& v : doc.at("scaler").at("scales")) m.scaler_scales.push_back(parse_double(v.get<std::string>()));
  for (const auto& row : doc.at("support_points")) {
    std::vector<double> p;
    for (const auto& v : row) p.push_back(parse_double(v.get<std::string>()));
    m.support_points.push_back(std::move(p));
  }
  for (const auto& w : doc.at("dual_weights")) m.dual_weights.push_back(parse_double(w.get<std::string>()));
  if (m.support_points.size() != m.dual_weights.size())
    fail(Errc::parse, "model file: support point and weight counts differ");
  for (const auto& p : m.support_points)
    if (p.size() != m.input_dim()) fail(Errc::parse, "model file: support point dimension mismatch");
  return m;
}

void SvrModel::save(const std::string& path) const { write_file(path, to_json_text()); }

SvrModel SvrModel::load(const std::string& path) { return from_json_text(read_file(path)); }

}  // namespace perfmap
