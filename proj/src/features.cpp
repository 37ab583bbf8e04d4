#include "features.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "error.hpp"
#include "textio.hpp"

namespace perfmap {

using json = nlohmann::json;

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

DateFeatures expand_date(int year, int month, int day, const std::set<int>& holidays) {
  using namespace std::chrono;
  year_month_day ymd{std::chrono::year{year}, std::chrono::month{unsigned(month)},
                     std::chrono::day{unsigned(day)}};
  if (month < 1 || month > 12 || day < 1 || !ymd.ok())
    fail(Errc::invalid_date, "invalid date " + std::to_string(year) + "-" + std::to_string(month) + "-" +
                                 std::to_string(day));
  sys_days sd{ymd};
  DateFeatures out;
  // Meteorological seasons: 12,1,2 -> 0 (winter); 3,4,5 -> 1; 6,7,8 -> 2; 9,10,11 -> 3.
  out.season = (month % 12) / 3;
  unsigned iso = std::chrono::weekday{sd}.iso_encoding();  // 1 = Monday .. 7 = Sunday
  out.weekday = double(iso - 1);
  out.is_weekend = iso >= 6 ? 1.0 : 0.0;
  out.is_holiday = holidays.count(year * 10000 + month * 100 + day) ? 1.0 : 0.0;
  sys_days jan1{year_month_day{std::chrono::year{year}, std::chrono::month{1}, std::chrono::day{1}}};
  out.yearday = double((sd - jan1).count() + 1);
  out.weekday_sin = std::sin(kTwoPi * out.weekday / 7.0);
  out.weekday_cos = std::cos(kTwoPi * out.weekday / 7.0);
  out.yearday_sin = std::sin(kTwoPi * out.yearday / 365.25);
  out.yearday_cos = std::cos(kTwoPi * out.yearday / 365.25);
  return out;
}

int parse_date_ymd(const std::string& text) {
  if (text.size() == 10 && text[4] == '-' && text[7] == '-') {
    int y = std::stoi(text.substr(0, 4));
    int m = std::stoi(text.substr(5, 2));
    int d = std::stoi(text.substr(8, 2));
    return y * 10000 + m * 100 + d;
  }
  try {
    std::size_t pos = 0;
    int v = std::stoi(text, &pos);
    if (pos == text.size()) return v;
  } catch (...) {
  }
  fail(Errc::invalid_date, "cannot parse date '" + text + "'");
}

StatFeatures augment_stats(const std::vector<double>& group) {
  if (group.empty()) fail(Errc::empty_group, "augment_stats: empty group");
  StatFeatures s;
  s.min = s.max = group[0];
  for (double v : group) {
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
    s.sum += v;
  }
  s.mean = s.sum / double(group.size());
  double ss = 0.0;
  for (double v : group) ss += (v - s.mean) * (v - s.mean);
  s.sd = std::sqrt(ss / double(group.size()));
  return s;
}

void FeaturePipeline::fit(const std::vector<std::string>& input_schema,
                          const std::vector<const InstanceFeatures*>& fit_rows) {
  input_schema_ = input_schema;
  output_schema_.clear();
  passthrough_.clear();
  cyclical_.clear();
  stat_indices_.clear();
  date_index_.reset();

  auto find_column = [&](const std::string& name) -> std::size_t {
    auto it = std::find(input_schema_.begin(), input_schema_.end(), name);
    if (it == input_schema_.end()) fail(Errc::unknown_column, "pipeline references unknown column '" + name + "'");
    return std::size_t(it - input_schema_.begin());
  };

  if (config_.date_column) date_index_ = find_column(*config_.date_column);
  for (std::size_t i = 0; i < input_schema_.size(); ++i) {
    if (date_index_ && *date_index_ == i) continue;
    passthrough_.push_back(i);
    output_schema_.push_back(input_schema_[i]);
  }
  if (date_index_) {
    const std::string& d = *config_.date_column;
    for (const char* suffix : {".season", ".weekday", ".yearday", ".is_weekend", ".is_holiday",
                               ".weekday_sin", ".weekday_cos", ".yearday_sin", ".yearday_cos"})
      output_schema_.push_back(d + suffix);
  }
  for (const CyclicalSpec& c : config_.cyclical) {
    if (!(c.period > 0)) fail(Errc::bad_config, "cyclical period must be positive");
    cyclical_.emplace_back(find_column(c.column), c.period);
    output_schema_.push_back(c.column + ".sin");
    output_schema_.push_back(c.column + ".cos");
  }
  for (const StatGroup& g : config_.stat_groups) {
    if (g.columns.empty()) fail(Errc::empty_group, "stat group '" + g.name + "' is empty");
    std::vector<std::size_t> idx;
    for (const std::string& c : g.columns) idx.push_back(find_column(c));
    stat_indices_.push_back(std::move(idx));
    for (const char* suffix : {".min", ".max", ".mean", ".sd", ".sum"})
      output_schema_.push_back(g.name + suffix);
  }

  means_.assign(output_schema_.size(), 0.0);
  scales_.assign(output_schema_.size(), 1.0);
  fitted_ = true;
  if (config_.standardize) {
    if (fit_rows.empty()) fail(Errc::empty_input, "cannot fit standardization on zero rows");
    std::vector<double> sum(output_schema_.size(), 0.0), sumsq(output_schema_.size(), 0.0);
    for (const InstanceFeatures* row : fit_rows) {
      std::vector<double> eng = engineer(row->values);
      for (std::size_t j = 0; j < eng.size(); ++j) {
        sum[j] += eng[j];
        sumsq[j] += eng[j] * eng[j];
      }
    }
    double n = double(fit_rows.size());
    for (std::size_t j = 0; j < output_schema_.size(); ++j) {
      means_[j] = sum[j] / n;
      double var = std::max(0.0, sumsq[j] / n - means_[j] * means_[j]);
      double sd = std::sqrt(var);
      scales_[j] = sd > 1e-12 ? sd : 1.0;
    }
  }
}

std::vector<double> FeaturePipeline::engineer(const std::vector<double>& raw) const {
  if (raw.size() != input_schema_.size())
    fail(Errc::dimension_mismatch, "feature vector has " + std::to_string(raw.size()) + " entries, schema has " +
                                       std::to_string(input_schema_.size()));
  std::vector<double> out;
  out.reserve(output_schema_.size());
  for (std::size_t i : passthrough_) out.push_back(raw[i]);
  if (date_index_) {
    int ymd = int(std::llround(raw[*date_index_]));
    DateFeatures d = expand_date(ymd / 10000, ymd / 100 % 100, ymd % 100, config_.holidays);
    for (double v : {d.season, d.weekday, d.yearday, d.is_weekend, d.is_holiday, d.weekday_sin,
                     d.weekday_cos, d.yearday_sin, d.yearday_cos})
      out.push_back(v);
  }
  for (const auto& [idx, period] : cyclical_) {
    out.push_back(std::sin(kTwoPi * raw[idx] / period));
    out.push_back(std::cos(kTwoPi * raw[idx] / period));
  }
  for (const auto& idx : stat_indices_) {
    std::vector<double> group;
    group.reserve(idx.size());
    for (std::size_t i : idx) group.push_back(raw[i]);
    StatFeatures s = augment_stats(group);
    for (double v : {s.min, s.max, s.mean, s.sd, s.sum}) out.push_back(v);
  }
  return out;
}

std::vector<double> FeaturePipeline::transform(const std::vector<double>& raw) const {
  if (!fitted_) fail(Errc::bad_config, "pipeline must be fitted before transform");
  std::vector<double> out = engineer(raw);
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = (out[j] - means_[j]) / scales_[j];
  return out;
}

std::string FeaturePipeline::to_json_text() const {
  json doc;
  doc["date_column"] = config_.date_column ? json(*config_.date_column) : json(nullptr);
  doc["holidays"] = config_.holidays;
  doc["cyclical"] = json::array();
  for (const auto& c : config_.cyclical) doc["cyclical"].push_back({{"column", c.column}, {"period", c.period}});
  doc["stat_groups"] = json::array();
  for (const auto& g : config_.stat_groups)
    doc["stat_groups"].push_back({{"name", g.name}, {"columns", g.columns}});
  doc["standardize"] = config_.standardize;
  doc["fitted"] = fitted_;
  doc["input_schema"] = input_schema_;
  doc["output_schema"] = output_schema_;
  json means = json::array(), scales = json::array();
  for (double m : means_) means.push_back(format_double(m));
  for (double s : scales_) scales.push_back(format_double(s));
  doc["means"] = means;
  doc["scales"] = scales;
  return doc.dump(2) + "\n";
}

FeaturePipeline FeaturePipeline::from_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(Errc::parse, std::string("pipeline file is not valid JSON: ") + e.what());
  }
  Config cfg;
  if (!doc.at("date_column").is_null()) cfg.date_column = doc["date_column"].get<std::string>();
  for (const auto& h : doc.value("holidays", json::array())) cfg.holidays.insert(h.get<int>());
  for (const auto& c : doc.value("cyclical", json::array()))
    cfg.cyclical.push_back({c.at("column").get<std::string>(), c.at("period").get<double>()});
  for (const auto& g : doc.value("stat_groups", json::array())) {
    StatGroup sg;
    sg.name = g.at("name").get<std::string>();
    for (const auto& c : g.at("columns")) sg.columns.push_back(c.get<std::string>());
    cfg.stat_groups.push_back(std::move(sg));
  }
  cfg.standardize = doc.value("standardize", true);
  FeaturePipeline p(cfg);
  if (doc.value("fitted", false)) {
    std::vector<std::string> input_schema;
    for (const auto& s : doc.at("input_schema")) input_schema.push_back(s.get<std::string>());
    // refit structure without rows, then restore stored constants
    p.config_.standardize = false;
    p.fit(input_schema, {});
    p.config_.standardize = cfg.standardize;
    p.means_.clear();
    p.scales_.clear();
    for (const auto& m : doc.at("means")) p.means_.push_back(parse_double(m.get<std::string>()));
    for (const auto& s : doc.at("scales")) p.scales_.push_back(parse_double(s.get<std::string>()));
    if (p.means_.size() != p.output_schema_.size() || p.scales_.size() != p.output_schema_.size())
      fail(Errc::parse, "pipeline file constants do not match its schema");
  }
  return p;
}

void FeaturePipeline::save(const std::string& path) const { write_file(path, to_json_text()); }

FeaturePipeline FeaturePipeline::load(const std::string& path) {
  return from_json_text(read_file(path));
}

std::string SelectionScenario::to_json_text() const {
  json doc;
  doc["name"] = name;
  doc["feature_columns"] = feature_columns;
  doc["config_columns"] = config_columns;
  return doc.dump(2) + "\n";
}

SelectionScenario SelectionScenario::from_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(Errc::parse, std::string("scenario file is not valid JSON: ") + e.what());
  }
  SelectionScenario s;
  s.name = doc.at("name").get<std::string>();
  for (const auto& c : doc.at("feature_columns")) s.feature_columns.push_back(c.get<std::string>());
  for (const auto& c : doc.at("config_columns")) s.config_columns.push_back(c.get<std::string>());
  return s;
}

void SelectionScenario::save(const std::string& path) const { write_file(path, to_json_text()); }

SelectionScenario SelectionScenario::load(const std::string& path) {
  return from_json_text(read_file(path));
}

namespace {

// Pearson correlation of two equal-length columns; 0 when either is constant.
double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  double n = double(a.size());
  double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0 || sbb <= 0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

SelectionScenario select_by_correlation(const Dataset& ds, std::size_t max_features,
                                        double redundancy_cutoff, const std::string& name) {
  if (ds.records.size() < 2) fail(Errc::empty_input, "feature selection needs at least 2 rows");

  // Canonical row order makes the selection invariant to input row order.
  std::vector<std::size_t> order(ds.records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ra = ds.records[a];
    const auto& rb = ds.records[b];
    if (ra.instance_id != rb.instance_id) return ra.instance_id < rb.instance_id;
    return ra.encoding < rb.encoding;
  });

  std::size_t n_cols = ds.feature_names.size();
  std::vector<std::vector<double>> cols(n_cols, std::vector<double>(order.size()));
  std::vector<double> label(order.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    const PerformanceRecord& rec = ds.records[order[r]];
    if (!rec.p_norm) fail(Errc::empty_input, "feature selection needs normalized labels");
    label[r] = *rec.p_norm;
    const auto& fv = ds.features_of(rec.instance_id).values;
    for (std::size_t c = 0; c < n_cols; ++c) cols[c][r] = fv[c];
  }

  std::vector<std::size_t> candidates;
  for (std::size_t c = 0; c < n_cols; ++c) {
    double first = cols[c][0];
    bool constant = std::all_of(cols[c].begin(), cols[c].end(), [&](double v) { return v == first; });
    if (!constant) candidates.push_back(c);
  }
  if (candidates.empty()) fail(Errc::no_variance, "all feature columns are constant");

  std::vector<double> corr(n_cols, 0.0);
  for (std::size_t c : candidates) corr[c] = pearson(cols[c], label);
  std::stable_sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(corr[a]) > std::abs(corr[b]);
  });

  std::vector<std::size_t> kept;
  for (std::size_t c : candidates) {
    if (kept.size() >= max_features) break;
    bool redundant = false;
    for (std::size_t k : kept) {
      if (std::abs(pearson(cols[c], cols[k])) > redundancy_cutoff) {
        redundant = true;
        break;
      }
    }
    if (!redundant) kept.push_back(c);
  }
  std::sort(kept.begin(), kept.end());  // schema order for the output

  SelectionScenario out;
  out.name = name;
  for (std::size_t c : kept) out.feature_columns.push_back(ds.feature_names[c]);
  out.config_columns = ds.config_columns;
  return out;
}

Dataset apply_scenario(const Dataset& ds, const SelectionScenario& scenario) {
  return dedup_group_average(ds, scenario.feature_columns, scenario.config_columns);
}

}  // namespace perfmap
