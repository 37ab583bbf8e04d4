#include "dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

#include "error.hpp"
#include "features.hpp"
#include "rng.hpp"
#include "textio.hpp"

namespace perfmap {

std::size_t Dataset::seed_count() const {
  std::size_t n = 0;
  for (const auto& r : records) n = std::max(n, r.seed_values.size());
  return n;
}

const InstanceFeatures& Dataset::features_of(const std::string& instance_id) const {
  auto it = features.find(instance_id);
  if (it == features.end()) fail(Errc::unknown_column, "no features for instance '" + instance_id + "'");
  return it->second;
}

std::vector<std::string> Dataset::instance_ids() const {
  std::vector<std::string> ids;
  ids.reserve(features.size());
  for (const auto& [id, f] : features) ids.push_back(id);
  return ids;  // std::map iteration is already sorted
}

double aggregate_seeds(const std::vector<double>& values) {
  if (values.empty()) fail(Errc::empty_input, "aggregate_seeds: empty value list");
  std::vector<double> v = values;
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double NormalizationParams::apply(double raw) const {
  double v = raw > threshold ? clip_to : raw;
  double range = hi - lo;
  if (range <= 0.0) return 0.0;
  return (v - lo) / range;
}

std::pair<std::vector<double>, NormalizationParams> normalize_performance(
    const std::vector<double>& raw, double threshold) {
  if (raw.empty()) fail(Errc::empty_input, "normalize_performance: empty value list");
  bool any_kept = false;
  double kept_max = 0.0;
  for (double v : raw) {
    if (v <= threshold) {
      kept_max = any_kept ? std::max(kept_max, v) : v;
      any_kept = true;
    }
  }
  if (!any_kept)
    fail(Errc::all_above_threshold, "normalize_performance: every value exceeds the threshold " +
                                         format_double(threshold));
  NormalizationParams params;
  params.threshold = threshold;
  params.clip_to = kept_max + 100.0;
  double lo = raw[0] > threshold ? params.clip_to : raw[0];
  double hi = lo;
  for (double v : raw) {
    double c = v > threshold ? params.clip_to : v;
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  params.lo = lo;
  params.hi = hi;
  std::vector<double> out;
  out.reserve(raw.size());
  for (double v : raw) out.push_back(params.apply(v));
  return {std::move(out), params};
}

NormalizationParams normalize_dataset(Dataset& ds, double threshold) {
  std::vector<double> raw;
  raw.reserve(ds.records.size());
  for (const auto& r : ds.records) raw.push_back(r.p_raw);
  auto [norm, params] = normalize_performance(raw, threshold);
  for (std::size_t i = 0; i < ds.records.size(); ++i) ds.records[i].p_norm = norm[i];
  return params;
}

GapResult compute_gaps(double opt_value, std::optional<double> incumbent,
                       std::optional<double> best_bound, bool gap_eps) {
  double denom = std::abs(opt_value);
  if (denom == 0.0) {
    if (!gap_eps) fail(Errc::zero_optimum, "compute_gaps: optimum value is zero");
    denom = 1e-10;
  }
  GapResult out;
  if (incumbent) out.primal = std::abs(opt_value - *incumbent) / denom;
  if (best_bound) out.dual = std::abs(*best_bound - opt_value) / denom;
  return out;
}

namespace {

std::vector<std::size_t> column_indices(const std::vector<std::string>& have,
                                        const std::vector<std::string>& want) {
  std::vector<std::size_t> idx;
  idx.reserve(want.size());
  for (const std::string& name : want) {
    auto it = std::find(have.begin(), have.end(), name);
    if (it == have.end()) fail(Errc::unknown_column, "unknown column '" + name + "'");
    idx.push_back(std::size_t(it - have.begin()));
  }
  return idx;
}

}  // namespace

Dataset dedup_group_average(const Dataset& ds, const std::vector<std::string>& kept_feature_columns,
                            const std::vector<std::string>& kept_config_columns) {
  auto feat_idx = column_indices(ds.feature_names, kept_feature_columns);
  auto conf_idx = column_indices(ds.config_columns, kept_config_columns);

  Dataset out;
  out.feature_names = kept_feature_columns;
  out.config_columns = kept_config_columns;
  out.split = ds.split;

  // group key -> output row index
  std::map<std::string, std::size_t> groups;
  std::vector<double> sums;
  std::vector<std::size_t> counts;
  for (const PerformanceRecord& r : ds.records) {
    if (!r.p_norm) fail(Errc::empty_input, "dedup_group_average: dataset is not normalized");
    const auto& fv = ds.features_of(r.instance_id).values;
    std::string key;
    for (std::size_t i : feat_idx) key += format_double(fv[i]) + "|";
    key += "#";
    for (std::size_t i : conf_idx) key += char('0' + r.encoding[i]);
    auto [it, fresh] = groups.try_emplace(key, out.records.size());
    if (fresh) {
      PerformanceRecord nr = r;
      std::vector<std::uint8_t> enc;
      enc.reserve(conf_idx.size());
      for (std::size_t i : conf_idx) enc.push_back(r.encoding[i]);
      nr.encoding = std::move(enc);
      out.records.push_back(std::move(nr));
      sums.push_back(*r.p_norm);
      counts.push_back(1);
      if (!out.features.count(r.instance_id)) {
        InstanceFeatures pf = ds.features_of(r.instance_id);
        std::vector<double> pv;
        pv.reserve(feat_idx.size());
        for (std::size_t i : feat_idx) pv.push_back(pf.values[i]);
        pf.values = std::move(pv);
        out.features[r.instance_id] = std::move(pf);
      }
    } else {
      sums[it->second] += *r.p_norm;
      counts[it->second] += 1;
    }
  }
  for (std::size_t i = 0; i < out.records.size(); ++i) out.records[i].p_norm = sums[i] / double(counts[i]);
  return out;
}

void split_instances(Dataset& ds, double os_fraction, std::uint64_t seed) {
  if (!(os_fraction > 0.0 && os_fraction < 1.0))
    fail(Errc::bad_config, "os_fraction must lie strictly between 0 and 1");
  std::vector<std::string> ids = ds.instance_ids();
  if (ids.size() < 2) fail(Errc::too_few_instances, "need at least 2 instances to split");
  Rng rng(seed);
  rng.shuffle(ids);
  std::size_t n_os = std::size_t(std::llround(os_fraction * double(ids.size())));
  n_os = std::min(std::max<std::size_t>(n_os, 0), ids.size());
  ds.split.clear();
  for (std::size_t i = 0; i < ids.size(); ++i)
    ds.split[ids[i]] = i < n_os ? Split::out_sample : Split::in_sample;
}

Dataset subsample_rows(const Dataset& ds, std::size_t size, std::uint64_t seed) {
  if (size == 0 || size >= ds.records.size()) return ds;
  std::vector<std::size_t> idx(ds.records.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(idx);
  idx.resize(size);
  std::sort(idx.begin(), idx.end());  // keep original row order
  Dataset out;
  out.feature_names = ds.feature_names;
  out.config_columns = ds.config_columns;
  out.split = ds.split;
  for (std::size_t i : idx) {
    out.records.push_back(ds.records[i]);
    const std::string& id = ds.records[i].instance_id;
    if (!out.features.count(id)) out.features[id] = ds.features_of(id);
  }
  return out;
}

Dataset filter_split(const Dataset& ds, Split which) {
  Dataset out;
  out.feature_names = ds.feature_names;
  out.config_columns = ds.config_columns;
  for (const PerformanceRecord& r : ds.records) {
    auto it = ds.split.find(r.instance_id);
    if (it == ds.split.end() || it->second != which) continue;
    out.records.push_back(r);
    if (!out.features.count(r.instance_id)) {
      out.features[r.instance_id] = ds.features_of(r.instance_id);
      out.split[r.instance_id] = which;
    }
  }
  return out;
}

std::string Dataset::to_csv() const {
  std::ostringstream out;
  std::size_t n_seeds = seed_count();
  std::vector<std::string> header;
  header.push_back("instance_id");
  for (const auto& f : feature_names) header.push_back(f);
  for (const auto& c : config_columns) header.push_back(c);
  for (std::size_t s = 0; s < n_seeds; ++s) header.push_back("seed" + std::to_string(s));
  header.insert(header.end(), {"p_raw", "p_norm", "primal_gap", "dual_gap", "split"});
  out << join_csv(header) << "\n";
  for (const PerformanceRecord& r : records) {
    std::vector<std::string> row;
    row.push_back(r.instance_id);
    const auto& fv = features_of(r.instance_id).values;
    if (fv.size() != feature_names.size())
      fail(Errc::bad_length, "feature vector length mismatch for instance '" + r.instance_id + "'");
    for (double v : fv) row.push_back(format_double(v));
    if (r.encoding.size() != config_columns.size())
      fail(Errc::bad_length, "encoding length mismatch for instance '" + r.instance_id + "'");
    for (std::uint8_t b : r.encoding) row.push_back(b ? "1" : "0");
    for (std::size_t s = 0; s < n_seeds; ++s)
      row.push_back(s < r.seed_values.size() ? format_double(r.seed_values[s]) : "");
    row.push_back(format_double(r.p_raw));
    row.push_back(opt_field(r.p_norm));
    row.push_back(opt_field(r.primal_gap));
    row.push_back(opt_field(r.dual_gap));
    auto it = split.find(r.instance_id);
    row.push_back(it == split.end() ? "" : (it->second == Split::in_sample ? "IS" : "OS"));
    out << join_csv(row) << "\n";
  }
  return out.str();
}

Dataset Dataset::from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) fail(Errc::parse, "dataset CSV is empty");
  std::vector<std::string> header = split_csv_line(line);
  if (header.empty() || header[0] != "instance_id")
    fail(Errc::parse, "dataset CSV must start with an instance_id column");

  // Fixed trailing columns; seeds sit between them and the front matter.
  const std::vector<std::string> tail = {"p_raw", "p_norm", "primal_gap", "dual_gap", "split"};
  if (header.size() < 1 + tail.size()) fail(Errc::parse, "dataset CSV header too short");
  for (std::size_t i = 0; i < tail.size(); ++i) {
    if (header[header.size() - tail.size() + i] != tail[i])
      fail(Errc::parse, "dataset CSV must end with columns p_raw,p_norm,primal_gap,dual_gap,split");
  }
  std::size_t tail_start = header.size() - tail.size();
  std::size_t seed_start = tail_start;
  while (seed_start > 1 && header[seed_start - 1].rfind("seed", 0) == 0) --seed_start;

  Dataset ds;
  for (std::size_t i = 1; i < seed_start; ++i) {
    // encoding-bit columns are named "<param>=<value>"
    if (header[i].find('=') != std::string::npos)
      ds.config_columns.push_back(header[i]);
    else if (ds.config_columns.empty())
      ds.feature_names.push_back(header[i]);
    else
      fail(Errc::parse, "feature column '" + header[i] + "' appears after config columns");
  }
  std::size_t n_feat = ds.feature_names.size();
  std::size_t n_conf = ds.config_columns.size();
  std::size_t n_seeds = tail_start - seed_start;

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f = split_csv_line(line);
    if (f.size() != header.size())
      fail(Errc::parse, "dataset CSV row " + std::to_string(line_no) + " has " + std::to_string(f.size()) +
                            " fields, expected " + std::to_string(header.size()));
    PerformanceRecord r;
    r.instance_id = f[0];
    std::vector<double> fv;
    fv.reserve(n_feat);
    for (std::size_t i = 0; i < n_feat; ++i) fv.push_back(parse_double(f[1 + i]));
    for (std::size_t i = 0; i < n_conf; ++i) {
      const std::string& b = f[1 + n_feat + i];
      if (b != "0" && b != "1") fail(Errc::parse, "encoding field must be 0 or 1, got '" + b + "'");
      r.encoding.push_back(b == "1" ? 1 : 0);
    }
    for (std::size_t i = 0; i < n_seeds; ++i) {
      const std::string& s = f[1 + n_feat + n_conf + i];
      if (!s.empty()) r.seed_values.push_back(parse_double(s));
    }
    r.p_raw = parse_double(f[tail_start]);
    r.p_norm = parse_opt_field(f[tail_start + 1]);
    r.primal_gap = parse_opt_field(f[tail_start + 2]);
    r.dual_gap = parse_opt_field(f[tail_start + 3]);
    const std::string& sp = f[tail_start + 4];
    if (sp == "IS")
      ds.split[r.instance_id] = Split::in_sample;
    else if (sp == "OS")
      ds.split[r.instance_id] = Split::out_sample;
    else if (!sp.empty())
      fail(Errc::parse, "split tag must be IS, OS or empty, got '" + sp + "'");
    auto it = ds.features.find(r.instance_id);
    if (it == ds.features.end()) {
      ds.features[r.instance_id] = InstanceFeatures{r.instance_id, std::move(fv), std::nullopt};
    } else if (it->second.values != fv) {
      fail(Errc::parse, "instance '" + r.instance_id + "' has inconsistent feature rows");
    }
    ds.records.push_back(std::move(r));
  }
  return ds;
}

void Dataset::save(const std::string& path) const { write_file(path, to_csv()); }

Dataset Dataset::load(const std::string& path) { return from_csv(read_file(path)); }

std::string InstanceSet::to_json_text() const {
  using json = nlohmann::json;
  json doc;
  doc["schema"] = schema;
  doc["instances"] = json::array();
  for (const InstanceFeatures& inst : instances) {
    json values = json::array();
    for (double v : inst.values) values.push_back(format_double(v));
    json j = {{"id", inst.instance_id}, {"values", values}};
    if (inst.opt_value) j["opt_value"] = format_double(*inst.opt_value);
    doc["instances"].push_back(j);
  }
  return doc.dump(2) + "\n";
}

InstanceSet InstanceSet::from_json_text(const std::string& text) {
  using json = nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(Errc::parse, std::string("instances file is not valid JSON: ") + e.what());
  }
  InstanceSet out;
  for (const auto& s : doc.at("schema")) {
    std::string name = s.get<std::string>();
    if (name.find('=') != std::string::npos || name.find(',') != std::string::npos)
      fail(Errc::parse, "feature name '" + name + "' may not contain '=' or ','");
    out.schema.push_back(name);
  }
  std::set<std::string> ids;
  for (const auto& j : doc.at("instances")) {
    InstanceFeatures inst;
    inst.instance_id = j.at("id").get<std::string>();
    if (inst.instance_id.empty() || inst.instance_id.find(',') != std::string::npos ||
        inst.instance_id.find('\n') != std::string::npos)
      fail(Errc::parse, "instance id '" + inst.instance_id + "' must be nonempty without ',' or newlines");
    if (!ids.insert(inst.instance_id).second)
      fail(Errc::parse, "duplicate instance id '" + inst.instance_id + "'");
    for (const auto& v : j.at("values")) {
      if (v.is_number()) {
        inst.values.push_back(v.get<double>());
      } else {
        // strings are either 17g-formatted numbers or ISO dates
        std::string s = v.get<std::string>();
        try {
          inst.values.push_back(parse_double(s));
        } catch (const Error&) {
          inst.values.push_back(double(parse_date_ymd(s)));
        }
      }
    }
    if (inst.values.size() != out.schema.size())
      fail(Errc::parse, "instance '" + inst.instance_id + "' has " + std::to_string(inst.values.size()) +
                            " values, schema has " + std::to_string(out.schema.size()));
    if (j.contains("opt_value")) {
      const auto& ov = j["opt_value"];
      inst.opt_value = ov.is_number() ? ov.get<double>() : parse_double(ov.get<std::string>());
    }
    out.instances.push_back(std::move(inst));
  }
  return out;
}

void InstanceSet::save(const std::string& path) const { write_file(path, to_json_text()); }

InstanceSet InstanceSet::load(const std::string& path) { return from_json_text(read_file(path)); }

}  // namespace perfmap
