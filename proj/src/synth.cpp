#include "synth.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "error.hpp"
#include "rng.hpp"
#include "textio.hpp"

namespace perfmap {

using json = nlohmann::json;

SyntheticTarget SyntheticTarget::generate(const ConfigurationSpace& space, std::size_t feature_dim,
                                          const Spec& spec) {
  SyntheticTarget t;
  t.spec_ = spec;
  t.space_ = space;
  t.feature_dim_ = feature_dim;
  Rng rng(seed_stream(spec.seed, 0));
  Rng rng_weights(seed_stream(spec.seed, 1));
  const std::size_t k = space.encoding_length();
  if (spec.kind == "rbf") {
    if (spec.centers < 1) fail(Errc::bad_config, "synthetic target needs at least 1 center");
    t.offset_ = 1.0;
    const auto& params = space.parameters();
    for (std::size_t m = 0; m < spec.centers; ++m) {
      std::vector<double> f(feature_dim);
      for (double& v : f) v = rng.next_double();
      std::vector<std::size_t> idx(params.size());
      for (std::size_t p = 0; p < params.size(); ++p) idx[p] = rng.next_index(params[p].values.size());
      t.center_features_.push_back(std::move(f));
      t.center_encodings_.push_back(encoding_of_value_indices(space, idx));
      t.weights_.push_back(rng_weights.uniform(-1.0, 1.0));
    }
  } else if (spec.kind == "interaction") {
    t.offset_ = 1.0;
    t.linear_f_.resize(feature_dim);
    for (double& v : t.linear_f_) v = rng.uniform(-1.0, 1.0);
    t.linear_c_.resize(k);
    for (double& v : t.linear_c_) v = rng.uniform(-1.0, 1.0);
    t.cross_.assign(feature_dim, std::vector<double>(k, 0.0));
    for (auto& row : t.cross_)
      for (double& v : row) v = rng.uniform(-0.5, 0.5);
  } else {
    fail(Errc::bad_config, "unknown synthetic target kind '" + spec.kind + "'");
  }
  return t;
}

double SyntheticTarget::true_performance(const std::vector<double>& features,
                                         const std::vector<std::uint8_t>& encoding) const {
  if (features.size() != feature_dim_ || encoding.size() != space_.encoding_length())
    fail(Errc::dimension_mismatch, "synthetic target: input dimensions do not match");
  double acc = offset_;
  if (spec_.kind == "rbf") {
    for (std::size_t m = 0; m < weights_.size(); ++m) {
      double sq = 0.0;
      for (std::size_t j = 0; j < feature_dim_; ++j) {
        double d = features[j] - center_features_[m][j];
        sq += d * d;
      }
      for (std::size_t j = 0; j < encoding.size(); ++j) sq += encoding[j] != center_encodings_[m][j];
      acc += weights_[m] * std::exp(-spec_.gamma * sq);
    }
  } else {
    for (std::size_t j = 0; j < feature_dim_; ++j) acc += linear_f_[j] * features[j];
    for (std::size_t j = 0; j < encoding.size(); ++j)
      if (encoding[j]) acc += linear_c_[j];
    for (std::size_t i = 0; i < feature_dim_; ++i)
      for (std::size_t j = 0; j < encoding.size(); ++j)
        if (encoding[j]) acc += cross_[i][j] * features[i];
  }
  return acc;
}

RunResult SyntheticTarget::run(const InstanceFeatures& instance,
                               const std::map<std::string, std::string>& assignment, std::uint64_t seed,
                               double /*time_limit_s*/) const {
  Configuration config = encode(space_, assignment);
  double value = true_performance(instance.values, config.encoding);
  if (spec_.noise > 0.0) {
    std::string key = instance.instance_id + "|" + std::to_string(seed) + "|";
    for (std::uint8_t b : config.encoding) key += char('0' + b);
    Rng noise_rng(seed_stream(spec_.seed, fnv1a(key)));
    value += spec_.noise * noise_rng.next_normal();
  }
  RunResult out;
  out.ok = true;
  out.perf = value;
  out.incumbent = value;
  return out;
}

std::string SyntheticTarget::to_json_text() const {
  json doc;
  doc["kind"] = spec_.kind;
  doc["centers"] = spec_.centers;
  doc["gamma"] = format_double(spec_.gamma);
  doc["noise"] = format_double(spec_.noise);
  doc["seed"] = spec_.seed;
  doc["feature_dim"] = feature_dim_;
  doc["offset"] = format_double(offset_);
  doc["space"] = json::parse(space_.to_json_text());
  auto dump_vec = [](const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(format_double(x));
    return a;
  };
  if (spec_.kind == "rbf") {
    json cf = json::array(), ce = json::array();
    for (const auto& f : center_features_) cf.push_back(dump_vec(f));
    for (const auto& e : center_encodings_) {
      std::string bits;
      for (std::uint8_t b : e) bits += char('0' + b);
      ce.push_back(bits);
    }
    doc["center_features"] = cf;
    doc["center_encodings"] = ce;
    doc["weights"] = dump_vec(weights_);
  } else {
    doc["linear_f"] = dump_vec(linear_f_);
    doc["linear_c"] = dump_vec(linear_c_);
    json cross = json::array();
    for (const auto& row : cross_) cross.push_back(dump_vec(row));
    doc["cross"] = cross;
  }
  return doc.dump(2) + "\n";
}

SyntheticTarget SyntheticTarget::from_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(Errc::parse, std::string("target file is not valid JSON: ") + e.what());
  }
  SyntheticTarget t;
  t.spec_.kind = doc.at("kind").get<std::string>();
  t.spec_.centers = doc.value("centers", std::size_t(0));
  t.spec_.gamma = parse_double(doc.at("gamma").get<std::string>());
  t.spec_.noise = parse_double(doc.at("noise").get<std::string>());
  t.spec_.seed = doc.at("seed").get<std::uint64_t>();
  t.feature_dim_ = doc.at("feature_dim").get<std::size_t>();
  t.offset_ = parse_double(doc.at("offset").get<std::string>());
  t.space_ = ConfigurationSpace::from_json_text(doc.at("space").dump());
  auto load_vec = [](const json& a) {
    std::vector<double> v;
    for (const auto& x : a) v.push_back(parse_double(x.get<std::string>()));
    return v;
  };
  if (t.spec_.kind == "rbf") {
    for (const auto& f : doc.at("center_features")) t.center_features_.push_back(load_vec(f));
    for (const auto& e : doc.at("center_encodings")) {
      std::vector<std::uint8_t> bits;
      for (char c : e.get<std::string>()) bits.push_back(c == '1' ? 1 : 0);
      t.center_encodings_.push_back(std::move(bits));
    }
    t.weights_ = load_vec(doc.at("weights"));
  } else if (t.spec_.kind == "interaction") {
    t.linear_f_ = load_vec(doc.at("linear_f"));
    t.linear_c_ = load_vec(doc.at("linear_c"));
    for (const auto& row : doc.at("cross")) t.cross_.push_back(load_vec(row));
  } else {
    fail(Errc::parse, "unknown synthetic target kind '" + t.spec_.kind + "'");
  }
  return t;
}

void SyntheticTarget::save(const std::string& path) const { write_file(path, to_json_text()); }

SyntheticTarget SyntheticTarget::load(const std::string& path) {
  return from_json_text(read_file(path));
}

InstanceSet sample_instances(std::size_t n, std::size_t feature_dim, std::uint64_t seed) {
  InstanceSet out;
  for (std::size_t j = 0; j < feature_dim; ++j) out.schema.push_back("f" + std::to_string(j));
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    InstanceFeatures inst;
    char id[32];
    std::snprintf(id, sizeof(id), "inst%04zu", i + 1);
    inst.instance_id = id;
    inst.values.resize(feature_dim);
    for (double& v : inst.values) v = rng.next_double();
    out.instances.push_back(std::move(inst));
  }
  return out;
}

ConfigurationSpace make_synthetic_space(const std::vector<std::size_t>& value_counts) {
  std::vector<Parameter> params;
  for (std::size_t p = 0; p < value_counts.size(); ++p) {
    Parameter param;
    param.name = "p" + std::to_string(p + 1);
    for (std::size_t v = 0; v < value_counts[p]; ++v) param.values.push_back("v" + std::to_string(v + 1));
    params.push_back(std::move(param));
  }
  return ConfigurationSpace(std::move(params), {});
}

void generate_bundle(const std::string& out_dir, const SynthBundleOptions& options) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(Errc::io_error, "cannot create directory " + out_dir + ": " + ec.message());

  ConfigurationSpace space = make_synthetic_space(options.value_counts);
  SyntheticTarget target = SyntheticTarget::generate(space, options.feature_dim, options.target);
  InstanceSet instances =
      sample_instances(options.n_instances, options.feature_dim, seed_stream(options.target.seed, 0x1257));

  std::vector<Configuration> configs = enumerate_all(space);
  std::ostringstream truth, ground;
  truth << "instance_id,best_encoding,best_perf\n";
  ground << "instance_id,encoding,true_perf\n";
  for (InstanceFeatures& inst : instances.instances) {
    double best = 0.0;
    std::string best_bits;
    bool have = false;
    for (const Configuration& c : configs) {
      double v = target.true_performance(inst.values, c.encoding);
      std::string bits;
      for (std::uint8_t b : c.encoding) bits += char('0' + b);
      ground << inst.instance_id << ',' << bits << ',' << format_double(v) << "\n";
      if (!have || v < best) {
        have = true;
        best = v;
        best_bits = bits;
      }
    }
    inst.opt_value = best;
    truth << inst.instance_id << ',' << best_bits << ',' << format_double(best) << "\n";
  }

  auto path = [&](const char* name) { return (std::filesystem::path(out_dir) / name).string(); };
  write_file(path("space.json"), space.to_json_text());
  target.save(path("target.json"));
  instances.save(path("instances.json"));
  write_file(path("truth.csv"), truth.str());
  write_file(path("ground_truth.csv"), ground.str());
}

}  // namespace perfmap
