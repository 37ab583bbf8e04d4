#include "configspace.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "error.hpp"
#include "textio.hpp"

namespace perfmap {

using json = nlohmann::json;

ConfigurationSpace::ConfigurationSpace(std::vector<Parameter> params,
                                       std::vector<LinearConstraint> constraints,
                                       std::map<std::string, std::string> default_assignment)
    : params_(std::move(params)),
      constraints_(std::move(constraints)),
      declared_default_(std::move(default_assignment)) {
  if (params_.empty()) fail(Errc::bad_config, "configuration space has no parameters");
  std::set<std::string> seen;
  for (std::size_t p = 0; p < params_.size(); ++p) {
    const Parameter& param = params_[p];
    if (param.values.size() < 2)
      fail(Errc::bad_config, "parameter '" + param.name + "' needs at least 2 values");
    if (!seen.insert(param.name).second)
      fail(Errc::bad_config, "duplicate parameter name '" + param.name + "'");
    std::set<std::string> vals(param.values.begin(), param.values.end());
    if (vals.size() != param.values.size())
      fail(Errc::bad_config, "duplicate value label in parameter '" + param.name + "'");
    param_lookup_[param.name] = p;
    offsets_.push_back(encoding_length_);
    value_lookup_.emplace_back();
    for (std::size_t v = 0; v < param.values.size(); ++v) {
      value_lookup_.back()[param.values[v]] = v;
      bit_names_.push_back(param.name + "=" + param.values[v]);
      bit_lookup_[bit_names_.back()] = encoding_length_ + v;
    }
    encoding_length_ += param.values.size();
  }
  for (const LinearConstraint& c : constraints_) {
    for (const ConstraintTerm& t : c.terms) {
      std::size_t p = param_index(t.param);
      value_index(p, t.value);
    }
  }
  for (const auto& [name, value] : declared_default_) {
    std::size_t p = param_index(name);
    value_index(p, value);
  }
}

std::size_t ConfigurationSpace::param_index(const std::string& name) const {
  auto it = param_lookup_.find(name);
  if (it == param_lookup_.end()) fail(Errc::unknown_parameter, "unknown parameter '" + name + "'");
  return it->second;
}

std::size_t ConfigurationSpace::value_index(std::size_t param, const std::string& value) const {
  auto it = value_lookup_[param].find(value);
  if (it == value_lookup_[param].end())
    fail(Errc::unknown_value, "unknown value '" + value + "' for parameter '" + params_[param].name + "'");
  return it->second;
}

std::string ConfigurationSpace::bit_name(std::size_t flat_index) const {
  return bit_names_.at(flat_index);
}

std::size_t ConfigurationSpace::bit_index(const std::string& name) const {
  auto it = bit_lookup_.find(name);
  if (it == bit_lookup_.end()) fail(Errc::unknown_column, "unknown encoding column '" + name + "'");
  return it->second;
}

std::map<std::string, std::string> ConfigurationSpace::default_assignment() const {
  std::map<std::string, std::string> out;
  for (const Parameter& p : params_) {
    auto it = declared_default_.find(p.name);
    out[p.name] = it != declared_default_.end() ? it->second : p.values.front();
  }
  return out;
}

namespace {

Relation relation_from_string(const std::string& s) {
  if (s == "<=") return Relation::le;
  if (s == "=" || s == "==") return Relation::eq;
  if (s == ">=") return Relation::ge;
  fail(Errc::bad_config, "unknown constraint relation '" + s + "'");
}

std::string relation_to_string(Relation r) {
  switch (r) {
    case Relation::le: return "<=";
    case Relation::eq: return "=";
    case Relation::ge: return ">=";
  }
  return "<=";
}

}  // namespace

ConfigurationSpace ConfigurationSpace::from_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(Errc::parse, std::string("space file is not valid JSON: ") + e.what());
  }
  std::vector<Parameter> params;
  for (const auto& p : doc.at("parameters")) {
    Parameter param;
    param.name = p.at("name").get<std::string>();
    for (const auto& v : p.at("values")) param.values.push_back(v.get<std::string>());
    params.push_back(std::move(param));
  }
  std::vector<LinearConstraint> constraints;
  if (doc.contains("constraints")) {
    for (const auto& c : doc["constraints"]) {
      LinearConstraint lc;
      for (const auto& t : c.at("terms")) {
        lc.terms.push_back({t.at("param").get<std::string>(), t.at("value").get<std::string>(),
                            t.value("coef", 1.0)});
      }
      lc.relation = relation_from_string(c.at("relation").get<std::string>());
      lc.rhs = c.at("rhs").get<double>();
      constraints.push_back(std::move(lc));
    }
  }
  std::map<std::string, std::string> def;
  if (doc.contains("default")) {
    for (const auto& [k, v] : doc["default"].items()) def[k] = v.get<std::string>();
  }
  return ConfigurationSpace(std::move(params), std::move(constraints), std::move(def));
}

ConfigurationSpace ConfigurationSpace::load(const std::string& path) {
  return from_json_text(read_file(path));
}

std::string ConfigurationSpace::to_json_text() const {
  json doc;
  doc["parameters"] = json::array();
  for (const Parameter& p : params_) doc["parameters"].push_back({{"name", p.name}, {"values", p.values}});
  doc["constraints"] = json::array();
  for (const LinearConstraint& c : constraints_) {
    json jc;
    jc["terms"] = json::array();
    for (const ConstraintTerm& t : c.terms)
      jc["terms"].push_back({{"param", t.param}, {"value", t.value}, {"coef", t.coef}});
    jc["relation"] = relation_to_string(c.relation);
    jc["rhs"] = c.rhs;
    doc["constraints"].push_back(jc);
  }
  if (!declared_default_.empty()) doc["default"] = declared_default_;
  return doc.dump(2) + "\n";
}

Configuration encode(const ConfigurationSpace& space, const std::map<std::string, std::string>& assignment) {
  for (const auto& [name, value] : assignment) space.param_index(name);  // UnknownParameter
  Configuration out;
  out.encoding.assign(space.encoding_length(), 0);
  const auto& params = space.parameters();
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto it = assignment.find(params[p].name);
    if (it == assignment.end())
      fail(Errc::missing_parameter, "assignment is missing parameter '" + params[p].name + "'");
    std::size_t v = space.value_index(p, it->second);
    out.encoding[space.block_offset(p) + v] = 1;
  }
  out.assignment = assignment;
  return out;
}

std::map<std::string, std::string> decode(const ConfigurationSpace& space,
                                          const std::vector<std::uint8_t>& encoding) {
  if (encoding.size() != space.encoding_length())
    fail(Errc::bad_length, "encoding length " + std::to_string(encoding.size()) + " does not match space length " +
                               std::to_string(space.encoding_length()));
  std::map<std::string, std::string> out;
  const auto& params = space.parameters();
  for (std::size_t p = 0; p < params.size(); ++p) {
    std::size_t off = space.block_offset(p);
    std::size_t ones = 0, chosen = 0;
    for (std::size_t v = 0; v < params[p].values.size(); ++v) {
      if (encoding[off + v] == 1) {
        ++ones;
        chosen = v;
      } else if (encoding[off + v] != 0) {
        fail(Errc::not_one_hot, "encoding has a non-binary entry in block '" + params[p].name + "'");
      }
    }
    if (ones != 1)
      fail(Errc::not_one_hot, "block '" + params[p].name + "' has " + std::to_string(ones) + " selected values");
    out[params[p].name] = params[p].values[chosen];
  }
  return out;
}

namespace {

double constraint_lhs(const ConfigurationSpace& space, const LinearConstraint& c,
                      const std::vector<std::uint8_t>& encoding) {
  double lhs = 0.0;
  for (const ConstraintTerm& t : c.terms) {
    std::size_t p = space.param_index(t.param);
    std::size_t v = space.value_index(p, t.value);
    lhs += t.coef * encoding[space.block_offset(p) + v];
  }
  return lhs;
}

bool relation_holds(double lhs, Relation r, double rhs) {
  switch (r) {
    case Relation::le: return lhs <= rhs;
    case Relation::eq: return lhs == rhs;
    case Relation::ge: return lhs >= rhs;
  }
  return false;
}

}  // namespace

bool is_feasible_encoding(const ConfigurationSpace& space, const std::vector<std::uint8_t>& encoding) {
  for (const LinearConstraint& c : space.constraints()) {
    if (!relation_holds(constraint_lhs(space, c, encoding), c.relation, c.rhs)) return false;
  }
  return true;
}

bool is_feasible(const ConfigurationSpace& space, const Configuration& config) {
  return is_feasible_encoding(space, config.encoding);
}

std::uint64_t cartesian_count(const ConfigurationSpace& space) {
  std::uint64_t n = 1;
  for (const Parameter& p : space.parameters()) n *= p.values.size();
  return n;
}

std::vector<std::uint8_t> encoding_of_value_indices(const ConfigurationSpace& space,
                                                    const std::vector<std::size_t>& value_indices) {
  std::vector<std::uint8_t> enc(space.encoding_length(), 0);
  for (std::size_t p = 0; p < value_indices.size(); ++p)
    enc[space.block_offset(p) + value_indices[p]] = 1;
  return enc;
}

std::uint64_t enumerate(const ConfigurationSpace& space,
                        const std::function<bool(const std::vector<std::size_t>&, const std::vector<std::uint8_t>&)>& fn) {
  const auto& params = space.parameters();
  std::vector<std::size_t> idx(params.size(), 0);
  std::vector<std::uint8_t> enc(space.encoding_length(), 0);
  for (std::size_t p = 0; p < params.size(); ++p) enc[space.block_offset(p)] = 1;
  std::uint64_t count = 0;
  while (true) {
    if (is_feasible_encoding(space, enc)) {
      ++count;
      if (!fn(idx, enc)) return count;
    }
    // advance odometer, last parameter fastest
    std::size_t p = params.size();
    while (p > 0) {
      --p;
      enc[space.block_offset(p) + idx[p]] = 0;
      if (++idx[p] < params[p].values.size()) {
        enc[space.block_offset(p) + idx[p]] = 1;
        break;
      }
      idx[p] = 0;
      enc[space.block_offset(p)] = 1;
      if (p == 0) return count;
    }
    if (params.size() == 0) return count;
  }
}

std::vector<Configuration> enumerate_all(const ConfigurationSpace& space, std::uint64_t budget) {
  std::vector<Configuration> out;
  bool exceeded = false;
  enumerate(space, [&](const std::vector<std::size_t>&, const std::vector<std::uint8_t>& enc) {
    if (out.size() >= budget) {
      exceeded = true;
      return false;
    }
    Configuration c;
    c.encoding = enc;
    c.assignment = decode(space, enc);
    out.push_back(std::move(c));
    return true;
  });
  if (exceeded)
    fail(Errc::budget_exceeded, "feasible configuration count exceeds budget " + std::to_string(budget));
  return out;
}

}  // namespace perfmap
