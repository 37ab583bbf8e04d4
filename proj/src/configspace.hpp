#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace perfmap {

/// One categorical parameter with at least two value labels.
struct Parameter {
  std::string name;
  std::vector<std::string> values;
};

enum class Relation { le, eq, ge };

/// Linear constraint over (parameter, value) indicator variables:
///   sum coef * x(param, value)  <relation>  rhs
struct ConstraintTerm {
  std::string param;
  std::string value;
  double coef = 0.0;
};

struct LinearConstraint {
  std::vector<ConstraintTerm> terms;
  Relation relation = Relation::le;
  double rhs = 0.0;
};

/// The feasible configuration set: categorical parameters encoded as
/// concatenated one-hot blocks in declaration order, restricted by linear
/// constraints over the indicator variables. Immutable after construction.
class ConfigurationSpace {
 public:
  ConfigurationSpace(std::vector<Parameter> params, std::vector<LinearConstraint> constraints,
                     std::map<std::string, std::string> default_assignment = {});

  static ConfigurationSpace from_json_text(const std::string& text);
  static ConfigurationSpace load(const std::string& path);
  std::string to_json_text() const;

  const std::vector<Parameter>& parameters() const { return params_; }
  const std::vector<LinearConstraint>& constraints() const { return constraints_; }

  std::size_t encoding_length() const { return encoding_length_; }
  std::size_t block_offset(std::size_t param_index) const { return offsets_[param_index]; }
  std::size_t block_size(std::size_t param_index) const { return params_[param_index].values.size(); }

  std::size_t param_index(const std::string& name) const;          // throws UnknownParameter
  std::size_t value_index(std::size_t param, const std::string& value) const;  // throws UnknownValue

  /// Column name of one encoding bit, "<param>=<value>".
  std::string bit_name(std::size_t flat_index) const;
  const std::vector<std::string>& bit_names() const { return bit_names_; }
  /// Flat bit index for a "<param>=<value>" column name.
  std::size_t bit_index(const std::string& bit_name) const;

  /// Default assignment: the declared one, or each parameter's first value.
  std::map<std::string, std::string> default_assignment() const;

 private:
  std::vector<Parameter> params_;
  std::vector<LinearConstraint> constraints_;
  std::map<std::string, std::string> declared_default_;
  std::vector<std::size_t> offsets_;
  std::size_t encoding_length_ = 0;
  std::map<std::string, std::size_t> param_lookup_;
  std::vector<std::map<std::string, std::size_t>> value_lookup_;
  std::vector<std::string> bit_names_;
  std::map<std::string, std::size_t> bit_lookup_;
};

/// A full assignment with its derived one-hot encoding.
struct Configuration {
  std::map<std::string, std::string> assignment;
  std::vector<std::uint8_t> encoding;
};

/// Builds the one-hot encoding for a complete assignment.
Configuration encode(const ConfigurationSpace& space, const std::map<std::string, std::string>& assignment);

/// Inverse of encode. Rejects wrong lengths and non-one-hot blocks.
std::map<std::string, std::string> decode(const ConfigurationSpace& space,
                                          const std::vector<std::uint8_t>& encoding);

/// True iff the encoding satisfies every explicit linear constraint.
bool is_feasible(const ConfigurationSpace& space, const Configuration& config);
bool is_feasible_encoding(const ConfigurationSpace& space, const std::vector<std::uint8_t>& encoding);

/// Product of block sizes (count ignoring constraints).
std::uint64_t cartesian_count(const ConfigurationSpace& space);

/// Calls fn for every feasible configuration, in lexicographic order of value
/// indices. fn returns false to stop early. Returns the number of feasible
/// configurations visited.
std::uint64_t enumerate(const ConfigurationSpace& space,
                        const std::function<bool(const std::vector<std::size_t>&, const std::vector<std::uint8_t>&)>& fn);

/// Materialized enumeration; throws BudgetExceeded if the feasible count
/// passes `budget`.
std::vector<Configuration> enumerate_all(const ConfigurationSpace& space, std::uint64_t budget = 1000000);

std::vector<std::uint8_t> encoding_of_value_indices(const ConfigurationSpace& space,
                                                    const std::vector<std::size_t>& value_indices);

}  // namespace perfmap
