#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "configspace.hpp"
#include "dataset.hpp"

namespace perfmap {

struct RunResult {
  bool ok = false;
  double perf = 0.0;
  std::optional<double> incumbent;
  std::optional<double> bound;
  std::string error;  // set when !ok
};

/// One measurement of the target algorithm on (instance, configuration,
/// seed). Implementations must be safe to call from multiple threads.
class PerformanceSource {
 public:
  virtual ~PerformanceSource() = default;
  virtual RunResult run(const InstanceFeatures& instance,
                        const std::map<std::string, std::string>& assignment, std::uint64_t seed,
                        double time_limit_s) const = 0;
};

/// Runs a shell command per measurement. The template may contain
/// {instance}, {config_file}, {seed} and {time_limit}; the configuration is
/// written to a temporary file as name=value lines. The final stdout line
/// starting with PERF= is parsed for whitespace-separated PERF=, INCUMBENT=
/// and BOUND= fields. Nonzero exit, timeout (time limit + grace) or a
/// missing PERF line is a failed run.
class SubprocessAdapter : public PerformanceSource {
 public:
  explicit SubprocessAdapter(std::string command_template, double grace_s = 10.0)
      : template_(std::move(command_template)), grace_s_(grace_s) {}

  RunResult run(const InstanceFeatures& instance, const std::map<std::string, std::string>& assignment,
                std::uint64_t seed, double time_limit_s) const override;

  const std::string& command_template() const { return template_; }

 private:
  std::string template_;
  double grace_s_;
};

struct CollectOptions {
  std::vector<std::uint64_t> seeds;
  double time_limit_s = 60.0;
  double threshold = 1e5;  // failed runs record the sentinel 10 * threshold
  bool gap_eps = false;
  int jobs = 1;
  std::string journal_path;  // empty disables the journal
  std::uint64_t enum_budget = 1000000;
};

struct CollectStats {
  std::size_t runs = 0;
  std::size_t failures = 0;
  std::size_t resumed = 0;  // runs answered from the journal
};

/// Measures every (instance, feasible configuration, seed) triple, aggregates
/// seeds by median, and computes gaps for instances with a known optimum
/// from the run that attains the (lower-)middle order statistic. Completed
/// runs are appended to the journal so an interrupted collection resumes
/// without repeating work; the assembled dataset is byte-identical either
/// way.
Dataset collect(const PerformanceSource& source, const InstanceSet& instances,
                const ConfigurationSpace& space, const CollectOptions& options,
                CollectStats* stats = nullptr);

}  // namespace perfmap
