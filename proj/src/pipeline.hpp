#pragma once

#include <string>

#include "runconfig.hpp"

namespace perfmap {

/// What a command wants the caller to know beyond success/failure
/// exceptions: per-run adapter failures are non-fatal but must surface in
/// the exit code, as must a final fit that hit its iteration cap.
struct PipelineOutcome {
  std::size_t adapter_failures = 0;
  bool solver_warning = false;
  std::string summary;
};

PipelineOutcome cmd_collect(const RunConfig& config);
PipelineOutcome cmd_prepare(const RunConfig& config);
PipelineOutcome cmd_train(const RunConfig& config);
PipelineOutcome cmd_configure(const RunConfig& config, const std::string& instance_features_file,
                              std::string* solution_text);
PipelineOutcome cmd_evaluate(const RunConfig& config);
PipelineOutcome cmd_synth(const RunConfig& config);

}  // namespace perfmap
