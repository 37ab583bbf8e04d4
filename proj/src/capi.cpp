#include "perfmap/perfmap.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "configspace.hpp"
#include "cssp.hpp"
#include "error.hpp"
#include "pipeline.hpp"
#include "svr.hpp"

using namespace perfmap;

struct pm_space {
  ConfigurationSpace space;
};

struct pm_model {
  SvrModel model;
};

struct pm_problem {
  CsspProblem problem;
};

struct pm_solution {
  CsspSolution solution;
  std::vector<std::pair<std::string, std::string>> assignment;  // declaration order
};

namespace {

thread_local std::string g_last_error;

pm_status status_of(const Error& e) {
  g_last_error = e.what();
  switch (e.cls()) {
    case ErrorClass::usage: return PM_ERR_USAGE;
    case ErrorClass::data: return PM_ERR_DATA;
    case ErrorClass::solver: return PM_ERR_SOLVER;
    case ErrorClass::adapter: return PM_ERR_ADAPTER;
    case ErrorClass::io: return PM_ERR_IO;
  }
  return PM_ERR_DATA;
}

pm_status set_error(pm_status code, const std::string& message) {
  g_last_error = message;
  return code;
}

// Every entry point funnels through this so no exception crosses the ABI.
template <typename Fn>
pm_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    return status_of(e);
  } catch (const std::exception& e) {
    return set_error(PM_ERR_DATA, e.what());
  } catch (...) {
    return set_error(PM_ERR_DATA, "unknown error");
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

pm_solution* wrap_solution(const ConfigurationSpace& space, CsspSolution&& sol) {
  auto* out = new pm_solution{std::move(sol), {}};
  for (const Parameter& p : space.parameters()) {
    auto it = out->solution.config.assignment.find(p.name);
    out->assignment.emplace_back(p.name, it == out->solution.config.assignment.end() ? "" : it->second);
  }
  return out;
}

pm_status run_command(char** summary_out, PipelineOutcome (*cmd)(const RunConfig&),
                      const char* config_json) {
  return guarded([&]() -> pm_status {
    if (!config_json) return set_error(PM_ERR_USAGE, "config_json is NULL");
    RunConfig config = RunConfig::from_json_text(config_json);
    PipelineOutcome outcome = cmd(config);
    if (summary_out) *summary_out = dup_string(outcome.summary);
    if (outcome.adapter_failures > 0)
      return set_error(PM_ERR_ADAPTER,
                       std::to_string(outcome.adapter_failures) + " run(s) failed; see the dataset sentinels");
    if (outcome.solver_warning)
      return set_error(PM_ERR_SOLVER, "training stopped at the iteration cap before reaching tolerance");
    return PM_OK;
  });
}

}  // namespace

extern "C" {

const char* pm_version(void) { return "0.1.0"; }

const char* pm_last_error(void) { return g_last_error.c_str(); }

/* ---------------- spaces ---------------- */

pm_status pm_space_load(const char* path, pm_space** out) {
  return guarded([&]() -> pm_status {
    if (!path || !out) return set_error(PM_ERR_USAGE, "NULL argument");
    *out = new pm_space{ConfigurationSpace::load(path)};
    return PM_OK;
  });
}

pm_status pm_space_parse(const char* json_text, pm_space** out) {
  return guarded([&]() -> pm_status {
    if (!json_text || !out) return set_error(PM_ERR_USAGE, "NULL argument");
    *out = new pm_space{ConfigurationSpace::from_json_text(json_text)};
    return PM_OK;
  });
}

void pm_space_free(pm_space* space) { delete space; }

size_t pm_space_encoding_length(const pm_space* space) {
  return space ? space->space.encoding_length() : 0;
}

size_t pm_space_parameter_count(const pm_space* space) {
  return space ? space->space.parameters().size() : 0;
}

pm_status pm_space_encode(const pm_space* space, const char* const* names, const char* const* values,
                          size_t n, uint8_t* enc_out) {
  return guarded([&]() -> pm_status {
    if (!space || !names || !values || !enc_out) return set_error(PM_ERR_USAGE, "NULL argument");
    std::map<std::string, std::string> assignment;
    for (size_t i = 0; i < n; ++i) assignment[names[i]] = values[i];
    Configuration config = encode(space->space, assignment);
    for (size_t i = 0; i < config.encoding.size(); ++i) enc_out[i] = config.encoding[i];
    return PM_OK;
  });
}

pm_status pm_space_decode(const pm_space* space, const uint8_t* encoding, size_t len,
                          const char** names_out, const char** values_out) {
  return guarded([&]() -> pm_status {
    if (!space || !encoding || !names_out || !values_out) return set_error(PM_ERR_USAGE, "NULL argument");
    std::vector<std::uint8_t> enc(encoding, encoding + len);
    std::map<std::string, std::string> assignment = decode(space->space, enc);
    const auto& params = space->space.parameters();
    for (size_t p = 0; p < params.size(); ++p) {
      names_out[p] = params[p].name.c_str();
      const std::string& chosen = assignment[params[p].name];
      // return the canonical label owned by the space, not the temporary
      std::size_t v = space->space.value_index(p, chosen);
      values_out[p] = params[p].values[v].c_str();
    }
    return PM_OK;
  });
}

int pm_space_is_feasible(const pm_space* space, const uint8_t* encoding, size_t len) {
  if (!space || !encoding) return -int(set_error(PM_ERR_USAGE, "NULL argument"));
  if (len != space->space.encoding_length()) return -int(set_error(PM_ERR_DATA, "bad encoding length"));
  std::vector<std::uint8_t> enc(encoding, encoding + len);
  return is_feasible_encoding(space->space, enc) ? 1 : 0;
}

long long pm_space_count_feasible(const pm_space* space, unsigned long long budget) {
  if (!space) return -1;
  long long count = 0;
  enumerate(space->space, [&](const std::vector<std::size_t>&, const std::vector<std::uint8_t>&) {
    ++count;
    return (unsigned long long)(count) <= budget;
  });
  return (unsigned long long)(count) > budget ? -1 : count;
}

/* ---------------- models ---------------- */

pm_status pm_model_load(const char* path, pm_model** out) {
  return guarded([&]() -> pm_status {
    if (!path || !out) return set_error(PM_ERR_USAGE, "NULL argument");
    *out = new pm_model{SvrModel::load(path)};
    return PM_OK;
  });
}

pm_status pm_model_save(const pm_model* model, const char* path) {
  return guarded([&]() -> pm_status {
    if (!model || !path) return set_error(PM_ERR_USAGE, "NULL argument");
    model->model.save(path);
    return PM_OK;
  });
}

void pm_model_free(pm_model* model) { delete model; }

size_t pm_model_input_dim(const pm_model* model) { return model ? model->model.input_dim() : 0; }

size_t pm_model_support_count(const pm_model* model) {
  return model ? model->model.support_points.size() : 0;
}

pm_status pm_model_predict(const pm_model* model, const double* x, size_t dim, double* out) {
  return guarded([&]() -> pm_status {
    if (!model || !x || !out) return set_error(PM_ERR_USAGE, "NULL argument");
    std::vector<double> v(x, x + dim);
    if (dim != model->model.input_dim()) return set_error(PM_ERR_DATA, "input dimension mismatch");
    *out = predict(model->model, v);
    return PM_OK;
  });
}

/* ---------------- search ---------------- */

pm_status pm_problem_build(const pm_model* model, const pm_space* space, const double* query_features,
                           size_t dim, pm_problem** out) {
  return guarded([&]() -> pm_status {
    if (!model || !space || !query_features || !out) return set_error(PM_ERR_USAGE, "NULL argument");
    std::vector<double> q(query_features, query_features + dim);
    *out = new pm_problem{build_problem(model->model, space->space, q)};
    return PM_OK;
  });
}

void pm_problem_free(pm_problem* problem) { delete problem; }

pm_status pm_problem_objective(const pm_problem* problem, const uint8_t* encoding, size_t len,
                               double* out) {
  return guarded([&]() -> pm_status {
    if (!problem || !encoding || !out) return set_error(PM_ERR_USAGE, "NULL argument");
    Configuration config;
    config.encoding.assign(encoding, encoding + len);
    config.assignment = decode(problem->problem.space(), config.encoding);
    *out = objective(problem->problem, config);
    return PM_OK;
  });
}

pm_status pm_solve_enumerate(const pm_problem* problem, unsigned long long budget, pm_solution** out) {
  return guarded([&]() -> pm_status {
    if (!problem || !out) return set_error(PM_ERR_USAGE, "NULL argument");
    *out = wrap_solution(problem->problem.space(), solve_enumerate(problem->problem, budget));
    return PM_OK;
  });
}

pm_status pm_solve_bnb(const pm_problem* problem, double time_limit_s, pm_solution** out) {
  return guarded([&]() -> pm_status {
    if (!problem || !out) return set_error(PM_ERR_USAGE, "NULL argument");
    *out = wrap_solution(problem->problem.space(), solve_bnb(problem->problem, time_limit_s));
    return PM_OK;
  });
}

pm_status pm_solve_local(const pm_problem* problem, size_t restarts, uint64_t seed, double time_limit_s,
                         pm_solution** out) {
  return guarded([&]() -> pm_status {
    if (!problem || !out) return set_error(PM_ERR_USAGE, "NULL argument");
    *out = wrap_solution(problem->problem.space(),
                         solve_local(problem->problem, restarts, seed, time_limit_s));
    return PM_OK;
  });
}

void pm_solution_free(pm_solution* solution) { delete solution; }

double pm_solution_objective(const pm_solution* solution) {
  return solution ? solution->solution.objective : 0.0;
}

const char* pm_solution_status(const pm_solution* solution) {
  if (!solution) return "";
  switch (solution->solution.status) {
    case SolveStatus::global_optimal: return "global_optimal";
    case SolveStatus::local: return "local";
    case SolveStatus::time_limit: return "time_limit";
  }
  return "";
}

uint64_t pm_solution_nodes(const pm_solution* solution) {
  return solution ? solution->solution.nodes_or_moves : 0;
}

double pm_solution_elapsed_s(const pm_solution* solution) {
  return solution ? solution->solution.elapsed_s : 0.0;
}

pm_status pm_solution_encoding(const pm_solution* solution, uint8_t* enc_out, size_t len) {
  if (!solution || !enc_out) return set_error(PM_ERR_USAGE, "NULL argument");
  const auto& enc = solution->solution.config.encoding;
  if (len != enc.size()) return set_error(PM_ERR_DATA, "bad encoding length");
  for (size_t i = 0; i < len; ++i) enc_out[i] = enc[i];
  return PM_OK;
}

size_t pm_solution_assignment_count(const pm_solution* solution) {
  return solution ? solution->assignment.size() : 0;
}

pm_status pm_solution_assignment(const pm_solution* solution, size_t index, const char** name_out,
                                 const char** value_out) {
  if (!solution || !name_out || !value_out) return set_error(PM_ERR_USAGE, "NULL argument");
  if (index >= solution->assignment.size()) return set_error(PM_ERR_USAGE, "index out of range");
  *name_out = solution->assignment[index].first.c_str();
  *value_out = solution->assignment[index].second.c_str();
  return PM_OK;
}

/* ---------------- pipeline ---------------- */

pm_status pm_run_collect(const char* config_json, char** summary_out) {
  return run_command(summary_out, cmd_collect, config_json);
}

pm_status pm_run_prepare(const char* config_json, char** summary_out) {
  return run_command(summary_out, cmd_prepare, config_json);
}

pm_status pm_run_train(const char* config_json, char** summary_out) {
  return run_command(summary_out, cmd_train, config_json);
}

pm_status pm_run_configure(const char* config_json, const char* instance_features_path,
                           char** solution_text_out, char** summary_out) {
  return guarded([&]() -> pm_status {
    if (!config_json || !instance_features_path) return set_error(PM_ERR_USAGE, "NULL argument");
    RunConfig config = RunConfig::from_json_text(config_json);
    std::string text;
    PipelineOutcome outcome = cmd_configure(config, instance_features_path, &text);
    if (solution_text_out) *solution_text_out = dup_string(text);
    if (summary_out) *summary_out = dup_string(outcome.summary);
    return PM_OK;
  });
}

pm_status pm_run_evaluate(const char* config_json, char** summary_out) {
  return run_command(summary_out, cmd_evaluate, config_json);
}

pm_status pm_run_synth(const char* config_json, char** summary_out) {
  return run_command(summary_out, cmd_synth, config_json);
}

void pm_string_free(char* s) { std::free(s); }

}  // extern "C"
