#pragma once

#include <stdexcept>
#include <string>

namespace perfmap {

// Error classes map onto the C API status codes (and CLI exit codes):
// usage -> 2, data -> 3, solver -> 4, adapter -> 5, io -> 6.
enum class ErrorClass {
  usage,
  data,
  solver,
  adapter,
  io,
};

enum class Errc {
  // configspace
  unknown_parameter,
  unknown_value,
  missing_parameter,
  bad_length,
  not_one_hot,
  empty_space,
  // dataset
  empty_input,
  all_above_threshold,
  zero_optimum,
  unknown_column,
  too_few_instances,
  adapter_failure,
  // features
  invalid_date,
  empty_group,
  no_variance,
  // svr / metrics
  dimension_mismatch,
  length_mismatch,
  bad_delta,
  no_convergence,
  // cssp
  budget_exceeded,
  infeasible_config,
  no_feasible_start,
  // plumbing
  bad_config,
  parse,
  io_error,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const { return code_; }

  ErrorClass cls() const {
    switch (code_) {
      case Errc::bad_config:
        return ErrorClass::usage;
      case Errc::no_convergence:
      case Errc::budget_exceeded:
      case Errc::no_feasible_start:
      case Errc::empty_space:
        return ErrorClass::solver;
      case Errc::adapter_failure:
        return ErrorClass::adapter;
      case Errc::io_error:
        return ErrorClass::io;
      default:
        return ErrorClass::data;
    }
  }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace perfmap
