#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cssp.hpp"
#include "dataset.hpp"

namespace perfmap {

/// Solution quality of a heuristic solver against the enumerated global
/// optimum.
struct CsspQuality {
  double pct_glob_mins = 0.0;  // % pairs whose objectives agree within 1e-9
  double avg_loc_mins = 0.0;   // mean |obj_heur - obj_glob|; hits contribute 0
  double avg_time_s = 0.0;     // mean heuristic solve time
  std::size_t pairs = 0;
};

/// By default the gap is averaged over all pairs (hits contribute zero);
/// `non_hits_only` restricts the mean to the missed pairs.
CsspQuality cssp_quality(const std::vector<std::pair<CsspSolution, CsspSolution>>& heur_and_global,
                         bool non_hits_only = false);

/// Win/draw/loss of per-instance performance against the default
/// configuration. Values are rounded to `digits` significant digits (the
/// mantissa in scientific notation) before comparison; the averaged
/// magnitudes use the unrounded values.
struct WinStats {
  double pct_w = 0.0;       // strict wins
  double pct_wd = 0.0;      // non-worsenings
  double pct_w_nond = 0.0;  // wins over non-draws (0 when all draw)
  std::optional<double> avg_d;  // mean |p_sol - p_best| over draws
  std::optional<double> avg_w;  // mean |p_default - p_sol| over wins
  std::optional<double> avg_l;  // over losses
  std::size_t n = 0, wins = 0, draws = 0, losses = 0;
};

WinStats win_stats(const std::vector<double>& p_sol, const std::vector<double>& p_default,
                   const std::vector<double>& p_best, int digits = 16);

/// Rounds to `digits` significant decimal digits.
double round_significant(double v, int digits);

/// Feasibility and gap comparison of paired per-instance records. An
/// instance is feasible when its primal gap is present. Primal means run
/// over instances feasible under both; dual means additionally need both
/// dual gaps present.
struct FeasibilityStats {
  double pct_feas_sol = 0.0;
  double pct_feas_default = 0.0;
  std::optional<double> avg_primal_sol, avg_primal_default;
  std::optional<double> avg_dual_sol, avg_dual_default;
  std::size_t n = 0;
};

struct GapRecord {
  std::optional<double> primal_gap;
  std::optional<double> dual_gap;
};

FeasibilityStats feasibility_stats(const std::vector<GapRecord>& records_sol,
                                   const std::vector<GapRecord>& records_default);

/// One report row per (split, scenario), mirroring the three result tables.
struct EvalRow {
  std::string split;     // IS or OS
  std::string scenario;
  std::string metric;
  CsspQuality quality;
  WinStats wins;
  FeasibilityStats feas;
};

struct EvalReport {
  std::vector<EvalRow> rows;

  std::string to_csv() const;
  std::string to_text() const;  // aligned tables
};

}  // namespace perfmap
