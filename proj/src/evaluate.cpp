#include "evaluate.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "error.hpp"
#include "textio.hpp"

namespace perfmap {

CsspQuality cssp_quality(const std::vector<std::pair<CsspSolution, CsspSolution>>& heur_and_global,
                         bool non_hits_only) {
  if (heur_and_global.empty()) fail(Errc::empty_input, "cssp_quality: no solution pairs");
  CsspQuality q;
  q.pairs = heur_and_global.size();
  std::size_t hits = 0;
  double gap_sum = 0.0;
  double time_sum = 0.0;
  for (const auto& [heur, glob] : heur_and_global) {
    double gap = std::abs(heur.objective - glob.objective);
    if (gap <= 1e-9) {
      ++hits;
      gap = 0.0;
    }
    gap_sum += gap;
    time_sum += heur.elapsed_s;
  }
  q.pct_glob_mins = 100.0 * double(hits) / double(q.pairs);
  std::size_t denom = non_hits_only ? q.pairs - hits : q.pairs;
  q.avg_loc_mins = denom == 0 ? 0.0 : gap_sum / double(denom);
  q.avg_time_s = time_sum / double(q.pairs);
  return q;
}

double round_significant(double v, int digits) {
  if (!std::isfinite(v) || v == 0.0) return v;
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*e", digits - 1, v);
  return std::strtod(buf, nullptr);
}

WinStats win_stats(const std::vector<double>& p_sol, const std::vector<double>& p_default,
                   const std::vector<double>& p_best, int digits) {
  if (p_sol.size() != p_default.size() || p_sol.size() != p_best.size())
    fail(Errc::length_mismatch, "win_stats: input lengths differ");
  if (p_sol.empty()) fail(Errc::empty_input, "win_stats: empty input");
  if (digits < 1) fail(Errc::bad_config, "win_stats: digits must be >= 1");

  WinStats s;
  s.n = p_sol.size();
  double sum_w = 0.0, sum_l = 0.0, sum_d = 0.0;
  for (std::size_t i = 0; i < p_sol.size(); ++i) {
    double rs = round_significant(p_sol[i], digits);
    double rd = round_significant(p_default[i], digits);
    if (rs < rd) {
      ++s.wins;
      sum_w += std::abs(p_default[i] - p_sol[i]);
    } else if (rs > rd) {
      ++s.losses;
      sum_l += std::abs(p_default[i] - p_sol[i]);
    } else {
      ++s.draws;
      sum_d += std::abs(p_sol[i] - p_best[i]);
    }
  }
  double n = double(s.n);
  s.pct_w = 100.0 * double(s.wins) / n;
  s.pct_wd = 100.0 * double(s.wins + s.draws) / n;
  std::size_t nondraws = s.wins + s.losses;
  s.pct_w_nond = nondraws == 0 ? 0.0 : 100.0 * double(s.wins) / double(nondraws);
  if (s.wins) s.avg_w = sum_w / double(s.wins);
  if (s.losses) s.avg_l = sum_l / double(s.losses);
  if (s.draws) s.avg_d = sum_d / double(s.draws);
  return s;
}

FeasibilityStats feasibility_stats(const std::vector<GapRecord>& records_sol,
                                   const std::vector<GapRecord>& records_default) {
  if (records_sol.size() != records_default.size())
    fail(Errc::length_mismatch, "feasibility_stats: input lengths differ");
  if (records_sol.empty()) fail(Errc::empty_input, "feasibility_stats: empty input");
  FeasibilityStats f;
  f.n = records_sol.size();
  std::size_t feas_sol = 0, feas_def = 0, both = 0, both_dual = 0;
  double ps = 0, pd = 0, ds = 0, dd = 0;
  for (std::size_t i = 0; i < f.n; ++i) {
    const GapRecord& a = records_sol[i];
    const GapRecord& b = records_default[i];
    if (a.primal_gap) ++feas_sol;
    if (b.primal_gap) ++feas_def;
    if (a.primal_gap && b.primal_gap) {
      ++both;
      ps += *a.primal_gap;
      pd += *b.primal_gap;
      if (a.dual_gap && b.dual_gap) {
        ++both_dual;
        ds += *a.dual_gap;
        dd += *b.dual_gap;
      }
    }
  }
  f.pct_feas_sol = 100.0 * double(feas_sol) / double(f.n);
  f.pct_feas_default = 100.0 * double(feas_def) / double(f.n);
  if (both) {
    f.avg_primal_sol = ps / double(both);
    f.avg_primal_default = pd / double(both);
  }
  if (both_dual) {
    f.avg_dual_sol = ds / double(both_dual);
    f.avg_dual_default = dd / double(both_dual);
  }
  return f;
}

namespace {

std::string fmt_opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::string fmt_cell(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

std::string fmt_cell_opt(const std::optional<double>& v) { return v ? fmt_cell(*v) : "-"; }

}  // namespace

std::string EvalReport::to_csv() const {
  std::ostringstream out;
  out << "split,scenario,metric,pairs,pct_glob_mins,avg_loc_mins,avg_cssp_time_s,"
         "pct_w,pct_wd,pct_w_nond,avg_d,avg_w,avg_l,"
         "pct_feas_sol,pct_feas_default,avg_primal_sol,avg_primal_default,avg_dual_sol,avg_dual_default\n";
  for (const EvalRow& r : rows) {
    out << r.split << ',' << r.scenario << ',' << r.metric << ',' << r.quality.pairs << ','
        << format_double(r.quality.pct_glob_mins) << ',' << format_double(r.quality.avg_loc_mins) << ','
        << format_double(r.quality.avg_time_s) << ',' << format_double(r.wins.pct_w) << ','
        << format_double(r.wins.pct_wd) << ',' << format_double(r.wins.pct_w_nond) << ','
        << fmt_opt(r.wins.avg_d) << ',' << fmt_opt(r.wins.avg_w) << ',' << fmt_opt(r.wins.avg_l) << ','
        << format_double(r.feas.pct_feas_sol) << ',' << format_double(r.feas.pct_feas_default) << ','
        << fmt_opt(r.feas.avg_primal_sol) << ',' << fmt_opt(r.feas.avg_primal_default) << ','
        << fmt_opt(r.feas.avg_dual_sol) << ',' << fmt_opt(r.feas.avg_dual_default) << "\n";
  }
  return out.str();
}

std::string EvalReport::to_text() const {
  std::ostringstream out;
  auto line = [&](const char* name, const std::vector<std::vector<std::string>>& table) {
    std::vector<std::size_t> width;
    for (const auto& row : table)
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c >= width.size()) width.push_back(0);
        width[c] = std::max(width[c], row[c].size());
      }
    out << name << "\n";
    for (const auto& row : table) {
      out << "  ";
      for (std::size_t c = 0; c < row.size(); ++c) {
        out << row[c];
        if (c + 1 < row.size()) out << std::string(width[c] - row[c].size() + 2, ' ');
      }
      out << "\n";
    }
    out << "\n";
  };

  std::vector<std::vector<std::string>> t1 = {{"set", "scenario", "%glob.mins", "avg loc.mins", "CSSP time"}};
  std::vector<std::vector<std::string>> t2 = {
      {"set", "scenario", "%w", "%w+d", "%w_nond", "avg d", "avg w", "avg l"}};
  std::vector<std::vector<std::string>> t3 = {{"set", "scenario", "metric", "%feas sol", "%feas default",
                                               "prim sol", "prim default", "dual sol", "dual default"}};
  for (const EvalRow& r : rows) {
    t1.push_back({r.split, r.scenario, fmt_cell(r.quality.pct_glob_mins), fmt_cell(r.quality.avg_loc_mins),
                  fmt_cell(r.quality.avg_time_s)});
    t2.push_back({r.split, r.scenario, fmt_cell(r.wins.pct_w), fmt_cell(r.wins.pct_wd),
                  fmt_cell(r.wins.pct_w_nond), fmt_cell_opt(r.wins.avg_d), fmt_cell_opt(r.wins.avg_w),
                  fmt_cell_opt(r.wins.avg_l)});
    t3.push_back({r.split, r.scenario, r.metric, fmt_cell(r.feas.pct_feas_sol),
                  fmt_cell(r.feas.pct_feas_default), fmt_cell_opt(r.feas.avg_primal_sol),
                  fmt_cell_opt(r.feas.avg_primal_default), fmt_cell_opt(r.feas.avg_dual_sol),
                  fmt_cell_opt(r.feas.avg_dual_default)});
  }
  line("Solver quality vs enumerated optimum", t1);
  line("Win/draw/loss vs default configuration", t2);
  line("Feasibility and gaps", t3);
  return out.str();
}

}  // namespace perfmap
