#pragma once

#include <string>
#include <vector>

#include "tailsgd/config.hpp"

namespace tailsgd {

// Every runner returns structured rows plus the finished CSV text (metadata
// comments, header, rows). CSV bytes are independent of the thread count:
// work items are pre-enumerated, each writes only its own slot, and
// aggregation happens in slot order on the calling thread.

struct FigureARow {
  double r = 0.0;
  std::string mode;  // "uniform" or "tail"
  double mean_excess_risk = 0.0;
  double std_error = 0.0;
  long replicates = 0;
  long diverged = 0;
};

struct FigureAResult {
  std::vector<FigureARow> rows;
  std::string csv;
};

// Smoothness sweep: for each r, run one-pass SGD (b=1, T=n, schedule-chosen
// step size) and report excess risk under both a full-trajectory average and
// a final-half tail average taken from the same trajectory.
FigureAResult run_figure_a(const ExperimentConfig& cfg, int threads);

struct FigureGridRow {
  double gamma = 0.0;
  long b = 0;
  std::string mode;
  double mean_excess_risk = 0.0;
  double std_error = 0.0;
  long diverged_count = 0;
};

struct FigureGridResult {
  std::vector<FigureGridRow> rows;
  std::string csv;
};

// Step-size / batch-size grid at fixed smoothness, T = round(n/b) steps so
// every cell touches the same sample budget. Divergent replicates are
// counted, not fatal.
FigureGridResult run_figure_grid(const ExperimentConfig& cfg, int threads);

struct RatesRow {
  std::string kind;  // "risk" per ladder rung, one final "slope" summary
  long n = 0;
  char variant = 'a';
  double gamma = 0.0;
  long b = 0;
  long L = 0;
  long T = 0;
  long S = 0;
  double mean_excess_risk = 0.0;  // the fitted slope on the summary row
  double std_error = 0.0;
  long diverged = 0;
};

struct RatesResult {
  std::vector<RatesRow> rows;
  std::string csv;
};

// Excess risk along a sample-size ladder with schedule() parameters, plus an
// OLS log-log slope row when at least two rungs produced positive means.
RatesResult run_rates(const ExperimentConfig& cfg, int threads);

struct VerifyRow {
  std::string check_name;
  double worst_gap = 0.0;
  double bound = 0.0;
  bool pass = false;
};

struct VerifyResult {
  std::vector<VerifyRow> rows;
  std::string csv;
  bool all_pass = false;
};

// Deterministic self-checks of the filter algebra: closed forms against
// direct window averages, the residual/filter identity, and the spectral sup
// bounds with their stated constants.
VerifyResult run_verify_filters(const ExperimentConfig& cfg);

struct ProbeRow {
  long config_index = 0;
  long d = 0;
  double nu = 0.0;
  double gamma = 0.0;
  long T = 0;
  long S = 0;
  double u = 0.0;
  double alpha = 0.0;
  double perturbation = 0.0;
  double noise_scale_sq = 0.0;
  double empirical = 0.0;
  double bound = 0.0;
  double std_error = 0.0;
  bool pass = false;
};

struct ProbeRunResult {
  std::vector<ProbeRow> rows;
  std::string csv;
  bool all_pass = false;
};

// Randomized noise-recursion configurations checked against the moment
// bound; pass means empirical <= bound + 3 standard errors.
ProbeRunResult run_probe(const ExperimentConfig& cfg, int threads);

}  // namespace tailsgd
