#pragma once

#include <map>
#include <string>
#include <vector>

#include "barl/barl_loop.hpp"

namespace barl {

// Serializes a double with 17 significant digits (round-trips exactly).
std::string format_double(double v);

// Writes queries.csv, learning_curve.csv, timing.csv and meta.txt into dir.
void write_logs(const RunLog& log, const std::string& dir);

struct QueriesFile {
  std::vector<int> iterations;
  std::vector<double> acq_values;
  Dataset dataset;
};

QueriesFile read_queries_csv(const std::string& path);

struct CurvePoint {
  double n_queries = 0.0;
  double mean = 0.0;
  double se = 0.0;
};

std::vector<CurvePoint> read_learning_curve_csv(const std::string& path);

std::map<std::string, std::string> read_meta(const std::string& path);

// One completed run found on disk (meta.txt plus its sibling CSV files).
struct RunSummary {
  std::string dir;
  std::string env;
  std::string strategy;
  std::uint64_t seed = 0;
  int solved_at = -1;  // -1: never solved
  double gt_return = 0.0;
  double rand_return = 0.0;
  std::vector<CurvePoint> curve;
};

// Recursively collects runs below root, sorted by path.
std::vector<RunSummary> scan_runs(const std::string& root);

// Aggregates queries-to-solved medians per (env, strategy) into
// <root>/sample_complexity.csv. Output is byte-stable for identical logs.
void write_sample_complexity(const std::string& root,
                             const std::vector<RunSummary>& runs);

}  // namespace barl
