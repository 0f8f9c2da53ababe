#pragma once

#include <string>
#include <vector>

#include "barl/log_io.hpp"

namespace barl {

// Mean learning curve of one strategy with across-seed standard errors.
struct AggregatedCurve {
  std::string strategy;
  std::vector<CurvePoint> points;  // se here is the across-seed standard error
};

// Averages per-seed curves on the union grid of query counts.
AggregatedCurve aggregate_curves(const std::string& strategy,
                                 const std::vector<std::vector<CurvePoint>>& seeds);

// Renders one environment's learning curves: logarithmic query axis with
// ticks at powers of 10, one polyline per strategy with a shaded
// standard-error band, plus a dashed ground-truth MPC reference line.
void write_learning_curve_svg(const std::string& path, const std::string& env_name,
                              const std::vector<AggregatedCurve>& curves,
                              double gt_return);

}  // namespace barl
