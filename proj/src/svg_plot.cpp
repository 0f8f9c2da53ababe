#include "barl/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

namespace barl {

AggregatedCurve aggregate_curves(const std::string& strategy,
                                 const std::vector<std::vector<CurvePoint>>& seeds) {
  std::map<double, std::vector<double>> by_x;
  for (const auto& curve : seeds)
    for (const auto& p : curve) by_x[p.n_queries].push_back(p.mean);

  AggregatedCurve out;
  out.strategy = strategy;
  for (const auto& [x, vals] : by_x) {
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= vals.size();
    double se = 0.0;
    if (vals.size() > 1) {
      double var = 0.0;
      for (double v : vals) var += (v - mean) * (v - mean);
      var /= (vals.size() - 1);
      se = std::sqrt(var / vals.size());
    }
    out.points.push_back({x, mean, se});
  }
  return out;
}

namespace {

const char* strategy_color(const std::string& s) {
  if (s == "barl") return "#1f77b4";
  if (s == "eig_t") return "#ff7f0e";
  if (s == "random") return "#2ca02c";
  if (s == "rollout_mpc") return "#d62728";
  return "#7f7f7f";
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

void write_learning_curve_svg(const std::string& path, const std::string& env_name,
                              const std::vector<AggregatedCurve>& curves,
                              double gt_return) {
  const double width = 860, height = 520;
  const double ml = 80, mr = 180, mt = 40, mb = 60;
  const double pw = width - ml - mr, ph = height - mt - mb;

  double xmin = 1.0, xmax = 10.0;
  double ymin = gt_return, ymax = gt_return;
  bool any = false;
  for (const auto& c : curves)
    for (const auto& p : c.points) {
      xmax = std::max(xmax, p.n_queries);
      ymin = std::min(ymin, p.mean - p.se);
      ymax = std::max(ymax, p.mean + p.se);
      any = true;
    }
  if (!any) ymin = -1.0, ymax = 1.0;
  if (ymax - ymin < 1e-9) {
    ymin -= 1.0;
    ymax += 1.0;
  }
  double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  const double lx0 = std::log10(xmin);
  const double lx1 = std::log10(std::pow(10.0, std::ceil(std::log10(xmax) - 1e-9)));
  auto map_x = [&](double x) {
    double lx = std::log10(std::max(x, xmin));
    return ml + pw * (lx - lx0) / std::max(lx1 - lx0, 1e-9);
  };
  auto map_y = [&](double y) { return mt + ph * (1.0 - (y - ymin) / (ymax - ymin)); };

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << ml << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">"
      << env_name << " learning curves</text>\n";

  // axes
  out << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw
      << "\" y2=\"" << mt + ph << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
      << mt + ph << "\" stroke=\"black\"/>\n";

  // logarithmic x ticks at powers of 10
  for (double e = std::round(lx0);; e += 1.0) {
    double v = std::pow(10.0, e);
    if (std::log10(v) > lx1 + 1e-9) break;
    double x = map_x(v);
    out << "<line x1=\"" << x << "\" y1=\"" << mt + ph << "\" x2=\"" << x << "\" y2=\""
        << mt + ph + 6 << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << x << "\" y=\"" << mt + ph + 22
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
        << num(v) << "</text>\n";
  }
  out << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 14
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
      << "transition queries (log scale)</text>\n";

  // y ticks
  for (int i = 0; i <= 5; ++i) {
    double v = ymin + (ymax - ymin) * i / 5.0;
    double y = map_y(v);
    out << "<line x1=\"" << ml - 6 << "\" y1=\"" << y << "\" x2=\"" << ml << "\" y2=\""
        << y << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << ml - 10 << "\" y=\"" << y + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" << num(v)
        << "</text>\n";
  }
  out << "<text x=\"20\" y=\"" << mt + ph / 2
      << "\" transform=\"rotate(-90 20 " << mt + ph / 2
      << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
      << "mean evaluation return</text>\n";

  // ground-truth MPC reference
  out << "<line x1=\"" << ml << "\" y1=\"" << map_y(gt_return) << "\" x2=\"" << ml + pw
      << "\" y2=\"" << map_y(gt_return)
      << "\" stroke=\"#555555\" stroke-dasharray=\"6 4\"/>\n";

  double legend_y = mt + 10;
  out << "<text x=\"" << ml + pw + 14 << "\" y=\"" << legend_y
      << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#555555\">ground-truth "
         "MPC</text>\n";
  legend_y += 20;

  for (const auto& c : curves) {
    if (c.points.empty()) continue;
    const char* color = strategy_color(c.strategy);

    // standard-error band
    std::string band = "<polygon fill=\"" + std::string(color) + "\" fill-opacity=\"0.18\" stroke=\"none\" points=\"";
    for (const auto& p : c.points)
      band += num(map_x(p.n_queries)) + "," + num(map_y(p.mean + p.se)) + " ";
    for (auto it = c.points.rbegin(); it != c.points.rend(); ++it)
      band += num(map_x(it->n_queries)) + "," + num(map_y(it->mean - it->se)) + " ";
    band += "\"/>\n";
    out << band;

    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& p : c.points)
      out << num(map_x(p.n_queries)) << "," << num(map_y(p.mean)) << " ";
    out << "\"/>\n";

    out << "<line x1=\"" << ml + pw + 14 << "\" y1=\"" << legend_y - 4 << "\" x2=\""
        << ml + pw + 40 << "\" y2=\"" << legend_y - 4 << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << ml + pw + 46 << "\" y=\"" << legend_y
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << c.strategy << "</text>\n";
    legend_y += 20;
  }
  out << "</svg>\n";
}

}  // namespace barl
