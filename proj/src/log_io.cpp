#include "barl/log_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "barl/errors.hpp"

namespace fs = std::filesystem;

namespace barl {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, sep)) out.push_back(field);
  return out;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  auto e = s.find_last_not_of(" \t\r\n");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

void write_plan_spec(std::ofstream& out, const std::string& prefix, const PlanSpec& p) {
  out << prefix << ".base_samples = " << p.base_samples << "\n";
  out << prefix << ".elites = " << p.elites << "\n";
  out << prefix << ".horizon = " << p.horizon << "\n";
  out << prefix << ".iterations = " << p.iterations << "\n";
  out << prefix << ".replan_period = " << p.replan_period << "\n";
  out << prefix << ".beta = " << format_double(p.beta) << "\n";
  out << prefix << ".gamma = " << format_double(p.gamma) << "\n";
  out << prefix << ".xi = " << format_double(p.xi) << "\n";
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

}  // namespace

void write_logs(const RunLog& log, const std::string& dir) {
  fs::create_directories(dir);
  const int d = log.final_dataset.state_dim();
  const int na = log.final_dataset.action_dim();

  {
    std::ofstream out = open_out(dir + "/queries.csv");
    out << "iteration";
    for (int j = 0; j < d + na; ++j) out << ",in_" << j;
    for (int j = 0; j < d; ++j) out << ",next_" << j;
    out << ",acq_value\n";
    for (const auto& q : log.queries) {
      out << q.iteration;
      for (int j = 0; j < d + na; ++j) out << "," << format_double(q.input[j]);
      for (int j = 0; j < d; ++j) out << "," << format_double(q.next_state[j]);
      out << "," << format_double(q.acq_value) << "\n";
    }
  }
  {
    std::ofstream out = open_out(dir + "/learning_curve.csv");
    out << "n_queries,eval_return_mean,eval_return_se\n";
    for (const auto& e : log.evals)
      out << e.n_queries << "," << format_double(e.mean_return) << ","
          << format_double(e.se_return) << "\n";
  }
  {
    std::ofstream out = open_out(dir + "/timing.csv");
    out << "iteration,phase,seconds\n";
    for (const auto& t : log.timings)
      out << t.iteration << "," << t.phase << "," << format_double(t.seconds) << "\n";
  }
  {
    std::ofstream out = open_out(dir + "/meta.txt");
    const RunConfig& c = log.config;
    out << "env = " << c.env_name << "\n";
    out << "acquisition = " << to_string(c.acquisition) << "\n";
    out << "seed = " << c.seed << "\n";
    out << "budget = " << c.budget << "\n";
    out << "candidates = " << c.candidates << "\n";
    out << "path_samples = " << c.path_samples << "\n";
    out << "eval.episodes = " << c.eval_episodes << "\n";
    out << "eval.period = " << c.eval_period << "\n";
    out << "refit_period = " << c.refit_period << "\n";
    out << "fit_restarts = " << c.fit_restarts << "\n";
    out << "feature_count = " << c.feature_count << "\n";
    out << "horizon = " << c.env_horizon << "\n";
    out << "threads = " << c.threads << "\n";
    out << "stop_on_solved = " << (c.stop_on_solved ? "true" : "false") << "\n";
    write_plan_spec(out, "plan.eval", c.plan_eval);
    write_plan_spec(out, "plan.rollout", c.plan_rollout);
    out << "state_dim = " << d << "\n";
    out << "action_dim = " << na << "\n";
    out << "gt_return = " << format_double(log.gt_return) << "\n";
    out << "rand_return = " << format_double(log.rand_return) << "\n";
    out << "solved_at = " << log.solved_at << "\n";
  }
}

QueriesFile read_queries_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty queries csv: " + path);
  auto header = split(trim(line), ',');
  int n_in = 0, n_next = 0;
  for (const auto& h : header) {
    if (h.rfind("in_", 0) == 0) ++n_in;
    if (h.rfind("next_", 0) == 0) ++n_next;
  }
  const int d = n_next, na = n_in - n_next;
  if (d <= 0 || na < 0) throw std::runtime_error("malformed queries csv header: " + path);

  QueriesFile qf;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto fields = split(trim(line), ',');
    if (static_cast<int>(fields.size()) != 1 + n_in + n_next + 1)
      throw std::runtime_error("malformed queries csv row: " + path);
    qf.iterations.push_back(std::stoi(fields[0]));
    Eigen::VectorXd s(d), a(na), sn(d);
    for (int j = 0; j < d; ++j) s[j] = std::strtod(fields[1 + j].c_str(), nullptr);
    for (int j = 0; j < na; ++j) a[j] = std::strtod(fields[1 + d + j].c_str(), nullptr);
    for (int j = 0; j < d; ++j) sn[j] = std::strtod(fields[1 + n_in + j].c_str(), nullptr);
    qf.acq_values.push_back(std::strtod(fields[1 + n_in + n_next].c_str(), nullptr));
    qf.dataset.add(s, a, sn);
  }
  return qf;
}

std::vector<CurvePoint> read_learning_curve_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string line;
  std::getline(in, line);  // header
  std::vector<CurvePoint> out;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto fields = split(trim(line), ',');
    if (fields.size() != 3) throw std::runtime_error("malformed learning curve row: " + path);
    out.push_back({std::strtod(fields[0].c_str(), nullptr),
                   std::strtod(fields[1].c_str(), nullptr),
                   std::strtod(fields[2].c_str(), nullptr)});
  }
  return out;
}

std::map<std::string, std::string> read_meta(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::map<std::string, std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    auto pos = line.find('=');
    if (pos == std::string::npos) continue;
    out[trim(line.substr(0, pos))] = trim(line.substr(pos + 1));
  }
  return out;
}

std::vector<RunSummary> scan_runs(const std::string& root) {
  std::vector<std::string> meta_paths;
  if (!fs::exists(root)) throw std::runtime_error("no such directory: " + root);
  for (const auto& entry : fs::recursive_directory_iterator(root))
    if (entry.is_regular_file() && entry.path().filename() == "meta.txt")
      meta_paths.push_back(entry.path().string());
  std::sort(meta_paths.begin(), meta_paths.end());

  std::vector<RunSummary> runs;
  for (const auto& mp : meta_paths) {
    auto meta = read_meta(mp);
    RunSummary r;
    r.dir = fs::path(mp).parent_path().string();
    r.env = meta.at("env");
    r.strategy = meta.at("acquisition");
    r.seed = std::stoull(meta.at("seed"));
    r.solved_at = std::stoi(meta.at("solved_at"));
    r.gt_return = std::strtod(meta.at("gt_return").c_str(), nullptr);
    r.rand_return = std::strtod(meta.at("rand_return").c_str(), nullptr);
    std::string curve_path = r.dir + "/learning_curve.csv";
    if (fs::exists(curve_path)) r.curve = read_learning_curve_csv(curve_path);
    runs.push_back(std::move(r));
  }
  return runs;
}

void write_sample_complexity(const std::string& root,
                             const std::vector<RunSummary>& runs) {
  struct Group {
    std::vector<double> solved;
    int n_seeds = 0;
  };
  std::map<std::pair<std::string, std::string>, Group> groups;
  for (const auto& r : runs) {
    auto& g = groups[{r.env, r.strategy}];
    ++g.n_seeds;
    g.solved.push_back(r.solved_at < 0 ? std::numeric_limits<double>::infinity()
                                       : static_cast<double>(r.solved_at));
  }

  std::ofstream out = open_out(root + "/sample_complexity.csv");
  out << "env,strategy,n_seeds,n_solved,median_queries_to_solved\n";
  for (auto& [key, g] : groups) {
    std::sort(g.solved.begin(), g.solved.end());
    const std::size_t n = g.solved.size();
    double median = (n % 2 == 1) ? g.solved[n / 2]
                                 : 0.5 * (g.solved[n / 2 - 1] + g.solved[n / 2]);
    int n_solved = static_cast<int>(
        std::count_if(g.solved.begin(), g.solved.end(),
                      [](double v) { return std::isfinite(v); }));
    out << key.first << "," << key.second << "," << g.n_seeds << "," << n_solved << ",";
    if (std::isfinite(median))
      out << format_double(median);
    else
      out << "NA";
    out << "\n";
  }
}

}  // namespace barl
