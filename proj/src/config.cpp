#include "barl/config.hpp"

#include <fstream>
#include <map>
#include <sstream>

namespace barl {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  auto e = s.find_last_not_of(" \t\r\n");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

int to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    int x = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: expected integer for '" + key + "', got '" + v + "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: expected number for '" + key + "', got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config: expected true/false for '" + key + "', got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// key suffix relative to "plan.eval." / "plan.rollout."
bool apply_plan_key(PlanSpec& p, const std::string& suffix, const std::string& key,
                    const std::string& value) {
  if (suffix == "base_samples") p.base_samples = to_int(key, value);
  else if (suffix == "elites") p.elites = to_int(key, value);
  else if (suffix == "horizon") p.horizon = to_int(key, value);
  else if (suffix == "iterations") p.iterations = to_int(key, value);
  else if (suffix == "replan_period") p.replan_period = to_int(key, value);
  else if (suffix == "beta") p.beta = to_double(key, value);
  else if (suffix == "gamma") p.gamma = to_double(key, value);
  else if (suffix == "xi") p.xi = to_double(key, value);
  else return false;
  return true;
}

}  // namespace

ExperimentConfig parse_experiment_config_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto pos = line.find('=');
    if (pos == std::string::npos)
      throw ConfigError("config: line " + std::to_string(lineno) + " is not 'key = value'");
    std::string key = trim(line.substr(0, pos));
    std::string value = trim(line.substr(pos + 1));
    if (key.empty() || value.empty())
      throw ConfigError("config: empty key or value on line " + std::to_string(lineno));
    if (kv.count(key)) throw ConfigError("config: duplicate key '" + key + "'");
    kv[key] = value;
  }

  auto env_it = kv.find("env");
  if (env_it == kv.end()) throw ConfigError("config: missing required key 'env'");
  const std::string env_name = env_it->second;
  if (env_name != "pendulum" && env_name != "cartpole" && env_name != "lavapath")
    throw ConfigError("config: unknown env '" + env_name + "'");

  ExperimentConfig cfg;
  cfg.base = RunConfig::defaults_for(env_name);
  cfg.out_dir = "runs/" + env_name;

  bool rollout_set = false;
  PlanSpec rollout_overrides;  // applied after eval keys resolve

  for (const auto& [key, value] : kv) {
    if (key == "env") continue;
    else if (key == "budget") cfg.base.budget = to_int(key, value);
    else if (key == "candidates") cfg.base.candidates = to_int(key, value);
    else if (key == "path_samples") cfg.base.path_samples = to_int(key, value);
    else if (key == "eval.episodes") cfg.base.eval_episodes = to_int(key, value);
    else if (key == "eval.period") cfg.base.eval_period = to_int(key, value);
    else if (key == "refit_period") cfg.base.refit_period = to_int(key, value);
    else if (key == "fit_restarts") cfg.base.fit_restarts = to_int(key, value);
    else if (key == "feature_count") cfg.base.feature_count = to_int(key, value);
    else if (key == "horizon") cfg.base.env_horizon = to_int(key, value);
    else if (key == "threads") cfg.base.threads = to_int(key, value);
    else if (key == "stop_on_solved") cfg.base.stop_on_solved = to_bool(key, value);
    else if (key == "out") cfg.out_dir = value;
    else if (key == "seed" || key == "seeds") {
      cfg.seeds.clear();
      for (const auto& s : split_list(value)) {
        try {
          cfg.seeds.push_back(std::stoull(s));
        } catch (const std::exception&) {
          throw ConfigError("config: bad seed '" + s + "'");
        }
      }
      if (cfg.seeds.empty()) throw ConfigError("config: empty seed list");
    } else if (key == "acquisition" || key == "strategies") {
      cfg.strategies.clear();
      for (const auto& s : split_list(value)) {
        try {
          cfg.strategies.push_back(acquisition_from_string(s));
        } catch (const std::exception&) {
          throw ConfigError("config: unknown strategy '" + s + "'");
        }
      }
      if (cfg.strategies.empty()) throw ConfigError("config: empty strategy list");
    } else if (key.rfind("plan.eval.", 0) == 0) {
      if (!apply_plan_key(cfg.base.plan_eval, key.substr(10), key, value))
        throw ConfigError("config: unknown key '" + key + "'");
    } else if (key.rfind("plan.rollout.", 0) == 0) {
      rollout_set = true;
      if (!apply_plan_key(rollout_overrides, key.substr(13), key, value))
        throw ConfigError("config: unknown key '" + key + "'");
    } else {
      throw ConfigError("config: unknown key '" + key + "'");
    }
  }

  // rollout budget inherits the evaluation budget unless overridden
  cfg.base.plan_rollout = cfg.base.plan_eval;
  if (rollout_set) {
    for (const auto& [key, value] : kv) {
      if (key.rfind("plan.rollout.", 0) == 0)
        apply_plan_key(cfg.base.plan_rollout, key.substr(13), key, value);
    }
  }

  if (cfg.strategies.empty()) cfg.strategies.push_back(cfg.base.acquisition);

  // distinct seeds required
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i)
    for (std::size_t j = i + 1; j < cfg.seeds.size(); ++j)
      if (cfg.seeds[i] == cfg.seeds[j])
        throw ConfigError("config: duplicate seed " + std::to_string(cfg.seeds[i]));

  try {
    cfg.base.plan_eval.validate();
    cfg.base.plan_rollout.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: invalid plan spec: ") + e.what());
  }
  return cfg;
}

ExperimentConfig parse_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config_text(ss.str());
}

}  // namespace barl
