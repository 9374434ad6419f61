#include "dau/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dau/envs.hpp"
#include "dau/errors.hpp"

namespace dau {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || p != end) throw InvalidArgument("bad number for " + key + ": '" + v + "'");
  return x;
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t x = 0;
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || p != end)
    throw InvalidArgument("bad non-negative integer for " + key + ": '" + v + "'");
  return x;
}

std::vector<std::size_t> parse_sizes(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_uint(key, item));
  }
  return out;
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

bool classic_control_env(const std::string& env) { return env == "pendulum" || env == "cartpole"; }

}  // namespace

const std::vector<std::string>& ExperimentConfig::keys() {
  static const std::vector<std::string> k{
      "env",          "agent",        "mode",          "dt",           "gamma",
      "seed",         "parallel_envs", "nb_epochs",    "train_seconds", "nb_steps",
      "nb_learn",     "batch",        "buffer_capacity", "eval_interval", "eval_episodes",
      "eval_seconds", "out",          "hidden",        "alpha_critic", "alpha_policy",
      "tau",          "dt_ref",       "beta",          "ou_kappa",     "ou_sigma",
      "substeps",     "workers"};
  return k;
}

void ExperimentConfig::set(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (key == "env") env = v;
  else if (key == "agent") agent = v;
  else if (key == "mode") mode = parse_scaling_mode(v);
  else if (key == "dt") dt = parse_double(key, v);
  else if (key == "gamma") gamma = parse_double(key, v);
  else if (key == "seed") seed = parse_uint(key, v);
  else if (key == "parallel_envs") parallel_envs = parse_uint(key, v);
  else if (key == "nb_epochs") nb_epochs = parse_uint(key, v);
  else if (key == "train_seconds") train_seconds = parse_double(key, v);
  else if (key == "nb_steps") nb_steps = parse_uint(key, v);
  else if (key == "nb_learn") nb_learn = parse_uint(key, v);
  else if (key == "batch") batch = parse_uint(key, v);
  else if (key == "buffer_capacity") buffer_capacity = parse_uint(key, v);
  else if (key == "eval_interval") eval_interval = parse_double(key, v);
  else if (key == "eval_episodes") eval_episodes = parse_uint(key, v);
  else if (key == "eval_seconds") eval_seconds = parse_double(key, v);
  else if (key == "out") out = v;
  else if (key == "hidden") hidden = parse_sizes(key, v);
  else if (key == "alpha_critic") alpha_critic = parse_double(key, v);
  else if (key == "alpha_policy") alpha_policy = parse_double(key, v);
  else if (key == "tau") tau = parse_double(key, v);
  else if (key == "dt_ref") dt_ref = parse_double(key, v);
  else if (key == "beta") beta = parse_double(key, v);
  else if (key == "ou_kappa") ou_kappa = parse_double(key, v);
  else if (key == "ou_sigma") ou_sigma = parse_double(key, v);
  else if (key == "substeps") substeps = static_cast<int>(parse_uint(key, v));
  else if (key == "workers") workers = parse_uint(key, v);
  else throw InvalidArgument("unknown config key '" + key + "'");
}

std::string ExperimentConfig::get(const std::string& key) const {
  const HyperConfig h = hyper();
  if (key == "env") return env;
  if (key == "agent") return agent;
  if (key == "mode") return to_string(mode);
  if (key == "dt") return fmt(dt);
  if (key == "gamma") return fmt(gamma);
  if (key == "seed") return std::to_string(seed);
  if (key == "parallel_envs") return std::to_string(parallel_envs);
  if (key == "nb_epochs") return std::to_string(nb_epochs);
  if (key == "train_seconds") return fmt(train_seconds);
  if (key == "nb_steps") return std::to_string(nb_steps);
  if (key == "nb_learn") return std::to_string(nb_learn);
  if (key == "batch") return std::to_string(batch);
  if (key == "buffer_capacity") return std::to_string(buffer_capacity);
  if (key == "eval_interval") return fmt(eval_interval);
  if (key == "eval_episodes") return std::to_string(eval_episodes);
  if (key == "eval_seconds") return fmt(eval_seconds);
  if (key == "out") return out;
  if (key == "hidden") return join(hidden);
  if (key == "alpha_critic") return fmt(h.alpha_critic);
  if (key == "alpha_policy") return fmt(h.alpha_policy);
  if (key == "tau") return fmt(h.tau);
  if (key == "dt_ref") return fmt(dt_ref);
  if (key == "beta") return fmt(beta);
  if (key == "ou_kappa") return fmt(ou_kappa);
  if (key == "ou_sigma") return fmt(ou_sigma);
  if (key == "substeps") return std::to_string(substeps);
  if (key == "workers") return std::to_string(workers);
  throw InvalidArgument("unknown config key '" + key + "'");
}

HyperConfig ExperimentConfig::hyper() const {
  HyperConfig h;
  h.mode = mode;
  h.gamma = gamma;
  h.dt_ref = dt_ref;
  h.beta = beta;
  if (classic_control_env(env)) {
    h.alpha_policy = 0.02;
    h.tau = 0.0;
  }
  if (alpha_critic) h.alpha_critic = *alpha_critic;
  if (alpha_policy) h.alpha_policy = *alpha_policy;
  if (tau) h.tau = *tau;
  return h;
}

double ExperimentConfig::seconds_per_epoch() const {
  return static_cast<double>(nb_steps * parallel_envs) * dt;
}

std::size_t ExperimentConfig::epochs() const {
  if (train_seconds > 0.0)
    return static_cast<std::size_t>(std::llround(train_seconds / seconds_per_epoch()));
  return nb_epochs;
}

void ExperimentConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("dt must be positive");
  if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidArgument("gamma must lie in (0, 1)");
  if (parallel_envs == 0 || nb_steps == 0) throw InvalidArgument("parallel_envs and nb_steps must be positive");
  if (batch == 0) throw InvalidArgument("batch must be positive");
  if (buffer_capacity == 0) throw InvalidArgument("buffer_capacity must be positive");
  if (!(eval_interval > 0.0)) throw InvalidArgument("eval_interval must be positive");
  if (hidden.empty()) throw InvalidArgument("hidden needs at least one layer size");
  for (auto h : hidden)
    if (h == 0) throw InvalidArgument("hidden layer sizes must be positive");
  if (substeps < 1) throw InvalidArgument("substeps must be at least 1");
  if (beta < 0.0) throw InvalidArgument("beta must be non-negative");
  if (!(ou_kappa > 0.0) || !(ou_sigma >= 0.0)) throw InvalidArgument("bad OU parameters");
  const auto names = environment_names();
  if (std::find(names.begin(), names.end(), env) == names.end())
    throw InvalidArgument("unknown environment '" + env + "'");
  if (agent != "dau" && agent != "dqn" && agent != "ddpg")
    throw InvalidArgument("unknown agent '" + agent + "'");
}

std::string ExperimentConfig::to_json() const {
  nlohmann::ordered_json j;
  j["env"] = env;
  j["agent"] = agent;
  j["mode"] = to_string(mode);
  j["dt"] = dt;
  j["gamma"] = gamma;
  j["seed"] = seed;
  j["parallel_envs"] = parallel_envs;
  j["nb_epochs"] = epochs();
  j["train_seconds"] = train_seconds;
  j["nb_steps"] = nb_steps;
  j["nb_learn"] = nb_learn;
  j["batch"] = batch;
  j["buffer_capacity"] = buffer_capacity;
  j["eval_interval"] = eval_interval;
  j["eval_episodes"] = eval_episodes;
  j["eval_seconds"] = eval_seconds;
  j["out"] = out;
  j["hidden"] = hidden;
  const HyperConfig h = hyper();
  j["alpha_critic"] = h.alpha_critic;
  j["alpha_policy"] = h.alpha_policy;
  j["tau"] = h.tau;
  j["dt_ref"] = dt_ref;
  j["beta"] = beta;
  j["ou_kappa"] = ou_kappa;
  j["ou_sigma"] = ou_sigma;
  j["substeps"] = substeps;
  j["workers"] = workers;
  const ResolvedRates r = hyper_resolve(h, dt);
  j["resolved"] = {{"lr_value", r.lr_value},         {"lr_advantage", r.lr_advantage},
                   {"lr_policy", r.lr_policy},       {"reward_scale", r.reward_scale},
                   {"rms_decay", r.rms_decay},       {"discount", r.discount},
                   {"tau", r.tau}};
  j["physical_seconds_per_epoch"] = seconds_per_epoch();
  j["total_physical_seconds"] = seconds_per_epoch() * static_cast<double>(epochs());
  j["csv_schema_version"] = 1;
  return j.dump(2);
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw InvalidArgument("line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) throw InvalidArgument("line " + std::to_string(lineno) + ": empty key");
    kv[key] = trim(t.substr(eq + 1));
  }
  return kv;
}

void apply_key_values(ExperimentConfig& cfg, const std::map<std::string, std::string>& kv) {
  for (const auto& [k, v] : kv) cfg.set(k, v);
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  ExperimentConfig cfg;
  apply_key_values(cfg, parse_key_values(ss.str()));
  return cfg;
}

}  // namespace dau
