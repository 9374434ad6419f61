#include "dau/dau.h"

#include <cmath>
#include <cstring>
#include <string>

#include "dau/config.hpp"
#include "dau/envs.hpp"
#include "dau/errors.hpp"
#include "dau/harness.hpp"
#include "dau/theory.hpp"

struct dau_config {
  dau::ExperimentConfig cfg;
};

struct dau_report {
  dau::theory::Report report;
  std::string json;
};

struct dau_env {
  dau::Environment env;
  dau::NearContinuousMdp mdp;
  dau::Rng rng;
  dau::State state;
  bool started = false;
};

namespace {

thread_local std::string g_error;

template <class F>
dau_status guarded(F&& f) {
  try {
    f();
    g_error.clear();
    return DAU_OK;
  } catch (const dau::InvalidArgument& e) {
    g_error = e.what();
    return DAU_ERR_INVALID_ARGUMENT;
  } catch (const dau::IoError& e) {
    g_error = e.what();
    return DAU_ERR_IO;
  } catch (const dau::NumericError& e) {
    g_error = e.what();
    return DAU_ERR_NUMERIC;
  } catch (const dau::ContractViolation& e) {
    g_error = e.what();
    return DAU_ERR_CONTRACT;
  } catch (const std::exception& e) {
    g_error = e.what();
    return DAU_ERR_INTERNAL;
  } catch (...) {
    g_error = "unknown error";
    return DAU_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) throw dau::InvalidArgument(std::string(what) + " must not be null");
}

}  // namespace

extern "C" {

const char* dau_version(void) { return "1.0.0"; }
const char* dau_last_error(void) { return g_error.c_str(); }

dau_status dau_config_create(dau_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new dau_config{};
  });
}

void dau_config_destroy(dau_config* cfg) { delete cfg; }

dau_status dau_config_set(dau_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    require(cfg, "config");
    require(key, "key");
    require(value, "value");
    cfg->cfg.set(key, value);
  });
}

dau_status dau_config_load_file(dau_config* cfg, const char* path) {
  return guarded([&] {
    require(cfg, "config");
    require(path, "path");
    dau::ExperimentConfig loaded = dau::load_config_file(path);
    cfg->cfg = std::move(loaded);
  });
}

dau_status dau_config_get(const dau_config* cfg, const char* key, char* buf, size_t len, size_t* needed) {
  std::string value;
  const dau_status st = guarded([&] {
    require(cfg, "config");
    require(key, "key");
    value = cfg->cfg.get(key);
  });
  if (st != DAU_OK) return st;
  if (needed) *needed = value.size() + 1;
  if (!buf || len < value.size() + 1) {
    g_error = "buffer too small";
    return DAU_ERR_BUFFER_TOO_SMALL;
  }
  std::memcpy(buf, value.c_str(), value.size() + 1);
  return DAU_OK;
}

dau_status dau_train(const dau_config* cfg, double* final_return, int* diverged) {
  return guarded([&] {
    require(cfg, "config");
    const dau::RunResult r = dau::run_experiment(cfg->cfg);
    if (final_return) *final_return = r.rows.empty() ? std::nan("") : r.rows.back().eval_scaled_return;
    if (diverged) *diverged = r.diverged ? 1 : 0;
  });
}

dau_status dau_sweep(const dau_config* base, const double* dts, size_t n_dts, const uint64_t* seeds,
                     size_t n_seeds, size_t* failed_cells) {
  return guarded([&] {
    require(base, "config");
    require(dts, "dts");
    require(seeds, "seeds");
    const auto cells = dau::run_sweep(base->cfg, std::vector<double>(dts, dts + n_dts),
                                      std::vector<std::uint64_t>(seeds, seeds + n_seeds));
    if (failed_cells) {
      *failed_cells = 0;
      for (const auto& c : cells)
        if (!c.ok) ++*failed_cells;
    }
  });
}

size_t dau_theory_count(void) { return dau::theory::check_names().size(); }

const char* dau_theory_name(size_t index) {
  static const std::vector<std::string> names = dau::theory::check_names();
  return index < names.size() ? names[index].c_str() : nullptr;
}

dau_status dau_theory_run(const char* name, uint64_t seed, dau_report** out) {
  return guarded([&] {
    require(name, "name");
    require(out, "out");
    auto* r = new dau_report{dau::theory::run_check(name, seed), {}};
    r->json = r->report.to_json();
    *out = r;
  });
}

void dau_report_destroy(dau_report* report) { delete report; }
int dau_report_passed(const dau_report* report) { return report && report->report.passed ? 1 : 0; }
const char* dau_report_json(const dau_report* report) { return report ? report->json.c_str() : ""; }

dau_status dau_grid_export(const char* checkpoint_path, const char* out_csv, size_t resolution) {
  return guarded([&] {
    require(checkpoint_path, "checkpoint path");
    require(out_csv, "output path");
    dau::export_value_grid(checkpoint_path, out_csv, resolution);
  });
}

dau_status dau_env_create(const char* name, double dt, double gamma, uint64_t seed, dau_env** out) {
  return guarded([&] {
    require(name, "name");
    require(out, "out");
    dau::Environment env = dau::make_environment(name);
    dau::NearContinuousMdp mdp(env.dynamics, dt, gamma);
    *out = new dau_env{std::move(env), std::move(mdp), dau::make_stream(seed, dau::Stream::env), {}, false};
  });
}

void dau_env_destroy(dau_env* env) { delete env; }

size_t dau_env_state_dim(const dau_env* env) { return env ? env->env.dynamics.state_dim : 0; }

size_t dau_env_action_dim(const dau_env* env) {
  if (!env) return 0;
  const auto& a = env->env.dynamics.actions;
  return a.is_discrete() ? 1 : a.dim();
}

int dau_env_is_discrete(const dau_env* env) { return env && env->env.dynamics.actions.is_discrete() ? 1 : 0; }

dau_status dau_env_reset(dau_env* env, double* state_out) {
  return guarded([&] {
    require(env, "env");
    require(state_out, "state_out");
    env->state = env->env.sample_initial(env->rng);
    env->started = true;
    std::copy(env->state.begin(), env->state.end(), state_out);
  });
}

dau_status dau_env_step(dau_env* env, const double* action, double* state_out, double* reward, int* done) {
  return guarded([&] {
    require(env, "env");
    require(action, "action");
    require(state_out, "state_out");
    if (!env->started) throw dau::ContractViolation("reset the environment before stepping");
    const auto& space = env->env.dynamics.actions;
    dau::Action a = dau::Action::discrete(0);
    if (space.is_discrete()) {
      const double idx = action[0];
      if (!(idx >= 0.0) || idx >= static_cast<double>(space.count()) || idx != std::floor(idx))
        throw dau::InvalidArgument("discrete action index out of range");
      a = dau::Action::discrete(static_cast<std::size_t>(idx));
    } else {
      a = dau::Action::continuous(std::vector<double>(action, action + space.dim()));
    }
    dau::StepResult r = env->mdp.step(env->state, a);
    env->state = std::move(r.next);
    std::copy(env->state.begin(), env->state.end(), state_out);
    if (reward) *reward = r.reward;
    if (done) *done = r.done ? 1 : 0;
  });
}

}  // extern "C"
