// Command-line front end over the C interface.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dau/dau.h"

namespace {

struct ConfigDeleter {
  void operator()(dau_config* c) const { dau_config_destroy(c); }
};
using ConfigPtr = std::unique_ptr<dau_config, ConfigDeleter>;

struct Failure {
  int code;
};

void check(dau_status st, const std::string& what) {
  if (st != DAU_OK) {
    std::cerr << "error: " << what << ": " << dau_last_error() << "\n";
    throw Failure{static_cast<int>(st)};
  }
}

struct ConfigArgs {
  std::string file;
  std::vector<std::string> sets;
  std::map<std::string, std::string> named;
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("--config", args.file, "flat key=value config file");
  cmd->add_option("--set", args.sets, "override any config key (key=value), repeatable");
}

void add_named(CLI::App* cmd, ConfigArgs& args, const std::string& flag, const std::string& key,
               const std::string& help) {
  cmd->add_option_function<std::string>(
      flag, [&args, key](const std::string& v) { args.named[key] = v; }, help);
}

ConfigPtr build_config(const ConfigArgs& args) {
  dau_config* raw = nullptr;
  check(dau_config_create(&raw), "config");
  ConfigPtr cfg(raw);
  if (!args.file.empty()) check(dau_config_load_file(cfg.get(), args.file.c_str()), "config file");
  for (const auto& s : args.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      std::cerr << "error: --set expects key=value, got '" << s << "'\n";
      throw Failure{2};
    }
    check(dau_config_set(cfg.get(), s.substr(0, eq).c_str(), s.substr(eq + 1).c_str()), s);
  }
  for (const auto& [k, v] : args.named) check(dau_config_set(cfg.get(), k.c_str(), v.c_str()), k);
  return cfg;
}

std::string get(const dau_config* cfg, const char* key) {
  size_t needed = 0;
  dau_config_get(cfg, key, nullptr, 0, &needed);
  std::string buf(needed, '\0');
  check(dau_config_get(cfg, key, buf.data(), buf.size(), nullptr), key);
  buf.resize(needed ? needed - 1 : 0);
  return buf;
}

template <class T>
std::vector<T> split_list(const std::string& text) {
  std::vector<T> out;
  std::string item;
  std::stringstream ss(text);
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::istringstream is(item);
    T v{};
    if (!(is >> v) || !is.eof()) {
      std::cerr << "error: cannot parse list item '" << item << "'\n";
      throw Failure{2};
    }
    out.push_back(v);
  }
  return out;
}

int run_theory(const std::string& name, std::uint64_t seed, const std::string& out_path) {
  std::vector<std::string> names;
  if (name == "all") {
    for (size_t i = 0; i < dau_theory_count(); ++i) names.emplace_back(dau_theory_name(i));
  } else {
    names.push_back(name);
  }
  std::string json = names.size() > 1 ? "[\n" : "";
  bool all_passed = true;
  for (size_t i = 0; i < names.size(); ++i) {
    dau_report* rep = nullptr;
    check(dau_theory_run(names[i].c_str(), seed, &rep), names[i]);
    const bool passed = dau_report_passed(rep) != 0;
    all_passed = all_passed && passed;
    std::cerr << names[i] << ": " << (passed ? "pass" : "fail") << "\n";
    json += dau_report_json(rep);
    if (names.size() > 1) json += i + 1 < names.size() ? ",\n" : "\n]";
    dau_report_destroy(rep);
  }
  json += "\n";
  if (out_path.empty()) {
    std::cout << json;
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) {
      std::cerr << "error: cannot write '" << out_path << "'\n";
      return 1;
    }
    out << json;
  }
  return all_passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-step robust value learning: training, sweeps and numerical checks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(dau_version()));

  ConfigArgs train_args;
  auto* train = app.add_subcommand("train", "run one training job");
  add_config_options(train, train_args);
  add_named(train, train_args, "--env", "env", "pendulum, cartpole, lqr or sine");
  add_named(train, train_args, "--agent", "agent", "dau, dqn or ddpg");
  add_named(train, train_args, "--mode", "mode", "scaled or unscaled");
  add_named(train, train_args, "--dt", "dt", "seconds per decision");
  add_named(train, train_args, "--seed", "seed", "master seed");
  add_named(train, train_args, "--out", "out", "output directory");

  ConfigArgs sweep_args;
  std::string dt_list, seed_list;
  auto* sweep = app.add_subcommand("sweep", "run a (dt, seed) cross product");
  add_config_options(sweep, sweep_args);
  sweep->add_option("--dt-list", dt_list, "comma-separated time steps")->required();
  sweep->add_option("--seeds", seed_list, "comma-separated seeds")->required();
  add_named(sweep, sweep_args, "--env", "env", "environment name");
  add_named(sweep, sweep_args, "--agent", "agent", "agent kind");
  add_named(sweep, sweep_args, "--mode", "mode", "scaled or unscaled");
  add_named(sweep, sweep_args, "--out", "out", "output directory");

  std::string check_name, theory_out;
  std::uint64_t theory_seed = 0;
  auto* theory = app.add_subcommand("theory", "run a numerical check and print its JSON report");
  theory->add_option("check", check_name, "check name, or 'all'")->required();
  theory->add_option("--seed", theory_seed, "seed for stochastic checks");
  theory->add_option("--out", theory_out, "write the report to this file");

  std::string checkpoint, grid_out = "grid.csv";
  std::size_t resolution = 101;
  auto* grid = app.add_subcommand("grid", "export V and greedy action on the pendulum phase plane");
  grid->add_option("--checkpoint", checkpoint, "pendulum checkpoint")->required();
  grid->add_option("--out", grid_out, "output CSV");
  grid->add_option("--resolution", resolution, "points per axis");

  auto* list = app.add_subcommand("list", "list theory checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      ConfigPtr cfg = build_config(train_args);
      double final_return = 0.0;
      int diverged = 0;
      check(dau_train(cfg.get(), &final_return, &diverged), "train");
      std::cout << "out=" << get(cfg.get(), "out") << " final_eval_scaled_return=" << final_return
                << (diverged ? " (stopped: non-finite training signal)" : "") << "\n";
      return diverged ? 3 : 0;
    }
    if (*sweep) {
      ConfigPtr cfg = build_config(sweep_args);
      const auto dts = split_list<double>(dt_list);
      const auto seeds = split_list<std::uint64_t>(seed_list);
      size_t failed = 0;
      check(dau_sweep(cfg.get(), dts.data(), dts.size(), seeds.data(), seeds.size(), &failed), "sweep");
      std::cout << "cells=" << dts.size() * seeds.size() << " failed=" << failed << "\n";
      return failed ? 3 : 0;
    }
    if (*theory) return run_theory(check_name, theory_seed, theory_out);
    if (*grid) {
      check(dau_grid_export(checkpoint.c_str(), grid_out.c_str(), resolution), "grid");
      std::cout << "wrote " << grid_out << "\n";
      return 0;
    }
    if (*list) {
      for (size_t i = 0; i < dau_theory_count(); ++i) std::cout << dau_theory_name(i) << "\n";
      return 0;
    }
  } catch (const Failure& f) {
    return f.code ? f.code : 1;
  }
  return 0;
}
