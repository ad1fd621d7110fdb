#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qfp/experiments.hpp"

namespace {

struct Args {
  std::string scenario_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  bool force = false;
};

void add_common(CLI::App* cmd, Args& a) {
  cmd->add_option("--scenario", a.scenario_path, "scenario JSON file")->required();
  cmd->add_option("--seed", a.seed, "run seed")->required();
  cmd->add_option("--out", a.out_dir, "output directory")->required();
  cmd->add_flag("--force", a.force, "allow writing into a non-empty output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"syndrome-based fingerprinting of simulated quantum backends"};
  app.require_subcommand(1);

  Args args;
  CLI::App* fleet =
      app.add_subcommand("fleet", "generate the backend fleet, host graph, and mapping pool");
  CLI::App* collect = app.add_subcommand("collect", "run the job schedule and log syndrome records");
  CLI::App* train = app.add_subcommand("train", "fit the supervised classifier on the records");
  CLI::App* curve = app.add_subcommand("curve", "accuracy versus shots per decision");
  CLI::App* verify = app.add_subcommand("verify", "cluster reference jobs and audit the rest");
  CLI::App* drift = app.add_subcommand("drift", "value of multi-day training under drift");
  CLI::App* causal = app.add_subcommand("causal", "accuracy with and without the full noise model");
  for (CLI::App* cmd : {fleet, collect, train, curve, verify, drift, causal})
    add_common(cmd, args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // anything malformed is a validation error
  }

  try {
    const qfp::Scenario s = qfp::load_scenario(args.scenario_path);
    if (fleet->parsed()) {
      const qfp::FleetArtifacts a = qfp::cmd_fleet(s, args.seed, args.out_dir, args.force);
      std::cout << "fleet: " << a.profiles.size() << " backends, " << a.mappings.size()
                << " mapping(s) -> " << args.out_dir << "\n";
    } else if (collect->parsed()) {
      qfp::cmd_collect(s, args.seed, args.out_dir);
      std::cout << "collect: wrote " << qfp::OutPaths(args.out_dir).records().string() << "\n";
    } else if (train->parsed()) {
      qfp::cmd_train(s, args.seed, args.out_dir);
      const nlohmann::json met = qfp::detail::read_json(
          qfp::OutPaths(args.out_dir).metrics(), "train output");
      std::cout << "train: val accuracy " << met.at("val_accuracy").get<double>() << " over "
                << met.at("n_val_rows").get<std::size_t>() << " rows\n";
    } else if (curve->parsed()) {
      qfp::cmd_curve(s, args.seed, args.out_dir);
      std::cout << "curve: wrote " << qfp::OutPaths(args.out_dir).curve().string() << "\n";
    } else if (verify->parsed()) {
      const int rc = qfp::cmd_verify(s, args.seed, args.out_dir);
      const nlohmann::json rep = qfp::detail::read_json(
          qfp::OutPaths(args.out_dir).verify_report(), "verify output");
      std::cout << "verify: " << rep.at("n_flagged").get<std::size_t>() << " of "
                << rep.at("n_queries").get<std::size_t>() << " queries flagged\n";
      return rc;
    } else if (drift->parsed()) {
      qfp::cmd_drift(s, args.seed, args.out_dir);
      const nlohmann::json rep = qfp::detail::read_json(
          qfp::OutPaths(args.out_dir).drift_report(), "drift output");
      std::cout << "drift: t = " << rep.at("t_stat").get<double>()
                << (rep.at("improved").get<bool>() ? " (second day helps)"
                                                   : " (no significant gain)")
                << "\n";
    } else if (causal->parsed()) {
      qfp::cmd_causal(s, args.seed, args.out_dir);
      const nlohmann::json rep = qfp::detail::read_json(
          qfp::OutPaths(args.out_dir).causal_report(), "causal output");
      std::cout << "causal: mean accuracy " << rep.at("mean_erad_accuracy").get<double>()
                << " relaxation-only vs " << rep.at("mean_full_accuracy").get<double>()
                << " full\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "qfprint: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
