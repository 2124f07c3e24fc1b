// Command-line driver for the rebalancing toolkit: validate networks,
// compute equilibrium references, partition zones, and run or compare
// closed-loop experiments.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "amod/demand.hpp"
#include "amod/errors.hpp"
#include "amod/harness.hpp"
#include "amod/network.hpp"
#include "amod/reference.hpp"

namespace {

using nlohmann::json;

void print_error(const std::string& code, const std::string& message) {
  json doc;
  doc["error"]["code"] = code;
  doc["error"]["message"] = message;
  std::cerr << doc.dump() << "\n";
}

struct CommonOverrides {
  std::optional<uint64_t> seed;
  std::optional<std::string> controller;
  std::optional<double> step_minutes;
  std::optional<int> horizon;
  std::optional<int> fleet;
  std::optional<double> perturb;

  void apply(amod::ExperimentConfig& cfg) const {
    if (seed) cfg.demand_seed = *seed;
    if (controller) cfg.controller = amod::controller_from_string(*controller);
    if (step_minutes) {
      // keep wall-clock duration and refresh interval fixed
      double dur_min = cfg.duration_steps * cfg.step_minutes;
      double ref_min = cfg.refresh_steps * cfg.step_minutes;
      cfg.step_minutes = *step_minutes;
      cfg.duration_steps =
          std::max(1, static_cast<int>(std::llround(dur_min / *step_minutes)));
      cfg.refresh_steps =
          std::max(1, static_cast<int>(std::llround(ref_min / *step_minutes)));
    }
    if (horizon) cfg.horizon = *horizon;
    if (fleet) cfg.fleet = *fleet;
    if (perturb) cfg.perturbation = *perturb;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zoned mobility-on-demand rebalancing toolkit"};
  app.set_version_flag("--version", "amodctl 1.0.0");
  app.require_subcommand(1);

  // --- simulate ---
  auto* sim = app.add_subcommand("simulate", "run one closed-loop experiment");
  std::string sim_config, sim_out = "out", format = "csv";
  CommonOverrides sim_over;
  sim->add_option("--config", sim_config, "experiment config JSON")->required();
  sim->add_option("--out", sim_out, "output directory");
  sim->add_option("--format", format, "series format")
      ->check(CLI::IsMember({"csv", "json"}));
  sim->add_option("--seed", sim_over.seed, "override demand seed");
  sim->add_option("--controller", sim_over.controller,
                  "QMPC_QRef|QMPC_LRef|LMPC_QRef|LMPC_LRef|IARR");
  sim->add_option("--step-minutes", sim_over.step_minutes, "control step length");
  sim->add_option("--horizon", sim_over.horizon, "MPC horizon");
  sim->add_option("--fleet", sim_over.fleet, "fleet size");
  sim->add_option("--perturb", sim_over.perturb, "travel-time perturbation");

  // --- reference ---
  auto* refcmd = app.add_subcommand("reference", "compute an equilibrium reference");
  std::string ref_network, ref_scenario, ref_cost = "linear";
  double ref_minute = 0.0, ref_step_minutes = 2.0;
  std::optional<int> ref_fleet;
  refcmd->add_option("--network", ref_network, "road network file")->required();
  refcmd->add_option("--scenario", ref_scenario, "demand scenario JSON")->required();
  refcmd->add_option("--cost", ref_cost, "linear|quadratic")
      ->check(CLI::IsMember({"linear", "quadratic"}));
  refcmd->add_option("--minute", ref_minute, "scenario minute to take rates from");
  refcmd->add_option("--step-minutes", ref_step_minutes, "control step length");
  refcmd->add_option("--fleet", ref_fleet, "fleet size for the idle split");

  // --- compare ---
  auto* cmp = app.add_subcommand("compare", "paired controller comparison");
  std::vector<std::string> cmp_configs;
  std::vector<std::string> cmp_controllers;
  std::string cmp_out;
  uint64_t cmp_seed = 1;
  bool cmp_serial = false;
  cmp->add_option("--config", cmp_configs, "experiment config(s); repeatable")
      ->required();
  cmp->add_option("--controllers", cmp_controllers,
                  "controller list applied to a single --config");
  cmp->add_option("--seed", cmp_seed, "shared demand seed");
  cmp->add_option("--out", cmp_out, "optional output directory for per-run files");
  cmp->add_flag("--serial", cmp_serial, "disable parallel runs");

  // --- partition ---
  auto* part = app.add_subcommand("partition", "k-means zone partitioning");
  std::string part_points;
  int part_k = 2, part_iters = 100;
  uint64_t part_seed = 1;
  part->add_option("--points", part_points, "points file: x y [weight]")->required();
  part->add_option("--k", part_k, "zone count")->required();
  part->add_option("--max-iters", part_iters, "Lloyd iteration cap");
  part->add_option("--seed", part_seed, "center seeding");

  // --- validate ---
  auto* val = app.add_subcommand("validate", "check a road network file");
  std::string val_network;
  val->add_option("network", val_network, "road network file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    if (*sim) {
      amod::ExperimentConfig cfg = amod::load_experiment_config(sim_config);
      sim_over.apply(cfg);
      amod::RunReport report = amod::run(cfg);
      amod::emit(report, sim_out);
      if (format == "json")
        std::cout << amod::summary_to_json(report) << "\n";
      else
        std::cout << "controller=" << report.summary.controller
                  << " avg_queue=" << report.summary.avg_queue_length
                  << " avg_wait_min=" << report.summary.avg_wait_minutes
                  << " empty_miles=" << report.summary.total_empty_miles << "\n";
      return 0;
    }

    if (*refcmd) {
      amod::RoadNetwork road = amod::load_road_network(ref_network);
      amod::CompleteNetwork net = amod::complete(road, ref_step_minutes);
      amod::DemandScenario scenario =
          amod::load_scenario(ref_scenario, ref_step_minutes, 0);
      int step = static_cast<int>(ref_minute / ref_step_minutes);
      Eigen::VectorXd lambda = amod::active_lambda(scenario, step);
      amod::EquilibriumReference ref = amod::solve_reference(
          net, lambda, amod::cost_kind_from_string(ref_cost),
          ref_fleet ? std::optional<double>(*ref_fleet) : std::nullopt);
      std::cout << ref.to_json() << "\n";
      return 0;
    }

    if (*cmp) {
      std::vector<amod::ExperimentConfig> configs;
      for (const std::string& path : cmp_configs)
        configs.push_back(amod::load_experiment_config(path));
      if (!cmp_controllers.empty()) {
        if (configs.size() != 1)
          throw amod::MismatchedConfigs(
              "--controllers requires exactly one --config");
        amod::ExperimentConfig base = configs[0];
        configs.clear();
        for (const std::string& name : cmp_controllers) {
          base.controller = amod::controller_from_string(name);
          configs.push_back(base);
        }
      }
      amod::ComparisonTable table = amod::compare(configs, cmp_seed, !cmp_serial);
      std::cout << table.to_text();
      if (!cmp_out.empty()) {
        std::filesystem::create_directories(cmp_out);
        std::ofstream js(std::filesystem::path(cmp_out) / "comparison.json");
        js << table.to_json() << "\n";
        for (const amod::RunReport& rep : table.reports)
          amod::emit(rep, (std::filesystem::path(cmp_out) / rep.summary.controller)
                              .string());
      }
      return 0;
    }

    if (*part) {
      std::vector<amod::Point2> pts = amod::load_points(part_points);
      amod::ZonePartition zones =
          amod::partition_zones(pts, part_k, part_iters, part_seed);
      json doc;
      doc["k"] = zones.k;
      doc["iterations"] = zones.iterations;
      doc["objective"] = zones.objective;
      for (const amod::Point2& c : zones.centers)
        doc["centers"].push_back({c.x, c.y});
      doc["assignment"] = zones.assignment;
      std::cout << doc.dump(2) << "\n";
      return 0;
    }

    if (*val) {
      amod::RoadNetwork road = amod::load_road_network(val_network);
      bool ok = amod::check_strong_connectivity(road);
      std::cout << "strongly connected: " << (ok ? "true" : "false") << "\n";
      return ok ? 0 : 1;
    }
  } catch (const amod::Error& e) {
    print_error(e.code(), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return 1;
  }
  return 2;
}
