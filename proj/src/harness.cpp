#include "amod/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "amod/errors.hpp"
#include "amod/iarr.hpp"
#include "amod/svg_plot.hpp"

namespace amod {

using nlohmann::json;

const char* to_string(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::QMPC_QRef: return "QMPC_QRef";
    case ControllerKind::QMPC_LRef: return "QMPC_LRef";
    case ControllerKind::LMPC_QRef: return "LMPC_QRef";
    case ControllerKind::LMPC_LRef: return "LMPC_LRef";
    case ControllerKind::IARR: return "IARR";
  }
  return "unknown";
}

ControllerKind controller_from_string(const std::string& s) {
  if (s == "QMPC_QRef") return ControllerKind::QMPC_QRef;
  if (s == "QMPC_LRef") return ControllerKind::QMPC_LRef;
  if (s == "LMPC_QRef") return ControllerKind::LMPC_QRef;
  if (s == "LMPC_LRef") return ControllerKind::LMPC_LRef;
  if (s == "IARR") return ControllerKind::IARR;
  throw ConfigError("unknown controller '" + s + "'");
}

bool controller_is_mpc(ControllerKind kind) {
  return kind != ControllerKind::IARR;
}

void ExperimentConfig::validate() const {
  if (network_file.empty() || scenario_file.empty())
    throw ConfigError("network and scenario files are required");
  if (!(step_minutes > 0.0)) throw ConfigError("step_minutes must be positive");
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  if (fleet < 1) throw ConfigError("fleet must be >= 1");
  if (duration_steps < 1) throw ConfigError("duration must be >= 1 step");
  if (refresh_steps < 1) throw ConfigError("refresh interval must be >= 1 step");
  if (perturbation < 0.0) throw ConfigError("perturbation must be >= 0");
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  }
  ExperimentConfig cfg;
  try {
    cfg.network_file = doc.at("network").get<std::string>();
    cfg.scenario_file = doc.at("scenario").get<std::string>();
    if (doc.contains("controller"))
      cfg.controller = controller_from_string(doc["controller"].get<std::string>());
    cfg.step_minutes = doc.value("step_minutes", 2.0);
    cfg.horizon = doc.value("horizon", 8);
    cfg.fleet = doc.value("fleet", 125);
    double duration_minutes = doc.value("duration_minutes", 720.0);
    double refresh_minutes = doc.value("refresh_minutes", 120.0);
    cfg.duration_steps = std::max(
        1, static_cast<int>(std::llround(duration_minutes / cfg.step_minutes)));
    cfg.refresh_steps = std::max(
        1, static_cast<int>(std::llround(refresh_minutes / cfg.step_minutes)));
    cfg.perturbation = doc.value("perturbation", 0.0);
    cfg.demand_seed = doc.value("demand_seed", 1ULL);
    cfg.control_seed = doc.value("control_seed", 1ULL);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  // Paths are relative to the config file's directory.
  auto resolve = [&path](std::string& file) {
    std::filesystem::path p(file);
    if (p.is_relative())
      file = (std::filesystem::path(path).parent_path() / p).string();
  };
  resolve(cfg.network_file);
  resolve(cfg.scenario_file);
  cfg.validate();
  return cfg;
}

void RunReport::check_consistency() const {
  if (static_cast<int>(series.size()) != summary.duration_steps)
    throw ConfigError("series length != duration");
  long residence = 0;
  double miles = series.empty() ? 0.0 : series.back().empty_miles_cum;
  for (const StepRow& row : series) residence += row.sum_W;
  // avg queue length from the series must match the record-based summary.
  // (num links recoverable from mean_W ratio; use waits.per_pair size.)
  const int m = static_cast<int>(waits.per_pair.size());
  double avg_q = summary.duration_steps > 0 && m > 0
                     ? static_cast<double>(residence) / summary.duration_steps / m
                     : 0.0;
  if (std::abs(avg_q - summary.avg_queue_length) > 1e-9)
    throw ConfigError("summary avg_queue_length inconsistent with series");
  if (std::abs(miles - summary.total_empty_miles) > 1e-6)
    throw ConfigError("summary empty miles inconsistent with series");
}

RunReport run(const ExperimentConfig& config) {
  config.validate();
  const auto wall0 = std::chrono::steady_clock::now();

  RoadNetwork road = load_road_network(config.network_file);
  CompleteNetwork net = complete(road, config.step_minutes);
  DemandScenario scenario =
      load_scenario(config.scenario_file, config.step_minutes, config.demand_seed);
  if (scenario.num_links() != net.m)
    throw ConfigError("scenario zone count does not match network");
  if (scenario.total_steps() < config.duration_steps)
    throw ConfigError("scenario shorter than configured duration");

  // Initial condition: empty queues and links, idle fleet split uniformly,
  // remainder to the lowest-id zones.
  Eigen::VectorXi p0(net.n);
  int base = config.fleet / net.n, rem = config.fleet % net.n;
  for (int r = 0; r < net.n; ++r) p0[r] = base + (r < rem ? 1 : 0);

  Plant plant(net, p0, config.perturbation,
              mix_key(config.control_seed, 0x7E27B2ABULL));

  LtiModel model;
  std::optional<MpcController> mpc;
  std::optional<IpmSolver> iarr_solver;
  MpcConfig mpc_cfg;
  double min_fleet_bound = 0.0;
  if (controller_is_mpc(config.controller)) {
    model = build_lti(net);
    mpc_cfg.horizon = config.horizon;
    mpc_cfg.cost_kind = (config.controller == ControllerKind::QMPC_QRef ||
                         config.controller == ControllerKind::QMPC_LRef)
                            ? CostKind::quadratic
                            : CostKind::linear;
    mpc_cfg.reference_kind = (config.controller == ControllerKind::QMPC_QRef ||
                              config.controller == ControllerKind::LMPC_QRef)
                                 ? CostKind::quadratic
                                 : CostKind::linear;
    mpc_cfg.rounding_seed = config.control_seed;
    mpc.emplace(model, mpc_cfg, config.fleet);
  } else {
    iarr_solver.emplace();
  }

  RunReport report;
  report.config = config;
  report.series.reserve(config.duration_steps);
  std::vector<double> solve_times;
  long total_arrivals = 0;

  for (int t = 0; t < config.duration_steps; ++t) {
    ArrivalBatch arrivals = sample_arrivals(scenario, t);
    total_arrivals += arrivals.counts.sum();
    const SystemState& st = plant.state();

    FracAction frac;
    StepRow row;
    row.t = t;
    if (mpc) {
      if (t % config.refresh_steps == 0) {
        EquilibriumReference ref =
            refresh_reference(scenario, t, net, mpc_cfg, config.fleet);
        if (t == 0) {
          min_fleet_bound = ref.min_fleet;
          if (config.fleet < std::ceil(ref.min_fleet))
            std::cerr << "warning: fleet " << config.fleet
                      << " below reference minimum " << ref.min_fleet << "\n";
        }
        mpc->set_reference(std::move(ref));
      }
      Eigen::VectorXd x(net.state_dim());
      x << st.W.cast<double>(), st.P.cast<double>(), st.F.cast<double>();
      MpcStep step = mpc->solve_step(x);
      frac = step.projected;
      row.objective = step.diag.objective;
      row.status = to_string(step.diag.status);
      row.terminal_residual = step.diag.terminal_residual;
      row.solve_ms = step.diag.solve_ms;
      report.summary.soft_terminal_steps += step.diag.used_soft_terminal ? 1 : 0;
      report.summary.fallback_steps += step.diag.fallback_zero ? 1 : 0;
      // overdraft accounting uses the raw optimizer action
      Eigen::VectorXd outflow = Eigen::VectorXd::Zero(net.n);
      for (int k = 0; k < net.m; ++k)
        outflow[net.link_pair(k).first] += step.raw.V[k] + step.raw.R[k];
      for (int r = 0; r < net.n; ++r)
        if (outflow[r] > st.P[r] + 1e-9) {
          ++report.summary.overdraft_steps;
          break;
        }
    } else {
      const auto t0 = std::chrono::steady_clock::now();
      IarrAction act =
          solve_iarr_step(net, st, active_lambda(scenario, t), *iarr_solver);
      row.solve_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
      row.objective = act.objective;
      row.status = "optimal";
      FracAction raw{act.V, act.R};
      Eigen::VectorXd outflow = Eigen::VectorXd::Zero(net.n);
      for (int k = 0; k < net.m; ++k)
        outflow[net.link_pair(k).first] += raw.V[k] + raw.R[k];
      for (int r = 0; r < net.n; ++r)
        if (outflow[r] > st.P[r] + 1e-9) {
          ++report.summary.overdraft_steps;
          break;
        }
      frac = project_action(raw, st.W.cast<double>(), st.P.cast<double>(), net);
    }

    CounterRng round_rng(mix_key(config.control_seed, 0x52ABD1ULL,
                                 static_cast<uint64_t>(t)));
    ControlAction action = randomized_round(frac, st, net, round_rng);
    const SystemState& next = plant.step_exact(action, arrivals);

    row.sum_W = next.W.sum();
    row.mean_W = static_cast<double>(row.sum_W) / net.m;
    row.sum_P = next.P.sum();
    row.sum_F = next.F.sum();
    row.sum_V = action.V.sum();
    row.sum_R = action.R.sum();
    double step_miles = 0.0;
    for (int k = 0; k < net.m; ++k) step_miles += action.R[k] * net.D[k];
    row.empty_miles_cum =
        (report.series.empty() ? 0.0 : report.series.back().empty_miles_cum) +
        step_miles;
    solve_times.push_back(row.solve_ms);
    report.series.push_back(std::move(row));
  }

  report.waits = waiting_metrics(plant.records(), config.step_minutes,
                                 config.duration_steps, net.m);
  RunSummary& sum = report.summary;
  sum.controller = to_string(config.controller);
  sum.step_minutes = config.step_minutes;
  sum.duration_steps = config.duration_steps;
  sum.fleet = config.fleet;
  sum.avg_queue_length = report.waits.avg_queue_length;
  sum.avg_wait_minutes = report.waits.avg_wait_minutes;
  sum.total_empty_miles = empty_distance(plant.action_log(), net.D);
  sum.boarded = report.waits.boarded;
  sum.censored = report.waits.censored;
  sum.total_arrivals = total_arrivals;
  sum.arrival_hash = arrival_stream_hash(scenario, config.duration_steps);
  sum.min_fleet_bound = min_fleet_bound;
  if (!solve_times.empty()) {
    std::vector<double> sorted = solve_times;
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    sum.median_solve_ms = sorted[sorted.size() / 2];
  }
  sum.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - wall0)
                    .count();
  report.check_consistency();
  return report;
}

ComparisonTable compare(const std::vector<ExperimentConfig>& configs,
                        uint64_t shared_seed, bool parallel) {
  if (configs.size() < 2)
    throw MismatchedConfigs("compare needs at least two configs");
  for (size_t i = 1; i < configs.size(); ++i) {
    ExperimentConfig a = configs[0], b = configs[i];
    a.controller = b.controller = ControllerKind::IARR;
    a.demand_seed = b.demand_seed = 0;
    std::ostringstream sa, sb;
    sa << a.network_file << a.scenario_file << a.step_minutes << a.horizon
       << a.fleet << a.duration_steps << a.refresh_steps << a.perturbation
       << a.control_seed;
    sb << b.network_file << b.scenario_file << b.step_minutes << b.horizon
       << b.fleet << b.duration_steps << b.refresh_steps << b.perturbation
       << b.control_seed;
    if (sa.str() != sb.str())
      throw MismatchedConfigs("configs must differ only in controller");
  }

  std::vector<ExperimentConfig> runs = configs;
  for (ExperimentConfig& cfg : runs) cfg.demand_seed = shared_seed;

  ComparisonTable table;
  table.reports.resize(runs.size());
  if (parallel && runs.size() > 1) {
    std::vector<std::future<RunReport>> futures;
    for (const ExperimentConfig& cfg : runs)
      futures.push_back(std::async(std::launch::async, [cfg] { return run(cfg); }));
    for (size_t i = 0; i < futures.size(); ++i) table.reports[i] = futures[i].get();
  } else {
    for (size_t i = 0; i < runs.size(); ++i) table.reports[i] = run(runs[i]);
  }

  for (size_t i = 1; i < table.reports.size(); ++i)
    if (table.reports[i].summary.arrival_hash !=
        table.reports[0].summary.arrival_hash)
      throw MismatchedConfigs("paired runs saw different arrival streams");

  table.metrics = {"avg_queue_length", "avg_wait_minutes", "total_empty_miles"};
  table.values.assign(table.metrics.size(), {});
  for (const RunReport& rep : table.reports) {
    table.controllers.push_back(rep.summary.controller);
    table.values[0].push_back(rep.summary.avg_queue_length);
    table.values[1].push_back(rep.summary.avg_wait_minutes);
    table.values[2].push_back(rep.summary.total_empty_miles);
  }
  return table;
}

std::string ComparisonTable::to_text() const {
  std::ostringstream os;
  os << std::left;
  os.precision(4);
  os << std::fixed;
  os << "metric                 ";
  for (const std::string& c : controllers) os << " " << c << std::string(c.size() < 12 ? 12 - c.size() : 1, ' ');
  os << "\n";
  for (size_t i = 0; i < metrics.size(); ++i) {
    std::string label = metrics[i];
    label.resize(23, ' ');
    os << label;
    for (double v : values[i]) {
      std::ostringstream cell;
      cell.precision(4);
      cell << std::fixed << v;
      std::string s = cell.str();
      s.resize(std::max<size_t>(s.size(), 13), ' ');
      os << s;
    }
    os << "\n";
  }
  return os.str();
}

std::string ComparisonTable::to_json() const {
  json doc;
  doc["controllers"] = controllers;
  for (size_t i = 0; i < metrics.size(); ++i) doc["metrics"][metrics[i]] = values[i];
  return doc.dump(2);
}

std::string summary_to_json(const RunReport& report) {
  const RunSummary& s = report.summary;
  json doc;
  doc["controller"] = s.controller;
  doc["step_minutes"] = s.step_minutes;
  doc["duration_steps"] = s.duration_steps;
  doc["fleet"] = s.fleet;
  doc["avg_queue_length"] = s.avg_queue_length;
  doc["avg_wait_minutes"] = s.avg_wait_minutes;
  doc["total_empty_miles"] = s.total_empty_miles;
  doc["boarded"] = s.boarded;
  doc["censored"] = s.censored;
  doc["total_arrivals"] = s.total_arrivals;
  doc["arrival_hash"] = s.arrival_hash;
  doc["min_fleet_bound"] = s.min_fleet_bound;
  doc["soft_terminal_steps"] = s.soft_terminal_steps;
  doc["fallback_steps"] = s.fallback_steps;
  doc["overdraft_steps"] = s.overdraft_steps;
  doc["median_solve_ms"] = s.median_solve_ms;
  doc["wall_ms"] = s.wall_ms;
  return doc.dump(2);
}

void emit(const RunReport& report, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);

  {
    std::ofstream csv(dir / "series.csv");
    if (!csv) throw IoError("cannot write series.csv");
    csv << "t,sum_W,mean_W,sum_P,sum_F,sum_V,sum_R,empty_miles_cum,"
           "objective,status,terminal_residual,solve_ms\n";
    csv.precision(10);
    for (const StepRow& row : report.series)
      csv << row.t << ',' << row.sum_W << ',' << row.mean_W << ',' << row.sum_P
          << ',' << row.sum_F << ',' << row.sum_V << ',' << row.sum_R << ','
          << row.empty_miles_cum << ',' << row.objective << ',' << row.status
          << ',' << row.terminal_residual << ',' << row.solve_ms << "\n";
  }
  {
    std::ofstream js(dir / "summary.json");
    if (!js) throw IoError("cannot write summary.json");
    js << summary_to_json(report) << "\n";
  }
  {
    json doc;
    auto box = [](const BoxStats& b) {
      json j;
      j["median"] = b.median;
      j["q1"] = b.q1;
      j["q3"] = b.q3;
      j["mean"] = b.mean;
      j["count"] = b.count;
      return j;
    };
    doc["pooled"] = box(report.waits.pooled);
    for (const BoxStats& b : report.waits.per_pair) doc["per_pair"].push_back(box(b));
    std::ofstream js(dir / "boxplot.json");
    if (!js) throw IoError("cannot write boxplot.json");
    js << doc.dump(2) << "\n";
  }

  std::vector<double> mean_w, reb, empty;
  for (const StepRow& row : report.series) {
    mean_w.push_back(row.mean_W);
    reb.push_back(static_cast<double>(row.sum_R));
    empty.push_back(row.empty_miles_cum);
  }
  const std::string name = report.summary.controller;
  write_svg_line_chart((dir / "queue.svg").string(), "Average queue length",
                       "minutes", "mean waiting customers per pair",
                       {{name, mean_w}}, report.summary.step_minutes);
  write_svg_line_chart((dir / "rebalancing.svg").string(), "Rebalancing dispatches",
                       "minutes", "vehicles per step", {{name, reb}},
                       report.summary.step_minutes);
  write_svg_line_chart((dir / "empty_distance.svg").string(),
                       "Cumulative empty distance", "minutes", "miles",
                       {{name, empty}}, report.summary.step_minutes);
}

}  // namespace amod
