#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "amod/demand.hpp"
#include "amod/mpc.hpp"
#include "amod/network.hpp"
#include "amod/plant.hpp"
#include "amod/reference.hpp"

namespace amod {

enum class ControllerKind { QMPC_QRef, QMPC_LRef, LMPC_QRef, LMPC_LRef, IARR };

const char* to_string(ControllerKind kind);
ControllerKind controller_from_string(const std::string& s);
bool controller_is_mpc(ControllerKind kind);

struct ExperimentConfig {
  std::string network_file;
  std::string scenario_file;
  ControllerKind controller = ControllerKind::LMPC_LRef;
  double step_minutes = 2.0;
  int horizon = 8;
  int fleet = 125;
  int duration_steps = 360;
  int refresh_steps = 60;       // reference recomputation interval
  double perturbation = 0.0;    // relative travel-time uncertainty
  uint64_t demand_seed = 1;
  uint64_t control_seed = 1;    // rounding + perturbation streams

  void validate() const;
};

// JSON config; durations are given in minutes and converted once:
// {"network": .., "scenario": .., "controller": .., "step_minutes": 2,
//  "horizon": 8, "fleet": 125, "duration_minutes": 720,
//  "refresh_minutes": 120, "perturbation": 0.0, "demand_seed": 1,
//  "control_seed": 1}
ExperimentConfig load_experiment_config(const std::string& path);

struct StepRow {
  int t = 0;
  long sum_W = 0;
  double mean_W = 0.0;
  long sum_P = 0;
  long sum_F = 0;
  long sum_V = 0;
  long sum_R = 0;
  double empty_miles_cum = 0.0;
  double objective = 0.0;
  std::string status;
  double terminal_residual = 0.0;
  double solve_ms = 0.0;
};

struct RunSummary {
  std::string controller;
  double step_minutes = 0.0;
  int duration_steps = 0;
  int fleet = 0;
  double avg_queue_length = 0.0;
  double avg_wait_minutes = 0.0;
  double total_empty_miles = 0.0;
  int boarded = 0;
  int censored = 0;
  long total_arrivals = 0;
  uint64_t arrival_hash = 0;
  double min_fleet_bound = 0.0;   // of the first reference (MPC only)
  int soft_terminal_steps = 0;
  int fallback_steps = 0;
  int overdraft_steps = 0;        // fractional action exceeded true idle count
  double median_solve_ms = 0.0;
  double wall_ms = 0.0;
};

struct RunReport {
  ExperimentConfig config;
  std::vector<StepRow> series;
  RunSummary summary;
  WaitingMetrics waits;

  // Recomputes the summary from the series and fails on mismatch.
  void check_consistency() const;
};

RunReport run(const ExperimentConfig& config);

struct ComparisonTable {
  std::vector<std::string> controllers;           // columns
  std::vector<std::string> metrics;               // row labels
  std::vector<std::vector<double>> values;        // metrics x controllers
  std::vector<RunReport> reports;

  std::string to_text() const;
  std::string to_json() const;
};

// Paired comparison: configs must differ only in controller; all runs use
// `shared_seed` for demand so arrival streams are identical.
ComparisonTable compare(const std::vector<ExperimentConfig>& configs,
                        uint64_t shared_seed, bool parallel = true);

// Writes series.csv, summary.json, boxplot.json and the three SVG charts.
void emit(const RunReport& report, const std::string& out_dir);

std::string summary_to_json(const RunReport& report);

}  // namespace amod
