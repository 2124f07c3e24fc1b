#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "amod/errors.hpp"

namespace amod {

// Piecewise-constant Poisson rate schedule. Rates are customers per control
// step, one entry per ordered OD link (same r-major order as
// CompleteNetwork). Loaders that read per-hour rates convert once.
struct DemandBlock {
  int duration_steps = 0;
  Eigen::VectorXd lambda;
};

struct DemandScenario {
  std::vector<DemandBlock> blocks;
  uint64_t seed = 0;

  int total_steps() const;
  int num_links() const;
  void validate() const;  // throws ConfigError
};

struct ArrivalBatch {
  int step = 0;
  Eigen::VectorXi counts;
};

// Poisson counts for one step; counts[i] depends only on
// (scenario.seed, step, i), independent of evaluation order.
ArrivalBatch sample_arrivals(const DemandScenario& scenario, int step);

const Eigen::VectorXd& active_lambda(const DemandScenario& scenario, int step);

double total_expected_requests(const DemandScenario& scenario);

// FNV-1a over the arrival counts of steps [0, steps); used to verify that
// paired runs saw identical demand.
uint64_t arrival_stream_hash(const DemandScenario& scenario, int steps);

// Scenario JSON: {"zones": n, "blocks": [{"duration_minutes": d,
// "rates_per_hour": [[...n x n, zero diagonal...]]}, ...]}.
// Converts to per-step rates and step-quantized durations.
DemandScenario load_scenario(const std::string& path, double step_minutes,
                             uint64_t seed);

}  // namespace amod
