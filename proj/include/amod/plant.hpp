#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <deque>
#include <vector>

#include "amod/demand.hpp"
#include "amod/network.hpp"
#include "amod/rng.hpp"

namespace amod {

// Integer system state on the complete network: waiting customers per
// ordered OD pair, idle vehicles per zone, vehicles in transit per link.
struct SystemState {
  Eigen::VectorXi W, P, F;

  int vehicles() const { return P.sum() + F.sum(); }
};

// Integer action applied to the plant: customer-carrying dispatches V and
// rebalancing dispatches R per link.
struct ControlAction {
  Eigen::VectorXi V, R;
};

// Fractional action as produced by the optimizers, before rounding.
struct FracAction {
  Eigen::VectorXd V, R;
};

struct InTransitCohort {
  int link = 0;
  int arrival_step = 0;  // state index at which the cohort joins P
  int count = 0;
  bool carrying = false;
};

struct CustomerRecord {
  int link = 0;
  int arrival_step = 0;
  int board_step = -1;  // unset while waiting
};

// Ground-truth simulator of the exact time-delay dynamics. A vehicle
// dispatched at step t on link (r, s) is available at s exactly at state
// index t + T_rs (T optionally perturbed per dispatch). Infeasible actions
// throw; the plant never clamps silently.
class Plant {
 public:
  Plant(const CompleteNetwork& net, const Eigen::VectorXi& initial_idle,
        double perturb_magnitude = 0.0, uint64_t perturb_seed = 0);

  // Throws InfeasibleAction on any violated invariant.
  void check_action(const ControlAction& action) const;

  const SystemState& step_exact(const ControlAction& action,
                                const ArrivalBatch& arrivals);

  const SystemState& state() const { return state_; }
  const CompleteNetwork& network() const { return net_; }
  int fleet() const { return fleet_; }
  int now() const { return now_; }

  const std::vector<CustomerRecord>& records() const { return records_; }
  const std::vector<InTransitCohort>& cohorts() const { return cohorts_; }

  struct LoggedAction {
    int step = 0;
    Eigen::VectorXi V, R;
  };
  const std::vector<LoggedAction>& action_log() const { return action_log_; }

 private:
  const CompleteNetwork& net_;
  SystemState state_;
  int fleet_ = 0;
  int now_ = 0;
  double perturb_magnitude_ = 0.0;
  uint64_t perturb_seed_ = 0;
  std::vector<InTransitCohort> cohorts_;
  std::vector<CustomerRecord> records_;
  std::vector<std::deque<int>> waiting_;  // per link: record indices, FIFO
  std::vector<LoggedAction> action_log_;
};

// T_rs plus an integer perturbation uniform on [-magnitude*T, +magnitude*T]
// (rounded), clamped to >= 1.
int perturb_travel_time(int travel_steps, double magnitude, CounterRng& rng);

struct BoxStats {
  double median = 0.0, q1 = 0.0, q3 = 0.0, mean = 0.0;
  int count = 0;
};

struct WaitingMetrics {
  double avg_queue_length = 0.0;  // time-average of mean W across pairs
  double avg_wait_minutes = 0.0;  // over boarded customers
  int boarded = 0;
  int censored = 0;  // still waiting at evaluation time
  std::vector<BoxStats> per_pair;
  BoxStats pooled;
};

// duration_steps is the number of plant steps taken so far; num_links the
// ordered-pair count. Censored customers are excluded from avg_wait but
// counted, and they do contribute queue residence time.
WaitingMetrics waiting_metrics(const std::vector<CustomerRecord>& records,
                               double step_minutes, int duration_steps,
                               int num_links);

double empty_distance(const std::vector<Plant::LoggedAction>& log,
                      const Eigen::VectorXd& D);

}  // namespace amod
