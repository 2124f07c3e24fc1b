#include "amod/plant.hpp"

#include <algorithm>
#include <cmath>

#include "amod/errors.hpp"

namespace amod {

Plant::Plant(const CompleteNetwork& net, const Eigen::VectorXi& initial_idle,
             double perturb_magnitude, uint64_t perturb_seed)
    : net_(net),
      perturb_magnitude_(perturb_magnitude),
      perturb_seed_(perturb_seed) {
  if (initial_idle.size() != net.n)
    throw DimensionMismatch("initial idle vector size != zone count");
  if ((initial_idle.array() < 0).any())
    throw InfeasibleAction("negative initial vehicle count");
  state_.W.setZero(net.m);
  state_.P = initial_idle;
  state_.F.setZero(net.m);
  fleet_ = initial_idle.sum();
  waiting_.resize(net.m);
}

void Plant::check_action(const ControlAction& action) const {
  if (action.V.size() != net_.m || action.R.size() != net_.m)
    throw DimensionMismatch("action size != link count");
  for (int k = 0; k < net_.m; ++k) {
    if (action.V[k] < 0 || action.R[k] < 0)
      throw InfeasibleAction("negative dispatch on link " + std::to_string(k));
    if (action.V[k] > state_.W[k])
      throw InfeasibleAction("V exceeds queue on link " + std::to_string(k) +
                             " at step " + std::to_string(now_));
  }
  for (int r = 0; r < net_.n; ++r) {
    long out = 0;
    for (int s = 0; s < net_.n; ++s)
      if (s != r) {
        int k = net_.link_index(r, s);
        out += action.V[k] + action.R[k];
      }
    if (out > state_.P[r])
      throw InfeasibleAction("dispatches exceed idle vehicles at zone " +
                             std::to_string(r) + " at step " + std::to_string(now_));
  }
}

const SystemState& Plant::step_exact(const ControlAction& action,
                                     const ArrivalBatch& arrivals) {
  check_action(action);
  if (arrivals.counts.size() != net_.m)
    throw DimensionMismatch("arrival batch size != link count");
  if ((arrivals.counts.array() < 0).any())
    throw InfeasibleAction("negative arrival count");

  // Dispatch: board FIFO, move vehicles out of P onto links.
  for (int k = 0; k < net_.m; ++k) {
    int total = action.V[k] + action.R[k];
    if (total == 0) continue;
    auto [r, s] = net_.link_pair(k);
    int steps = net_.T[k];
    if (perturb_magnitude_ > 0.0) {
      CounterRng rng(mix_key(perturb_seed_, static_cast<uint64_t>(now_),
                             static_cast<uint64_t>(k)));
      steps = perturb_travel_time(steps, perturb_magnitude_, rng);
    }
    for (int b = 0; b < action.V[k]; ++b) {
      int rec = waiting_[k].front();
      waiting_[k].pop_front();
      records_[rec].board_step = now_;
    }
    state_.W[k] -= action.V[k];
    state_.P[r] -= total;
    state_.F[k] += total;
    if (action.V[k] > 0)
      cohorts_.push_back({k, now_ + steps, action.V[k], true});
    if (action.R[k] > 0)
      cohorts_.push_back({k, now_ + steps, action.R[k], false});
  }

  // Cohorts arriving at state index now+1.
  for (size_t i = 0; i < cohorts_.size();) {
    if (cohorts_[i].arrival_step == now_ + 1) {
      auto [r, s] = net_.link_pair(cohorts_[i].link);
      state_.P[s] += cohorts_[i].count;
      state_.F[cohorts_[i].link] -= cohorts_[i].count;
      cohorts_[i] = cohorts_.back();
      cohorts_.pop_back();
    } else {
      ++i;
    }
  }

  // New customers join the queues.
  for (int k = 0; k < net_.m; ++k) {
    for (int j = 0; j < arrivals.counts[k]; ++j) {
      waiting_[k].push_back(static_cast<int>(records_.size()));
      records_.push_back({k, now_, -1});
    }
    state_.W[k] += arrivals.counts[k];
  }

  action_log_.push_back({now_, action.V, action.R});
  ++now_;

  if (state_.vehicles() != fleet_ || (state_.P.array() < 0).any() ||
      (state_.F.array() < 0).any() || (state_.W.array() < 0).any())
    throw InfeasibleAction("internal state corruption at step " +
                           std::to_string(now_));
  return state_;
}

int perturb_travel_time(int travel_steps, double magnitude, CounterRng& rng) {
  if (magnitude <= 0.0) return travel_steps;
  double u = rng.next_double();
  double offset = (2.0 * u - 1.0) * magnitude * travel_steps;
  return std::max(1, travel_steps + static_cast<int>(std::llround(offset)));
}

namespace {

BoxStats box_stats(std::vector<double> values) {
  BoxStats st;
  st.count = static_cast<int>(values.size());
  if (values.empty()) return st;
  std::sort(values.begin(), values.end());
  auto quantile = [&values](double q) {
    double pos = q * (values.size() - 1);
    size_t lo = static_cast<size_t>(pos);
    size_t hi = std::min(lo + 1, values.size() - 1);
    double frac = pos - lo;
    return values[lo] * (1.0 - frac) + values[hi] * frac;
  };
  st.median = quantile(0.5);
  st.q1 = quantile(0.25);
  st.q3 = quantile(0.75);
  double sum = 0.0;
  for (double v : values) sum += v;
  st.mean = sum / values.size();
  return st;
}

}  // namespace

WaitingMetrics waiting_metrics(const std::vector<CustomerRecord>& records,
                               double step_minutes, int duration_steps,
                               int num_links) {
  WaitingMetrics mtr;
  mtr.per_pair.resize(num_links);
  std::vector<std::vector<double>> waits(num_links);
  std::vector<double> pooled;
  long residence = 0;
  double wait_sum = 0.0;
  for (const CustomerRecord& rec : records) {
    if (rec.board_step >= 0) {
      int steps = rec.board_step - rec.arrival_step;
      residence += steps;
      double minutes = steps * step_minutes;
      waits[rec.link].push_back(minutes);
      pooled.push_back(minutes);
      wait_sum += minutes;
      ++mtr.boarded;
    } else {
      residence += std::max(0, duration_steps - rec.arrival_step);
      ++mtr.censored;
    }
  }
  if (duration_steps > 0 && num_links > 0)
    mtr.avg_queue_length =
        static_cast<double>(residence) / duration_steps / num_links;
  if (mtr.boarded > 0) mtr.avg_wait_minutes = wait_sum / mtr.boarded;
  for (int k = 0; k < num_links; ++k) mtr.per_pair[k] = box_stats(std::move(waits[k]));
  mtr.pooled = box_stats(std::move(pooled));
  return mtr;
}

double empty_distance(const std::vector<Plant::LoggedAction>& log,
                      const Eigen::VectorXd& D) {
  double miles = 0.0;
  for (const auto& entry : log)
    for (int k = 0; k < entry.R.size(); ++k) miles += entry.R[k] * D[k];
  return miles;
}

}  // namespace amod
