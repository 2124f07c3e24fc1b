#include "amod/demand.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "amod/rng.hpp"

namespace amod {

using nlohmann::json;

int DemandScenario::total_steps() const {
  int t = 0;
  for (const DemandBlock& b : blocks) t += b.duration_steps;
  return t;
}

int DemandScenario::num_links() const {
  return blocks.empty() ? 0 : static_cast<int>(blocks.front().lambda.size());
}

void DemandScenario::validate() const {
  if (blocks.empty()) throw ConfigError("scenario has no blocks");
  const auto links = blocks.front().lambda.size();
  for (const DemandBlock& b : blocks) {
    if (b.duration_steps < 1) throw ConfigError("block duration must be >= 1 step");
    if (b.lambda.size() != links) throw ConfigError("blocks disagree on link count");
    if ((b.lambda.array() < 0.0).any()) throw ConfigError("negative arrival rate");
  }
}

namespace {

const DemandBlock& block_at(const DemandScenario& scenario, int step) {
  if (step < 0) throw StepOutOfRange("negative step");
  int t = 0;
  for (const DemandBlock& b : scenario.blocks) {
    t += b.duration_steps;
    if (step < t) return b;
  }
  throw StepOutOfRange("step " + std::to_string(step) + " beyond scenario end " +
                       std::to_string(scenario.total_steps()));
}

}  // namespace

const Eigen::VectorXd& active_lambda(const DemandScenario& scenario, int step) {
  return block_at(scenario, step).lambda;
}

ArrivalBatch sample_arrivals(const DemandScenario& scenario, int step) {
  const Eigen::VectorXd& lambda = active_lambda(scenario, step);
  ArrivalBatch batch;
  batch.step = step;
  batch.counts.setZero(lambda.size());
  for (int i = 0; i < lambda.size(); ++i) {
    if (lambda[i] <= 0.0) continue;
    CounterRng rng(mix_key(scenario.seed, static_cast<uint64_t>(step),
                           static_cast<uint64_t>(i)));
    batch.counts[i] = poisson_sample(lambda[i], rng);
  }
  return batch;
}

double total_expected_requests(const DemandScenario& scenario) {
  double total = 0.0;
  for (const DemandBlock& b : scenario.blocks)
    total += b.duration_steps * b.lambda.sum();
  return total;
}

uint64_t arrival_stream_hash(const DemandScenario& scenario, int steps) {
  uint64_t h = 0xCBF29CE484222325ULL;
  auto eat = [&h](uint64_t v) {
    for (int byte = 0; byte < 8; ++byte) {
      h ^= (v >> (8 * byte)) & 0xFF;
      h *= 0x100000001B3ULL;
    }
  };
  for (int t = 0; t < steps; ++t) {
    ArrivalBatch b = sample_arrivals(scenario, t);
    for (int i = 0; i < b.counts.size(); ++i) eat(static_cast<uint64_t>(b.counts[i]));
  }
  return h;
}

DemandScenario load_scenario(const std::string& path, double step_minutes,
                             uint64_t seed) {
  if (!(step_minutes > 0.0)) throw ConfigError("step_minutes must be positive");
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  }
  if (!doc.contains("zones") || !doc.contains("blocks"))
    throw ConfigError(path + ": scenario needs 'zones' and 'blocks'");
  const int n = doc["zones"].get<int>();
  if (n < 2) throw ConfigError(path + ": zones must be >= 2");
  const int m = n * (n - 1);

  DemandScenario scenario;
  scenario.seed = seed;
  for (const json& jb : doc["blocks"]) {
    if (!jb.contains("duration_minutes") || !jb.contains("rates_per_hour"))
      throw ConfigError(path + ": block needs 'duration_minutes' and 'rates_per_hour'");
    DemandBlock block;
    double dur_min = jb["duration_minutes"].get<double>();
    block.duration_steps =
        std::max(1, static_cast<int>(std::llround(dur_min / step_minutes)));
    const json& rates = jb["rates_per_hour"];
    if (static_cast<int>(rates.size()) != n)
      throw ConfigError(path + ": rate matrix must be zones x zones");
    block.lambda.setZero(m);
    for (int r = 0; r < n; ++r) {
      if (static_cast<int>(rates[r].size()) != n)
        throw ConfigError(path + ": rate matrix must be zones x zones");
      for (int s = 0; s < n; ++s) {
        double per_hour = rates[r][s].get<double>();
        if (r == s) {
          if (per_hour != 0.0)
            throw ConfigError(path + ": diagonal rates must be zero");
          continue;
        }
        if (per_hour < 0.0) throw ConfigError(path + ": negative rate");
        int k = r * (n - 1) + (s > r ? s - 1 : s);
        block.lambda[k] = per_hour * step_minutes / 60.0;
      }
    }
    scenario.blocks.push_back(std::move(block));
  }
  scenario.validate();
  return scenario;
}

}  // namespace amod
