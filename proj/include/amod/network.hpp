#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <string>
#include <utility>
#include <vector>

#include "amod/errors.hpp"

namespace amod {

// A zoned road network: nodes are zones, arcs are directed corridors with a
// travel time in minutes and a length in miles. Node ids are 0-based
// internally; the file format uses 1-based ids.
struct Arc {
  int from = 0;
  int to = 0;
  double minutes = 0.0;
  double miles = 0.0;
};

struct RoadNetwork {
  int n = 0;
  std::vector<Arc> arcs;

  // Throws ConfigError on malformed data (n < 2, bad endpoints,
  // non-positive times or distances).
  void validate() const;
};

// Parses the declarative network format:
//   nodes <n>
//   arc <from> <to> <minutes> <miles>
// Blank lines and '#' comments are allowed; any other keyword is rejected.
RoadNetwork load_road_network(const std::string& path);

bool check_strong_connectivity(const RoadNetwork& net);

struct PathResult {
  double minutes = 0.0;
  double miles = 0.0;
  std::vector<int> nodes;  // origin..dest inclusive
};

// Minimal-minutes path; ties broken by fewer hops, then lexicographically
// smallest node sequence, so results are reproducible.
PathResult shortest_path(const RoadNetwork& net, int origin, int dest);

// Complete digraph over the zones: one link per ordered pair (r, s), r != s,
// enumerated r-major. Travel times are whole control steps (>= 1), distances
// are shortest-path miles. E_in/E_out are the node-by-link 0/1 incidence
// matrices and E = E_in - E_out.
struct CompleteNetwork {
  int n = 0;
  int m = 0;  // n * (n - 1)
  double step_minutes = 0.0;
  Eigen::VectorXi T;       // steps, >= 1
  Eigen::VectorXd D;       // miles
  Eigen::VectorXd minutes; // un-quantized shortest-path minutes
  Eigen::SparseMatrix<double> E_in, E_out, E;  // n x m

  int link_index(int r, int s) const { return r * (n - 1) + (s > r ? s - 1 : s); }
  std::pair<int, int> link_pair(int k) const {
    int r = k / (n - 1);
    int s = k % (n - 1);
    if (s >= r) ++s;
    return {r, s};
  }
  int state_dim() const { return 2 * m + n; }   // (W, P, F)
  int input_dim() const { return 2 * m; }       // (V, R)
};

// Shortest-path completion of a strongly connected road network.
// T = ceil(path minutes / step_minutes), clamped to >= 1.
CompleteNetwork complete(const RoadNetwork& net, double step_minutes);

// Lloyd's k-means over weighted planar points.
struct Point2 {
  double x = 0.0;
  double y = 0.0;
  double weight = 1.0;
};

struct ZonePartition {
  int k = 0;
  std::vector<Point2> centers;      // weight field unused on centers
  std::vector<int> assignment;      // point -> zone
  int iterations = 0;
  double objective = 0.0;           // weighted sum of squared distances
};

ZonePartition partition_zones(const std::vector<Point2>& points, int k,
                              int max_iters, uint64_t seed);

std::vector<Point2> load_points(const std::string& path);

}  // namespace amod
