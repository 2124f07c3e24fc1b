#include "amod/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>

#include "amod/rng.hpp"

namespace amod {

void RoadNetwork::validate() const {
  if (n < 2) throw ConfigError("road network needs at least 2 zones");
  for (const Arc& a : arcs) {
    if (a.from < 0 || a.from >= n || a.to < 0 || a.to >= n)
      throw ConfigError("arc endpoint out of range");
    if (a.from == a.to) throw ConfigError("self-loop arcs are not allowed");
    if (!(a.minutes > 0.0)) throw ConfigError("arc travel time must be positive");
    if (!(a.miles > 0.0)) throw ConfigError("arc distance must be positive");
  }
}

RoadNetwork load_road_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open network file: " + path);
  RoadNetwork net;
  bool have_nodes = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string keyword;
    if (!(ls >> keyword)) continue;
    auto fail = [&](const std::string& msg) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": " + msg);
    };
    if (keyword == "nodes") {
      if (have_nodes) fail("duplicate 'nodes' line");
      if (!(ls >> net.n)) fail("expected 'nodes <count>'");
      have_nodes = true;
    } else if (keyword == "arc") {
      Arc a;
      if (!(ls >> a.from >> a.to >> a.minutes >> a.miles))
        fail("expected 'arc <from> <to> <minutes> <miles>'");
      // file is 1-based
      a.from -= 1;
      a.to -= 1;
      net.arcs.push_back(a);
    } else {
      fail("unknown field '" + keyword + "'");
    }
    std::string extra;
    if (ls >> extra) fail("trailing token '" + extra + "'");
  }
  if (!have_nodes) throw ConfigError(path + ": missing 'nodes' line");
  net.validate();
  return net;
}

namespace {

std::vector<std::vector<int>> adjacency(const RoadNetwork& net, bool reversed) {
  std::vector<std::vector<int>> adj(net.n);
  for (const Arc& a : net.arcs) {
    if (reversed)
      adj[a.to].push_back(a.from);
    else
      adj[a.from].push_back(a.to);
  }
  return adj;
}

int reachable_count(const std::vector<std::vector<int>>& adj, int start) {
  std::vector<char> seen(adj.size(), 0);
  std::vector<int> stack{start};
  seen[start] = 1;
  int count = 1;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (int v : adj[u])
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        stack.push_back(v);
      }
  }
  return count;
}

}  // namespace

bool check_strong_connectivity(const RoadNetwork& net) {
  net.validate();
  if (net.n == 0) return false;
  return reachable_count(adjacency(net, false), 0) == net.n &&
         reachable_count(adjacency(net, true), 0) == net.n;
}

PathResult shortest_path(const RoadNetwork& net, int origin, int dest) {
  net.validate();
  if (origin < 0 || origin >= net.n || dest < 0 || dest >= net.n)
    throw ConfigError("shortest_path endpoint out of range");
  if (origin == dest) return PathResult{0.0, 0.0, {origin}};

  // Dijkstra keyed on (minutes, hops); parent chosen deterministically so
  // ties resolve to the lexicographically smallest predecessor.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(net.n, inf);
  std::vector<int> hops(net.n, std::numeric_limits<int>::max());
  std::vector<int> parent(net.n, -1);
  std::vector<int> parent_arc(net.n, -1);

  std::vector<std::vector<std::pair<int, int>>> out(net.n);  // (arc idx, to)
  for (int i = 0; i < static_cast<int>(net.arcs.size()); ++i)
    out[net.arcs[i].from].push_back({i, net.arcs[i].to});

  using Key = std::tuple<double, int, int>;  // minutes, hops, node
  std::priority_queue<Key, std::vector<Key>, std::greater<Key>> pq;
  dist[origin] = 0.0;
  hops[origin] = 0;
  pq.push({0.0, 0, origin});
  const double eps = 1e-12;
  while (!pq.empty()) {
    auto [d, h, u] = pq.top();
    pq.pop();
    if (d > dist[u] + eps || h > hops[u]) continue;
    for (auto [ai, v] : out[u]) {
      double nd = dist[u] + net.arcs[ai].minutes;
      int nh = hops[u] + 1;
      bool better = nd < dist[v] - eps;
      bool tie = std::abs(nd - dist[v]) <= eps;
      if (better || (tie && (nh < hops[v] || (nh == hops[v] && u < parent[v])))) {
        dist[v] = better ? nd : dist[v];
        hops[v] = nh;
        parent[v] = u;
        parent_arc[v] = ai;
        pq.push({dist[v], nh, v});
      }
    }
  }
  if (!(dist[dest] < inf))
    throw NotStronglyConnected("no path from " + std::to_string(origin + 1) +
                               " to " + std::to_string(dest + 1));

  PathResult res;
  res.minutes = dist[dest];
  for (int v = dest; v != -1; v = parent[v]) {
    res.nodes.push_back(v);
    if (parent_arc[v] >= 0) res.miles += net.arcs[parent_arc[v]].miles;
  }
  std::reverse(res.nodes.begin(), res.nodes.end());
  return res;
}

CompleteNetwork complete(const RoadNetwork& net, double step_minutes) {
  if (!(step_minutes > 0.0)) throw ConfigError("step_minutes must be positive");
  if (!check_strong_connectivity(net))
    throw NotStronglyConnected("graph is not strongly connected");

  CompleteNetwork cn;
  cn.n = net.n;
  cn.m = net.n * (net.n - 1);
  cn.step_minutes = step_minutes;
  cn.T.resize(cn.m);
  cn.D.resize(cn.m);
  cn.minutes.resize(cn.m);

  for (int r = 0; r < cn.n; ++r)
    for (int s = 0; s < cn.n; ++s) {
      if (r == s) continue;
      PathResult p = shortest_path(net, r, s);
      int k = cn.link_index(r, s);
      cn.minutes[k] = p.minutes;
      cn.D[k] = p.miles;
      cn.T[k] = std::max(1, static_cast<int>(std::ceil(p.minutes / step_minutes - 1e-12)));
    }

  std::vector<Eigen::Triplet<double>> tin, tout;
  tin.reserve(cn.m);
  tout.reserve(cn.m);
  for (int k = 0; k < cn.m; ++k) {
    auto [r, s] = cn.link_pair(k);
    tout.push_back({r, k, 1.0});
    tin.push_back({s, k, 1.0});
  }
  cn.E_in.resize(cn.n, cn.m);
  cn.E_out.resize(cn.n, cn.m);
  cn.E_in.setFromTriplets(tin.begin(), tin.end());
  cn.E_out.setFromTriplets(tout.begin(), tout.end());
  cn.E = cn.E_in - cn.E_out;
  return cn;
}

ZonePartition partition_zones(const std::vector<Point2>& points, int k,
                              int max_iters, uint64_t seed) {
  if (max_iters < 1) throw InvalidK("max_iters must be >= 1");
  std::vector<Point2> distinct;
  for (const Point2& p : points) {
    bool dup = false;
    for (const Point2& q : distinct)
      dup = dup || (q.x == p.x && q.y == p.y);
    if (!dup) distinct.push_back(p);
  }
  if (k < 2 || k > static_cast<int>(distinct.size()))
    throw InvalidK("k must be in [2, number of distinct points]");

  const int np = static_cast<int>(points.size());
  auto sqdist = [](const Point2& a, const Point2& b) {
    double dx = a.x - b.x, dy = a.y - b.y;
    return dx * dx + dy * dy;
  };

  // Seed centers by drawing distinct points without replacement.
  CounterRng rng(mix_key(seed, 0xC1u));
  std::vector<int> order(distinct.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  for (size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[rng.next_u64() % i]);
  ZonePartition part;
  part.k = k;
  for (int c = 0; c < k; ++c) part.centers.push_back(distinct[order[c]]);
  part.assignment.assign(np, -1);

  for (int iter = 1; iter <= max_iters; ++iter) {
    part.iterations = iter;
    // assign
    bool changed = false;
    for (int i = 0; i < np; ++i) {
      int best = 0;
      double bd = sqdist(points[i], part.centers[0]);
      for (int c = 1; c < k; ++c) {
        double d = sqdist(points[i], part.centers[c]);
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      if (part.assignment[i] != best) changed = true;
      part.assignment[i] = best;
    }
    // update
    std::vector<double> wx(k, 0.0), wy(k, 0.0), w(k, 0.0);
    for (int i = 0; i < np; ++i) {
      int c = part.assignment[i];
      wx[c] += points[i].weight * points[i].x;
      wy[c] += points[i].weight * points[i].y;
      w[c] += points[i].weight;
    }
    for (int c = 0; c < k; ++c) {
      if (w[c] > 0.0) {
        part.centers[c].x = wx[c] / w[c];
        part.centers[c].y = wy[c] / w[c];
      } else {
        // Re-seed an empty cluster to the point farthest from its center.
        int far_i = 0;
        double far_d = -1.0;
        for (int i = 0; i < np; ++i) {
          double d = sqdist(points[i], part.centers[part.assignment[i]]);
          if (d > far_d) {
            far_d = d;
            far_i = i;
          }
        }
        part.centers[c].x = points[far_i].x;
        part.centers[c].y = points[far_i].y;
        changed = true;
      }
    }
    if (!changed) break;
  }

  part.objective = 0.0;
  for (int i = 0; i < np; ++i)
    part.objective += points[i].weight * sqdist(points[i], part.centers[part.assignment[i]]);
  return part;
}

std::vector<Point2> load_points(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open points file: " + path);
  std::vector<Point2> pts;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    for (char& c : line)
      if (c == ',') c = ' ';
    std::istringstream ls(line);
    Point2 p;
    if (!(ls >> p.x)) continue;
    if (!(ls >> p.y))
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected 'x y [weight]'");
    if (!(ls >> p.weight)) p.weight = 1.0;
    if (!(p.weight > 0.0))
      throw ConfigError(path + ":" + std::to_string(lineno) + ": weight must be positive");
    pts.push_back(p);
  }
  return pts;
}

}  // namespace amod
