#include "micsnet/routing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include "micsnet/text.hpp"

namespace micsnet {

namespace {

constexpr std::uint32_t kUnreached = 0xffffffffu;

std::vector<std::vector<NodeId>> feasible_adjacency(const SignalField& field,
                                                    const RadioParams& radio) {
  std::vector<std::vector<NodeId>> adj(field.size());
  for (NodeId u = 0; u < field.size(); ++u)
    for (NodeId v = 0; v < field.size(); ++v)
      if (u != v && link_feasible(field, radio, u, v)) adj[u].push_back(v);
  return adj;
}

std::vector<std::uint32_t> hops_to_target(const std::vector<std::vector<NodeId>>& adj,
                                          NodeId dst) {
  std::vector<std::vector<NodeId>> radj(adj.size());
  for (NodeId u = 0; u < adj.size(); ++u)
    for (NodeId v : adj[u]) radj[v].push_back(u);
  std::vector<std::uint32_t> dist(adj.size(), kUnreached);
  std::queue<NodeId> q;
  dist[dst] = 0;
  q.push(dst);
  while (!q.empty()) {
    NodeId v = q.front();
    q.pop();
    for (NodeId u : radj[v]) {
      if (dist[u] == kUnreached) {
        dist[u] = dist[v] + 1;
        q.push(u);
      }
    }
  }
  return dist;
}

void collect_paths(const std::vector<std::vector<NodeId>>& adj,
                   const std::vector<std::uint32_t>& dist, NodeId dst, std::uint32_t budget,
                   std::vector<NodeId>& path, std::vector<char>& on,
                   std::vector<std::vector<NodeId>>& out, std::size_t cap) {
  NodeId u = path.back();
  if (u == dst) {
    if (out.size() >= cap) throw RoutingError("candidate path enumeration exceeded the cap");
    out.push_back(path);
    return;
  }
  for (NodeId v : adj[u]) {
    if (on[v] || dist[v] == kUnreached) continue;
    if (std::uint32_t(path.size()) + dist[v] > budget) continue;
    on[v] = 1;
    path.push_back(v);
    collect_paths(adj, dist, dst, budget, path, on, out, cap);
    path.pop_back();
    on[v] = 0;
  }
}

std::vector<std::vector<NodeId>> paths_within(const std::vector<std::vector<NodeId>>& adj,
                                              NodeId src, NodeId dst, std::uint32_t hop_slack,
                                              std::size_t cap) {
  std::vector<std::uint32_t> dist = hops_to_target(adj, dst);
  if (dist[src] == kUnreached) return {};
  std::vector<NodeId> path{src};
  std::vector<char> on(adj.size(), 0);
  on[src] = 1;
  std::vector<std::vector<NodeId>> out;
  collect_paths(adj, dist, dst, dist[src] + hop_slack, path, on, out, cap);
  return out;
}

void check_endpoints(const SignalField& field, NodeId src, NodeId dst) {
  if (src >= field.size() || dst >= field.size())
    throw RoutingError("connection endpoint out of range");
  if (src == dst) throw RoutingError("connection with identical endpoints");
}

}  // namespace

std::vector<std::vector<NodeId>> enumerate_paths(const SignalField& field,
                                                 const RadioParams& radio, NodeId src, NodeId dst,
                                                 std::uint32_t hop_slack, std::size_t cap) {
  check_endpoints(field, src, dst);
  return paths_within(feasible_adjacency(field, radio), src, dst, hop_slack, cap);
}

std::optional<McfSolution> solve_mcf(const SignalField& field, const RadioParams& radio,
                                     const FlowProblem& problem) {
  if (problem.connections.empty()) throw RoutingError("no connections to route");
  const std::size_t nc = problem.connections.size();

  std::set<ActiveLink> banned;
  std::set<Exclusion> pairs;
  for (const Exclusion& e : problem.exclusions) {
    Exclusion ce = Exclusion::make(e.a, e.b);
    if (ce.a == ce.b)
      banned.insert(ce.a);
    else
      pairs.insert(ce);
  }

  std::vector<std::vector<NodeId>> adj = feasible_adjacency(field, radio);
  std::vector<std::vector<std::vector<NodeId>>> cands(nc);
  std::vector<std::vector<double>> cost(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    const Connection& cn = problem.connections[c];
    check_endpoints(field, cn.src, cn.dst);
    if (!(cn.rate_bps > 0.0) || !std::isfinite(cn.rate_bps))
      throw RoutingError("connection rate must be positive and finite");
    std::vector<std::vector<NodeId>> all =
        paths_within(adj, cn.src, cn.dst, problem.hop_slack,
                     problem.max_candidates_per_connection);
    for (std::vector<NodeId>& p : all) {
      bool ok = true;
      for (std::size_t h = 0; ok && h + 1 < p.size(); ++h)
        if (banned.count(ActiveLink{p[h], p[h + 1]})) ok = false;
      if (ok) cands[c].push_back(std::move(p));
    }
    if (cands[c].empty()) return std::nullopt;
    for (const std::vector<NodeId>& p : cands[c])
      cost[c].push_back(2.0 * cn.rate_bps * double(p.size() - 1));
  }

  std::vector<double> lb(nc + 1, 0.0);
  for (std::size_t c = nc; c-- > 0;)
    lb[c] = lb[c + 1] + *std::min_element(cost[c].begin(), cost[c].end());

  const double inf = std::numeric_limits<double>::infinity();
  double best = inf;
  std::vector<std::size_t> pick(nc, 0), best_pick;
  std::vector<ActiveLink> chosen;

  // Each directed link carries at most one connection's flow: the link bound
  // caps the per-link total at one rate, so joint use is infeasible.
  auto try_add = [&](const std::vector<NodeId>& p) -> int {
    std::size_t base = chosen.size();
    for (std::size_t h = 0; h + 1 < p.size(); ++h) {
      ActiveLink l{p[h], p[h + 1]};
      for (const ActiveLink& e : chosen) {
        if (e == l || (!pairs.empty() && pairs.count(Exclusion::make(l, e)))) {
          chosen.resize(base);
          return -1;
        }
      }
      chosen.push_back(l);
    }
    return int(chosen.size() - base);
  };

  // Depth-first in lexicographic candidate order with an admissible lower
  // bound. The first assignment that sets a given objective value is the
  // lexicographically smallest one attaining it, so a strict improvement
  // rule leaves the lex-minimal optimum in place.
  std::function<void(std::size_t, double)> dfs = [&](std::size_t c, double acc) {
    if (acc + lb[c] >= best) return;
    if (c == nc) {
      best = acc;
      best_pick = pick;
      return;
    }
    for (std::size_t i = 0; i < cands[c].size(); ++i) {
      double nxt = acc + cost[c][i];
      if (nxt + lb[c + 1] >= best) continue;
      int added = try_add(cands[c][i]);
      if (added < 0) continue;
      pick[c] = i;
      dfs(c + 1, nxt);
      chosen.resize(chosen.size() - std::size_t(added));
    }
  };
  dfs(0, 0.0);
  if (!(best < inf)) return std::nullopt;

  McfSolution sol;
  sol.objective = 0.0;
  for (std::size_t c = 0; c < nc; ++c) {
    sol.paths.push_back(cands[c][best_pick[c]]);
    sol.objective += cost[c][best_pick[c]];
  }
  sol.links = path_links(sol.paths);
  return sol;
}

std::string check_mcf_solution(const SignalField& field, const RadioParams& radio,
                               const FlowProblem& problem, const McfSolution& solution) {
  if (solution.paths.size() != problem.connections.size()) return "path count mismatch";
  std::set<ActiveLink> banned;
  std::set<Exclusion> pairs;
  for (const Exclusion& e : problem.exclusions) {
    Exclusion ce = Exclusion::make(e.a, e.b);
    if (ce.a == ce.b)
      banned.insert(ce.a);
    else
      pairs.insert(ce);
  }
  std::vector<std::vector<NodeId>> adj = feasible_adjacency(field, radio);
  double obj = 0.0;
  std::vector<ActiveLink> all;
  for (std::size_t c = 0; c < problem.connections.size(); ++c) {
    const Connection& cn = problem.connections[c];
    const std::vector<NodeId>& p = solution.paths[c];
    std::string tag = "connection " + std::to_string(c) + ": ";
    if (p.size() < 2) return tag + "path too short";
    if (p.front() != cn.src || p.back() != cn.dst) return tag + "endpoint mismatch";
    std::set<NodeId> uniq(p.begin(), p.end());
    if (uniq.size() != p.size()) return tag + "path revisits a node";
    for (std::size_t h = 0; h + 1 < p.size(); ++h) {
      if (p[h] >= field.size() || p[h + 1] >= field.size()) return tag + "node out of range";
      if (!link_feasible(field, radio, p[h], p[h + 1])) return tag + "infeasible hop";
      ActiveLink l{p[h], p[h + 1]};
      if (banned.count(l)) return tag + "uses an excluded link";
      all.push_back(l);
    }
    std::vector<std::uint32_t> dist = hops_to_target(adj, cn.dst);
    if (dist[cn.src] == kUnreached) return tag + "no route should exist";
    if (p.size() - 1 > dist[cn.src] + problem.hop_slack) return tag + "path exceeds hop budget";
    obj += 2.0 * cn.rate_bps * double(p.size() - 1);
  }
  for (std::size_t i = 0; i < all.size(); ++i)
    for (std::size_t j = i + 1; j < all.size(); ++j) {
      if (all[i] == all[j]) return "two connections share a link";
      if (pairs.count(Exclusion::make(all[i], all[j]))) return "exclusion pair violated";
    }
  double diff = std::abs(obj - solution.objective);
  double scale = std::max(1.0, std::abs(obj));
  if (diff > 1e-9 * scale) return "objective mismatch";
  std::vector<ActiveLink> uniq = path_links(solution.paths);
  if (uniq != solution.links) return "link set mismatch";
  return "";
}

std::vector<std::vector<NodeId>> shortest_path_route(const SignalField& field,
                                                     const RadioParams& radio,
                                                     const std::vector<Connection>& connections) {
  if (connections.empty()) throw RoutingError("no connections to route");
  std::vector<std::vector<NodeId>> adj = feasible_adjacency(field, radio);
  std::vector<std::vector<NodeId>> out;
  for (std::size_t c = 0; c < connections.size(); ++c) {
    const Connection& cn = connections[c];
    check_endpoints(field, cn.src, cn.dst);
    std::vector<std::uint32_t> dist = hops_to_target(adj, cn.dst);
    if (dist[cn.src] == kUnreached)
      throw RoutingError("no route for connection " + std::to_string(c) + " (" +
                         std::to_string(cn.src) + "->" + std::to_string(cn.dst) + ")");
    std::vector<NodeId> p{cn.src};
    NodeId u = cn.src;
    while (u != cn.dst) {
      for (NodeId v : adj[u]) {
        if (dist[v] == dist[u] - 1) {
          u = v;
          break;
        }
      }
      p.push_back(u);
    }
    out.push_back(std::move(p));
  }
  return out;
}

bool links_conflict(const SignalField& field, const RadioParams& radio, const ActiveLink& x,
                    const ActiveLink& y) {
  NodeId xs[2] = {x.src, x.dst};
  NodeId ys[2] = {y.src, y.dst};
  const double cs = radio.cs_threshold_mw();
  for (NodeId u : xs)
    for (NodeId v : ys) {
      if (u == v) return true;
      if (field.at(u, v) >= cs || field.at(v, u) >= cs) return true;
    }
  return false;
}

std::vector<std::vector<NodeId>> iar_route(const SignalField& field, const RadioParams& radio,
                                           const std::vector<Connection>& connections,
                                           std::uint32_t hop_slack) {
  if (connections.empty()) throw RoutingError("no connections to route");
  const std::size_t nc = connections.size();
  std::vector<std::vector<NodeId>> adj = feasible_adjacency(field, radio);

  std::vector<std::vector<std::vector<NodeId>>> cands(nc);
  std::vector<ActiveLink> universe;
  for (std::size_t c = 0; c < nc; ++c) {
    const Connection& cn = connections[c];
    check_endpoints(field, cn.src, cn.dst);
    cands[c] = paths_within(adj, cn.src, cn.dst, hop_slack, 20000);
    if (cands[c].empty())
      throw RoutingError("no route for connection " + std::to_string(c) + " (" +
                         std::to_string(cn.src) + "->" + std::to_string(cn.dst) + ")");
    for (const std::vector<NodeId>& p : cands[c])
      for (std::size_t h = 0; h + 1 < p.size(); ++h) universe.push_back({p[h], p[h + 1]});
  }
  std::sort(universe.begin(), universe.end());
  universe.erase(std::unique(universe.begin(), universe.end()), universe.end());
  std::map<ActiveLink, std::uint32_t> index;
  for (std::uint32_t i = 0; i < universe.size(); ++i) index.emplace(universe[i], i);

  const std::size_t nu = universe.size();
  std::vector<char> conflict(nu * nu, 0);
  for (std::size_t i = 0; i < nu; ++i)
    for (std::size_t j = i + 1; j < nu; ++j) {
      char cf = links_conflict(field, radio, universe[i], universe[j]) ? 1 : 0;
      conflict[i * nu + j] = cf;
      conflict[j * nu + i] = cf;
    }

  std::vector<std::vector<std::uint32_t>> cand_links(nc);
  std::vector<std::vector<std::vector<std::uint32_t>>> cand_link_ids(nc);
  for (std::size_t c = 0; c < nc; ++c)
    for (const std::vector<NodeId>& p : cands[c]) {
      std::vector<std::uint32_t> ids;
      for (std::size_t h = 0; h + 1 < p.size(); ++h) ids.push_back(index.at({p[h], p[h + 1]}));
      cand_link_ids[c].push_back(std::move(ids));
    }

  std::vector<std::uint32_t> cnt(nu, 0);
  std::vector<std::uint32_t> uniq_stack;
  std::size_t pair_count = 0;
  std::uint64_t nodes_left = 20'000'000;

  auto add_link = [&](std::uint32_t id) {
    if (cnt[id]++ == 0) {
      for (std::uint32_t u : uniq_stack) pair_count += std::size_t(conflict[id * nu + u]);
      uniq_stack.push_back(id);
    }
  };
  auto remove_link = [&](std::uint32_t id) {
    if (--cnt[id] == 0) {
      uniq_stack.pop_back();
      for (std::uint32_t u : uniq_stack) pair_count -= std::size_t(conflict[id * nu + u]);
    }
  };

  std::size_t best = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> pick(nc, 0), best_pick;
  bool found = false;

  std::function<void(std::size_t)> dfs = [&](std::size_t c) {
    if (nodes_left == 0) return;
    --nodes_left;
    if (found && pair_count >= best) return;
    if (c == nc) {
      best = pair_count;
      best_pick = pick;
      found = true;
      return;
    }
    for (std::size_t i = 0; i < cand_link_ids[c].size(); ++i) {
      const std::vector<std::uint32_t>& ids = cand_link_ids[c][i];
      bool taken = false;
      for (std::uint32_t id : ids) taken = taken || cnt[id] > 0;
      if (taken) continue;
      for (std::uint32_t id : ids) add_link(id);
      pick[c] = i;
      dfs(c + 1);
      for (std::size_t k = ids.size(); k-- > 0;) remove_link(ids[k]);
    }
  };
  dfs(0);
  if (!found) throw RoutingError("conflict search found no assignment");

  std::vector<std::vector<NodeId>> out;
  for (std::size_t c = 0; c < nc; ++c) out.push_back(cands[c][best_pick[c]]);
  return out;
}

SarResult sar_route(const SignalField& field, const RadioParams& radio,
                    const std::vector<Connection>& connections, const SarParams& params) {
  struct Entry {
    double parent_cim;
    std::uint64_t seq;
    std::vector<Exclusion> excl;
  };
  struct After {
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.parent_cim != b.parent_cim) return a.parent_cim > b.parent_cim;
      return a.seq > b.seq;
    }
  };

  SarResult res;
  std::priority_queue<Entry, std::vector<Entry>, After> frontier;
  std::set<std::vector<Exclusion>> visited;
  std::uint64_t seq = 0;
  frontier.push({-1.0, seq++, {}});
  visited.insert({});
  bool have_best = false;

  while (!frontier.empty() && res.evaluated < params.max_configs) {
    Entry e = frontier.top();
    frontier.pop();
    FlowProblem fp{connections, e.excl, params.hop_slack, params.max_candidates_per_connection};
    std::optional<McfSolution> sol = solve_mcf(field, radio, fp);
    if (!sol) continue;
    RatedConfig rc = rate_config(sol->links, field, radio, params.exact_mics_cap,
                                 params.heuristic_mics_limit, params.heuristic_seed);
    ++res.evaluated;
    double c = cim(rc.ratings);
    res.log.push_back({e.excl.size(), c, sol->objective});
    if (!have_best || c < res.best_cim ||
        (c == res.best_cim && sol->paths < res.best.paths)) {
      res.best = *sol;
      res.best_cim = c;
      have_best = true;
    }

    double worst_m = -1.0;
    LinkId worst = 0;
    for (LinkId i = 0; i < rc.graph.size(); ++i) {
      double m = std::max(rc.ratings.rts_rating[i], rc.ratings.ack_rating_vcs[i]);
      if (m > worst_m) {
        worst_m = m;
        worst = i;
      }
    }
    if (worst_m < params.rating_threshold) break;

    LinkSet cs = conflict_set(rc.graph, rc.mics, rc.emics, field, radio, worst);
    for (LinkId ci : cs) {
      Exclusion ex = Exclusion::make(rc.graph.link(worst), rc.graph.link(ci));
      std::vector<Exclusion> child = e.excl;
      child.push_back(ex);
      std::sort(child.begin(), child.end());
      child.erase(std::unique(child.begin(), child.end()), child.end());
      if (child.size() == e.excl.size()) continue;
      if (visited.insert(child).second) frontier.push({c, seq++, std::move(child)});
    }
  }
  if (!have_best) throw RoutingError("routing infeasible under every explored configuration");
  return res;
}

void save_routes(std::ostream& out, const std::vector<std::vector<NodeId>>& paths,
                 const std::string& header) {
  if (!header.empty()) out << header << '\n';
  out << "micsnet-routes v1\n";
  out << "routes " << paths.size() << '\n';
  for (const std::vector<NodeId>& p : paths) {
    for (std::size_t i = 0; i < p.size(); ++i) out << (i ? " " : "") << p[i];
    out << '\n';
  }
  out << "end\n";
}

void save_routes_file(const std::string& path, const std::vector<std::vector<NodeId>>& paths,
                      const std::string& header) {
  std::ofstream out(path);
  if (!out) throw RoutingError("cannot open " + path + " for writing");
  save_routes(out, paths, header);
  if (!out) throw RoutingError("write failed for " + path);
}

std::vector<std::vector<NodeId>> load_routes(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      std::size_t pos = line.find_first_not_of(" \t\r");
      if (pos == std::string::npos || line[pos] == '#') continue;
      return true;
    }
    return false;
  };
  auto fail = [&](const std::string& what) {
    throw RoutingError("routes line " + std::to_string(lineno) + ": " + what);
  };

  if (!next_line() || line.find("micsnet-routes v1") == std::string::npos)
    throw RoutingError("missing micsnet-routes v1 signature");
  if (!next_line()) throw RoutingError("missing routes count");
  std::uint64_t count = 0;
  {
    std::istringstream ss(line);
    std::string kw, val;
    ss >> kw >> val;
    if (kw != "routes" || !parse_u64(val, count)) fail("expected 'routes <count>'");
  }
  std::vector<std::vector<NodeId>> out;
  for (std::uint64_t r = 0; r < count; ++r) {
    if (!next_line()) fail("missing route " + std::to_string(r));
    std::istringstream ss(line);
    std::string tok;
    std::vector<NodeId> p;
    while (ss >> tok) {
      std::uint64_t v = 0;
      if (!parse_u64(tok, v) || v > 0xffffffffull) fail("bad node id '" + tok + "'");
      p.push_back(NodeId(v));
    }
    if (p.size() < 2) fail("route needs at least two nodes");
    out.push_back(std::move(p));
  }
  if (!next_line() || line.find("end") == std::string::npos)
    throw RoutingError("missing end marker in routes file");
  return out;
}

std::vector<std::vector<NodeId>> load_routes_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RoutingError("cannot open " + path);
  return load_routes(in);
}

std::vector<ActiveLink> path_links(const std::vector<std::vector<NodeId>>& paths) {
  std::vector<ActiveLink> out;
  for (const std::vector<NodeId>& p : paths)
    for (std::size_t h = 0; h + 1 < p.size(); ++h) out.push_back({p[h], p[h + 1]});
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double min_signal_objective(const std::vector<std::vector<NodeId>>& paths,
                            const std::vector<Connection>& connections) {
  double obj = 0.0;
  for (std::size_t c = 0; c < paths.size() && c < connections.size(); ++c)
    obj += 2.0 * connections[c].rate_bps * double(paths[c].size() - 1);
  return obj;
}

}  // namespace micsnet
