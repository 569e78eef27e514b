#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "micsnet/contention.hpp"
#include "micsnet/routing.hpp"
#include "micsnet/scenario.hpp"

namespace testfix {

using namespace micsnet;

// Unit-power radio for the hand-built fields: decode at 1.0 mW, noise floor
// 0.1 mW, capture at 10x. Carrier sense threshold comes out at 0.9 mW.
inline RadioParams unit_radio() {
  RadioParams r;
  r.tx_power_mw = 1.0;
  r.path_loss_exponent = 4.0;
  r.rx_sensitivity_mw = 1.0;
  r.sinr_threshold = 10.0;
  r.noise_floor_mw = 0.1;
  return r;
}

// n nodes with a quiet 0.01 mW floor between every distinct pair.
inline SignalField base_field(NodeId n, double floor_mw = 0.01) {
  SignalField f(n);
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = 0; j < n; ++j)
      if (i != j) f.at(i, j) = floor_mw;
  return f;
}

inline void set_pair(SignalField& f, NodeId a, NodeId b, double v) {
  f.at(a, b) = v;
  f.at(b, a) = v;
}

inline bool same_points(const std::vector<Point>& a, const std::vector<Point>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].x != b[i].x || a[i].y != b[i].y) return false;
  return true;
}

// Three links A=(0,1), B=(2,3), C=(4,5). A's and B's sources hear each other,
// so only {A,C} and {B,C} can run concurrently. C's source is loud enough at
// A's destination (0.5 mW against a 5.0 mW signal: SINR 5/0.6 < 10) to break
// every frame A receives while C transmits.
inline SignalField trio_field() {
  SignalField f = base_field(6);
  set_pair(f, 0, 1, 5.0);
  set_pair(f, 2, 3, 5.0);
  set_pair(f, 4, 5, 5.0);
  set_pair(f, 4, 1, 0.5);
  set_pair(f, 5, 1, 0.05);
  set_pair(f, 0, 2, 2.0);
  return f;
}

inline std::vector<ActiveLink> trio_links() { return {{0, 1}, {2, 3}, {4, 5}}; }

// Two links whose sources cannot hear each other while each source is loud at
// the other link's destination: the classic hidden terminal pair.
inline SignalField hidden_pair_field() {
  SignalField f = base_field(4);
  set_pair(f, 0, 1, 5.0);
  set_pair(f, 2, 3, 5.0);
  f.at(2, 1) = 2.0;
  f.at(0, 3) = 2.0;
  return f;
}

inline std::vector<ActiveLink> hidden_pair_links() { return {{0, 1}, {2, 3}}; }

// Three mutually concurrent links where the two mates are individually
// harmless at link 0's destination (SINR 5/0.4 >= 10) but break capture when
// both transmit (5/0.7 < 10).
inline SignalField cumulative_field() {
  SignalField f = base_field(6);
  set_pair(f, 0, 1, 5.0);
  set_pair(f, 2, 3, 5.0);
  set_pair(f, 4, 5, 5.0);
  f.at(2, 1) = 0.3;
  f.at(4, 1) = 0.3;
  return f;
}

// Random symmetric concurrency relation over m two-node links.
inline ContentionGraph random_graph(std::mt19937_64& rng, std::size_t m) {
  std::vector<ActiveLink> links;
  links.reserve(m);
  for (std::size_t i = 0; i < m; ++i)
    links.push_back(ActiveLink{NodeId(2 * i), NodeId(2 * i + 1)});
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double p = 0.15 + 0.7 * u(rng);
  std::vector<char> adj(m * m, 0);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a + 1; b < m; ++b)
      if (u(rng) < p) adj[a * m + b] = adj[b * m + a] = 1;
  return ContentionGraph::from_adjacency(std::move(links), std::move(adj));
}

inline std::vector<LinkSet> sorted_family(std::vector<LinkSet> sets) {
  for (LinkSet& s : sets) std::sort(s.begin(), s.end());
  std::sort(sets.begin(), sets.end());
  return sets;
}

// Every maximal clique of the concurrency relation, by subset sweep. Only
// usable for small graphs; this is the reference the fast enumerations are
// checked against.
inline std::vector<LinkSet> brute_force_mics(const ContentionGraph& g) {
  const std::size_t m = g.size();
  std::vector<std::uint32_t> cliques;
  for (std::uint32_t s = 1; s < (1u << m); ++s) {
    bool ok = true;
    for (std::size_t a = 0; a < m && ok; ++a) {
      if (!(s >> a & 1)) continue;
      for (std::size_t b = a + 1; b < m && ok; ++b)
        if ((s >> b & 1) && !g.concurrent(LinkId(a), LinkId(b))) ok = false;
    }
    if (ok) cliques.push_back(s);
  }
  std::vector<LinkSet> out;
  for (std::uint32_t s : cliques) {
    bool maximal = true;
    for (std::uint32_t t : cliques)
      if (t != s && (t & s) == s) {
        maximal = false;
        break;
      }
    if (!maximal) continue;
    LinkSet set;
    for (std::size_t a = 0; a < m; ++a)
      if (s >> a & 1) set.push_back(LinkId(a));
    out.push_back(std::move(set));
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Random mesh where chosen pairs get a strong 5.0 mW path and everything else
// stays on the quiet floor, so feasibility equals pair selection.
inline SignalField random_mesh(std::mt19937_64& rng, NodeId n, double edge_prob) {
  SignalField f = base_field(n);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (NodeId a = 0; a < n; ++a)
    for (NodeId b = a + 1; b < n; ++b)
      if (u(rng) < edge_prob) set_pair(f, a, b, 5.0);
  return f;
}

struct McfOracle {
  bool feasible = false;
  double objective = 0.0;
  std::vector<std::vector<NodeId>> paths;
};

// Exhaustive cross product over each connection's candidate paths, enforcing
// the same invariants the solver claims: one connection per directed link,
// no excluded pair active together, minimum summed per-node incident flow,
// lexicographic smallest path list on ties.
inline McfOracle brute_force_mcf(const SignalField& field, const RadioParams& radio,
                                 const FlowProblem& pb) {
  McfOracle best;
  std::vector<std::vector<std::vector<NodeId>>> cand;
  for (const Connection& c : pb.connections) {
    auto paths = enumerate_paths(field, radio, c.src, c.dst, pb.hop_slack,
                                 pb.max_candidates_per_connection);
    if (paths.empty()) return best;
    cand.push_back(std::move(paths));
  }
  std::vector<std::size_t> pick(cand.size(), 0);
  for (;;) {
    std::vector<ActiveLink> used;
    bool ok = true;
    for (std::size_t i = 0; i < cand.size() && ok; ++i) {
      const auto& p = cand[i][pick[i]];
      for (std::size_t k = 0; k + 1 < p.size() && ok; ++k) {
        ActiveLink l{p[k], p[k + 1]};
        if (std::find(used.begin(), used.end(), l) != used.end()) ok = false;
        used.push_back(l);
      }
    }
    if (ok) {
      for (const Exclusion& e : pb.exclusions) {
        const bool has_a = std::find(used.begin(), used.end(), e.a) != used.end();
        const bool has_b = std::find(used.begin(), used.end(), e.b) != used.end();
        if (has_a && has_b) {
          ok = false;
          break;
        }
      }
    }
    if (ok) {
      double obj = 0.0;
      std::vector<std::vector<NodeId>> combo;
      for (std::size_t i = 0; i < cand.size(); ++i) {
        const auto& p = cand[i][pick[i]];
        obj += 2.0 * double(p.size() - 1) * pb.connections[i].rate_bps;
        combo.push_back(p);
      }
      if (!best.feasible || obj < best.objective ||
          (obj == best.objective && combo < best.paths)) {
        best.feasible = true;
        best.objective = obj;
        best.paths = std::move(combo);
      }
    }
    std::size_t i = 0;
    while (i < pick.size() && ++pick[i] == cand[i].size()) pick[i++] = 0;
    if (i == pick.size()) break;
  }
  return best;
}

// Small random MCF instance over a random mesh. Returns false when the draw
// does not yield the wanted connection count within the candidate budget.
inline bool random_mcf_instance(std::mt19937_64& rng, SignalField& field, RadioParams& radio,
                                FlowProblem& pb, std::size_t max_connections,
                                std::size_t max_candidates) {
  radio = unit_radio();
  const NodeId n = NodeId(6 + rng() % 3);
  field = random_mesh(rng, n, 0.3 + 0.2 * double(rng() % 3));
  pb = FlowProblem{};
  pb.hop_slack = std::uint32_t(rng() % 2);
  pb.max_candidates_per_connection = max_candidates;
  const std::size_t want = 1 + rng() % max_connections;
  std::vector<ActiveLink> cand_links;
  for (std::size_t attempt = 0; attempt < 40 && pb.connections.size() < want; ++attempt) {
    NodeId s = NodeId(rng() % n), d = NodeId(rng() % n);
    if (s == d) continue;
    std::vector<std::vector<NodeId>> paths;
    try {
      paths = enumerate_paths(field, radio, s, d, pb.hop_slack, max_candidates);
    } catch (const RoutingError&) {
      continue;
    }
    if (paths.empty()) continue;
    pb.connections.push_back(Connection{s, d, double(1 + rng() % 5)});
    for (const auto& p : paths)
      for (std::size_t k = 0; k + 1 < p.size(); ++k) cand_links.push_back({p[k], p[k + 1]});
  }
  if (pb.connections.size() != want) return false;
  std::sort(cand_links.begin(), cand_links.end());
  cand_links.erase(std::unique(cand_links.begin(), cand_links.end()), cand_links.end());
  const std::size_t n_excl = rng() % 3;
  for (std::size_t i = 0; i < n_excl && cand_links.size() >= 2; ++i) {
    ActiveLink a = cand_links[rng() % cand_links.size()];
    ActiveLink b = cand_links[rng() % cand_links.size()];
    if (a == b) continue;
    pb.exclusions.push_back(Exclusion::make(a, b));
  }
  return true;
}

}  // namespace testfix
