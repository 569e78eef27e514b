#include "micsnet/contention.hpp"

#include <algorithm>
#include <bit>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <unordered_set>

namespace micsnet {

bool can_coexist(const SignalField& field, const RadioParams& radio, const ActiveLink& a,
                 const ActiveLink& b) {
  const double cs = radio.cs_threshold_mw();
  return field.at(b.src, a.src) < cs && field.at(a.src, b.src) < cs;
}

ContentionGraph::ContentionGraph(std::vector<ActiveLink> links, const SignalField& field,
                                 const RadioParams& radio)
    : links_(std::move(links)), adj_(links_.size() * links_.size(), 0) {
  const std::size_t n = links_.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      char c = can_coexist(field, radio, links_[i], links_[j]) ? 1 : 0;
      adj_[i * n + j] = c;
      adj_[j * n + i] = c;
    }
  }
}

ContentionGraph ContentionGraph::from_adjacency(std::vector<ActiveLink> links,
                                                std::vector<char> adj) {
  const std::size_t n = links.size();
  if (adj.size() != n * n) throw std::invalid_argument("contention graph: adjacency size mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    if (adj[i * n + i]) throw std::invalid_argument("contention graph: self-adjacency");
    for (std::size_t j = 0; j < n; ++j)
      if (adj[i * n + j] != adj[j * n + i])
        throw std::invalid_argument("contention graph: adjacency not symmetric");
  }
  ContentionGraph g;
  g.links_ = std::move(links);
  g.adj_ = std::move(adj);
  return g;
}

namespace {

MicsFamily finalize_family(std::vector<LinkSet> sets, std::size_t n_links) {
  std::sort(sets.begin(), sets.end());
  sets.erase(std::unique(sets.begin(), sets.end()), sets.end());
  MicsFamily fam;
  fam.sets = std::move(sets);
  std::size_t total = 0;
  for (const LinkSet& c : fam.sets) total += c.size();
  fam.activation.reserve(fam.sets.size());
  for (const LinkSet& c : fam.sets)
    fam.activation.push_back(double(c.size()) / double(total));
  fam.membership.assign(n_links, {});
  for (std::uint32_t ci = 0; ci < fam.sets.size(); ++ci)
    for (LinkId e : fam.sets[ci]) fam.membership[e].push_back(ci);
  return fam;
}

struct BronKerbosch {
  const ContentionGraph& g;
  std::vector<std::uint64_t> nbr;  // bitmask neighborhoods
  std::vector<LinkSet>& out;

  BronKerbosch(const ContentionGraph& graph, std::vector<LinkSet>& sink)
      : g(graph), nbr(graph.size(), 0), out(sink) {
    const std::size_t n = g.size();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j && g.concurrent(LinkId(i), LinkId(j))) nbr[i] |= std::uint64_t{1} << j;
  }

  void run(std::uint64_t r, std::uint64_t p, std::uint64_t x) {
    if (p == 0 && x == 0) {
      LinkSet clique;
      for (std::uint64_t m = r; m;) {
        int b = std::countr_zero(m);
        clique.push_back(LinkId(b));
        m &= m - 1;
      }
      out.push_back(std::move(clique));
      return;
    }
    std::uint64_t px = p | x;
    int pivot = -1;
    int best = -1;
    for (std::uint64_t m = px; m;) {
      int u = std::countr_zero(m);
      m &= m - 1;
      int deg = std::popcount(p & nbr[u]);
      if (deg > best) {
        best = deg;
        pivot = u;
      }
    }
    std::uint64_t cand = p & ~nbr[pivot];
    while (cand) {
      int v = std::countr_zero(cand);
      std::uint64_t vb = std::uint64_t{1} << v;
      cand &= cand - 1;
      run(r | vb, p & nbr[v], x & nbr[v]);
      p &= ~vb;
      x |= vb;
    }
  }
};

}  // namespace

MicsFamily enumerate_mics_exact(const ContentionGraph& graph, std::size_t exact_cap) {
  const std::size_t n = graph.size();
  if (exact_cap > 64) exact_cap = 64;
  if (n > exact_cap)
    throw ExactCapExceeded("exact enumeration capped at " + std::to_string(exact_cap) +
                           " links, got " + std::to_string(n));
  std::vector<LinkSet> sets;
  if (n > 0) {
    BronKerbosch bk(graph, sets);
    std::uint64_t all = n == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1;
    bk.run(0, all, 0);
  }
  return finalize_family(std::move(sets), n);
}

namespace {

// Grows a maximal clique around `seed_link`, consuming candidates in random
// order so repeated calls explore different maximal cliques.
LinkSet grow_clique(const ContentionGraph& g, LinkId seed_link, std::mt19937_64& rng) {
  LinkSet clique{seed_link};
  std::vector<LinkId> cand;
  for (LinkId j = 0; j < g.size(); ++j)
    if (j != seed_link && g.concurrent(seed_link, j)) cand.push_back(j);
  while (!cand.empty()) {
    std::size_t pick = std::size_t(rng() % cand.size());
    LinkId v = cand[pick];
    clique.push_back(v);
    std::vector<LinkId> next;
    next.reserve(cand.size());
    for (LinkId u : cand)
      if (u != v && g.concurrent(u, v)) next.push_back(u);
    cand = std::move(next);
  }
  std::sort(clique.begin(), clique.end());
  return clique;
}

}  // namespace

MicsFamily enumerate_mics_heuristic(const ContentionGraph& graph, std::size_t limit,
                                    std::uint64_t seed) {
  const std::size_t n = graph.size();
  if (limit == 0) throw std::invalid_argument("heuristic enumeration needs limit >= 1");
  std::mt19937_64 rng(seed);
  std::set<LinkSet> found;
  std::vector<char> covered(n, 0);

  // Coverage first: every link must land in at least one set, even if that
  // overshoots `limit` on adversarial graphs.
  for (LinkId i = 0; i < n; ++i) {
    if (covered[i]) continue;
    LinkSet c = grow_clique(graph, i, rng);
    for (LinkId e : c) covered[e] = 1;
    found.insert(std::move(c));
  }
  std::size_t attempts = 0;
  const std::size_t max_attempts = 4 * limit + 16;
  while (found.size() < limit && attempts < max_attempts && n > 0) {
    ++attempts;
    found.insert(grow_clique(graph, LinkId(rng() % n), rng));
  }

  std::vector<LinkSet> sets(found.begin(), found.end());
  return finalize_family(std::move(sets), n);
}

namespace {

// Pairwise interference terms inside one MICS, indexed by position in the
// set: at_dst[i][j] is the strongest signal member j puts on member i's
// receiver, at_src[i][j] the same at member i's source.
struct MicsInterference {
  std::vector<std::vector<double>> at_dst, at_src;
  std::vector<double> fwd, rev;  // member link powers, both directions
};

MicsInterference build_interference(const ContentionGraph& g, const LinkSet& set,
                                    const SignalField& field) {
  const std::size_t m = set.size();
  MicsInterference mi;
  mi.at_dst.assign(m, std::vector<double>(m, 0.0));
  mi.at_src.assign(m, std::vector<double>(m, 0.0));
  mi.fwd.resize(m);
  mi.rev.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const ActiveLink& li = g.link(set[i]);
    mi.fwd[i] = field.at(li.src, li.dst);
    mi.rev[i] = field.at(li.dst, li.src);
    for (std::size_t j = 0; j < m; ++j) {
      if (i == j) continue;
      const ActiveLink& lj = g.link(set[j]);
      mi.at_dst[i][j] = std::max(field.at(lj.src, li.dst), field.at(lj.dst, li.dst));
      mi.at_src[i][j] = std::max(field.at(lj.src, li.src), field.at(lj.dst, li.src));
    }
  }
  return mi;
}

// All three conditions only relax as members are removed, so the predicate
// is downward closed and maximal satisfying subsets are well-defined.
bool emics_mask_ok(const MicsInterference& mi, const RadioParams& radio, std::uint64_t mask) {
  const double w = radio.noise_floor_mw;
  for (std::uint64_t m = mask; m;) {
    int i = std::countr_zero(m);
    m &= m - 1;
    double sum_d = 0.0, sum_s = 0.0;
    for (std::uint64_t o = mask; o;) {
      int j = std::countr_zero(o);
      o &= o - 1;
      if (j == i) continue;
      sum_d += mi.at_dst[i][j];
      sum_s += mi.at_src[i][j];
    }
    if (!(sum_d + w < radio.rx_sensitivity_mw)) return false;
    if (!(mi.fwd[i] / (sum_d + w) >= radio.sinr_threshold)) return false;
    if (!(mi.rev[i] / (sum_s + w) >= radio.sinr_threshold)) return false;
  }
  return true;
}

void collect_maximal_ok(const MicsInterference& mi, const RadioParams& radio, std::uint64_t mask,
                        std::unordered_set<std::uint64_t>& visited,
                        std::vector<std::uint64_t>& ok) {
  if (!visited.insert(mask).second) return;
  if (emics_mask_ok(mi, radio, mask)) {
    ok.push_back(mask);
    return;
  }
  for (std::uint64_t m = mask; m;) {
    std::uint64_t bit = m & (~m + 1);
    m &= m - 1;
    if (mask != bit)  // keep at least one member unless the singleton itself failed
      collect_maximal_ok(mi, radio, mask & ~bit, visited, ok);
  }
}

}  // namespace

EmicsFamily enumerate_emics(const ContentionGraph& graph, const MicsFamily& mics,
                            const SignalField& field, const RadioParams& radio) {
  std::map<LinkSet, std::uint32_t> first_parent;
  for (std::uint32_t ci = 0; ci < mics.sets.size(); ++ci) {
    const LinkSet& set = mics.sets[ci];
    if (set.size() > 64)
      throw std::runtime_error("emics enumeration supports at most 64 links per set");
    MicsInterference mi = build_interference(graph, set, field);
    std::uint64_t full = set.size() == 64 ? ~std::uint64_t{0}
                                          : (std::uint64_t{1} << set.size()) - 1;
    std::unordered_set<std::uint64_t> visited;
    std::vector<std::uint64_t> ok;
    collect_maximal_ok(mi, radio, full, visited, ok);

    // Drop satisfying masks that are contained in another satisfying mask.
    std::sort(ok.begin(), ok.end(),
              [](std::uint64_t a, std::uint64_t b) { return std::popcount(a) > std::popcount(b); });
    std::vector<std::uint64_t> maximal;
    for (std::uint64_t m : ok) {
      bool contained = false;
      for (std::uint64_t big : maximal)
        if ((m & big) == m) {
          contained = true;
          break;
        }
      if (!contained) maximal.push_back(m);
    }
    for (std::uint64_t m : maximal) {
      LinkSet e;
      for (std::uint64_t t = m; t;) {
        int b = std::countr_zero(t);
        t &= t - 1;
        e.push_back(set[std::size_t(b)]);
      }
      std::sort(e.begin(), e.end());
      first_parent.emplace(std::move(e), ci);  // keeps the earliest parent
    }
  }

  EmicsFamily fam;
  fam.sets.reserve(first_parent.size());
  fam.parent.reserve(first_parent.size());
  for (auto& [set, parent] : first_parent) {
    fam.sets.push_back(set);
    fam.parent.push_back(parent);
  }
  fam.membership.assign(graph.size(), {});
  for (std::uint32_t ei = 0; ei < fam.sets.size(); ++ei)
    for (LinkId e : fam.sets[ei]) fam.membership[e].push_back(ei);
  return fam;
}

void dump_sets(std::ostream& out, const std::vector<LinkSet>& sets) {
  for (const LinkSet& s : sets) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i) out << ' ';
      out << s[i];
    }
    out << '\n';
  }
}

}  // namespace micsnet
