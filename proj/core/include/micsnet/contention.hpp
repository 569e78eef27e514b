#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "micsnet/scenario.hpp"

namespace micsnet {

// Sorted, duplicate-free ids indexing into a ContentionGraph's link list.
using LinkSet = std::vector<LinkId>;

// Two links may start transmissions in the same contention round when
// neither source's carrier sense is held busy by the other source.
bool can_coexist(const SignalField& field, const RadioParams& radio, const ActiveLink& a,
                 const ActiveLink& b);

class ContentionGraph {
 public:
  ContentionGraph() = default;
  ContentionGraph(std::vector<ActiveLink> links, const SignalField& field,
                  const RadioParams& radio);

  // Arbitrary adjacency, mainly for tests. Must be symmetric with a false
  // diagonal.
  static ContentionGraph from_adjacency(std::vector<ActiveLink> links, std::vector<char> adj);

  const std::vector<ActiveLink>& links() const { return links_; }
  const ActiveLink& link(LinkId i) const { return links_[i]; }
  std::size_t size() const { return links_.size(); }
  bool concurrent(LinkId a, LinkId b) const { return adj_[std::size_t{a} * links_.size() + b] != 0; }

 private:
  std::vector<ActiveLink> links_;
  std::vector<char> adj_;
};

// Family of maximal concurrent-clique link sets with activation weights.
struct MicsFamily {
  std::vector<LinkSet> sets;  // lexicographically sorted
  std::vector<double> activation;  // |C| / sum of all set sizes
  std::vector<std::vector<std::uint32_t>> membership;  // link id -> indices into sets

  std::size_t count() const { return sets.size(); }
};

class ExactCapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// All maximal cliques of the concurrency adjacency. Throws ExactCapExceeded
// when the graph has more links than exact_cap.
MicsFamily enumerate_mics_exact(const ContentionGraph& graph, std::size_t exact_cap = 25);

// Randomized-greedy clique growth seeded per link: every returned set is a
// valid maximal clique, every link is covered, and extra sets are added up
// to `limit`. Deterministic for a given seed.
MicsFamily enumerate_mics_heuristic(const ContentionGraph& graph, std::size_t limit,
                                    std::uint64_t seed = 0x6d696373);

// Subsets of a MICS whose members can all hold their DATA/ACK exchanges
// simultaneously under cumulative interference.
struct EmicsFamily {
  std::vector<LinkSet> sets;  // lexicographically sorted, deduplicated
  std::vector<std::uint32_t> parent;  // index of the first containing MICS
  std::vector<std::vector<std::uint32_t>> membership;  // link id -> indices into sets

  std::size_t count() const { return sets.size(); }
};

EmicsFamily enumerate_emics(const ContentionGraph& graph, const MicsFamily& mics,
                            const SignalField& field, const RadioParams& radio);

// One set per line, link ids sorted and space-separated.
void dump_sets(std::ostream& out, const std::vector<LinkSet>& sets);

}  // namespace micsnet
