#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "micsnet/contention.hpp"
#include "micsnet/scenario.hpp"

namespace micsnet {

// Probability that exactly k competing links start before a given link
// under a uniform random start order.
double p_exact(unsigned k);

// Probability that at least one of k competing links starts first.
double p_at_least_one(unsigned k);

// Same quantity via the alternating binomial expansion of the union,
// evaluated in exact integer arithmetic. Supports k <= 20.
double p_at_least_one_expanded(unsigned k);

// Members of `mics_set` that can hold the link's receiver busy or break its
// incoming frame SINR on their own.
LinkSet unsafe_links(const ContentionGraph& graph, const SignalField& field,
                     const RadioParams& radio, const LinkSet& mics_set, LinkId link);

// Links that can corrupt an ongoing DATA frame of `link`, split by the
// corrupting frame type. The three sets are pairwise disjoint.
struct CorruptorSets {
  LinkSet rts;   // interfering source's RTS lands on the receiver
  LinkSet cts;   // interfering destination's CTS lands on the receiver
  LinkSet ack;   // interfering destination's ACK lands on the receiver
};

CorruptorSets corruptor_sets(const ContentionGraph& graph, const MicsFamily& mics,
                             const SignalField& field, const RadioParams& radio, LinkId link);

// Co-members whose signal stays below the receiver's sensitivity yet can
// add up to break the DATA SINR.
struct IndirectInterference {
  LinkSet links;    // I
  double eta = 0;   // summed worst-endpoint power at the receiver, mW
  double nu = 0;    // probability mass charged to this set
};

IndirectInterference indirect_interference(const ContentionGraph& graph, const SignalField& field,
                                           const RadioParams& radio, const LinkSet& mics_set,
                                           double activation, LinkId link);

// Strongest cumulative source power node `a` can see from sets of links
// able to run DATA exchanges concurrently with `link` (own source excluded).
double max_parallel_interference(const ContentionGraph& graph, const EmicsFamily& emics,
                                 const SignalField& field, NodeId a, LinkId link);

// Whether node `a` can decode the link's RTS/CTS over the worst-case
// parallel DATA interference, setting its virtual carrier sense.
bool vcs_indicator(const ContentionGraph& graph, const EmicsFamily& emics,
                   const SignalField& field, const RadioParams& radio, NodeId a, LinkId link);

double rts_rating(const ContentionGraph& graph, const MicsFamily& mics, const SignalField& field,
                  const RadioParams& radio, LinkId link);

// ACK-timeout rating. With use_vcs, RTS/CTS corruptors that would defer to
// the link's own control frames are filtered out; emics may be null only
// when use_vcs is false.
double ack_rating(const ContentionGraph& graph, const MicsFamily& mics, const EmicsFamily* emics,
                  const SignalField& field, const RadioParams& radio, LinkId link, bool use_vcs);

struct LinkRatings {
  std::vector<double> rts_rating;      // in [0,1]
  std::vector<double> ack_rating;      // >= 0, not a probability
  std::vector<double> ack_rating_vcs;  // >= 0
  std::vector<double> win_prob;        // sum of activation over containing sets

  std::size_t size() const { return rts_rating.size(); }
};

LinkRatings rate_links(const ContentionGraph& graph, const MicsFamily& mics,
                       const EmicsFamily& emics, const SignalField& field,
                       const RadioParams& radio);

// Mean over links of (rts_rating + ack_rating_vcs) / 2. Throws
// std::invalid_argument on an empty rating set.
double cim(const LinkRatings& ratings);

// Every link this link can collide with: unsafe co-members plus the
// VCS-filtered corruptor sets. Used to drive route repair.
LinkSet conflict_set(const ContentionGraph& graph, const MicsFamily& mics,
                     const EmicsFamily& emics, const SignalField& field, const RadioParams& radio,
                     LinkId link);

// Columns: link id, src, dst, rts rating, ack rating, ack rating with VCS,
// win probability, containing-set count.
void write_ratings_csv(std::ostream& out, const ContentionGraph& graph, const MicsFamily& mics,
                       const LinkRatings& ratings, const std::string& header = {});

// One-stop rating of a link configuration: contention graph, MICS family
// (exact up to exact_cap links, seeded heuristic beyond), EMICS family and
// per-link ratings.
struct RatedConfig {
  ContentionGraph graph;
  MicsFamily mics;
  bool mics_exact = true;
  EmicsFamily emics;
  LinkRatings ratings;
};

RatedConfig rate_config(const std::vector<ActiveLink>& links, const SignalField& field,
                        const RadioParams& radio, std::uint32_t exact_cap = 25,
                        std::size_t heuristic_limit = 256,
                        std::uint64_t heuristic_seed = 0x6d696373u);

}  // namespace micsnet
