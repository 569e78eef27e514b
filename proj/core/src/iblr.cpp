#include "micsnet/iblr.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <stdexcept>

#include "micsnet/text.hpp"

namespace micsnet {

double p_exact(unsigned k) { return 1.0 / (double(k) + 1.0); }

double p_at_least_one(unsigned k) { return double(k) / (double(k) + 1.0); }

double p_at_least_one_expanded(unsigned k) {
  if (k > 20) throw std::domain_error("expanded order probability supports k <= 20");
  // lcm(1..21); every term C(k,i)/(i+1) scales to an exact int64.
  constexpr std::int64_t kLcm = 232792560;
  std::int64_t binom = 1;  // C(k,0)
  std::int64_t acc = 0;
  for (unsigned i = 1; i <= k; ++i) {
    binom = binom * std::int64_t(k - i + 1) / std::int64_t(i);
    std::int64_t term = binom * (kLcm / std::int64_t(i + 1));
    acc += (i % 2 == 1) ? term : -term;
  }
  return double(acc) / double(kLcm);
}

namespace {

double cs_busy_threshold(const RadioParams& radio) { return radio.cs_threshold_mw(); }

bool breaks_sinr(double signal, double interference, const RadioParams& radio) {
  return signal / (interference + radio.noise_floor_mw) < radio.sinr_threshold;
}

// True when the two links share a MICS.
bool co_occurs(const MicsFamily& mics, LinkId a, LinkId b) {
  const auto& ma = mics.membership[a];
  const auto& mb = mics.membership[b];
  std::size_t i = 0, j = 0;
  while (i < ma.size() && j < mb.size()) {
    if (ma[i] == mb[j]) return true;
    if (ma[i] < mb[j]) ++i; else ++j;
  }
  return false;
}

std::size_t count_in(const LinkSet& sorted_set, const LinkSet& mics_set) {
  std::size_t n = 0;
  std::size_t i = 0, j = 0;
  while (i < sorted_set.size() && j < mics_set.size()) {
    if (sorted_set[i] == mics_set[j]) { ++n; ++i; ++j; }
    else if (sorted_set[i] < mics_set[j]) ++i;
    else ++j;
  }
  return n;
}

}  // namespace

LinkSet unsafe_links(const ContentionGraph& graph, const SignalField& field,
                     const RadioParams& radio, const LinkSet& mics_set, LinkId link) {
  const ActiveLink& l = graph.link(link);
  const double fwd = field.at(l.src, l.dst);
  LinkSet out;
  for (LinkId other : mics_set) {
    if (other == link) continue;
    const ActiveLink& o = graph.link(other);
    double at_dst = field.at(o.src, l.dst);
    if (at_dst >= cs_busy_threshold(radio) || breaks_sinr(fwd, at_dst, radio))
      out.push_back(other);
  }
  return out;
}

CorruptorSets corruptor_sets(const ContentionGraph& graph, const MicsFamily& mics,
                             const SignalField& field, const RadioParams& radio, LinkId link) {
  const ActiveLink& l = graph.link(link);
  const double fwd = field.at(l.src, l.dst);
  CorruptorSets out;
  for (LinkId other = 0; other < graph.size(); ++other) {
    if (other == link || !co_occurs(mics, link, other)) continue;
    const ActiveLink& o = graph.link(other);
    if (breaks_sinr(fwd, field.at(o.src, l.dst), radio)) {
      out.rts.push_back(other);
      continue;
    }
    // The interfering destination answers with a CTS only when it cannot
    // carrier-sense this link's source.
    bool cts_possible = field.at(l.src, o.dst) < cs_busy_threshold(radio);
    bool dst_breaks = breaks_sinr(fwd, field.at(o.dst, l.dst), radio);
    if (cts_possible && dst_breaks) {
      out.cts.push_back(other);
      continue;
    }
    // ACK happens only when the interferer's own DATA survives this link's
    // source; the ACK is sent without any carrier sense.
    bool their_data_ok =
        field.at(o.src, o.dst) / (field.at(l.src, o.dst) + radio.noise_floor_mw) >=
        radio.sinr_threshold;
    if (their_data_ok && dst_breaks) out.ack.push_back(other);
  }
  return out;
}

IndirectInterference indirect_interference(const ContentionGraph& graph, const SignalField& field,
                                           const RadioParams& radio, const LinkSet& mics_set,
                                           double activation, LinkId link) {
  const ActiveLink& l = graph.link(link);
  IndirectInterference out;
  for (LinkId other : mics_set) {
    if (other == link) continue;
    const ActiveLink& o = graph.link(other);
    double from_src = field.at(o.src, l.dst);
    double from_dst = field.at(o.dst, l.dst);
    if (from_src + radio.noise_floor_mw < radio.rx_sensitivity_mw &&
        from_dst + radio.noise_floor_mw < radio.rx_sensitivity_mw) {
      out.links.push_back(other);
      out.eta += std::max(from_src, from_dst);
    }
  }
  double fwd = field.at(l.src, l.dst);
  if (breaks_sinr(fwd, out.eta, radio))
    out.nu = activation * p_exact(unsigned(out.links.size()));
  return out;
}

double max_parallel_interference(const ContentionGraph& graph, const EmicsFamily& emics,
                                 const SignalField& field, NodeId a, LinkId link) {
  const ActiveLink& l = graph.link(link);
  double best = 0.0;
  for (std::uint32_t ei : emics.membership[link]) {
    double sum = 0.0;
    for (LinkId member : emics.sets[ei]) {
      const ActiveLink& m = graph.link(member);
      if (m.src == l.src) continue;  // own signal is the one being captured
      sum += field.at(m.src, a);
    }
    best = std::max(best, sum);
  }
  return best;
}

bool vcs_indicator(const ContentionGraph& graph, const EmicsFamily& emics,
                   const SignalField& field, const RadioParams& radio, NodeId a, LinkId link) {
  const ActiveLink& l = graph.link(link);
  double ctrl = std::max(field.at(l.src, a), field.at(l.dst, a));
  if (!(ctrl > radio.rx_sensitivity_mw)) return false;
  double parallel = max_parallel_interference(graph, emics, field, a, link);
  return ctrl / (parallel + radio.noise_floor_mw) >= radio.sinr_threshold;
}

double rts_rating(const ContentionGraph& graph, const MicsFamily& mics, const SignalField& field,
                  const RadioParams& radio, LinkId link) {
  const auto& containing = mics.membership[link];
  if (containing.empty())
    throw std::invalid_argument("rts_rating: link belongs to no contention set");
  double acc = 0.0;
  for (std::uint32_t ci : containing) {
    LinkSet u = unsafe_links(graph, field, radio, mics.sets[ci], link);
    acc += p_at_least_one(unsigned(u.size()));
  }
  return acc / double(containing.size());
}

namespace {

struct VcsFiltered {
  LinkSet rts, cts;
};

// Drops corruptors that would defer to the rated link's control frames.
VcsFiltered vcs_filter(const ContentionGraph& graph, const EmicsFamily& emics,
                       const SignalField& field, const RadioParams& radio, LinkId link,
                       const CorruptorSets& sets) {
  VcsFiltered out;
  for (LinkId other : sets.rts)
    if (!vcs_indicator(graph, emics, field, radio, graph.link(other).src, link))
      out.rts.push_back(other);
  for (LinkId other : sets.cts)
    if (!vcs_indicator(graph, emics, field, radio, graph.link(other).dst, link))
      out.cts.push_back(other);
  return out;
}

double ack_rating_impl(const ContentionGraph& graph, const MicsFamily& mics,
                       const EmicsFamily* emics, const SignalField& field,
                       const RadioParams& radio, LinkId link, bool use_vcs) {
  const auto& containing = mics.membership[link];
  if (containing.empty())
    throw std::invalid_argument("ack_rating: link belongs to no contention set");
  CorruptorSets sets = corruptor_sets(graph, mics, field, radio, link);
  const LinkSet* rts_set = &sets.rts;
  const LinkSet* cts_set = &sets.cts;
  VcsFiltered filtered;
  if (use_vcs) {
    if (!emics) throw std::invalid_argument("ack_rating: VCS filtering needs an EMICS family");
    filtered = vcs_filter(graph, *emics, field, radio, link, sets);
    rts_set = &filtered.rts;
    cts_set = &filtered.cts;
  }

  double sigma = 0.0;
  for (std::uint32_t ci : containing) sigma += mics.activation[ci];
  if (!(sigma > 0.0)) throw std::invalid_argument("ack_rating: zero win probability");

  double acc = 0.0;
  for (std::uint32_t ci : containing) {
    const LinkSet& c = mics.sets[ci];
    std::size_t k = count_in(*rts_set, c) + count_in(*cts_set, c) + count_in(sets.ack, c);
    IndirectInterference ind =
        indirect_interference(graph, field, radio, c, mics.activation[ci], link);
    acc += mics.activation[ci] * p_at_least_one(unsigned(k)) + ind.nu;
  }
  return acc / sigma;
}

}  // namespace

double ack_rating(const ContentionGraph& graph, const MicsFamily& mics, const EmicsFamily* emics,
                  const SignalField& field, const RadioParams& radio, LinkId link, bool use_vcs) {
  return ack_rating_impl(graph, mics, emics, field, radio, link, use_vcs);
}

LinkRatings rate_links(const ContentionGraph& graph, const MicsFamily& mics,
                       const EmicsFamily& emics, const SignalField& field,
                       const RadioParams& radio) {
  const std::size_t n = graph.size();
  LinkRatings r;
  r.rts_rating.resize(n);
  r.ack_rating.resize(n);
  r.ack_rating_vcs.resize(n);
  r.win_prob.resize(n);
  for (LinkId i = 0; i < n; ++i) {
    r.rts_rating[i] = rts_rating(graph, mics, field, radio, i);
    r.ack_rating[i] = ack_rating_impl(graph, mics, nullptr, field, radio, i, false);
    r.ack_rating_vcs[i] = ack_rating_impl(graph, mics, &emics, field, radio, i, true);
    double sigma = 0.0;
    for (std::uint32_t ci : mics.membership[i]) sigma += mics.activation[ci];
    r.win_prob[i] = sigma;
  }
  return r;
}

double cim(const LinkRatings& ratings) {
  if (ratings.size() == 0) throw std::invalid_argument("cim: no rated links");
  double acc = 0.0;
  for (std::size_t i = 0; i < ratings.size(); ++i)
    acc += (ratings.rts_rating[i] + ratings.ack_rating_vcs[i]) / 2.0;
  return acc / double(ratings.size());
}

LinkSet conflict_set(const ContentionGraph& graph, const MicsFamily& mics,
                     const EmicsFamily& emics, const SignalField& field, const RadioParams& radio,
                     LinkId link) {
  LinkSet out;
  for (std::uint32_t ci : mics.membership[link]) {
    LinkSet u = unsafe_links(graph, field, radio, mics.sets[ci], link);
    out.insert(out.end(), u.begin(), u.end());
  }
  CorruptorSets sets = corruptor_sets(graph, mics, field, radio, link);
  VcsFiltered filtered = vcs_filter(graph, emics, field, radio, link, sets);
  out.insert(out.end(), filtered.rts.begin(), filtered.rts.end());
  out.insert(out.end(), filtered.cts.begin(), filtered.cts.end());
  out.insert(out.end(), sets.ack.begin(), sets.ack.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void write_ratings_csv(std::ostream& out, const ContentionGraph& graph, const MicsFamily& mics,
                       const LinkRatings& ratings, const std::string& header) {
  if (!header.empty()) out << header << '\n';
  out << "link,src,dst,rts_rating,ack_rating,ack_rating_vcs,win_prob,set_count\n";
  for (LinkId i = 0; i < graph.size(); ++i) {
    const ActiveLink& l = graph.link(i);
    out << i << ',' << l.src << ',' << l.dst << ',' << fmt_double(ratings.rts_rating[i]) << ','
        << fmt_double(ratings.ack_rating[i]) << ',' << fmt_double(ratings.ack_rating_vcs[i]) << ','
        << fmt_double(ratings.win_prob[i]) << ',' << mics.membership[i].size() << '\n';
  }
}

RatedConfig rate_config(const std::vector<ActiveLink>& links, const SignalField& field,
                        const RadioParams& radio, std::uint32_t exact_cap,
                        std::size_t heuristic_limit, std::uint64_t heuristic_seed) {
  RatedConfig rc{ContentionGraph(links, field, radio), {}, true, {}, {}};
  if (rc.graph.size() <= exact_cap) {
    rc.mics = enumerate_mics_exact(rc.graph, exact_cap);
  } else {
    rc.mics = enumerate_mics_heuristic(rc.graph, heuristic_limit, heuristic_seed);
    rc.mics_exact = false;
  }
  rc.emics = enumerate_emics(rc.graph, rc.mics, field, radio);
  rc.ratings = rate_links(rc.graph, rc.mics, rc.emics, field, radio);
  return rc;
}

}  // namespace micsnet
