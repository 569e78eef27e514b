#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "micsnet/contention.hpp"
#include "micsnet/scenario.hpp"

namespace micsnet {

struct MacParams {
  std::uint32_t slot_time_us = 20;
  std::uint32_t sifs_us = 10;
  std::uint32_t difs_us = 50;
  std::uint32_t cw_min = 31;    // contention window, 2^n - 1 slots
  std::uint32_t cw_max = 1023;
  std::uint32_t short_retry_limit = 7;  // RTS failures
  std::uint32_t long_retry_limit = 4;   // DATA failures
  std::uint64_t bit_rate_bps = 2'000'000;
  std::uint32_t rts_size_bytes = 20;
  std::uint32_t cts_size_bytes = 14;
  std::uint32_t ack_size_bytes = 14;
  std::uint32_t data_size_bytes = 512;
  bool rts_cts_enabled = true;
  std::uint32_t queue_limit = 50;  // per-node relay queue, packets

  void validate() const;  // throws std::invalid_argument
};

// One demand: traffic injected at path.front(), relayed hop by hop to
// path.back(). rate_bps == 0 keeps the origin saturated.
struct TrafficSpec {
  std::vector<NodeId> path;
  double rate_bps = 0.0;
};

enum class FrameKind : std::uint8_t { Rts, Cts, Data, Ack };

enum class CollisionCause : std::uint8_t {
  RtsArrival,        // interference already present when the RTS arrived
  RtsIntermediate,   // interference started mid-RTS
  DataArrival,
  DataIntermediate,
  CtsPcs,            // CTS suppressed by physical carrier sense
  CtsVcs,            // CTS suppressed by the NAV
};
inline constexpr std::size_t kCauseCount = 6;
const char* cause_name(CollisionCause c);  // "RTS-A", "RTS-I", ...

struct CollisionRecord {
  std::int64_t time_ns = 0;
  LinkId victim = 0;
  FrameKind frame = FrameKind::Rts;
  CollisionCause cause = CollisionCause::RtsArrival;
  std::vector<LinkId> interferers;  // links with a transmission in the air
};

struct LinkStats {
  std::uint64_t rts_attempts = 0;   // resolved RTS/CTS exchanges
  std::uint64_t rts_timeouts = 0;
  std::uint64_t data_attempts = 0;  // resolved DATA/ACK exchanges
  std::uint64_t ack_timeouts = 0;
  std::uint64_t retry_drops = 0;
  std::uint64_t delivered_bits = 0;
  double rts_timeout_frac = 0.0;
  double ack_timeout_frac = 0.0;
  double throughput_bps = 0.0;
  double busy_time_src = 0.0;  // fraction of time foreign power held CCA busy
  double busy_time_dst = 0.0;
};

struct CauseCounts {
  std::uint64_t total = 0;
  std::uint64_t intra = 0;
  std::uint64_t inter = 0;
};

struct SimStats {
  std::vector<LinkStats> links;
  std::array<CauseCounts, kCauseCount> causes{};
  double duration_s = 0.0;
};

struct SimResult {
  std::vector<ActiveLink> links;  // unique hop links, sorted; stats index order
  SimStats stats;
  std::vector<CollisionRecord> records;
  std::vector<double> route_delivered_bits;  // end-to-end, per traffic spec
  std::uint64_t queue_drops = 0;
};

// Event-driven CSMA/CA run over the signal field. Deterministic for a fixed
// seed. Throws std::invalid_argument on an empty or infeasible traffic set.
SimResult simulate(const SignalField& field, const RadioParams& radio,
                   const std::vector<TrafficSpec>& traffic, const MacParams& mac,
                   double duration_s, std::uint64_t seed, std::ostream* trace = nullptr);

// Saturated single-station cycle throughput: DATA bits over
// difs + mean backoff + all frame airtimes + inter-frame spaces.
double dcf_single_link_throughput_bps(const MacParams& mac);

// Splits each cause's total into intra (some interferer shares a contention
// set with the victim) and inter. Records whose victim or interferers fall
// outside the family are skipped and counted in the return value.
std::uint64_t attribute_mics(SimStats& stats, const std::vector<CollisionRecord>& records,
                             const MicsFamily& mics);

// One row per link plus a cause histogram table.
void write_sim_csv(std::ostream& out, const std::vector<ActiveLink>& links, const SimStats& stats,
                   const std::string& header = {});

}  // namespace micsnet
