#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "micsnet/iblr.hpp"
#include "micsnet/scenario.hpp"

namespace micsnet {

struct RoutingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Unordered pair of links that must not carry flow in the same configuration.
// Stored with a <= b.
struct Exclusion {
  ActiveLink a;
  ActiveLink b;

  static Exclusion make(ActiveLink x, ActiveLink y) {
    if (y < x) std::swap(x, y);
    return Exclusion{x, y};
  }
  friend bool operator==(const Exclusion& l, const Exclusion& r) {
    return l.a == r.a && l.b == r.b;
  }
  friend bool operator<(const Exclusion& l, const Exclusion& r) {
    if (!(l.a == r.a)) return l.a < r.a;
    return l.b < r.b;
  }
};

struct FlowProblem {
  std::vector<Connection> connections;  // rates must be positive
  std::vector<Exclusion> exclusions;
  std::uint32_t hop_slack = 0;  // extra hops allowed beyond each shortest path
  std::size_t max_candidates_per_connection = 20000;
};

struct McfSolution {
  std::vector<std::vector<NodeId>> paths;  // one per connection
  double objective = 0.0;                  // total flow incident to nodes
  std::vector<ActiveLink> links;           // union of path hops, sorted unique
};

// All simple paths from src to dst whose hop count stays within the shortest
// possible plus hop_slack. Returned in lexicographic node-sequence order.
// Empty when dst is unreachable. Throws RoutingError past the cap.
std::vector<std::vector<NodeId>> enumerate_paths(const SignalField& field,
                                                 const RadioParams& radio, NodeId src, NodeId dst,
                                                 std::uint32_t hop_slack,
                                                 std::size_t cap = 20000);

// Single-path multi-commodity flow with all-or-nothing link flows, minimizing
// the summed per-node incident flow. The per-link flow bound caps each
// directed link at a single connection's rate, so no two connections may use
// the same directed link. Ties go to the lexicographically smallest list of
// paths. nullopt when no assignment satisfies the exclusions.
std::optional<McfSolution> solve_mcf(const SignalField& field, const RadioParams& radio,
                                     const FlowProblem& problem);

// Empty string when the solution is a valid optimum candidate for the
// problem (path shapes, exclusions, objective arithmetic); otherwise a
// description of the first violated invariant.
std::string check_mcf_solution(const SignalField& field, const RadioParams& radio,
                               const FlowProblem& problem, const McfSolution& solution);

// Hop-count shortest route per connection, lexicographic tie-break, computed
// independently per connection. Throws RoutingError when disconnected.
std::vector<std::vector<NodeId>> shortest_path_route(const SignalField& field,
                                                     const RadioParams& radio,
                                                     const std::vector<Connection>& connections);

// Protocol-model conflict between two links: shared endpoint, or any endpoint
// of one hears any endpoint of the other at or above the carrier-sense
// threshold.
bool links_conflict(const SignalField& field, const RadioParams& radio, const ActiveLink& x,
                    const ActiveLink& y);

// Interference-aware baseline: joint choice of shortest-length paths that
// minimizes the summed conflict degree over the chosen link set, under the
// same one-connection-per-link bound as solve_mcf.
std::vector<std::vector<NodeId>> iar_route(const SignalField& field, const RadioParams& radio,
                                           const std::vector<Connection>& connections,
                                           std::uint32_t hop_slack = 0);

struct SarParams {
  double rating_threshold = 0.1;   // stop once every link rates below this
  std::size_t max_configs = 200;   // rated configurations budget
  std::uint32_t hop_slack = 0;
  std::uint32_t exact_mics_cap = 25;
  std::size_t heuristic_mics_limit = 256;
  std::uint64_t heuristic_seed = 0x73617221u;
  std::size_t max_candidates_per_connection = 20000;
};

struct SarStep {
  std::size_t exclusion_count = 0;
  double cim = 0.0;
  double objective = 0.0;
};

struct SarResult {
  McfSolution best;
  double best_cim = 0.0;
  std::vector<SarStep> log;  // one entry per rated configuration
  std::size_t evaluated = 0;
};

// Self-adjusting routing: best-first search over exclusion sets, branching on
// the worst-rated link's conflict set, keeping the configuration with the
// lowest mean combined rating.
SarResult sar_route(const SignalField& field, const RadioParams& radio,
                    const std::vector<Connection>& connections, const SarParams& params = {});

// Text route files: one line of space-separated node ids per connection.
void save_routes(std::ostream& out, const std::vector<std::vector<NodeId>>& paths,
                 const std::string& header = {});
void save_routes_file(const std::string& path, const std::vector<std::vector<NodeId>>& paths,
                      const std::string& header = {});
std::vector<std::vector<NodeId>> load_routes(std::istream& in);
std::vector<std::vector<NodeId>> load_routes_file(const std::string& path);

// Union of the hops of all paths, sorted and deduplicated.
std::vector<ActiveLink> path_links(const std::vector<std::vector<NodeId>>& paths);

double min_signal_objective(const std::vector<std::vector<NodeId>>& paths,
                            const std::vector<Connection>& connections);

}  // namespace micsnet
