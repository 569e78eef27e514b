#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "micsnet/iblr.hpp"
#include "micsnet/macsim.hpp"
#include "micsnet/routing.hpp"
#include "micsnet/scenario.hpp"

namespace micsnet {

// nullopt when fewer than two samples or either series is constant.
std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y);

// Rank correlation with average ranks for ties.
std::optional<double> spearman(const std::vector<double>& x, const std::vector<double>& y);

// Average ranks (1-based) with ties sharing their mean rank.
std::vector<double> average_ranks(const std::vector<double>& v);

struct SeriesCorr {
  std::optional<double> pearson;
  std::optional<double> spearman;
  std::size_t n = 0;
};

SeriesCorr correlate(const std::vector<double>& x, const std::vector<double>& y);

// Closed-form per-link reference predictors that need no contention
// structure, used as comparison baselines for the ratings.
struct BaselinePredictors {
  std::vector<double> interference_mw;  // summed foreign source power at the receiver
  std::vector<double> sinr;             // own signal over that interference plus noise
};

BaselinePredictors baseline_predictors(const std::vector<ActiveLink>& links,
                                       const SignalField& field, const RadioParams& radio);

// Delivered throughput over the share of the single-link DCF ceiling left
// after the source's observed busy time. nullopt when nothing was left.
std::optional<double> normalized_throughput(double throughput_bps, double busy_time_src,
                                            double dcf_ceiling_bps);

struct ValidationParams {
  std::size_t scenarios = 10;
  std::uint32_t nodes = 144;
  double area_m = 1600.0;
  std::size_t links = 25;
  double duration_s = 30.0;
  std::uint64_t base_seed = 1;
  RadioParams radio = RadioParams::defaults();
  MacParams mac{};
};

struct ValidationRow {
  std::uint64_t seed = 0;
  std::uint32_t link = 0;
  ActiveLink ends{};
  double rts_rating = 0;
  double ack_rating_vcs = 0;
  double interference_mw = 0;
  double sinr = 0;
  double busy_dst = 0;
  double busy_src = 0;
  std::uint64_t rts_attempts = 0;
  std::uint64_t rts_timeouts = 0;
  double rts_frac = 0;
  std::uint64_t data_attempts = 0;
  std::uint64_t ack_timeouts = 0;
  double ack_frac = 0;
  double throughput_bps = 0;
  std::optional<double> norm_throughput;
  std::optional<double> timeout_frac;  // pooled RTS plus ACK timeouts per attempt
};

struct ValidationReport {
  std::vector<ValidationRow> rows;

  // Predictors against the measured ACK timeout fraction.
  SeriesCorr ack_model, ack_interference, ack_busy, ack_sinr;
  // Predictors against the measured RTS timeout fraction.
  SeriesCorr rts_model, rts_interference, rts_busy, rts_sinr;
  // Combined timeout fraction against normalized throughput.
  SeriesCorr timeout_vs_norm;

  std::array<CauseCounts, kCauseCount> causes{};
  std::uint64_t attribution_skipped = 0;

  std::vector<std::uint64_t> used_seeds;
  std::vector<std::uint64_t> skipped_seeds;  // placement retries
  double dcf_ceiling_bps = 0;
};

ValidationReport run_validation_batch(const ValidationParams& params,
                                      std::ostream* progress = nullptr);

void write_validation_links_csv(std::ostream& out, const ValidationReport& report,
                                const std::string& header = {});
void write_validation_summary_csv(std::ostream& out, const ValidationReport& report,
                                  const std::string& header = {});

// Routing comparison on a square grid: route the same drawn connections with
// each scheme, then simulate every (seed, rate) cell and total the delivered
// end-to-end throughput.

// Node r*grid+c sits at (c*spacing, r*spacing).
Scenario make_grid_scenario(std::uint32_t grid, double spacing_m, const RadioParams& radio);

// k connections with pairwise distinct endpoints, each spanning at least
// grid-1 lattice hops. Throws ScenarioError when the draw cannot be satisfied.
std::vector<Connection> draw_grid_connections(std::uint32_t grid, std::size_t k,
                                              std::uint64_t seed);

struct GridCompareParams {
  std::uint32_t grid = 6;
  double spacing_m = 200.0;
  std::size_t connections = 4;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<double> rates_bps{0.0};  // 0 = saturated
  double duration_s = 15.0;
  SarParams sar{};
  RadioParams radio = RadioParams::defaults();
  MacParams mac{};
};

inline constexpr std::array<const char*, 3> kCompareSchemes{"sar", "sp", "iar"};

struct CompareRow {
  std::uint64_t seed = 0;
  double rate_bps = 0;
  std::string scheme;
  double throughput_bps = 0;  // summed end-to-end delivered bits over duration
  double cim = 0;
  double objective = 0;  // unit-rate signal cost of the chosen paths
  std::size_t total_hops = 0;
};

struct CompareAggregate {
  double rate_bps = 0;
  std::array<double, 3> mean_throughput_bps{};  // indexed like kCompareSchemes
  std::array<double, 3> mean_cim{};
};

struct CompareReport {
  std::vector<CompareRow> rows;        // seed-major, then rate, then scheme
  std::vector<CompareAggregate> aggregates;  // one per rate
};

CompareReport run_grid_compare(const GridCompareParams& params,
                               std::ostream* progress = nullptr);

void write_compare_csv(std::ostream& out, const CompareReport& report,
                       const std::string& header = {});
void write_compare_summary_csv(std::ostream& out, const CompareReport& report,
                               const std::string& header = {});

}  // namespace micsnet
