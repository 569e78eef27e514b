#include "micsnet/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#include "micsnet/text.hpp"

namespace micsnet {

std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return std::nullopt;
  const std::size_t n = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= double(n);
  my /= double(n);
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    double r = (double(i + 1) + double(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return std::nullopt;
  return pearson(average_ranks(x), average_ranks(y));
}

SeriesCorr correlate(const std::vector<double>& x, const std::vector<double>& y) {
  SeriesCorr c;
  c.pearson = pearson(x, y);
  c.spearman = spearman(x, y);
  c.n = x.size();
  return c;
}

BaselinePredictors baseline_predictors(const std::vector<ActiveLink>& links,
                                       const SignalField& field, const RadioParams& radio) {
  BaselinePredictors bp;
  for (std::size_t i = 0; i < links.size(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < links.size(); ++j) {
      if (j == i) continue;
      acc += field.at(links[j].src, links[i].dst);
    }
    bp.interference_mw.push_back(acc);
    bp.sinr.push_back(field.at(links[i].src, links[i].dst) / (acc + radio.noise_floor_mw));
  }
  return bp;
}

std::optional<double> normalized_throughput(double throughput_bps, double busy_time_src,
                                            double dcf_ceiling_bps) {
  double avail = dcf_ceiling_bps * (1.0 - busy_time_src);
  if (!(avail > 0.0)) return std::nullopt;
  return throughput_bps / avail;
}

ValidationReport run_validation_batch(const ValidationParams& params, std::ostream* progress) {
  ValidationReport rep;
  rep.dcf_ceiling_bps = dcf_single_link_throughput_bps(params.mac);

  std::uint64_t seed = params.base_seed;
  while (rep.used_seeds.size() < params.scenarios) {
    Scenario sc;
    try {
      sc = generate_scenario(params.nodes, Rect{params.area_m, params.area_m}, params.links, seed,
                             params.radio, 0.0);
    } catch (const ScenarioError&) {
      rep.skipped_seeds.push_back(seed);
      ++seed;
      continue;
    }

    std::vector<ActiveLink> links;
    std::vector<TrafficSpec> traffic;
    for (const Connection& c : sc.connections) {
      links.push_back({c.src, c.dst});
      traffic.push_back({{c.src, c.dst}, c.rate_bps});
    }

    RatedConfig rc = rate_config(links, sc.field, params.radio, 64);
    SimResult sim = simulate(sc.field, params.radio, traffic, params.mac, params.duration_s, seed);
    rep.attribution_skipped += attribute_mics(sim.stats, sim.records, rc.mics);
    for (std::size_t c = 0; c < kCauseCount; ++c) {
      rep.causes[c].total += sim.stats.causes[c].total;
      rep.causes[c].intra += sim.stats.causes[c].intra;
      rep.causes[c].inter += sim.stats.causes[c].inter;
    }

    BaselinePredictors bp = baseline_predictors(links, sc.field, params.radio);
    for (std::uint32_t i = 0; i < links.size(); ++i) {
      // Sim links are the sorted unique hops; here every spec is one hop and
      // the connection list is already sorted, so indices line up.
      const LinkStats& ls = sim.stats.links[i];
      ValidationRow row;
      row.seed = seed;
      row.link = i;
      row.ends = links[i];
      row.rts_rating = rc.ratings.rts_rating[i];
      row.ack_rating_vcs = rc.ratings.ack_rating_vcs[i];
      row.interference_mw = bp.interference_mw[i];
      row.sinr = bp.sinr[i];
      row.busy_dst = ls.busy_time_dst;
      row.busy_src = ls.busy_time_src;
      row.rts_attempts = ls.rts_attempts;
      row.rts_timeouts = ls.rts_timeouts;
      row.rts_frac = ls.rts_timeout_frac;
      row.data_attempts = ls.data_attempts;
      row.ack_timeouts = ls.ack_timeouts;
      row.ack_frac = ls.ack_timeout_frac;
      row.throughput_bps = ls.throughput_bps;
      row.norm_throughput =
          normalized_throughput(ls.throughput_bps, ls.busy_time_src, rep.dcf_ceiling_bps);
      std::uint64_t attempts = ls.rts_attempts + ls.data_attempts;
      if (attempts > 0)
        row.timeout_frac = double(ls.rts_timeouts + ls.ack_timeouts) / double(attempts);
      rep.rows.push_back(row);
    }

    rep.used_seeds.push_back(seed);
    if (progress)
      *progress << "scenario seed=" << seed << " links=" << links.size()
                << " rows=" << rep.rows.size() << "\n";
    ++seed;
  }

  auto gather = [&](auto pred, auto resp, auto filter) {
    std::vector<double> x, y;
    for (const ValidationRow& r : rep.rows) {
      if (!filter(r)) continue;
      x.push_back(pred(r));
      y.push_back(resp(r));
    }
    return correlate(x, y);
  };

  auto has_data = [](const ValidationRow& r) { return r.data_attempts > 0; };
  auto has_rts = [](const ValidationRow& r) { return r.rts_attempts > 0; };
  auto ack_resp = [](const ValidationRow& r) { return r.ack_frac; };
  auto rts_resp = [](const ValidationRow& r) { return r.rts_frac; };

  rep.ack_model = gather([](const ValidationRow& r) { return r.ack_rating_vcs; }, ack_resp, has_data);
  rep.ack_interference =
      gather([](const ValidationRow& r) { return r.interference_mw; }, ack_resp, has_data);
  rep.ack_busy = gather([](const ValidationRow& r) { return r.busy_dst; }, ack_resp, has_data);
  rep.ack_sinr = gather([](const ValidationRow& r) { return r.sinr; }, ack_resp, has_data);

  rep.rts_model = gather([](const ValidationRow& r) { return r.rts_rating; }, rts_resp, has_rts);
  rep.rts_interference =
      gather([](const ValidationRow& r) { return r.interference_mw; }, rts_resp, has_rts);
  rep.rts_busy = gather([](const ValidationRow& r) { return r.busy_dst; }, rts_resp, has_rts);
  rep.rts_sinr = gather([](const ValidationRow& r) { return r.sinr; }, rts_resp, has_rts);

  {
    std::vector<double> x, y;
    for (const ValidationRow& r : rep.rows) {
      if (!r.timeout_frac || !r.norm_throughput) continue;
      x.push_back(*r.timeout_frac);
      y.push_back(*r.norm_throughput);
    }
    rep.timeout_vs_norm = correlate(x, y);
  }
  return rep;
}

namespace {

std::string opt_str(const std::optional<double>& v) { return v ? fmt_double(*v) : std::string(); }

void corr_row(std::ostream& out, const char* name, const SeriesCorr& c) {
  out << name << ',' << opt_str(c.pearson) << ',' << opt_str(c.spearman) << ',' << c.n << '\n';
}

}  // namespace

void write_validation_links_csv(std::ostream& out, const ValidationReport& report,
                                const std::string& header) {
  if (!header.empty()) out << header << '\n';
  out << "seed,link,src,dst,rts_rating,ack_rating_vcs,interference_mw,sinr,busy_dst,busy_src,"
         "rts_attempts,rts_timeouts,rts_frac,data_attempts,ack_timeouts,ack_frac,"
         "throughput_bps,norm_throughput,timeout_frac\n";
  for (const ValidationRow& r : report.rows) {
    out << r.seed << ',' << r.link << ',' << r.ends.src << ',' << r.ends.dst << ','
        << fmt_double(r.rts_rating) << ',' << fmt_double(r.ack_rating_vcs) << ','
        << fmt_double(r.interference_mw) << ',' << fmt_double(r.sinr) << ','
        << fmt_double(r.busy_dst) << ',' << fmt_double(r.busy_src) << ',' << r.rts_attempts << ','
        << r.rts_timeouts << ',' << fmt_double(r.rts_frac) << ',' << r.data_attempts << ','
        << r.ack_timeouts << ',' << fmt_double(r.ack_frac) << ',' << fmt_double(r.throughput_bps)
        << ',' << opt_str(r.norm_throughput) << ',' << opt_str(r.timeout_frac) << '\n';
  }
}

void write_validation_summary_csv(std::ostream& out, const ValidationReport& report,
                                  const std::string& header) {
  if (!header.empty()) out << header << '\n';
  out << "series,pearson,spearman,n\n";
  corr_row(out, "ack_model", report.ack_model);
  corr_row(out, "ack_interference", report.ack_interference);
  corr_row(out, "ack_busy", report.ack_busy);
  corr_row(out, "ack_sinr", report.ack_sinr);
  corr_row(out, "rts_model", report.rts_model);
  corr_row(out, "rts_interference", report.rts_interference);
  corr_row(out, "rts_busy", report.rts_busy);
  corr_row(out, "rts_sinr", report.rts_sinr);
  corr_row(out, "timeout_vs_norm_throughput", report.timeout_vs_norm);
  out << "\ncause,total,intra_mics,inter_mics\n";
  for (std::size_t c = 0; c < kCauseCount; ++c)
    out << cause_name(CollisionCause(c)) << ',' << report.causes[c].total << ','
        << report.causes[c].intra << ',' << report.causes[c].inter << '\n';
  out << "\nused_seeds";
  for (std::uint64_t s : report.used_seeds) out << ',' << s;
  out << "\nskipped_seeds";
  for (std::uint64_t s : report.skipped_seeds) out << ',' << s;
  out << "\ndcf_ceiling_bps," << fmt_double(report.dcf_ceiling_bps) << '\n';
}

Scenario make_grid_scenario(std::uint32_t grid, double spacing_m, const RadioParams& radio) {
  if (grid < 2) throw ScenarioError("grid side must be at least 2");
  if (!(spacing_m > 0.0)) throw ScenarioError("grid spacing must be positive");
  Scenario sc;
  sc.radio = radio;
  sc.area = Rect{spacing_m * (grid - 1), spacing_m * (grid - 1)};
  sc.positions.reserve(std::size_t(grid) * grid);
  for (std::uint32_t r = 0; r < grid; ++r)
    for (std::uint32_t c = 0; c < grid; ++c)
      sc.positions.push_back(Point{spacing_m * c, spacing_m * r});
  sc.field = compute_signal_field(sc.positions, radio);
  return sc;
}

std::vector<Connection> draw_grid_connections(std::uint32_t grid, std::size_t k,
                                              std::uint64_t seed) {
  const std::size_t n = std::size_t(grid) * grid;
  if (4 * k > n) throw ScenarioError("grid too small for that many connections");
  std::mt19937_64 rng(seed);
  std::vector<Connection> out;
  std::vector<bool> used(n, false);
  const std::uint32_t min_span = grid - 1;
  for (std::size_t i = 0; i < k; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < 100000 && !placed; ++attempt) {
      NodeId s = NodeId(rng() % n);
      NodeId d = NodeId(rng() % n);
      if (s == d || used[s] || used[d]) continue;
      std::uint32_t dr = (s / grid > d / grid) ? s / grid - d / grid : d / grid - s / grid;
      std::uint32_t dc = (s % grid > d % grid) ? s % grid - d % grid : d % grid - s % grid;
      if (dr + dc < min_span) continue;
      used[s] = used[d] = true;
      out.push_back(Connection{s, d, 0.0});
      placed = true;
    }
    if (!placed) throw ScenarioError("could not draw spanning grid connections");
  }
  return out;
}

namespace {

// Routing sees a uniform positive demand; the sending rate only matters to
// the simulator.
std::vector<Connection> unit_rate(std::vector<Connection> cs) {
  for (Connection& c : cs) c.rate_bps = 1.0;
  return cs;
}

}  // namespace

CompareReport run_grid_compare(const GridCompareParams& params, std::ostream* progress) {
  if (params.seeds.empty()) throw std::invalid_argument("compare: no seeds");
  if (params.rates_bps.empty()) throw std::invalid_argument("compare: no rates");
  CompareReport rep;
  const Scenario base = make_grid_scenario(params.grid, params.spacing_m, params.radio);
  const std::size_t nr = params.rates_bps.size();
  std::vector<std::array<double, 3>> tput_sum(nr, std::array<double, 3>{});
  std::array<double, 3> cim_sum{};

  for (std::uint64_t seed : params.seeds) {
    const std::vector<Connection> conns =
        draw_grid_connections(params.grid, params.connections, seed);
    const std::vector<Connection> routed = unit_rate(conns);

    std::array<std::vector<std::vector<NodeId>>, 3> paths;
    SarParams sp = params.sar;
    SarResult sar = sar_route(base.field, base.radio, routed, sp);
    paths[0] = sar.best.paths;
    paths[1] = shortest_path_route(base.field, base.radio, routed);
    paths[2] = iar_route(base.field, base.radio, routed, sp.hop_slack);

    std::array<double, 3> cim_of{};
    for (std::size_t m = 0; m < 3; ++m) {
      RatedConfig rc = rate_config(path_links(paths[m]), base.field, base.radio,
                                   sp.exact_mics_cap, sp.heuristic_mics_limit, sp.heuristic_seed);
      cim_of[m] = cim(rc.ratings);
      cim_sum[m] += cim_of[m];
    }

    for (std::size_t ri = 0; ri < nr; ++ri) {
      const double rate = params.rates_bps[ri];
      for (std::size_t m = 0; m < 3; ++m) {
        std::vector<TrafficSpec> traffic;
        traffic.reserve(paths[m].size());
        for (const auto& p : paths[m]) traffic.push_back(TrafficSpec{p, rate});
        const std::uint64_t sim_seed = seed * 1000003ull + ri * 101ull + m;
        SimResult sim =
            simulate(base.field, base.radio, traffic, params.mac, params.duration_s, sim_seed);
        double bits = 0;
        for (double b : sim.route_delivered_bits) bits += b;
        CompareRow row;
        row.seed = seed;
        row.rate_bps = rate;
        row.scheme = kCompareSchemes[m];
        row.throughput_bps = bits / params.duration_s;
        row.cim = cim_of[m];
        row.objective = min_signal_objective(paths[m], routed);
        for (const auto& p : paths[m]) row.total_hops += p.size() - 1;
        tput_sum[ri][m] += row.throughput_bps;
        rep.rows.push_back(std::move(row));
        if (progress)
          *progress << "seed " << seed << " rate " << fmt_double(rate) << ' '
                    << kCompareSchemes[m] << ": " << fmt_double(rep.rows.back().throughput_bps)
                    << " bps\n";
      }
    }
  }

  const double ns = double(params.seeds.size());
  for (std::size_t ri = 0; ri < nr; ++ri) {
    CompareAggregate agg;
    agg.rate_bps = params.rates_bps[ri];
    for (std::size_t m = 0; m < 3; ++m) {
      agg.mean_throughput_bps[m] = tput_sum[ri][m] / ns;
      agg.mean_cim[m] = cim_sum[m] / ns;
    }
    rep.aggregates.push_back(agg);
  }
  return rep;
}

void write_compare_csv(std::ostream& out, const CompareReport& report,
                       const std::string& header) {
  if (!header.empty()) out << header << '\n';
  out << "seed,rate_bps,scheme,throughput_bps,cim,objective,total_hops\n";
  for (const CompareRow& r : report.rows)
    out << r.seed << ',' << fmt_double(r.rate_bps) << ',' << r.scheme << ','
        << fmt_double(r.throughput_bps) << ',' << fmt_double(r.cim) << ','
        << fmt_double(r.objective) << ',' << r.total_hops << '\n';
}

void write_compare_summary_csv(std::ostream& out, const CompareReport& report,
                               const std::string& header) {
  if (!header.empty()) out << header << '\n';
  out << "rate_bps,sar_mean_bps,sp_mean_bps,iar_mean_bps,sar_over_sp,sar_over_iar,"
         "sar_mean_cim,sp_mean_cim,iar_mean_cim\n";
  for (const CompareAggregate& a : report.aggregates) {
    const double sar = a.mean_throughput_bps[0], sp = a.mean_throughput_bps[1],
                 iar = a.mean_throughput_bps[2];
    out << fmt_double(a.rate_bps) << ',' << fmt_double(sar) << ',' << fmt_double(sp) << ','
        << fmt_double(iar) << ',' << (sp > 0 ? fmt_double(sar / sp) : std::string()) << ','
        << (iar > 0 ? fmt_double(sar / iar) : std::string()) << ',' << fmt_double(a.mean_cim[0])
        << ',' << fmt_double(a.mean_cim[1]) << ',' << fmt_double(a.mean_cim[2]) << '\n';
  }
}

}  // namespace micsnet
