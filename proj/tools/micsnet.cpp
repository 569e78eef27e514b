#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "micsnet/analysis.hpp"
#include "micsnet/contention.hpp"
#include "micsnet/iblr.hpp"
#include "micsnet/macsim.hpp"
#include "micsnet/routing.hpp"
#include "micsnet/scenario.hpp"
#include "micsnet/text.hpp"

namespace {

using namespace micsnet;

// exit codes: 0 ok, 1 internal error, 2 usage error, 3 unreadable or invalid
// file, 4 infeasible routing
struct FileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FileError("cannot open " + path + " for writing");
  return f;
}

Scenario load_scenario_checked(const std::string& path) {
  try {
    return load_scenario_file(path);
  } catch (const std::exception& e) {
    throw FileError(std::string(e.what()));
  }
}

std::vector<std::vector<NodeId>> load_routes_checked(const std::string& path, std::size_t nodes) {
  std::vector<std::vector<NodeId>> paths;
  try {
    paths = load_routes_file(path);
  } catch (const std::exception& e) {
    throw FileError(std::string(e.what()));
  }
  for (std::size_t i = 0; i < paths.size(); ++i)
    for (NodeId v : paths[i])
      if (v >= nodes)
        throw FileError(path + ": route " + std::to_string(i) + " names node " +
                        std::to_string(v) + " outside the scenario");
  return paths;
}

// Full effective configuration recorded at the top of every output file.
class Header {
 public:
  explicit Header(const std::string& sub) : s_("# micsnet " + sub) {}
  Header& kv(const std::string& k, const std::string& v) {
    s_ += ' ' + k + '=' + v;
    return *this;
  }
  Header& kv(const std::string& k, const char* v) { return kv(k, std::string(v)); }
  Header& kv(const std::string& k, double v) { return kv(k, fmt_double(v)); }
  Header& kv(const std::string& k, bool v) { return kv(k, std::string(v ? "1" : "0")); }
  template <class T>
  Header& kv(const std::string& k, T v) {
    return kv(k, std::to_string(v));
  }
  const std::string& str() const { return s_; }

 private:
  std::string s_;
};

struct RadioOpts {
  RadioParams r = RadioParams::defaults();

  void attach(CLI::App* app) {
    app->add_option("--tx-power-mw", r.tx_power_mw, "transmit power, mW");
    app->add_option("--path-loss-exp", r.path_loss_exponent, "path loss exponent");
    app->add_option("--rx-sensitivity-mw", r.rx_sensitivity_mw, "decode sensitivity, mW");
    app->add_option("--sinr-threshold", r.sinr_threshold, "capture SINR, linear ratio");
    app->add_option("--noise-mw", r.noise_floor_mw, "noise floor, mW");
  }
  void record(Header& h) const {
    h.kv("tx_power_mw", r.tx_power_mw)
        .kv("path_loss_exponent", r.path_loss_exponent)
        .kv("rx_sensitivity_mw", r.rx_sensitivity_mw)
        .kv("sinr_threshold", r.sinr_threshold)
        .kv("noise_floor_mw", r.noise_floor_mw);
  }
};

struct MacOpts {
  MacParams m{};

  void attach(CLI::App* app) {
    app->add_option("--slot-us", m.slot_time_us, "slot time, us");
    app->add_option("--sifs-us", m.sifs_us, "SIFS, us");
    app->add_option("--difs-us", m.difs_us, "DIFS, us");
    app->add_option("--cw-min", m.cw_min, "minimum contention window");
    app->add_option("--cw-max", m.cw_max, "maximum contention window");
    app->add_option("--short-retry", m.short_retry_limit, "RTS retry limit");
    app->add_option("--long-retry", m.long_retry_limit, "DATA retry limit");
    app->add_option("--bit-rate", m.bit_rate_bps, "channel bit rate, bps");
    app->add_option("--rts-bytes", m.rts_size_bytes, "RTS frame size");
    app->add_option("--cts-bytes", m.cts_size_bytes, "CTS frame size");
    app->add_option("--ack-bytes", m.ack_size_bytes, "ACK frame size");
    app->add_option("--data-bytes", m.data_size_bytes, "DATA payload size");
    app->add_option("--queue-limit", m.queue_limit, "relay queue depth, packets");
    app->add_flag_callback(
        "--no-rts-cts", [this] { m.rts_cts_enabled = false; }, "skip the RTS/CTS handshake");
  }
  void record(Header& h) const {
    h.kv("slot_us", m.slot_time_us)
        .kv("sifs_us", m.sifs_us)
        .kv("difs_us", m.difs_us)
        .kv("cw_min", m.cw_min)
        .kv("cw_max", m.cw_max)
        .kv("short_retry", m.short_retry_limit)
        .kv("long_retry", m.long_retry_limit)
        .kv("bit_rate", m.bit_rate_bps)
        .kv("rts_bytes", m.rts_size_bytes)
        .kv("cts_bytes", m.cts_size_bytes)
        .kv("ack_bytes", m.ack_size_bytes)
        .kv("data_bytes", m.data_size_bytes)
        .kv("queue_limit", m.queue_limit)
        .kv("rts_cts", m.rts_cts_enabled);
  }
};

struct MicsOpts {
  std::uint32_t exact_cap = 25;
  std::size_t heuristic_limit = 256;
  std::uint64_t heuristic_seed = 0x6d696373;

  void attach(CLI::App* app) {
    app->add_option("--exact-cap", exact_cap, "largest link count solved exactly");
    app->add_option("--mics-limit", heuristic_limit, "heuristic contention set budget");
    app->add_option("--mics-seed", heuristic_seed, "heuristic draw seed");
  }
  void record(Header& h) const {
    h.kv("exact_cap", exact_cap).kv("mics_limit", heuristic_limit).kv("mics_seed", heuristic_seed);
  }
};

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  const auto dots = text.find("..");
  if (dots != std::string::npos) {
    std::uint64_t lo = 0, hi = 0;
    if (!parse_u64(text.substr(0, dots), lo) || !parse_u64(text.substr(dots + 2), hi) || hi < lo)
      throw CLI::ValidationError("--seeds", "expected a..b with a <= b");
    for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
    return seeds;
  }
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::uint64_t v = 0;
    if (!parse_u64(tok, v)) throw CLI::ValidationError("--seeds", "bad seed '" + tok + "'");
    seeds.push_back(v);
  }
  if (seeds.empty()) throw CLI::ValidationError("--seeds", "no seeds given");
  return seeds;
}

std::vector<double> parse_rate_list(const std::string& text) {
  std::vector<double> rates;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    double v = 0;
    if (!parse_double(tok, v) || v < 0)
      throw CLI::ValidationError("--rates", "bad rate '" + tok + "'");
    rates.push_back(v);
  }
  if (rates.empty()) throw CLI::ValidationError("--rates", "no rates given");
  return rates;
}

std::string join_path(const std::string& dir, const std::string& name) {
  if (dir.empty() || dir == ".") return name;
  if (dir.back() == '/') return dir + name;
  return dir + '/' + name;
}

std::vector<ActiveLink> connection_links(const Scenario& sc) {
  std::vector<ActiveLink> links;
  links.reserve(sc.connections.size());
  for (const Connection& c : sc.connections) links.push_back(ActiveLink{c.src, c.dst});
  return links;
}

void write_mics_txt(std::ostream& out, const RatedConfig& rc, const std::string& header) {
  if (!header.empty()) out << header << '\n';
  out << "links " << rc.graph.size() << '\n';
  for (LinkId i = 0; i < rc.graph.size(); ++i)
    out << i << ' ' << rc.graph.link(i).src << ' ' << rc.graph.link(i).dst << '\n';
  out << "mics " << rc.mics.count() << (rc.mics_exact ? " exact" : " heuristic") << '\n';
  dump_sets(out, rc.mics.sets);
  out << "activation\n";
  for (double a : rc.mics.activation) out << fmt_double(a) << '\n';
  out << "emics " << rc.emics.count() << '\n';
  dump_sets(out, rc.emics.sets);
}

// gen ------------------------------------------------------------------

struct GenArgs {
  std::uint64_t nodes = 144;
  double area = 1600.0;
  std::uint32_t links = 25;
  std::uint64_t seed = 1;
  double rate = 0.0;
  RadioOpts radio;
  std::string out = "scenario.txt";
};

void run_gen(const GenArgs& a) {
  Scenario sc = generate_scenario(a.nodes, Rect{a.area, a.area}, a.links, a.seed, a.radio.r,
                                  a.rate);
  Header h("gen");
  h.kv("nodes", a.nodes).kv("area_m", a.area).kv("links", a.links).kv("seed", a.seed)
      .kv("rate_bps", a.rate);
  a.radio.record(h);
  auto f = open_out(a.out);
  save_scenario(f, sc, h.str());
  std::cout << "wrote " << a.out << ": " << sc.positions.size() << " nodes, "
            << sc.connections.size() << " connections\n";
}

// rate -----------------------------------------------------------------

struct RateArgs {
  std::string scenario;
  std::string routes;
  std::string out_dir = ".";
  MicsOpts mics;
};

void run_rate(const RateArgs& a) {
  Scenario sc = load_scenario_checked(a.scenario);
  std::vector<ActiveLink> links;
  if (!a.routes.empty())
    links = path_links(load_routes_checked(a.routes, sc.field.size()));
  else
    links = connection_links(sc);
  if (links.empty()) throw FileError(a.scenario + ": no links to rate");

  RatedConfig rc = rate_config(links, sc.field, sc.radio, a.mics.exact_cap,
                               a.mics.heuristic_limit, a.mics.heuristic_seed);
  Header h("rate");
  h.kv("scenario", a.scenario);
  if (!a.routes.empty()) h.kv("routes", a.routes);
  a.mics.record(h);
  h.kv("links", links.size()).kv("mics_exact", rc.mics_exact);

  const std::string ratings_path = join_path(a.out_dir, "ratings.csv");
  const std::string mics_path = join_path(a.out_dir, "mics.txt");
  {
    auto f = open_out(ratings_path);
    write_ratings_csv(f, rc.graph, rc.mics, rc.ratings, h.str());
  }
  {
    auto f = open_out(mics_path);
    write_mics_txt(f, rc, h.str());
  }
  std::cout << "wrote " << ratings_path << " and " << mics_path << ": " << links.size()
            << " links, " << rc.mics.count() << (rc.mics_exact ? " exact" : " heuristic")
            << " contention sets, mean combined rating " << fmt_double(cim(rc.ratings)) << '\n';
}

// simulate -------------------------------------------------------------

struct SimulateArgs {
  std::string scenario;
  std::string routes;
  double duration = 10.0;
  std::uint64_t seed = 1;
  std::string out = "sim.csv";
  std::string trace;
  MacOpts mac;
  MicsOpts mics;
};

void run_simulate(const SimulateArgs& a) {
  Scenario sc = load_scenario_checked(a.scenario);
  if (sc.connections.empty()) throw FileError(a.scenario + ": no connections to simulate");

  std::vector<TrafficSpec> traffic;
  if (!a.routes.empty()) {
    auto paths = load_routes_checked(a.routes, sc.field.size());
    if (paths.size() != sc.connections.size())
      throw FileError(a.routes + ": " + std::to_string(paths.size()) + " routes for " +
                      std::to_string(sc.connections.size()) + " connections");
    for (std::size_t i = 0; i < paths.size(); ++i) {
      if (paths[i].front() != sc.connections[i].src || paths[i].back() != sc.connections[i].dst)
        throw FileError(a.routes + ": route " + std::to_string(i) +
                        " does not join its connection endpoints");
      traffic.push_back(TrafficSpec{paths[i], sc.connections[i].rate_bps});
    }
  } else {
    for (const Connection& c : sc.connections)
      traffic.push_back(TrafficSpec{{c.src, c.dst}, c.rate_bps});
  }

  Header h("simulate");
  h.kv("scenario", a.scenario);
  if (!a.routes.empty()) h.kv("routes", a.routes);
  h.kv("duration_s", a.duration).kv("seed", a.seed);
  a.mac.record(h);
  a.mics.record(h);

  std::ofstream trace_file;
  std::ostream* trace = nullptr;
  if (!a.trace.empty()) {
    trace_file = open_out(a.trace);
    trace_file << h.str() << '\n';
    trace = &trace_file;
  }

  SimResult res = simulate(sc.field, sc.radio, traffic, a.mac.m, a.duration, a.seed, trace);

  RatedConfig rc = rate_config(res.links, sc.field, sc.radio, a.mics.exact_cap,
                               a.mics.heuristic_limit, a.mics.heuristic_seed);
  const std::uint64_t skipped = attribute_mics(res.stats, res.records, rc.mics);

  auto f = open_out(a.out);
  write_sim_csv(f, res.links, res.stats, h.str());
  f << "\nconnection,rate_bps,delivered_bits,throughput_bps,path\n";
  double total_bps = 0.0;
  for (std::size_t i = 0; i < traffic.size(); ++i) {
    const double bps = res.route_delivered_bits[i] / a.duration;
    total_bps += bps;
    f << i << ',' << fmt_double(traffic[i].rate_bps) << ','
      << fmt_double(res.route_delivered_bits[i]) << ',' << fmt_double(bps) << ',';
    for (std::size_t k = 0; k < traffic[i].path.size(); ++k)
      f << (k ? " " : "") << traffic[i].path[k];
    f << '\n';
  }
  f << "\nqueue_drops," << res.queue_drops << "\nattribution_skipped," << skipped << '\n';

  std::cout << "wrote " << a.out << ": " << res.links.size() << " links, aggregate "
            << fmt_double(total_bps) << " bps end to end, " << res.queue_drops
            << " queue drops\n";
}

// validate -------------------------------------------------------------

struct ValidateArgs {
  ValidationParams p{};
  std::string out_dir = ".";
  RadioOpts radio;
  MacOpts mac;
};

void run_validate(ValidateArgs& a) {
  a.p.radio = a.radio.r;
  a.p.mac = a.mac.m;
  ValidationReport rep = run_validation_batch(a.p, &std::cout);

  Header h("validate");
  h.kv("scenarios", a.p.scenarios)
      .kv("nodes", a.p.nodes)
      .kv("area_m", a.p.area_m)
      .kv("links", a.p.links)
      .kv("duration_s", a.p.duration_s)
      .kv("base_seed", a.p.base_seed);
  a.radio.record(h);
  a.mac.record(h);

  const std::string links_path = join_path(a.out_dir, "validation_links.csv");
  const std::string summary_path = join_path(a.out_dir, "validation_summary.csv");
  {
    auto f = open_out(links_path);
    write_validation_links_csv(f, rep, h.str());
  }
  {
    auto f = open_out(summary_path);
    write_validation_summary_csv(f, rep, h.str());
  }
  auto show = [](const char* name, const SeriesCorr& c) {
    std::cout << "  " << name << ": spearman "
              << (c.spearman ? fmt_double(*c.spearman) : std::string("n/a")) << " over " << c.n
              << " links\n";
  };
  std::cout << "wrote " << links_path << " and " << summary_path << '\n';
  show("ack model", rep.ack_model);
  show("rts model", rep.rts_model);
}

// route ----------------------------------------------------------------

struct RouteArgs {
  std::string scenario;
  std::string method = "all";
  SarParams sar{};
  std::string out_dir = ".";
  MicsOpts mics;
};

void run_route(const RouteArgs& a) {
  Scenario sc = load_scenario_checked(a.scenario);
  if (sc.connections.empty()) throw FileError(a.scenario + ": no connections to route");
  std::vector<Connection> conns = sc.connections;
  for (Connection& c : conns)
    if (c.rate_bps <= 0.0) c.rate_bps = 1.0;

  SarParams sp = a.sar;
  sp.exact_mics_cap = a.mics.exact_cap;
  sp.heuristic_mics_limit = a.mics.heuristic_limit;
  sp.heuristic_seed = a.mics.heuristic_seed;

  Header base("route");
  base.kv("scenario", a.scenario)
      .kv("method", a.method)
      .kv("threshold", sp.rating_threshold)
      .kv("max_configs", sp.max_configs)
      .kv("hop_slack", sp.hop_slack);
  a.mics.record(base);

  const bool all = a.method == "all";
  auto emit = [&](const char* name, const std::vector<std::vector<NodeId>>& paths,
                  double method_cim) {
    const std::string routes_path = join_path(a.out_dir, std::string("routes_") + name + ".txt");
    const std::string links_path = join_path(a.out_dir, std::string("links_") + name + ".csv");
    {
      auto f = open_out(routes_path);
      save_routes(f, paths, base.str());
    }
    {
      auto f = open_out(links_path);
      f << base.str() << '\n';
      f << "connection,src,dst,flow\n";
      for (std::size_t i = 0; i < paths.size(); ++i)
        for (std::size_t k = 0; k + 1 < paths[i].size(); ++k)
          f << i << ',' << paths[i][k] << ',' << paths[i][k + 1] << ','
            << fmt_double(conns[i].rate_bps) << '\n';
    }
    std::cout << name << ": objective " << fmt_double(min_signal_objective(paths, conns))
              << ", mean combined rating " << fmt_double(method_cim) << ", wrote " << routes_path
              << '\n';
  };
  auto rated_cim = [&](const std::vector<std::vector<NodeId>>& paths) {
    RatedConfig rc = rate_config(path_links(paths), sc.field, sc.radio, sp.exact_mics_cap,
                                 sp.heuristic_mics_limit, sp.heuristic_seed);
    return cim(rc.ratings);
  };

  if (all || a.method == "sar") {
    SarResult sar = sar_route(sc.field, sc.radio, conns, sp);
    const std::string log_path = join_path(a.out_dir, "sar_log.csv");
    auto f = open_out(log_path);
    f << base.str() << '\n';
    f << "config,exclusions,cim,objective\n";
    for (std::size_t i = 0; i < sar.log.size(); ++i)
      f << i << ',' << sar.log[i].exclusion_count << ',' << fmt_double(sar.log[i].cim) << ','
        << fmt_double(sar.log[i].objective) << '\n';
    emit("sar", sar.best.paths, sar.best_cim);
  }
  if (all || a.method == "sp") {
    auto paths = shortest_path_route(sc.field, sc.radio, conns);
    emit("sp", paths, rated_cim(paths));
  }
  if (all || a.method == "iar") {
    auto paths = iar_route(sc.field, sc.radio, conns, sp.hop_slack);
    emit("iar", paths, rated_cim(paths));
  }
}

// compare --------------------------------------------------------------

struct CompareArgs {
  GridCompareParams p{};
  std::string seeds_text = "1..5";
  std::string rates_text = "0";
  std::string out = "compare.csv";
  std::string summary = "compare_summary.csv";
  MacOpts mac;
  MicsOpts mics;
};

void run_compare(CompareArgs& a) {
  a.p.seeds = parse_seed_list(a.seeds_text);
  a.p.rates_bps = parse_rate_list(a.rates_text);
  a.p.mac = a.mac.m;
  a.p.sar.exact_mics_cap = a.mics.exact_cap;
  a.p.sar.heuristic_mics_limit = a.mics.heuristic_limit;
  a.p.sar.heuristic_seed = a.mics.heuristic_seed;

  CompareReport rep = run_grid_compare(a.p, &std::cout);

  Header h("compare");
  h.kv("grid", a.p.grid)
      .kv("spacing_m", a.p.spacing_m)
      .kv("connections", a.p.connections)
      .kv("seeds", a.seeds_text)
      .kv("rates_bps", a.rates_text)
      .kv("duration_s", a.p.duration_s)
      .kv("threshold", a.p.sar.rating_threshold)
      .kv("max_configs", a.p.sar.max_configs)
      .kv("hop_slack", a.p.sar.hop_slack);
  a.mics.record(h);
  a.mac.record(h);

  {
    auto f = open_out(a.out);
    write_compare_csv(f, rep, h.str());
  }
  {
    auto f = open_out(a.summary);
    write_compare_summary_csv(f, rep, h.str());
  }
  std::cout << "wrote " << a.out << " and " << a.summary << '\n';
  for (const CompareAggregate& g : rep.aggregates) {
    std::cout << "rate " << fmt_double(g.rate_bps) << ": sar "
              << fmt_double(g.mean_throughput_bps[0]) << " bps, sp "
              << fmt_double(g.mean_throughput_bps[1]) << " bps, iar "
              << fmt_double(g.mean_throughput_bps[2]) << " bps";
    if (g.mean_throughput_bps[1] > 0)
      std::cout << ", sar/sp " << fmt_double(g.mean_throughput_bps[0] / g.mean_throughput_bps[1]);
    if (g.mean_throughput_bps[2] > 0)
      std::cout << ", sar/iar "
                << fmt_double(g.mean_throughput_bps[0] / g.mean_throughput_bps[2]);
    std::cout << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"micsnet: contention analysis, loss prediction and routing for CSMA/CA meshes"};
  app.require_subcommand(1);

  GenArgs gen;
  {
    CLI::App* c = app.add_subcommand("gen", "generate a random scenario");
    c->add_option("--nodes", gen.nodes, "node count")->capture_default_str();
    c->add_option("--area", gen.area, "square side, m")->capture_default_str();
    c->add_option("--links", gen.links, "connection count")->capture_default_str();
    c->add_option("--seed", gen.seed, "placement seed")->capture_default_str();
    c->add_option("--rate", gen.rate, "per-connection offered rate, bps (0 = saturated)")
        ->capture_default_str();
    gen.radio.attach(c);
    c->add_option("--out", gen.out, "output scenario file")->capture_default_str();
    c->callback([&] { run_gen(gen); });
  }

  RateArgs rate;
  {
    CLI::App* c = app.add_subcommand("rate", "rate a link configuration");
    c->add_option("scenario", rate.scenario, "scenario file")->required();
    c->add_option("--routes", rate.routes, "route file; rates its hop links instead");
    c->add_option("--out-dir", rate.out_dir, "output directory")->capture_default_str();
    rate.mics.attach(c);
    c->callback([&] { run_rate(rate); });
  }

  SimulateArgs sim;
  {
    CLI::App* c = app.add_subcommand("simulate", "run the CSMA/CA simulator");
    c->add_option("scenario", sim.scenario, "scenario file")->required();
    c->add_option("--routes", sim.routes, "route file paired with the scenario connections");
    c->add_option("--duration", sim.duration, "simulated seconds")->capture_default_str();
    c->add_option("--seed", sim.seed, "backoff draw seed")->capture_default_str();
    c->add_option("--out", sim.out, "statistics CSV")->capture_default_str();
    c->add_option("--trace", sim.trace, "frame-level trace file");
    sim.mac.attach(c);
    sim.mics.attach(c);
    c->callback([&] { run_simulate(sim); });
  }

  ValidateArgs val;
  {
    CLI::App* c = app.add_subcommand("validate", "predictions against batch simulations");
    c->add_option("--scenarios", val.p.scenarios, "scenario count")->capture_default_str();
    c->add_option("--nodes", val.p.nodes, "nodes per scenario")->capture_default_str();
    c->add_option("--area", val.p.area_m, "square side, m")->capture_default_str();
    c->add_option("--links", val.p.links, "links per scenario")->capture_default_str();
    c->add_option("--duration", val.p.duration_s, "simulated seconds each")
        ->capture_default_str();
    c->add_option("--base-seed", val.p.base_seed, "first scenario seed")->capture_default_str();
    c->add_option("--out-dir", val.out_dir, "output directory")->capture_default_str();
    val.radio.attach(c);
    val.mac.attach(c);
    c->callback([&] { run_validate(val); });
  }

  RouteArgs route;
  {
    CLI::App* c = app.add_subcommand("route", "route scenario connections");
    c->add_option("scenario", route.scenario, "scenario file")->required();
    c->add_option("--method", route.method, "sar, sp, iar or all")
        ->check(CLI::IsMember({"sar", "sp", "iar", "all"}))
        ->capture_default_str();
    c->add_option("--threshold", route.sar.rating_threshold, "stop once all ratings fall below")
        ->capture_default_str();
    c->add_option("--max-configs", route.sar.max_configs, "rated configuration budget")
        ->capture_default_str();
    c->add_option("--slack", route.sar.hop_slack, "extra hops over each shortest path")
        ->capture_default_str();
    c->add_option("--out-dir", route.out_dir, "output directory")->capture_default_str();
    route.mics.attach(c);
    c->callback([&] { run_route(route); });
  }

  CompareArgs cmp;
  {
    CLI::App* c = app.add_subcommand("compare", "SAR against SP and IAR on a grid");
    c->add_option("--grid", cmp.p.grid, "grid side, nodes")->capture_default_str();
    c->add_option("--spacing", cmp.p.spacing_m, "lattice spacing, m")->capture_default_str();
    c->add_option("--connections", cmp.p.connections, "connections per seed")
        ->capture_default_str();
    c->add_option("--seeds", cmp.seeds_text, "a..b or comma list")->capture_default_str();
    c->add_option("--rates", cmp.rates_text, "comma list of offered rates, bps (0 = saturated)")
        ->capture_default_str();
    c->add_option("--duration", cmp.p.duration_s, "simulated seconds per cell")
        ->capture_default_str();
    c->add_option("--threshold", cmp.p.sar.rating_threshold, "SAR stop threshold")
        ->capture_default_str();
    c->add_option("--max-configs", cmp.p.sar.max_configs, "SAR configuration budget")
        ->capture_default_str();
    c->add_option("--slack", cmp.p.sar.hop_slack, "extra hops over each shortest path")
        ->capture_default_str();
    c->add_option("--out", cmp.out, "per-cell CSV")->capture_default_str();
    c->add_option("--summary", cmp.summary, "per-rate aggregate CSV")->capture_default_str();
    cmp.mics.attach(c);
    cmp.mac.attach(c);
    c->callback([&] { run_compare(cmp); });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const FileError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const micsnet::RoutingError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
