// Acceptance checks for the toolkit: each criterion prints one line,
// "criterion N: PASS ..." or "criterion N: FAIL ...", with its measured
// numbers and runtime. Exit status is the number of failed criteria.
//
// Usage: micsnet_acceptance [--criterion N] [--cli PATH]
//   --criterion 0 (default) runs all nine.
//   --cli names the command line binary; required for criterion 9.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "micsnet/analysis.hpp"
#include "micsnet/iblr.hpp"
#include "micsnet/macsim.hpp"
#include "micsnet/routing.hpp"

using namespace micsnet;
namespace fs = std::filesystem;

namespace {

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

double sp(const SeriesCorr& c) { return c.spearman.value_or(-2.0); }

// criterion 1: closed form and sampled order probabilities ---------------

Outcome criterion1() {
  const double tol = 1e-12;
  double worst = 0.0;
  for (unsigned k = 0; k <= 20; ++k) {
    const double expect = double(k) / double(k + 1);
    worst = std::max(worst, std::abs(p_at_least_one(k) - expect));
    worst = std::max(worst, std::abs(p_at_least_one_expanded(k) - expect));
  }
  if (worst > tol)
    return {false, "closed form deviates by " + fmt(worst) + " (tolerance 1e-12)"};

  std::mt19937_64 rng(0x61636331u);
  const std::size_t trials = 100000;
  for (unsigned k : {1u, 3u, 7u, 12u, 20u}) {
    std::vector<unsigned> order(k + 1);
    std::iota(order.begin(), order.end(), 0u);
    std::size_t hits = 0;
    for (std::size_t t = 0; t < trials; ++t) {
      std::shuffle(order.begin(), order.end(), rng);
      if (order.front() != 0u) ++hits;
    }
    const double p = p_at_least_one(k);
    const double sigma = std::sqrt(p * (1.0 - p) / double(trials));
    const double err = std::abs(double(hits) / double(trials) - p);
    if (err > 3.0 * sigma)
      return {false, "sampling at k=" + std::to_string(k) + " off by " + fmt(err) + " > 3 sigma " +
                         fmt(3.0 * sigma)};
  }
  return {true, "k/(k+1) within 1e-12 for k=0..20, sampling within 3 sigma at 1e5 draws"};
}

// criterion 2: exact and heuristic contention set enumeration ------------

Outcome criterion2() {
  std::mt19937_64 rng(0x61636332u);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 1 + rng() % 12;
    ContentionGraph g = testfix::random_graph(rng, m);
    const auto expect = testfix::brute_force_mics(g);
    const auto exact = testfix::sorted_family(enumerate_mics_exact(g, 25).sets);
    if (exact != expect)
      return {false, "exact enumeration disagrees with subset sweep on trial " +
                         std::to_string(trial) + " (" + std::to_string(m) + " links)"};
    MicsFamily heur = enumerate_mics_heuristic(g, 16, 0x6d696373u);
    std::vector<bool> covered(m, false);
    for (LinkSet s : heur.sets) {
      std::sort(s.begin(), s.end());
      if (!std::binary_search(expect.begin(), expect.end(), s))
        return {false, "heuristic produced a non maximal set on trial " + std::to_string(trial)};
      for (LinkId l : s) covered[l] = true;
    }
    if (std::find(covered.begin(), covered.end(), false) != covered.end())
      return {false, "heuristic left a link uncovered on trial " + std::to_string(trial)};
  }
  return {true, "200 random graphs up to 12 links: exact equals subset sweep, heuristic is a "
                "covering subset"};
}

// criterion 3: hand built fixtures rate exactly --------------------------

Outcome criterion3() {
  RatedConfig rc = rate_config(testfix::trio_links(), testfix::trio_field(), testfix::unit_radio());
  if (rc.ratings.rts_rating[0] != 0.5 || rc.ratings.ack_rating_vcs[0] != 1.0)
    return {false, "trio link A rated R=" + fmt(rc.ratings.rts_rating[0]) + " D=" +
                       fmt(rc.ratings.ack_rating_vcs[0]) + ", expected exactly 0.5 and 1.0"};

  SignalField f = testfix::base_field(6);
  testfix::set_pair(f, 0, 1, 5.0);
  testfix::set_pair(f, 2, 3, 5.0);
  testfix::set_pair(f, 4, 5, 5.0);
  RatedConfig iso = rate_config(testfix::trio_links(), f, testfix::unit_radio());
  for (std::size_t i = 0; i < 3; ++i)
    if (iso.ratings.rts_rating[i] != 0.0 || iso.ratings.ack_rating_vcs[i] != 0.0)
      return {false, "isolated link " + std::to_string(i) + " rated nonzero"};
  return {true, "trio fixture rates R=0.5, D=1.0 exactly; isolated links rate zero"};
}

// criteria 4-6: validation batch ------------------------------------------

const ValidationReport& batch_report() {
  static ValidationReport rep = [] {
    ValidationParams p;
    return run_validation_batch(p);
  }();
  return rep;
}

Outcome criterion4() {
  const ValidationReport& r = batch_report();
  const double floor = 0.6;
  std::string detail =
      "ack: model " + fmt(sp(r.ack_model)) + " vs interference " + fmt(sp(r.ack_interference)) +
      ", busy " + fmt(sp(r.ack_busy)) + ", sinr " + fmt(sp(r.ack_sinr)) + "; rts: model " +
      fmt(sp(r.rts_model)) + " vs interference " + fmt(sp(r.rts_interference)) + ", busy " +
      fmt(sp(r.rts_busy)) + ", sinr " + fmt(sp(r.rts_sinr));
  const bool ack_ok = sp(r.ack_model) >= floor && sp(r.ack_model) > sp(r.ack_interference) &&
                      sp(r.ack_model) > sp(r.ack_busy) && sp(r.ack_model) > sp(r.ack_sinr);
  const bool rts_ok = sp(r.rts_model) >= floor && sp(r.rts_model) > sp(r.rts_interference) &&
                      sp(r.rts_model) > sp(r.rts_busy) && sp(r.rts_model) > sp(r.rts_sinr);
  return {ack_ok && rts_ok, detail};
}

Outcome criterion5() {
  const ValidationReport& r = batch_report();
  std::uint64_t intra = 0, classified = 0;
  for (const CauseCounts& c : r.causes) {
    intra += c.intra;
    classified += c.intra + c.inter;
  }
  if (classified == 0) return {false, "no classified collisions"};
  const double share = double(intra) / double(classified);
  return {share >= 0.9, fmt(100.0 * share) + "% of " + std::to_string(classified) +
                            " classified collisions are intra set (needs >= 90%)"};
}

Outcome criterion6() {
  const ValidationReport& r = batch_report();
  if (!r.timeout_vs_norm.pearson)
    return {false, "timeout/throughput correlation undefined"};
  const double p = *r.timeout_vs_norm.pearson;
  return {p <= -0.5, "pearson(timeout fraction, normalized throughput) = " + fmt(p) +
                         " over " + std::to_string(r.timeout_vs_norm.n) + " links (needs <= -0.5)"};
}

// criterion 7: flow solver against exhaustive search ----------------------

Outcome criterion7() {
  std::mt19937_64 rng(0x61636337u);
  int done = 0, infeasible = 0;
  while (done < 50) {
    SignalField field;
    RadioParams radio;
    FlowProblem pb;
    if (!testfix::random_mcf_instance(rng, field, radio, pb, 3, 6)) continue;
    testfix::McfOracle oracle = testfix::brute_force_mcf(field, radio, pb);
    auto got = solve_mcf(field, radio, pb);
    if (!oracle.feasible) {
      if (got.has_value())
        return {false, "instance " + std::to_string(done) + ": solver found a solution the "
                           "exhaustive search rules out"};
      ++infeasible;
      ++done;
      continue;
    }
    if (!got.has_value())
      return {false, "instance " + std::to_string(done) + ": solver missed a feasible solution"};
    if (std::abs(got->objective - oracle.objective) > 1e-9)
      return {false, "instance " + std::to_string(done) + ": objective " + fmt(got->objective) +
                         " vs exhaustive " + fmt(oracle.objective)};
    if (got->paths != oracle.paths)
      return {false, "instance " + std::to_string(done) + ": tie break differs from exhaustive"};
    const std::string err = check_mcf_solution(field, radio, pb, *got);
    if (!err.empty())
      return {false, "instance " + std::to_string(done) + ": invariant check: " + err};
    ++done;
  }
  return {true, "50 random instances match exhaustive search (" + std::to_string(infeasible) +
                    " infeasible agreed); all invariants hold"};
}

// criterion 8: routing scheme comparison on the grid ----------------------

Outcome criterion8() {
  GridCompareParams params;
  CompareReport rep = run_grid_compare(params);
  if (rep.aggregates.size() != 1) return {false, "expected one aggregate row"};
  const CompareAggregate& g = rep.aggregates[0];
  const double sar = g.mean_throughput_bps[0], spb = g.mean_throughput_bps[1],
               iar = g.mean_throughput_bps[2];
  if (spb <= 0.0 || iar <= 0.0) return {false, "baseline delivered nothing"};
  const double vs_sp = sar / spb, vs_iar = sar / iar;
  // 1e-9 relative slack on the IAR ratio: the two schemes can deliver bit
  // for bit identical totals, where summation order noise sits at one ulp
  // while a genuinely lost packet would show up at about 3e-7 relative.
  const bool ok = vs_sp >= 1.3 && vs_iar >= 1.0 - 1e-9 && g.mean_cim[0] <= g.mean_cim[1] &&
                  g.mean_cim[0] <= g.mean_cim[2];
  return {ok, "throughput sar/sp " + fmt(vs_sp) + " (needs >= 1.3), sar/iar " + fmt(vs_iar) +
                  " (needs >= 1.0); mean rating sar " + fmt(g.mean_cim[0]) + " <= sp " +
                  fmt(g.mean_cim[1]) + " and <= iar " + fmt(g.mean_cim[2])};
}

// criterion 9: command line determinism -----------------------------------

struct CliRunner {
  std::string cli;
  fs::path dir;

  bool run(const std::string& args) const {
    const std::string cmd = cli + " " + args + " >> " + (dir / "stdout.txt").string() + " 2>&1";
    return std::system(cmd.c_str()) == 0;
  }
};

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream body;
    body << in.rdbuf();
    files[fs::relative(entry.path(), dir).string()] = body.str();
  }
  return files;
}

Outcome criterion9(const std::string& cli) {
  if (cli.empty()) return {false, "no --cli path given"};
  const fs::path dir = fs::temp_directory_path() / "micsnet_acceptance_cli";
  std::error_code ec;
  fs::remove_all(dir, ec);
  fs::create_directories(dir);
  CliRunner r{cli, dir};
  const std::string scenario = (dir / "scenario.txt").string();
  const std::string routes_dir = (dir / "routes").string();
  fs::create_directories(routes_dir);

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"gen", "gen --nodes 40 --area 800 --links 5 --seed 3 --out " + scenario},
      {"route", "route " + scenario + " --method all --max-configs 20 --out-dir " + routes_dir},
      {"rate", "rate " + scenario + " --routes " + routes_dir + "/routes_sar.txt --out-dir " +
                   (dir / "rate").string()},
      {"simulate", "simulate " + scenario + " --routes " + routes_dir +
                       "/routes_sar.txt --duration 2 --seed 5 --out " + (dir / "sim.csv").string() +
                       " --trace " + (dir / "trace.txt").string()},
      {"validate", "validate --scenarios 1 --nodes 60 --area 1000 --links 6 --duration 2 "
                   "--out-dir " + (dir / "validate").string()},
      {"compare", "compare --grid 4 --connections 2 --seeds 1..2 --duration 2 --max-configs 20 "
                  "--out " + (dir / "compare.csv").string() + " --summary " +
                  (dir / "compare_summary.csv").string()},
  };

  fs::create_directories(dir / "rate");
  fs::create_directories(dir / "validate");

  for (const auto& [name, args] : commands)
    if (!r.run(args)) return {false, name + " exited nonzero on the first run"};
  const auto first = snapshot(dir);

  for (const auto& [name, args] : commands)
    if (!r.run(args)) return {false, name + " exited nonzero on the second run"};
  auto second = snapshot(dir);

  // stdout accumulates both passes; its two halves must match.
  auto stdout_it = second.find("stdout.txt");
  if (stdout_it == second.end()) return {false, "missing stdout capture"};
  const std::string& all = stdout_it->second;
  if (all.size() % 2 != 0 || all.substr(0, all.size() / 2) != all.substr(all.size() / 2))
    return {false, "stdout differs between runs"};
  second.erase(stdout_it);

  std::size_t compared = 0;
  for (const auto& [name, body] : second) {
    if (name == "stdout.txt") continue;
    auto it = first.find(name);
    if (it == first.end()) return {false, name + " only appeared on the second run"};
    if (it->second != body) return {false, name + " differs between runs"};
    ++compared;
  }
  fs::remove_all(dir, ec);
  return {true, "6 subcommands, " + std::to_string(compared) +
                    " output files byte identical across two runs"};
}

struct Criterion {
  int id;
  const char* label;
  double limit_s;
  Outcome (*fn)();
};

}  // namespace

int main(int argc, char** argv) {
  std::string cli;
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--cli" && i + 1 < argc)
      cli = argv[++i];
    else if (arg == "--criterion" && i + 1 < argc)
      only = std::atoi(argv[++i]);
    else {
      std::fprintf(stderr, "usage: %s [--criterion N] [--cli PATH]\n", argv[0]);
      return 2;
    }
  }

  const Criterion table[] = {
      {1, "order probabilities", 1.0, criterion1},
      {2, "contention set enumeration", 30.0, criterion2},
      {3, "fixture ratings", 1.0, criterion3},
      {4, "rating vs simulation rank correlation", 600.0, criterion4},
      {5, "collision attribution", 600.0, criterion5},
      {6, "timeouts against normalized throughput", 600.0, criterion6},
      {7, "flow solver optimality", 60.0, criterion7},
      {8, "routing scheme benefit", 600.0, criterion8},
      {9, "command line determinism", 600.0, nullptr},
  };

  int failures = 0;
  for (const Criterion& c : table) {
    if (only != 0 && only != c.id) continue;
    Timer t;
    Outcome out = c.fn ? c.fn() : criterion9(cli);
    const double elapsed = t.seconds();
    const bool in_time = elapsed <= c.limit_s;
    const bool pass = out.pass && in_time;
    std::printf("criterion %d: %s %s: %s [%.2f s, limit %.0f s]\n", c.id,
                pass ? "PASS" : "FAIL", c.label, out.detail.c_str(), elapsed, c.limit_s);
    std::fflush(stdout);
    if (!pass) ++failures;
  }
  return failures;
}
