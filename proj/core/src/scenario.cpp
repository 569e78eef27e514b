#include "micsnet/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string_view>
#include <utility>

#include "micsnet/text.hpp"

namespace micsnet {

namespace {

constexpr double kDecodeRangeM = 250.0;
constexpr double kCarrierSenseRangeM = 550.0;

double unit_from_u64(std::uint64_t v) { return double(v >> 11) * 0x1.0p-53; }

[[noreturn]] void parse_fail(std::size_t line, const std::string& what) {
  throw ScenarioError("scenario parse error: line " + std::to_string(line) + ": " + what);
}

[[noreturn]] void structural_fail(const std::string& what) {
  throw ScenarioError("scenario structural error: " + what);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

struct LineReader {
  std::istream& in;
  std::size_t line_no = 0;

  bool next(std::string& out) {
    while (std::getline(in, out)) {
      ++line_no;
      if (!out.empty() && out.back() == '\r') out.pop_back();
      std::string_view sv = out;
      std::size_t i = 0;
      while (i < sv.size() && (sv[i] == ' ' || sv[i] == '\t')) ++i;
      if (i == sv.size() || sv[i] == '#') continue;
      return true;
    }
    return false;
  }
};

}  // namespace

double mw_from_dbm(double dbm) { return std::pow(10.0, dbm / 10.0); }
double dbm_from_mw(double mw) { return 10.0 * std::log10(mw); }

RadioParams RadioParams::defaults() {
  RadioParams p;
  p.tx_power_mw = 1.0;
  p.path_loss_exponent = 4.0;
  p.sinr_threshold = 10.0;
  // Decode range is SINR-bound: at 250 m the received power is exactly
  // sinr_threshold times the noise floor.
  p.noise_floor_mw = p.tx_power_mw / (p.sinr_threshold * std::pow(kDecodeRangeM, 4.0));
  // Carrier sense clearance (rx_sensitivity - noise) is reached at 550 m.
  p.rx_sensitivity_mw = p.noise_floor_mw + p.tx_power_mw / std::pow(kCarrierSenseRangeM, 4.0);
  return p;
}

void RadioParams::validate() const {
  auto check = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("radio params: ") + what);
  };
  check(std::isfinite(tx_power_mw) && tx_power_mw > 0.0, "tx_power_mw must be positive");
  check(std::isfinite(path_loss_exponent) && path_loss_exponent > 0.0,
        "path_loss_exponent must be positive");
  check(std::isfinite(rx_sensitivity_mw) && rx_sensitivity_mw > 0.0,
        "rx_sensitivity_mw must be positive");
  check(std::isfinite(sinr_threshold) && sinr_threshold > 0.0, "sinr_threshold must be positive");
  check(std::isfinite(noise_floor_mw) && noise_floor_mw > 0.0, "noise_floor_mw must be positive");
  check(noise_floor_mw < rx_sensitivity_mw, "noise_floor_mw must be below rx_sensitivity_mw");
}

SignalField::SignalField(std::size_t n, std::vector<double> cells)
    : n_(n), cells_(std::move(cells)) {
  if (cells_.size() != n_ * n_)
    throw std::invalid_argument("signal field: cell count does not match node count");
  validate();
}

void SignalField::validate() const {
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) {
      double v = cells_[i * n_ + j];
      if (i == j) {
        if (v != 0.0) throw std::invalid_argument("signal field: diagonal must be exactly zero");
      } else if (!std::isfinite(v) || v < 0.0) {
        throw std::invalid_argument("signal field: powers must be finite and non-negative");
      }
    }
  }
}

Topology generate_random_topology(std::size_t n, Rect area, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("topology: need at least one node");
  if (!(area.width > 0.0) || !(area.height > 0.0))
    throw std::invalid_argument("topology: area must be positive");
  std::mt19937_64 rng(seed);
  Topology topo;
  topo.area = area;
  topo.positions.reserve(n);
  std::set<std::pair<std::uint64_t, std::uint64_t>> seen;
  while (topo.positions.size() < n) {
    Point p;
    p.x = unit_from_u64(rng()) * area.width;
    p.y = unit_from_u64(rng()) * area.height;
    std::uint64_t bx, by;
    static_assert(sizeof bx == sizeof p.x);
    std::memcpy(&bx, &p.x, sizeof bx);
    std::memcpy(&by, &p.y, sizeof by);
    if (seen.emplace(bx, by).second) topo.positions.push_back(p);
  }
  return topo;
}

SignalField compute_signal_field(const std::vector<Point>& positions, const RadioParams& radio) {
  radio.validate();
  const std::size_t n = positions.size();
  SignalField field(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double dx = positions[i].x - positions[j].x;
      double dy = positions[i].y - positions[j].y;
      double d2 = dx * dx + dy * dy;
      if (d2 == 0.0)
        throw std::invalid_argument("coincident nodes " + std::to_string(i) + " and " +
                                    std::to_string(j));
      double p = radio.tx_power_mw * std::pow(d2, -0.5 * radio.path_loss_exponent);
      field.at(NodeId(i), NodeId(j)) = p;
      field.at(NodeId(j), NodeId(i)) = p;
    }
  }
  return field;
}

bool link_feasible(const SignalField& field, const RadioParams& radio, NodeId src, NodeId dst) {
  if (src == dst) return false;
  double p = field.at(src, dst);
  return p >= radio.rx_sensitivity_mw && p / radio.noise_floor_mw >= radio.sinr_threshold;
}

void Scenario::validate() const {
  radio.validate();
  field.validate();
  if (field.empty()) throw std::invalid_argument("scenario: empty signal field");
  if (!positions.empty() && positions.size() != field.size())
    throw std::invalid_argument("scenario: position count does not match signal field size");
  for (const Connection& c : connections) {
    if (c.src >= field.size() || c.dst >= field.size())
      throw std::invalid_argument("scenario: connection endpoint out of range");
    if (c.src == c.dst) throw std::invalid_argument("scenario: connection src equals dst");
    if (!std::isfinite(c.rate_bps) || c.rate_bps < 0.0)
      throw std::invalid_argument("scenario: connection rate must be finite and non-negative");
  }
}

namespace {

struct RadioKey {
  const char* name;
  bool dbm;  // value given on a log scale
  double RadioParams::*field;
};

constexpr RadioKey kRadioKeys[] = {
    {"tx_power_mw", false, &RadioParams::tx_power_mw},
    {"tx_power_dbm", true, &RadioParams::tx_power_mw},
    {"path_loss_exponent", false, &RadioParams::path_loss_exponent},
    {"rx_sensitivity_mw", false, &RadioParams::rx_sensitivity_mw},
    {"rx_sensitivity_dbm", true, &RadioParams::rx_sensitivity_mw},
    {"sinr_threshold", false, &RadioParams::sinr_threshold},
    {"sinr_threshold_db", true, &RadioParams::sinr_threshold},
    {"noise_floor_mw", false, &RadioParams::noise_floor_mw},
    {"noise_floor_dbm", true, &RadioParams::noise_floor_mw},
};

const char* kRadioGroups[] = {"tx_power_mw", "path_loss_exponent", "rx_sensitivity_mw",
                              "sinr_threshold", "noise_floor_mw"};

int radio_group(const RadioKey& k) {
  if (k.field == &RadioParams::tx_power_mw) return 0;
  if (k.field == &RadioParams::path_loss_exponent) return 1;
  if (k.field == &RadioParams::rx_sensitivity_mw) return 2;
  if (k.field == &RadioParams::sinr_threshold) return 3;
  return 4;
}

}  // namespace

Scenario load_scenario(std::istream& in) {
  LineReader reader{in};
  std::string line;

  if (!reader.next(line)) parse_fail(reader.line_no, "empty file");
  {
    auto toks = split_ws(line);
    if (toks.size() != 2 || toks[0] != "micsnet-scenario" || toks[1] != "v1")
      parse_fail(reader.line_no, "expected 'micsnet-scenario v1' header");
  }

  Scenario s;
  std::size_t nodes = 0;
  bool have_nodes = false, have_area = false, have_seed = false;
  bool have_radio[5] = {false, false, false, false, false};
  bool have_positions = false, have_theta = false, have_connections = false;
  bool ended = false;
  std::vector<double> theta_cells;

  auto need_value = [&](const std::vector<std::string_view>& toks, std::size_t n,
                        const char* key) {
    if (toks.size() != n + 1)
      parse_fail(reader.line_no, std::string("key '") + key + "' needs " + std::to_string(n) +
                                     " value(s)");
  };
  auto value_as_double = [&](std::string_view tok, const char* key) {
    double v;
    if (!parse_double(tok, v)) parse_fail(reader.line_no, std::string("bad value for '") + key + "'");
    return v;
  };

  while (reader.next(line)) {
    auto toks = split_ws(line);
    std::string key(toks[0]);

    if (key == "end") {
      ended = true;
      break;
    }
    if (key == "nodes") {
      if (have_nodes) parse_fail(reader.line_no, "duplicate key 'nodes'");
      need_value(toks, 1, "nodes");
      std::uint64_t v;
      if (!parse_u64(toks[1], v) || v == 0) parse_fail(reader.line_no, "bad value for 'nodes'");
      nodes = std::size_t(v);
      have_nodes = true;
      continue;
    }
    if (key == "area") {
      if (have_area) parse_fail(reader.line_no, "duplicate key 'area'");
      need_value(toks, 2, "area");
      s.area.width = value_as_double(toks[1], "area");
      s.area.height = value_as_double(toks[2], "area");
      have_area = true;
      continue;
    }
    if (key == "seed") {
      if (have_seed) parse_fail(reader.line_no, "duplicate key 'seed'");
      need_value(toks, 1, "seed");
      if (!parse_u64(toks[1], s.seed)) parse_fail(reader.line_no, "bad value for 'seed'");
      have_seed = true;
      continue;
    }

    bool matched_radio = false;
    for (const RadioKey& rk : kRadioKeys) {
      if (key != rk.name) continue;
      int g = radio_group(rk);
      if (have_radio[g])
        parse_fail(reader.line_no, std::string("duplicate radio key for '") + kRadioGroups[g] + "'");
      need_value(toks, 1, rk.name);
      double v = value_as_double(toks[1], rk.name);
      s.radio.*rk.field = rk.dbm ? mw_from_dbm(v) : v;
      have_radio[g] = true;
      matched_radio = true;
      break;
    }
    if (matched_radio) continue;

    if (key == "positions") {
      if (!have_nodes) parse_fail(reader.line_no, "'positions' before 'nodes'");
      if (have_positions) parse_fail(reader.line_no, "duplicate section 'positions'");
      need_value(toks, 0, "positions");
      s.positions.reserve(nodes);
      for (std::size_t i = 0; i < nodes; ++i) {
        if (!reader.next(line))
          parse_fail(reader.line_no, "positions row " + std::to_string(i) + ": unexpected end of file");
        auto row = split_ws(line);
        Point p;
        if (row.size() != 2 || !parse_double(row[0], p.x) || !parse_double(row[1], p.y))
          parse_fail(reader.line_no, "positions row " + std::to_string(i) + ": expected two numbers");
        s.positions.push_back(p);
      }
      have_positions = true;
      continue;
    }
    if (key == "theta") {
      if (!have_nodes) parse_fail(reader.line_no, "'theta' before 'nodes'");
      if (have_theta) parse_fail(reader.line_no, "duplicate section 'theta'");
      need_value(toks, 0, "theta");
      theta_cells.reserve(nodes * nodes);
      for (std::size_t i = 0; i < nodes; ++i) {
        if (!reader.next(line))
          parse_fail(reader.line_no, "theta row " + std::to_string(i) + ": unexpected end of file");
        auto row = split_ws(line);
        if (row.size() != nodes)
          parse_fail(reader.line_no, "theta row " + std::to_string(i) + ": expected " +
                                         std::to_string(nodes) + " entries");
        for (std::size_t j = 0; j < nodes; ++j) {
          double v;
          if (!parse_double(row[j], v))
            parse_fail(reader.line_no, "theta row " + std::to_string(i) + ": bad entry");
          theta_cells.push_back(v);
        }
      }
      have_theta = true;
      continue;
    }
    if (key == "connections") {
      if (have_connections) parse_fail(reader.line_no, "duplicate section 'connections'");
      need_value(toks, 1, "connections");
      std::uint64_t count;
      if (!parse_u64(toks[1], count)) parse_fail(reader.line_no, "bad value for 'connections'");
      s.connections.reserve(count);
      for (std::uint64_t i = 0; i < count; ++i) {
        if (!reader.next(line))
          parse_fail(reader.line_no,
                     "connection row " + std::to_string(i) + ": unexpected end of file");
        auto row = split_ws(line);
        std::uint64_t a, b;
        double rate;
        if (row.size() != 3 || !parse_u64(row[0], a) || !parse_u64(row[1], b) ||
            !parse_double(row[2], rate))
          parse_fail(reader.line_no, "connection row " + std::to_string(i) +
                                         ": expected 'src dst rate_bps'");
        s.connections.push_back({NodeId(a), NodeId(b), rate});
      }
      have_connections = true;
      continue;
    }

    parse_fail(reader.line_no, "unknown key '" + key + "'");
  }

  if (!ended) parse_fail(reader.line_no, "missing 'end'");
  if (!have_nodes) structural_fail("missing required key 'nodes'");
  for (int g = 0; g < 5; ++g)
    if (!have_radio[g])
      structural_fail(std::string("missing required radio key '") + kRadioGroups[g] + "'");
  if (have_positions && have_theta)
    structural_fail("'positions' and 'theta' are mutually exclusive");
  if (!have_positions && !have_theta) structural_fail("need a 'positions' or 'theta' section");

  try {
    if (have_positions) {
      s.field = compute_signal_field(s.positions, s.radio);
    } else {
      s.field = SignalField(nodes, std::move(theta_cells));
    }
    s.validate();
  } catch (const std::invalid_argument& e) {
    structural_fail(e.what());
  }
  return s;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file: " + path);
  return load_scenario(in);
}

void save_scenario(std::ostream& out, const Scenario& s, const std::string& header) {
  if (!header.empty()) out << header << '\n';
  out << "micsnet-scenario v1\n";
  out << "nodes " << s.field.size() << '\n';
  if (s.area.width > 0.0 && s.area.height > 0.0)
    out << "area " << fmt_double(s.area.width) << ' ' << fmt_double(s.area.height) << '\n';
  out << "seed " << s.seed << '\n';
  out << "tx_power_mw " << fmt_double(s.radio.tx_power_mw) << '\n';
  out << "path_loss_exponent " << fmt_double(s.radio.path_loss_exponent) << '\n';
  out << "rx_sensitivity_mw " << fmt_double(s.radio.rx_sensitivity_mw) << '\n';
  out << "sinr_threshold " << fmt_double(s.radio.sinr_threshold) << '\n';
  out << "noise_floor_mw " << fmt_double(s.radio.noise_floor_mw) << '\n';
  if (!s.positions.empty()) {
    out << "positions\n";
    for (const Point& p : s.positions)
      out << fmt_double(p.x) << ' ' << fmt_double(p.y) << '\n';
  } else {
    out << "theta\n";
    const std::size_t n = s.field.size();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (j) out << ' ';
        out << fmt_double(s.field.at(NodeId(i), NodeId(j)));
      }
      out << '\n';
    }
  }
  if (!s.connections.empty()) {
    out << "connections " << s.connections.size() << '\n';
    for (const Connection& c : s.connections)
      out << c.src << ' ' << c.dst << ' ' << fmt_double(c.rate_bps) << '\n';
  }
  out << "end\n";
}

void save_scenario_file(const std::string& path, const Scenario& s, const std::string& header) {
  std::ofstream out(path);
  if (!out) throw ScenarioError("cannot open scenario file for writing: " + path);
  save_scenario(out, s, header);
  out.flush();
  if (!out) throw ScenarioError("failed writing scenario file: " + path);
}

Scenario generate_scenario(std::size_t nodes, Rect area, unsigned n_connections,
                           std::uint64_t seed, const RadioParams& radio, double rate_bps) {
  Topology topo = generate_random_topology(nodes, area, seed);
  SignalField field = compute_signal_field(topo.positions, radio);

  std::vector<std::pair<NodeId, NodeId>> feasible;
  for (NodeId i = 0; i < nodes; ++i)
    for (NodeId j = 0; j < nodes; ++j)
      if (i != j && link_feasible(field, radio, i, j)) feasible.emplace_back(i, j);

  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<Connection> picked;
  for (int attempt = 0; attempt < 32 && picked.size() < n_connections; ++attempt) {
    // Fisher-Yates with the raw engine keeps the draw platform-stable.
    for (std::size_t i = feasible.size(); i > 1; --i)
      std::swap(feasible[i - 1], feasible[rng() % i]);
    picked.clear();
    std::vector<char> used(nodes, 0);
    for (const auto& [a, b] : feasible) {
      if (used[a] || used[b]) continue;
      used[a] = used[b] = 1;
      picked.push_back({a, b, rate_bps});
      if (picked.size() == n_connections) break;
    }
  }
  if (picked.size() < n_connections)
    throw ScenarioError("generate_scenario: placed " + std::to_string(picked.size()) + " of " +
                        std::to_string(n_connections) + " node-disjoint feasible links");
  std::sort(picked.begin(), picked.end(), [](const Connection& x, const Connection& y) {
    return x.src != y.src ? x.src < y.src : x.dst < y.dst;
  });

  Scenario s;
  s.positions = std::move(topo.positions);
  s.area = area;
  s.seed = seed;
  s.radio = radio;
  s.field = std::move(field);
  s.connections = std::move(picked);
  return s;
}

}  // namespace micsnet
