#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace micsnet {

using NodeId = std::uint32_t;
using LinkId = std::uint32_t;

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct Rect {
  double width = 0.0;
  double height = 0.0;
};

// Directed single-hop transmission, identified by its endpoints.
struct ActiveLink {
  NodeId src = 0;
  NodeId dst = 0;
  friend bool operator==(const ActiveLink&, const ActiveLink&) = default;
  friend bool operator<(const ActiveLink& a, const ActiveLink& b) {
    return a.src != b.src ? a.src < b.src : a.dst < b.dst;
  }
};

// End-to-end demand. rate_bps == 0 means a saturated source.
struct Connection {
  NodeId src = 0;
  NodeId dst = 0;
  double rate_bps = 0.0;
  friend bool operator==(const Connection&, const Connection&) = default;
};

// All powers are linear milliwatts, thresholds are linear ratios.
struct RadioParams {
  double tx_power_mw = 0.0;
  double path_loss_exponent = 0.0;
  double rx_sensitivity_mw = 0.0;  // minimum received power to decode a frame preamble
  double sinr_threshold = 0.0;     // minimum SINR across the whole frame airtime
  double noise_floor_mw = 0.0;

  // Carrier sense reports busy when cumulative foreign power reaches this.
  double cs_threshold_mw() const { return rx_sensitivity_mw - noise_floor_mw; }

  // 1 mW transmitter, exponent-4 path loss, decodes to 250 m and keeps
  // carrier sense busy to 550 m.
  static RadioParams defaults();

  void validate() const;  // throws std::invalid_argument
};

double mw_from_dbm(double dbm);
double dbm_from_mw(double mw);

// Dense matrix of received power: at(i, j) is the power node j sees when
// node i transmits. Diagonal is exactly zero.
class SignalField {
 public:
  SignalField() = default;
  explicit SignalField(std::size_t n) : n_(n), cells_(n * n, 0.0) {}
  SignalField(std::size_t n, std::vector<double> cells);

  double at(NodeId from, NodeId to) const { return cells_[std::size_t{from} * n_ + to]; }
  double& at(NodeId from, NodeId to) { return cells_[std::size_t{from} * n_ + to]; }
  std::size_t size() const { return n_; }
  bool empty() const { return n_ == 0; }

  void validate() const;  // throws std::invalid_argument

 private:
  std::size_t n_ = 0;
  std::vector<double> cells_;
};

struct Topology {
  std::vector<Point> positions;
  Rect area;
};

// Uniform node placement, reproducible for a given seed on any platform.
Topology generate_random_topology(std::size_t n, Rect area, std::uint64_t seed);

// Power-law propagation. Throws std::invalid_argument on coincident nodes.
SignalField compute_signal_field(const std::vector<Point>& positions, const RadioParams& radio);

// A link is usable when the direct power clears the decode sensitivity and
// the noise-only SINR clears the capture threshold.
bool link_feasible(const SignalField& field, const RadioParams& radio, NodeId src, NodeId dst);

struct Scenario {
  std::vector<Point> positions;  // empty when the field was specified directly
  Rect area;
  std::uint64_t seed = 0;
  RadioParams radio;
  SignalField field;
  std::vector<Connection> connections;

  void validate() const;  // throws std::invalid_argument
};

// File loading problems: parse errors name the offending line and key,
// structural errors name the mismatched dimension.
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Scenario load_scenario(std::istream& in);
Scenario load_scenario_file(const std::string& path);
void save_scenario(std::ostream& out, const Scenario& s, const std::string& header = {});
void save_scenario_file(const std::string& path, const Scenario& s, const std::string& header = {});

// Random scenario with n_connections single-hop feasible connections whose
// endpoints are pairwise distinct. Throws ScenarioError when the draw cannot
// be satisfied.
Scenario generate_scenario(std::size_t nodes, Rect area, unsigned n_connections,
                           std::uint64_t seed, const RadioParams& radio, double rate_bps);

}  // namespace micsnet
