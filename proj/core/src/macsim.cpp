#include "micsnet/macsim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <ostream>
#include <queue>
#include <random>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "micsnet/text.hpp"

namespace micsnet {

void MacParams::validate() const {
  auto check = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("mac params: ") + what);
  };
  auto pow2m1 = [](std::uint32_t v) { return (v & (v + 1)) == 0; };
  check(slot_time_us > 0 && sifs_us > 0 && difs_us > 0, "durations must be positive");
  check(pow2m1(cw_min), "cw_min must be a power of two minus one");
  check(pow2m1(cw_max), "cw_max must be a power of two minus one");
  check(cw_min <= cw_max, "cw_min must not exceed cw_max");
  check(bit_rate_bps > 0, "bit rate must be positive");
  check(rts_size_bytes > 0 && cts_size_bytes > 0 && ack_size_bytes > 0 && data_size_bytes > 0,
        "frame sizes must be positive");
  check(queue_limit > 0, "queue limit must be positive");
}

const char* cause_name(CollisionCause c) {
  switch (c) {
    case CollisionCause::RtsArrival: return "RTS-A";
    case CollisionCause::RtsIntermediate: return "RTS-I";
    case CollisionCause::DataArrival: return "DATA-A";
    case CollisionCause::DataIntermediate: return "DATA-I";
    case CollisionCause::CtsPcs: return "CTS-PCS";
    case CollisionCause::CtsVcs: return "CTS-VCS";
  }
  return "?";
}

namespace {

constexpr LinkId kNoLink = 0xffffffffu;
constexpr std::int64_t kNsPerUs = 1000;

const char* kind_name(FrameKind k) {
  switch (k) {
    case FrameKind::Rts: return "RTS";
    case FrameKind::Cts: return "CTS";
    case FrameKind::Data: return "DATA";
    case FrameKind::Ack: return "ACK";
  }
  return "?";
}

struct Packet {
  std::uint64_t uid = 0;
  std::uint32_t spec = 0;
  LinkId out_link = kNoLink;
};

enum class Phase : std::uint8_t { Idle, Backoff, WaitCts, WaitData, WaitAck };

struct Lock {
  int tx = -1;
  bool corrupted = false;
  std::int64_t corrupt_time = 0;
  std::vector<LinkId> interferers;
};

struct Tx {
  NodeId node = 0;
  NodeId to = 0;
  FrameKind kind = FrameKind::Rts;
  LinkId owner = kNoLink;
  std::uint64_t uid = 0;
  std::int64_t start = 0;
  std::int64_t end = 0;
  bool active = false;
  std::int64_t addr_fail_time = -1;  // addressed receiver never held the frame
  std::vector<LinkId> addr_fail_interferers;
};

struct NodeSt {
  double power_in = 0.0;
  std::int64_t nav_until = 0;
  LinkId nav_setter = kNoLink;
  bool nav_from_rts = false;
  std::uint64_t nav_gen = 0;
  std::int64_t last_rxstart = -1;
  bool transmitting = false;
  bool contention_busy = false;
  Lock lock;

  Phase phase = Phase::Idle;
  std::deque<Packet> queue;
  std::uint32_t cw = 0;
  std::uint32_t short_retries = 0;
  std::uint32_t long_retries = 0;
  std::uint32_t backoff_remaining = 0;
  std::int64_t backoff_sched = -1;
  std::int64_t backoff_done = -1;  // -1 = no pending completion event
  std::uint64_t backoff_gen = 0;
  std::uint64_t timeout_gen = 0;
  LinkId current_link = kNoLink;
  std::unordered_set<std::uint64_t> seen_uids;
};

enum class EvKind : std::uint8_t {
  TxEnd,
  TxBegin,
  BackoffDone,
  RtsTimeout,
  AckTimeout,
  Arrival,
  NavExpire,
  NavReset,
};

struct Ev {
  std::int64_t t = 0;
  std::uint64_t seq = 0;
  EvKind kind = EvKind::TxEnd;
  std::uint32_t a = 0;  // node, tx slot, or spec index
  std::uint64_t b = 0;  // generation counter
};

struct EvAfter {
  bool operator()(const Ev& x, const Ev& y) const {
    return x.t != y.t ? x.t > y.t : x.seq > y.seq;
  }
};

struct EndpointBusy {
  bool busy = false;
  std::int64_t last = 0;
  std::int64_t acc = 0;
};

struct SpecState {
  TrafficSpec spec;
  std::vector<LinkId> hop_links;               // per hop
  std::unordered_map<NodeId, std::size_t> pos; // node -> index in path
  std::int64_t arrival_interval_ns = 0;        // saturated sources arrive at channel rate
  std::uint64_t delivered_bits = 0;
};

struct Sim {
  const SignalField& field;
  const RadioParams& radio;
  const MacParams& mac;
  std::ostream* trace;
  std::int64_t horizon;
  std::mt19937_64 rng;

  std::vector<ActiveLink> links;
  std::vector<SpecState> specs;
  std::vector<NodeId> relevant;
  std::vector<NodeSt> nodes;
  std::vector<LinkStats> stats;
  std::vector<std::array<EndpointBusy, 2>> link_busy;
  std::vector<int> link_active_tx;
  std::vector<CollisionRecord> records;
  std::uint64_t queue_drops = 0;

  std::vector<Tx> txs;
  std::vector<std::uint32_t> free_tx;
  std::vector<std::uint32_t> active_txs;

  std::priority_queue<Ev, std::vector<Ev>, EvAfter> pq;
  std::uint64_t next_seq = 0;
  std::uint64_t next_uid = 0;
  std::int64_t now = 0;

  std::int64_t rts_air, cts_air, ack_air, data_air;
  std::int64_t slot_ns, sifs_ns, difs_ns;
  double cs_th;

  Sim(const SignalField& f, const RadioParams& r, const MacParams& m, double duration_s,
      std::uint64_t seed, std::ostream* tr)
      : field(f), radio(r), mac(m), trace(tr),
        horizon(std::int64_t(duration_s * 1e9)), rng(seed) {
    rts_air = airtime_ns(mac.rts_size_bytes);
    cts_air = airtime_ns(mac.cts_size_bytes);
    ack_air = airtime_ns(mac.ack_size_bytes);
    data_air = airtime_ns(mac.data_size_bytes);
    slot_ns = std::int64_t(mac.slot_time_us) * kNsPerUs;
    sifs_ns = std::int64_t(mac.sifs_us) * kNsPerUs;
    difs_ns = std::int64_t(mac.difs_us) * kNsPerUs;
    cs_th = radio.cs_threshold_mw();
  }

  std::int64_t airtime_ns(std::uint32_t bytes) const {
    std::uint64_t bits = std::uint64_t(bytes) * 8;
    return std::int64_t((bits * 1'000'000'000ull + mac.bit_rate_bps - 1) / mac.bit_rate_bps);
  }

  void push(std::int64_t t, EvKind kind, std::uint32_t a, std::uint64_t b = 0) {
    pq.push(Ev{t, next_seq++, kind, a, b});
  }

  // ---- setup ----

  void build(const std::vector<TrafficSpec>& traffic) {
    std::map<ActiveLink, LinkId> index;
    for (const TrafficSpec& t : traffic) {
      if (t.path.size() < 2) throw std::invalid_argument("traffic path needs at least two nodes");
      if (!(t.rate_bps >= 0.0) || !std::isfinite(t.rate_bps))
        throw std::invalid_argument("traffic rate must be finite and non-negative");
      std::unordered_set<NodeId> seen;
      for (NodeId n : t.path) {
        if (n >= field.size()) throw std::invalid_argument("traffic path node out of range");
        if (!seen.insert(n).second) throw std::invalid_argument("traffic path revisits a node");
      }
      for (std::size_t h = 0; h + 1 < t.path.size(); ++h) {
        ActiveLink l{t.path[h], t.path[h + 1]};
        if (!link_feasible(field, radio, l.src, l.dst))
          throw std::invalid_argument("infeasible hop " + std::to_string(l.src) + "->" +
                                      std::to_string(l.dst));
        index.emplace(l, 0);
      }
    }
    if (index.empty()) throw std::invalid_argument("no transmitting links");
    LinkId id = 0;
    for (auto& [l, v] : index) {
      v = id++;
      links.push_back(l);
    }
    for (const TrafficSpec& t : traffic) {
      SpecState st;
      st.spec = t;
      for (std::size_t h = 0; h + 1 < t.path.size(); ++h)
        st.hop_links.push_back(index.at({t.path[h], t.path[h + 1]}));
      for (std::size_t i = 0; i < t.path.size(); ++i) st.pos.emplace(t.path[i], i);
      // Saturated sources offer packets open-loop at the channel bit rate, so
      // their interface queue stays backlogged and relay traffic crossing the
      // origin competes for the remaining slots.
      const double rate = t.rate_bps > 0.0 ? t.rate_bps : double(mac.bit_rate_bps);
      const double bits = double(mac.data_size_bytes) * 8.0;
      st.arrival_interval_ns = std::max<std::int64_t>(1, std::int64_t(bits / rate * 1e9));
      specs.push_back(std::move(st));
    }

    nodes.assign(field.size(), {});
    std::vector<char> is_rel(field.size(), 0);
    for (const ActiveLink& l : links) is_rel[l.src] = is_rel[l.dst] = 1;
    for (NodeId n = 0; n < field.size(); ++n)
      if (is_rel[n]) relevant.push_back(n);
    for (NodeSt& n : nodes) n.cw = mac.cw_min;
    stats.assign(links.size(), {});
    link_busy.assign(links.size(), {});
    link_active_tx.assign(links.size(), -1);
  }

  void kick_off() {
    for (std::uint32_t si = 0; si < specs.size(); ++si) push(0, EvKind::Arrival, si);
  }

  // ---- contention ----

  bool busy_now(const NodeSt& n) const {
    return n.transmitting || n.power_in >= cs_th || n.nav_until > now;
  }

  void schedule_backoff(NodeId id) {
    NodeSt& n = nodes[id];
    n.backoff_sched = now;
    n.backoff_done = now + difs_ns + std::int64_t(n.backoff_remaining) * slot_ns;
    push(n.backoff_done, EvKind::BackoffDone, id, ++n.backoff_gen);
    if (trace)
      *trace << now << " backoff node=" << id << " slots=" << n.backoff_remaining
             << " done=" << n.backoff_done << '\n';
  }

  void recompute_busy(NodeId id) {
    NodeSt& n = nodes[id];
    bool b = busy_now(n);
    if (b == n.contention_busy) return;
    n.contention_busy = b;
    if (b) {
      if (n.phase == Phase::Backoff && n.backoff_done >= 0 && n.backoff_done > now) {
        std::int64_t elapsed = (now - n.backoff_sched - difs_ns) / slot_ns;
        if (elapsed < 0) elapsed = 0;
        if (elapsed > std::int64_t(n.backoff_remaining)) elapsed = n.backoff_remaining;
        n.backoff_remaining -= std::uint32_t(elapsed);
        n.backoff_done = -1;
        ++n.backoff_gen;
      }
    } else {
      if (n.phase == Phase::Backoff && n.backoff_done < 0) schedule_backoff(id);
    }
  }

  void maybe_start_contention(NodeId id) {
    NodeSt& n = nodes[id];
    if (n.phase != Phase::Idle || n.queue.empty()) return;
    begin_backoff(id);
  }

  void begin_backoff(NodeId id) {
    NodeSt& n = nodes[id];
    n.phase = Phase::Backoff;
    n.current_link = n.queue.front().out_link;
    n.backoff_remaining = std::uint32_t(rng() % (std::uint64_t(n.cw) + 1));
    n.backoff_done = -1;
    if (!n.contention_busy) schedule_backoff(id);
  }

  // ---- packets ----

  void enqueue_packet(NodeId node, std::uint32_t si) {
    SpecState& sp = specs[si];
    std::size_t pos = sp.pos.at(node);
    if (nodes[node].queue.size() >= mac.queue_limit) {
      ++queue_drops;
      if (trace) *trace << now << " enqueue_drop node=" << node << " spec=" << si << '\n';
      return;
    }
    Packet p;
    p.uid = make_uid(si);
    p.spec = si;
    p.out_link = sp.hop_links[pos];
    nodes[node].queue.push_back(p);
    maybe_start_contention(node);
  }

  void head_done(NodeId id) {
    NodeSt& n = nodes[id];
    n.queue.pop_front();
    n.cw = mac.cw_min;
    n.short_retries = 0;
    n.long_retries = 0;
    n.phase = Phase::Idle;
    n.current_link = kNoLink;
    maybe_start_contention(id);
  }

  // ---- transmissions ----

  std::uint32_t alloc_tx() {
    if (!free_tx.empty()) {
      std::uint32_t i = free_tx.back();
      free_tx.pop_back();
      return i;
    }
    txs.push_back({});
    return std::uint32_t(txs.size() - 1);
  }

  void free_slot(std::uint32_t i) {
    txs[i] = Tx{};
    free_tx.push_back(i);
  }

  std::vector<LinkId> active_owners(int except_tx) const {
    std::vector<LinkId> out;
    for (std::uint32_t ti : active_txs) {
      if (int(ti) == except_tx) continue;
      out.push_back(txs[ti].owner);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  void update_link_busy() {
    for (LinkId l = 0; l < links.size(); ++l) {
      int ti = link_active_tx[l];
      NodeId ends[2] = {links[l].src, links[l].dst};
      for (int e = 0; e < 2; ++e) {
        double foreign = nodes[ends[e]].power_in;
        if (ti >= 0) foreign -= field.at(txs[std::size_t(ti)].node, ends[e]);
        bool b = foreign >= cs_th;
        EndpointBusy& eb = link_busy[l][e];
        if (eb.busy) eb.acc += now - eb.last;
        eb.last = now;
        eb.busy = b;
      }
    }
  }

  void start_tx(NodeId node, FrameKind kind, LinkId owner, NodeId to, std::uint64_t uid) {
    std::uint32_t slot = alloc_tx();
    Tx& tx = txs[slot];
    tx.node = node;
    tx.to = to;
    tx.kind = kind;
    tx.owner = owner;
    tx.uid = uid;
    tx.start = now;
    std::int64_t air = kind == FrameKind::Rts    ? rts_air
                       : kind == FrameKind::Cts  ? cts_air
                       : kind == FrameKind::Data ? data_air
                                                 : ack_air;
    tx.end = now + air;
    tx.active = true;
    tx.addr_fail_time = -1;
    tx.addr_fail_interferers.clear();

    NodeSt& sender = nodes[node];
    sender.transmitting = true;
    active_txs.push_back(slot);
    link_active_tx[owner] = int(slot);
    if (sender.lock.tx >= 0) drop_lock_for_tx(node);

    if (trace)
      *trace << now << " tx_start kind=" << kind_name(kind) << " node=" << node << " to=" << to
             << " link=" << owner << " uid=" << uid << '\n';

    for (NodeId y : relevant) nodes[y].power_in += field.at(node, y);

    for (NodeId y : relevant) {
      if (y == node) continue;
      NodeSt& ny = nodes[y];
      if (ny.transmitting) {
        if (to == y) mark_addr_fail(slot, y);
        continue;
      }
      if (ny.lock.tx >= 0) {
        check_lock_corruption(y);
        if (to == y && ny.lock.tx != int(slot)) mark_addr_fail(slot, y);
        continue;
      }
      double sig = field.at(node, y);
      if (sig >= radio.rx_sensitivity_mw) {
        double interference = ny.power_in - sig;
        if (sig / (radio.noise_floor_mw + interference) >= radio.sinr_threshold) {
          ny.lock.tx = int(slot);
          ny.lock.corrupted = false;
          ny.lock.interferers.clear();
          ny.last_rxstart = now;
          continue;
        }
      }
      if (to == y) mark_addr_fail(slot, y);
    }

    push(tx.end, EvKind::TxEnd, slot);
    update_link_busy();
    for (NodeId y : relevant) recompute_busy(y);
  }

  void mark_addr_fail(std::uint32_t slot, NodeId /*y*/) {
    Tx& tx = txs[slot];
    if (tx.addr_fail_time >= 0) return;
    tx.addr_fail_time = now;
    tx.addr_fail_interferers = active_owners(int(slot));
  }

  void drop_lock_for_tx(NodeId id) {
    NodeSt& n = nodes[id];
    int lt = n.lock.tx;
    if (lt >= 0 && txs[std::size_t(lt)].to == id) mark_addr_fail(std::uint32_t(lt), id);
    n.lock = Lock{};
  }

  void check_lock_corruption(NodeId y) {
    NodeSt& ny = nodes[y];
    const Tx& held = txs[std::size_t(ny.lock.tx)];
    if (ny.lock.corrupted) return;
    double sig = field.at(held.node, y);
    double interference = ny.power_in - sig;
    if (sig / (radio.noise_floor_mw + interference) < radio.sinr_threshold) {
      ny.lock.corrupted = true;
      ny.lock.corrupt_time = now;
      ny.lock.interferers = active_owners(ny.lock.tx);
    }
  }

  void set_nav(NodeId y, std::int64_t until, LinkId setter, bool from_rts) {
    NodeSt& n = nodes[y];
    if (until <= n.nav_until) return;
    n.nav_until = until;
    n.nav_setter = setter;
    n.nav_from_rts = from_rts;
    ++n.nav_gen;
    push(until, EvKind::NavExpire, y);
    // 802.11 NAV-reset rule: an update based on an overheard RTS is cancelled
    // when no reception begins within 2*SIFS + CTS airtime + 2 slots of its
    // end, since the handshake it announced evidently never proceeded.
    if (from_rts) push(now + 2 * sifs_ns + cts_air + 2 * slot_ns, EvKind::NavReset, y, n.nav_gen);
    if (trace) *trace << now << " nav_set node=" << y << " until=" << until << " by=" << setter << '\n';
    recompute_busy(y);
  }

  void on_nav_reset(NodeId id, std::uint64_t gen) {
    NodeSt& n = nodes[id];
    if (n.nav_gen != gen || !n.nav_from_rts || n.nav_until <= now) return;
    std::int64_t window_start = now - (2 * sifs_ns + cts_air + 2 * slot_ns);
    if (n.last_rxstart > window_start) return;
    n.nav_until = now;
    n.nav_from_rts = false;
    if (trace) *trace << now << " nav_reset node=" << id << '\n';
    recompute_busy(id);
  }

  void record_collision(LinkId victim, FrameKind frame, CollisionCause cause,
                        std::vector<LinkId> interferers) {
    ++stats_cause(cause).total;
    CollisionRecord rec;
    rec.time_ns = now;
    rec.victim = victim;
    rec.frame = frame;
    rec.cause = cause;
    rec.interferers = std::move(interferers);
    records.push_back(std::move(rec));
  }

  CauseCounts& stats_cause(CollisionCause c) { return cause_counts[std::size_t(c)]; }
  std::array<CauseCounts, kCauseCount> cause_counts{};

  // ---- frame completion ----

  void on_tx_end(std::uint32_t slot) {
    Tx tx = txs[slot];  // copy: slot is freed below
    txs[slot].active = false;
    for (std::size_t i = 0; i < active_txs.size(); ++i) {
      if (active_txs[i] == slot) {
        active_txs[i] = active_txs.back();
        active_txs.pop_back();
        break;
      }
    }
    if (link_active_tx[tx.owner] == int(slot)) link_active_tx[tx.owner] = -1;
    NodeSt& sender = nodes[tx.node];
    sender.transmitting = false;

    if (trace)
      *trace << now << " tx_end kind=" << kind_name(tx.kind) << " node=" << tx.node
             << " link=" << tx.owner << '\n';

    for (NodeId y : relevant) nodes[y].power_in -= field.at(tx.node, y);

    NodeId addressed = tx.to;
    bool addressed_ok = false;
    for (NodeId y : relevant) {
      NodeSt& ny = nodes[y];
      if (ny.lock.tx != int(slot)) continue;
      bool ok = !ny.lock.corrupted;
      if (ok) {
        if (trace)
          *trace << now << " rx_ok node=" << y << " kind=" << kind_name(tx.kind)
                 << " from=" << tx.node << " link=" << tx.owner << '\n';
        if (y == addressed) addressed_ok = true;
        ny.lock = Lock{};
        on_decode(y, tx);
      } else {
        if (y == addressed && !ny.lock.interferers.empty())
          classify_fail(tx, ny.lock.corrupt_time, ny.lock.interferers);
        if (trace)
          *trace << now << " rx_fail node=" << y << " kind=" << kind_name(tx.kind)
                 << " from=" << tx.node << " link=" << tx.owner
                 << " at_start=" << (ny.lock.corrupt_time <= tx.start ? 1 : 0) << '\n';
        ny.lock = Lock{};
      }
    }
    if (!addressed_ok && tx.addr_fail_time >= 0 && !tx.addr_fail_interferers.empty()) {
      classify_fail(tx, tx.addr_fail_time, tx.addr_fail_interferers);
      if (trace)
        *trace << now << " rx_fail node=" << addressed << " kind=" << kind_name(tx.kind)
               << " from=" << tx.node << " link=" << tx.owner
               << " at_start=" << (tx.addr_fail_time <= tx.start ? 1 : 0) << '\n';
    }

    update_link_busy();
    for (NodeId y : relevant) recompute_busy(y);

    // Sender-side timers for the frames that expect a response.
    if (tx.kind == FrameKind::Rts && sender.phase == Phase::WaitCts &&
        sender.current_link == tx.owner) {
      push(now + sifs_ns + cts_air + slot_ns, EvKind::RtsTimeout, tx.node, sender.timeout_gen);
    } else if (tx.kind == FrameKind::Data && sender.phase == Phase::WaitAck &&
               sender.current_link == tx.owner) {
      push(now + sifs_ns + ack_air + slot_ns, EvKind::AckTimeout, tx.node, sender.timeout_gen);
    }

    free_slot(slot);
  }

  void classify_fail(const Tx& tx, std::int64_t fail_time, const std::vector<LinkId>& interferers) {
    bool at_start = fail_time <= tx.start;
    CollisionCause cause;
    if (tx.kind == FrameKind::Rts)
      cause = at_start ? CollisionCause::RtsArrival : CollisionCause::RtsIntermediate;
    else if (tx.kind == FrameKind::Data)
      cause = at_start ? CollisionCause::DataArrival : CollisionCause::DataIntermediate;
    else
      return;  // corrupted CTS/ACK frames are outside the cause taxonomy
    record_collision(tx.owner, tx.kind, cause, interferers);
  }

  void on_decode(NodeId y, const Tx& tx) {
    NodeSt& n = nodes[y];
    switch (tx.kind) {
      case FrameKind::Rts: {
        if (tx.to == y) {
          // Whether the CTS goes out is decided when it would start: the
          // responder checks NAV and channel state after SIFS, not at the
          // instant the RTS ends.
          schedule_tx_begin(now + sifs_ns, y, FrameKind::Cts, tx.owner, tx.node, tx.uid);
        } else {
          set_nav(y, now + 3 * sifs_ns + cts_air + data_air + ack_air, tx.owner, true);
        }
        break;
      }
      case FrameKind::Cts: {
        if (tx.to == y && n.phase == Phase::WaitCts && n.current_link == tx.owner) {
          ++n.timeout_gen;  // cancels the pending RTS timeout
          ++stats[tx.owner].rts_attempts;
          n.short_retries = 0;
          n.phase = Phase::WaitData;
          NodeId dst = links[tx.owner].dst;
          schedule_tx_begin(now + sifs_ns, y, FrameKind::Data, tx.owner, dst,
                            n.queue.front().uid);
        } else if (tx.to != y) {
          set_nav(y, now + 2 * sifs_ns + data_air + ack_air, tx.owner, false);
        }
        break;
      }
      case FrameKind::Data: {
        if (tx.to != y) break;
        schedule_tx_begin(now + sifs_ns, y, FrameKind::Ack, tx.owner, tx.node, tx.uid);
        if (n.seen_uids.insert(tx.uid).second) {
          const SpecState& sp = specs_by_uid(tx.uid);
          std::uint32_t si = uid_spec(tx.uid);
          if (y == sp.spec.path.back()) {
            specs[si].delivered_bits += std::uint64_t(mac.data_size_bytes) * 8;
            if (trace) *trace << now << " deliver node=" << y << " spec=" << si << " uid=" << tx.uid << '\n';
          } else {
            enqueue_packet(y, si);
          }
        }
        break;
      }
      case FrameKind::Ack: {
        if (tx.to == y && n.phase == Phase::WaitAck && n.current_link == tx.owner) {
          ++n.timeout_gen;
          LinkStats& ls = stats[tx.owner];
          ++ls.data_attempts;
          ls.delivered_bits += std::uint64_t(mac.data_size_bytes) * 8;
          head_done(y);
        }
        break;
      }
    }
  }

  // uid layout: high 24 bits spec index, low 40 bits counter.
  std::uint64_t make_uid(std::uint32_t si) {
    return (std::uint64_t(si) << 40) | (++next_uid & ((std::uint64_t(1) << 40) - 1));
  }
  std::uint32_t uid_spec(std::uint64_t uid) const { return std::uint32_t(uid >> 40); }
  const SpecState& specs_by_uid(std::uint64_t uid) const { return specs[uid_spec(uid)]; }

  struct Pending {
    NodeId node;
    FrameKind kind;
    LinkId owner;
    NodeId to;
    std::uint64_t uid;
    std::uint64_t gen;  // sender timeout generation for DATA
  };
  std::vector<Pending> pending;
  std::vector<std::uint32_t> free_pending;

  void schedule_tx_begin(std::int64_t t, NodeId node, FrameKind kind, LinkId owner, NodeId to,
                         std::uint64_t uid) {
    std::uint32_t i;
    if (!free_pending.empty()) {
      i = free_pending.back();
      free_pending.pop_back();
    } else {
      pending.push_back({});
      i = std::uint32_t(pending.size() - 1);
    }
    pending[i] = Pending{node, kind, owner, to, uid, nodes[node].timeout_gen};
    push(t, EvKind::TxBegin, i);
  }

  void on_tx_begin(std::uint32_t i) {
    Pending p = pending[i];
    free_pending.push_back(i);
    NodeSt& n = nodes[p.node];
    if (p.kind == FrameKind::Data) {
      if (n.phase != Phase::WaitData || n.timeout_gen != p.gen || n.current_link != p.owner)
        return;
      if (n.transmitting) {
        // Radio got claimed by a response frame in the meantime. Fall back to
        // a fresh contention round instead of stranding the exchange.
        n.phase = Phase::Backoff;
        n.backoff_remaining = std::uint32_t(rng() % (std::uint64_t(n.cw) + 1));
        n.backoff_done = -1;
        if (!n.contention_busy) schedule_backoff(p.node);
        return;
      }
      n.phase = Phase::WaitAck;
      start_tx(p.node, p.kind, p.owner, p.to, p.uid);
      return;
    }
    if (p.kind == FrameKind::Cts) {
      if (n.nav_until > now) {
        std::vector<LinkId> inter;
        if (n.nav_setter != kNoLink) inter.push_back(n.nav_setter);
        record_collision(p.owner, FrameKind::Cts, CollisionCause::CtsVcs, std::move(inter));
        if (trace)
          *trace << now << " cts_suppressed node=" << p.node << " link=" << p.owner
                 << " cause=CTS-VCS\n";
        return;
      }
      if (n.power_in >= cs_th) {
        record_collision(p.owner, FrameKind::Cts, CollisionCause::CtsPcs, active_owners(-1));
        if (trace)
          *trace << now << " cts_suppressed node=" << p.node << " link=" << p.owner
                 << " cause=CTS-PCS\n";
        return;
      }
    }
    if (n.transmitting) return;  // half-duplex guard; responder frame is skipped
    start_tx(p.node, p.kind, p.owner, p.to, p.uid);
  }

  // ---- timeouts, backoff, arrivals ----

  void on_backoff_done(NodeId id, std::uint64_t gen) {
    NodeSt& n = nodes[id];
    if (gen != n.backoff_gen || n.phase != Phase::Backoff) return;
    n.backoff_done = -1;
    n.backoff_remaining = 0;
    const Packet& head = n.queue.front();
    NodeId dst = links[head.out_link].dst;
    if (mac.rts_cts_enabled) {
      n.phase = Phase::WaitCts;
      ++n.timeout_gen;
      start_tx(id, FrameKind::Rts, head.out_link, dst, head.uid);
    } else {
      n.phase = Phase::WaitAck;
      ++n.timeout_gen;
      start_tx(id, FrameKind::Data, head.out_link, dst, head.uid);
    }
  }

  void bump_cw(NodeSt& n) { n.cw = std::min(2 * n.cw + 1, mac.cw_max); }

  void on_rts_timeout(NodeId id, std::uint64_t gen) {
    NodeSt& n = nodes[id];
    if (gen != n.timeout_gen || n.phase != Phase::WaitCts) return;
    LinkId l = n.current_link;
    ++stats[l].rts_attempts;
    ++stats[l].rts_timeouts;
    if (trace) *trace << now << " rts_timeout node=" << id << " link=" << l << '\n';
    ++n.short_retries;
    bump_cw(n);
    if (n.short_retries > mac.short_retry_limit) {
      ++stats[l].retry_drops;
      if (trace) *trace << now << " drop node=" << id << " link=" << l << " reason=retry\n";
      head_done(id);
    } else {
      n.phase = Phase::Backoff;
      n.backoff_remaining = std::uint32_t(rng() % (std::uint64_t(n.cw) + 1));
      n.backoff_done = -1;
      if (!n.contention_busy) schedule_backoff(id);
    }
  }

  void on_ack_timeout(NodeId id, std::uint64_t gen) {
    NodeSt& n = nodes[id];
    if (gen != n.timeout_gen || n.phase != Phase::WaitAck) return;
    LinkId l = n.current_link;
    ++stats[l].data_attempts;
    ++stats[l].ack_timeouts;
    if (trace) *trace << now << " ack_timeout node=" << id << " link=" << l << '\n';
    ++n.long_retries;
    bump_cw(n);
    if (n.long_retries > mac.long_retry_limit) {
      ++stats[l].retry_drops;
      if (trace) *trace << now << " drop node=" << id << " link=" << l << " reason=retry\n";
      head_done(id);
    } else {
      n.phase = Phase::Backoff;
      n.backoff_remaining = std::uint32_t(rng() % (std::uint64_t(n.cw) + 1));
      n.backoff_done = -1;
      if (!n.contention_busy) schedule_backoff(id);
    }
  }

  void on_arrival(std::uint32_t si) {
    enqueue_packet(specs[si].spec.path.front(), si);
    push(now + specs[si].arrival_interval_ns, EvKind::Arrival, si);
  }

  // ---- main loop ----

  SimResult run(const std::vector<TrafficSpec>& traffic) {
    build(traffic);
    kick_off();
    for (NodeId y : relevant) maybe_start_contention(y);

    while (!pq.empty() && pq.top().t <= horizon) {
      Ev ev = pq.top();
      pq.pop();
      now = ev.t;
      switch (ev.kind) {
        case EvKind::TxEnd: on_tx_end(ev.a); break;
        case EvKind::TxBegin: on_tx_begin(ev.a); break;
        case EvKind::BackoffDone: on_backoff_done(ev.a, ev.b); break;
        case EvKind::RtsTimeout: on_rts_timeout(ev.a, ev.b); break;
        case EvKind::AckTimeout: on_ack_timeout(ev.a, ev.b); break;
        case EvKind::Arrival: on_arrival(ev.a); break;
        case EvKind::NavExpire: recompute_busy(ev.a); break;
        case EvKind::NavReset: on_nav_reset(ev.a, ev.b); break;
      }
    }
    now = horizon;

    SimResult res;
    res.links = links;
    res.stats.links = std::move(stats);
    res.stats.causes = cause_counts;
    res.stats.duration_s = double(horizon) * 1e-9;
    for (LinkId l = 0; l < links.size(); ++l) {
      LinkStats& ls = res.stats.links[l];
      ls.rts_timeout_frac =
          ls.rts_attempts ? double(ls.rts_timeouts) / double(ls.rts_attempts) : 0.0;
      ls.ack_timeout_frac =
          ls.data_attempts ? double(ls.ack_timeouts) / double(ls.data_attempts) : 0.0;
      ls.throughput_bps = double(ls.delivered_bits) / res.stats.duration_s;
      for (int e = 0; e < 2; ++e) {
        EndpointBusy& eb = link_busy[l][e];
        if (eb.busy) eb.acc += horizon - eb.last;
      }
      ls.busy_time_src = double(link_busy[l][0].acc) / double(horizon);
      ls.busy_time_dst = double(link_busy[l][1].acc) / double(horizon);
    }
    res.records = std::move(records);
    res.queue_drops = queue_drops;
    for (const SpecState& sp : specs) res.route_delivered_bits.push_back(double(sp.delivered_bits));
    return res;
  }
};

}  // namespace

SimResult simulate(const SignalField& field, const RadioParams& radio,
                   const std::vector<TrafficSpec>& traffic, const MacParams& mac,
                   double duration_s, std::uint64_t seed, std::ostream* trace) {
  radio.validate();
  field.validate();
  mac.validate();
  if (!(duration_s > 0.0)) throw std::invalid_argument("duration must be positive");
  if (traffic.empty()) throw std::invalid_argument("no traffic specs");
  Sim sim(field, radio, mac, duration_s, seed, trace);
  return sim.run(traffic);
}

double dcf_single_link_throughput_bps(const MacParams& mac) {
  auto air = [&](std::uint32_t bytes) {
    std::uint64_t bits = std::uint64_t(bytes) * 8;
    return double((bits * 1'000'000'000ull + mac.bit_rate_bps - 1) / mac.bit_rate_bps);
  };
  double cycle_ns = double(mac.difs_us) * 1000.0 +
                    double(mac.cw_min) / 2.0 * double(mac.slot_time_us) * 1000.0;
  if (mac.rts_cts_enabled)
    cycle_ns += air(mac.rts_size_bytes) + air(mac.cts_size_bytes) +
                double(mac.sifs_us) * 1000.0 * 3.0;
  else
    cycle_ns += double(mac.sifs_us) * 1000.0;
  cycle_ns += air(mac.data_size_bytes) + air(mac.ack_size_bytes);
  double bits = double(mac.data_size_bytes) * 8.0;
  return bits / (cycle_ns * 1e-9);
}

std::uint64_t attribute_mics(SimStats& stats, const std::vector<CollisionRecord>& records,
                             const MicsFamily& mics) {
  for (CauseCounts& c : stats.causes) c.intra = c.inter = 0;
  std::uint64_t skipped = 0;
  const std::size_t n = mics.membership.size();
  for (const CollisionRecord& rec : records) {
    if (rec.victim >= n) {
      ++skipped;
      continue;
    }
    bool bad = false;
    for (LinkId i : rec.interferers)
      if (i >= n) bad = true;
    if (bad) {
      ++skipped;
      continue;
    }
    const auto& vm = mics.membership[rec.victim];
    bool intra = false;
    for (LinkId i : rec.interferers) {
      const auto& im = mics.membership[i];
      std::size_t a = 0, b = 0;
      while (a < vm.size() && b < im.size()) {
        if (vm[a] == im[b]) { intra = true; break; }
        if (vm[a] < im[b]) ++a; else ++b;
      }
      if (intra) break;
    }
    CauseCounts& c = stats.causes[std::size_t(rec.cause)];
    if (intra) ++c.intra; else ++c.inter;
  }
  return skipped;
}

void write_sim_csv(std::ostream& out, const std::vector<ActiveLink>& links, const SimStats& stats,
                   const std::string& header) {
  if (!header.empty()) out << header << '\n';
  out << "link,src,dst,rts_attempts,rts_timeouts,rts_timeout_frac,data_attempts,ack_timeouts,"
         "ack_timeout_frac,delivered_bits,throughput_bps,busy_time_src,busy_time_dst,retry_drops\n";
  for (std::size_t l = 0; l < links.size(); ++l) {
    const LinkStats& s = stats.links[l];
    out << l << ',' << links[l].src << ',' << links[l].dst << ',' << s.rts_attempts << ','
        << s.rts_timeouts << ',' << fmt_double(s.rts_timeout_frac) << ',' << s.data_attempts << ','
        << s.ack_timeouts << ',' << fmt_double(s.ack_timeout_frac) << ',' << s.delivered_bits << ','
        << fmt_double(s.throughput_bps) << ',' << fmt_double(s.busy_time_src) << ','
        << fmt_double(s.busy_time_dst) << ',' << s.retry_drops << '\n';
  }
  out << "\ncause,total,intra_mics,inter_mics\n";
  for (std::size_t c = 0; c < kCauseCount; ++c) {
    out << cause_name(CollisionCause(c)) << ',' << stats.causes[c].total << ','
        << stats.causes[c].intra << ',' << stats.causes[c].inter << '\n';
  }
}

}  // namespace micsnet
