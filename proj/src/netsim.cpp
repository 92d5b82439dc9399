#include "dowsn/netsim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

namespace dowsn {

// ---- packets ---------------------------------------------------------------

std::size_t payload_size(int dimension)
{
    if (dimension < 1)
        throw std::invalid_argument("payload: dimension must be positive");
    const auto bytes = 4 * (static_cast<std::size_t>(dimension) + 1);
    if (bytes > kMaxPayloadBytes)
        throw PayloadTooLarge("payload: " + std::to_string(dimension) + " variables need " + std::to_string(bytes)
                              + " bytes, the limit is " + std::to_string(kMaxPayloadBytes)
                              + " (at most 31 variables)");
    return bytes;
}

std::vector<std::uint8_t> encode(const Solution& s)
{
    if (!s.fitness)
        throw std::invalid_argument("encode: solution has no fitness");
    std::vector<std::uint8_t> out;
    out.reserve(payload_size(static_cast<int>(s.x.size())));
    const auto put = [&](Fx v) {
        const auto u = static_cast<std::uint32_t>(v.raw());
        for (int shift = 24; shift >= 0; shift -= 8)
            out.push_back(static_cast<std::uint8_t>(u >> shift));
    };
    for (const Fx v : s.x)
        put(v);
    put(*s.fitness);
    return out;
}

Solution decode(std::span<const std::uint8_t> payload, int dimension)
{
    const auto expected = payload_size(dimension);
    if (payload.size() != expected)
        throw std::invalid_argument("decode: expected " + std::to_string(expected) + " bytes, got "
                                    + std::to_string(payload.size()));
    const auto get = [&](std::size_t i) {
        std::uint32_t u = 0;
        for (std::size_t b = 0; b < 4; ++b)
            u = (u << 8) | payload[4 * i + b];
        return Fx::from_raw(static_cast<std::int32_t>(u));
    };
    Solution s;
    const auto n = static_cast<std::size_t>(dimension);
    s.x.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        s.x.push_back(get(i));
    s.fitness = get(n);
    return s;
}

// ---- topology --------------------------------------------------------------

Topology::Topology(int nodes) : adj_(static_cast<std::size_t>(std::max(nodes, 0))) {}

bool Topology::linked(int a, int b) const
{
    const auto& na = neighbors(a);
    return std::binary_search(na.begin(), na.end(), b);
}

void Topology::link(int a, int b)
{
    if (a == b)
        throw std::invalid_argument("topology: self-loop");
    if (a < 0 || b < 0 || a >= size() || b >= size())
        throw std::out_of_range("topology: unknown node");
    for (auto [u, v] : {std::pair{a, b}, std::pair{b, a}}) {
        auto& list = adj_[static_cast<std::size_t>(u)];
        const auto it = std::lower_bound(list.begin(), list.end(), v);
        if (it == list.end() || *it != v)
            list.insert(it, v);
    }
}

int Topology::add_node(const std::vector<int>& neighbors)
{
    adj_.emplace_back();
    const int id = size() - 1;
    for (int v : neighbors)
        link(id, v);
    return id;
}

bool Topology::connected() const
{
    if (adj_.empty())
        return true;
    std::vector<bool> seen(adj_.size(), false);
    std::vector<int> stack{0};
    seen[0] = true;
    std::size_t count = 1;
    while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (int v : adj_[static_cast<std::size_t>(u)]) {
            if (!seen[static_cast<std::size_t>(v)]) {
                seen[static_cast<std::size_t>(v)] = true;
                ++count;
                stack.push_back(v);
            }
        }
    }
    return count == adj_.size();
}

namespace {

constexpr std::array<std::string_view, 3> kTopologyKeys{"complete", "ring", "random_geometric"};
constexpr std::array<std::string_view, 3> kTraceKeys{"none", "improvements", "full"};

double unit_double(Rng& rng) { return static_cast<double>(rng.next_u64() >> 11) * 0x1.0p-53; }

} // namespace

std::string_view to_string(TopologyKind k) noexcept { return kTopologyKeys[static_cast<std::size_t>(k)]; }

std::optional<TopologyKind> parse_topology_kind(std::string_view s) noexcept
{
    for (std::size_t i = 0; i < kTopologyKeys.size(); ++i)
        if (kTopologyKeys[i] == s)
            return static_cast<TopologyKind>(i);
    return std::nullopt;
}

Topology gen_topology(const TopologySpec& spec, int nodes, Rng& rng)
{
    if (nodes < 1)
        throw std::invalid_argument("topology: at least one node is required");
    Topology t(nodes);
    switch (spec.kind) {
    case TopologyKind::complete:
        for (int a = 0; a < nodes; ++a)
            for (int b = a + 1; b < nodes; ++b)
                t.link(a, b);
        return t;
    case TopologyKind::ring:
        for (int a = 0; a < nodes && nodes > 1; ++a)
            if ((a + 1) % nodes != a && !t.linked(a, (a + 1) % nodes))
                t.link(a, (a + 1) % nodes);
        return t;
    case TopologyKind::random_geometric: {
        if (!(spec.range > 0))
            throw std::invalid_argument("topology: radio range must be positive");
        const double r2 = spec.range * spec.range;
        for (int attempt = 0; attempt < 10000; ++attempt) {
            Topology g(nodes);
            std::vector<std::pair<double, double>> pos(static_cast<std::size_t>(nodes));
            for (auto& [x, y] : pos) {
                x = unit_double(rng);
                y = unit_double(rng);
            }
            for (int a = 0; a < nodes; ++a) {
                for (int b = a + 1; b < nodes; ++b) {
                    const double dx = pos[static_cast<std::size_t>(a)].first - pos[static_cast<std::size_t>(b)].first;
                    const double dy = pos[static_cast<std::size_t>(a)].second - pos[static_cast<std::size_t>(b)].second;
                    if (dx * dx + dy * dy <= r2)
                        g.link(a, b);
                }
            }
            if (g.connected())
                return g;
        }
        throw std::runtime_error("topology: no connected placement found; increase the radio range");
    }
    }
    throw std::invalid_argument("topology: unknown kind");
}

// ---- channel ---------------------------------------------------------------

void validate(const ChannelModel& ch)
{
    if (!(ch.loss_prob >= 0 && ch.loss_prob <= 1))
        throw std::invalid_argument("channel: loss probability must lie in [0, 1]");
    if (ch.latency < SimTime::zero())
        throw std::invalid_argument("channel: latency must be non-negative");
    if (ch.collision_window < SimTime::zero())
        throw std::invalid_argument("channel: collision window must be non-negative");
}

std::vector<Delivery> broadcast(const Topology& topo, const ChannelModel& ch, int sender, SimTime clock, Rng& rng)
{
    std::vector<Delivery> out;
    for (int r : topo.neighbors(sender)) {
        if (ch.loss_prob > 0 && unit_double(rng) < ch.loss_prob)
            continue;
        out.push_back({clock + ch.latency, r});
    }
    return out;
}

// ---- events ----------------------------------------------------------------

bool EventQueue::Later::operator()(const SimEvent& a, const SimEvent& b) const noexcept
{
    if (a.time != b.time)
        return a.time > b.time;
    if (a.kind != b.kind)
        return a.kind > b.kind;
    if (a.node != b.node)
        return a.node > b.node;
    return a.seq > b.seq;
}

void EventQueue::push(SimTime time, EventKind kind, int node, std::int64_t aux)
{
    heap_.push({time, kind, node, aux, seq_++});
}

SimEvent EventQueue::pop()
{
    SimEvent ev = heap_.top();
    heap_.pop();
    return ev;
}

// ---- trace -----------------------------------------------------------------

std::string_view to_string(TraceLevel l) noexcept { return kTraceKeys[static_cast<std::size_t>(l)]; }

std::optional<TraceLevel> parse_trace_level(std::string_view s) noexcept
{
    for (std::size_t i = 0; i < kTraceKeys.size(); ++i)
        if (kTraceKeys[i] == s)
            return static_cast<TraceLevel>(i);
    return std::nullopt;
}

double Trace::network_fitness() const
{
    double sum = 0;
    int count = 0;
    for (const auto& f : finals) {
        if (f.best.fitness) {
            sum += f.best.fitness->to_real();
            ++count;
        }
    }
    return count ? sum / count : NAN;
}

double Trace::min_fitness() const
{
    double best = INFINITY;
    for (const auto& f : finals)
        if (f.best.fitness)
            best = std::min(best, f.best.fitness->to_real());
    return std::isinf(best) ? NAN : best;
}

namespace {

std::string format_time(SimTime t)
{
    const auto us = t.count();
    const auto mag = us < 0 ? -us : us;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%s%lld.%06lld", us < 0 ? "-" : "", static_cast<long long>(mag / 1'000'000),
                  static_cast<long long>(mag % 1'000'000));
    return buf;
}

std::optional<SimTime> parse_time(std::string_view s)
{
    bool neg = false;
    if (!s.empty() && s.front() == '-') {
        neg = true;
        s.remove_prefix(1);
    }
    const auto dot = s.find('.');
    const std::string_view whole = s.substr(0, dot);
    std::string_view frac = dot == std::string_view::npos ? std::string_view{} : s.substr(dot + 1);
    if (whole.empty() || frac.size() > 6)
        return std::nullopt;
    long long w = 0;
    if (std::from_chars(whole.data(), whole.data() + whole.size(), w).ptr != whole.data() + whole.size())
        return std::nullopt;
    long long f = 0;
    if (!frac.empty()) {
        if (std::from_chars(frac.data(), frac.data() + frac.size(), f).ptr != frac.data() + frac.size() || f < 0)
            return std::nullopt;
        for (std::size_t i = frac.size(); i < 6; ++i)
            f *= 10;
    }
    const long long us = w * 1'000'000 + f;
    return SimTime{neg ? -us : us};
}

template <class T>
std::optional<T> parse_int(std::string_view s)
{
    T v{};
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        return std::nullopt;
    return v;
}

void append_solution(std::string& out, Fx fitness, const std::vector<Fx>& x)
{
    out += ',';
    out += to_string(fitness);
    for (const Fx v : x) {
        out += ',';
        out += to_string(v);
    }
}

constexpr std::array<std::string_view, 3> kNetKeys{"SEND", "RECV", "ACCEPT"};

std::vector<std::string_view> split_fields(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma - start));
        if (comma == std::string_view::npos)
            break;
        start = comma + 1;
    }
    return out;
}

} // namespace

std::string Trace::serialize(TraceLevel level) const
{
    std::string out = "# dowsn-trace dim=" + std::to_string(dimension) + " end=" + format_time(end) + "\n";
    if (level != TraceLevel::none) {
        for (const auto& rec : records) {
            if (const auto* imp = std::get_if<Improvement>(&rec)) {
                out += "IMP," + format_time(imp->time) + ',' + std::to_string(imp->node) + ','
                       + std::to_string(imp->evals);
                append_solution(out, imp->fitness, imp->x);
                out += '\n';
            } else if (level == TraceLevel::full) {
                const auto& net = std::get<NetRecord>(rec);
                out += "NET," + format_time(net.time) + ',' + std::to_string(net.src) + ','
                       + (net.dst < 0 ? std::string("*") : std::to_string(net.dst)) + ','
                       + std::string(kNetKeys[static_cast<std::size_t>(net.kind)]) + '\n';
            }
        }
    }
    for (const auto& fin : finals) {
        out += "FIN," + std::to_string(fin.node) + ',' + std::string(to_string(fin.algorithm)) + ','
               + format_time(fin.boot) + ',' + format_time(fin.done) + ',' + std::to_string(fin.evals) + ','
               + format_time(fin.ledger.time(PowerState::cpu)) + ',' + format_time(fin.ledger.time(PowerState::lpm))
               + ',' + format_time(fin.ledger.time(PowerState::tx)) + ','
               + format_time(fin.ledger.time(PowerState::rx));
        if (fin.best.fitness)
            append_solution(out, *fin.best.fitness, fin.best.x);
        out += '\n';
    }
    return out;
}

Trace Trace::parse(std::string_view text)
{
    Trace t;
    int line_no = 0;
    bool header = false;
    const auto fail = [&](const std::string& why) {
        throw std::runtime_error("trace line " + std::to_string(line_no) + ": " + why);
    };
    const auto need_time = [&](std::string_view s) {
        const auto v = parse_time(s);
        if (!v)
            fail("bad time '" + std::string(s) + "'");
        return *v;
    };
    const auto need_fx = [&](std::string_view s) {
        const auto v = parse_fx(s);
        if (!v)
            fail("bad fixed-point value '" + std::string(s) + "'");
        return *v;
    };
    const auto need_int = [&](std::string_view s) {
        const auto v = parse_int<long long>(s);
        if (!v)
            fail("bad integer '" + std::string(s) + "'");
        return *v;
    };
    const auto read_solution = [&](const std::vector<std::string_view>& f, std::size_t at, Fx& fitness,
                                   std::vector<Fx>& x) {
        if (f.size() != at + 1 + static_cast<std::size_t>(t.dimension))
            fail("expected " + std::to_string(t.dimension) + " coordinates");
        fitness = need_fx(f[at]);
        x.clear();
        for (std::size_t i = at + 1; i < f.size(); ++i)
            x.push_back(need_fx(f[i]));
    };

    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos)
            nl = text.size();
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        if (line.empty())
            continue;
        if (line.front() == '#') {
            std::istringstream in{std::string(line.substr(1))};
            std::string word;
            while (in >> word) {
                if (word.rfind("dim=", 0) == 0) {
                    const auto d = parse_int<int>(std::string_view(word).substr(4));
                    if (!d || *d < 1)
                        fail("bad dimension");
                    t.dimension = *d;
                    header = true;
                } else if (word.rfind("end=", 0) == 0) {
                    t.end = need_time(std::string_view(word).substr(4));
                }
            }
            continue;
        }
        if (!header)
            fail("record before the header");
        const auto f = split_fields(line);
        if (f[0] == "IMP") {
            if (f.size() < 5)
                fail("truncated IMP record");
            Improvement imp{need_time(f[1]), static_cast<int>(need_int(f[2])), need_int(f[3]), {}, {}, 0, false};
            imp.origin = imp.node;
            read_solution(f, 4, imp.fitness, imp.x);
            t.records.emplace_back(std::move(imp));
        } else if (f[0] == "NET") {
            if (f.size() != 5)
                fail("NET record needs 5 fields");
            NetRecord net{need_time(f[1]), static_cast<int>(need_int(f[2])),
                          f[3] == "*" ? -1 : static_cast<int>(need_int(f[3])), NetKind::send};
            const auto it = std::find(kNetKeys.begin(), kNetKeys.end(), f[4]);
            if (it == kNetKeys.end())
                fail("unknown NET kind '" + std::string(f[4]) + "'");
            net.kind = static_cast<NetKind>(it - kNetKeys.begin());
            t.records.emplace_back(net);
        } else if (f[0] == "FIN") {
            if (f.size() < 10)
                fail("truncated FIN record");
            FinalRecord fin{};
            fin.node = static_cast<int>(need_int(f[1]));
            const auto algo = parse_algorithm_id(f[2]);
            if (!algo)
                fail("unknown algorithm '" + std::string(f[2]) + "'");
            fin.algorithm = *algo;
            fin.boot = need_time(f[3]);
            fin.done = need_time(f[4]);
            fin.evals = need_int(f[5]);
            fin.ledger.record(PowerState::cpu, need_time(f[6]));
            fin.ledger.record(PowerState::lpm, need_time(f[7]));
            fin.ledger.record(PowerState::tx, need_time(f[8]));
            fin.ledger.record(PowerState::rx, need_time(f[9]));
            if (f.size() > 10) {
                Fx fit;
                read_solution(f, 10, fit, fin.best.x);
                fin.best.fitness = fit;
            }
            t.finals.push_back(std::move(fin));
        } else {
            fail("unknown record type '" + std::string(f[0]) + "'");
        }
    }
    if (!header)
        throw std::runtime_error("trace: missing header");
    return t;
}

// ---- simulator -------------------------------------------------------------

void validate(const SimConfig& cfg)
{
    payload_size(cfg.problem.dimension());
    validate(cfg.params);
    validate(cfg.node);
    validate(cfg.channel);
    if (cfg.nodes < 1)
        throw std::invalid_argument("simulation: at least one node is required");
    if (cfg.cost.c0 < SimTime::zero() || cfg.cost.c1 < SimTime::zero())
        throw std::invalid_argument("simulation: evaluation costs must be non-negative");
    if (cfg.cost.per_eval(cfg.problem.dimension()) <= SimTime::zero())
        throw std::invalid_argument("simulation: an evaluation must take time");
    if (cfg.radio.bitrate_bps <= 0 || cfg.radio.listen_window < SimTime::zero())
        throw std::invalid_argument("simulation: invalid radio model");
}

std::uint64_t node_seed(std::uint64_t run_seed, int id) { return mix_seed(run_seed, static_cast<std::uint64_t>(id)); }

namespace {

// Stream numbers within a node seed.
constexpr std::uint64_t kOptStream = 1;
constexpr std::uint64_t kNetStream = 2;
constexpr std::uint64_t kSelectStream = 3;
constexpr std::uint64_t kChannelStream = 0xC4A77E1ULL;
constexpr std::uint64_t kTopologyStream = 0x70B0ULL;

} // namespace

Simulator::Simulator(SimConfig cfg) : cfg_(std::move(cfg)), channel_rng_(Rng(cfg_.seed).split(kChannelStream))
{
    validate(cfg_);
    Rng topo_rng = Rng(cfg_.seed).split(kTopologyStream);
    topo_ = gen_topology(cfg_.topology, cfg_.nodes, topo_rng);
    trace_.dimension = cfg_.problem.dimension();
    nodes_.resize(static_cast<std::size_t>(cfg_.nodes));
    for (int id = 0; id < cfg_.nodes; ++id)
        boot(id, SimTime::zero(), cfg_.node);
}

const Node& Simulator::node(int id) const
{
    if (id < 0 || id >= node_count() || !nodes_[static_cast<std::size_t>(id)])
        throw std::out_of_range("simulation: node " + std::to_string(id) + " has not booted");
    return *nodes_[static_cast<std::size_t>(id)];
}

void Simulator::boot(int id, SimTime time, NodeConfig cfg)
{
    const Rng base(node_seed(cfg_.seed, id));
    if (cfg_.mode == AdbMode::heterogeneous) {
        Rng select = base.split(kSelectStream);
        cfg.algorithm = adb_select(AdbMode::heterogeneous, select);
    }
    nodes_[static_cast<std::size_t>(id)] = std::make_unique<Node>(id, cfg, cfg_.problem, cfg_.params,
                                                                  base.split(kOptStream), base.split(kNetStream), time);
    queue_.push(time, EventKind::opt, id);
    if (cfg.communicating)
        queue_.push(time + cfg.comm_period, EventKind::net, id, (time + cfg.comm_period).count());
}

void Simulator::join_node(int id, SimTime time, const NodeConfig& cfg, const std::vector<int>& neighbors)
{
    if (ran_)
        throw std::logic_error("simulation: join after run");
    const int expected = node_count() + static_cast<int>(joins_.size());
    if (id != expected)
        throw std::invalid_argument("simulation: node id " + std::to_string(id) + " is taken or out of sequence (next is "
                                    + std::to_string(expected) + ")");
    if (time < SimTime::zero())
        throw std::invalid_argument("simulation: join time must be non-negative");
    validate(cfg);
    for (int v : neighbors)
        if (v < 0 || v >= expected)
            throw std::invalid_argument("simulation: unknown neighbor " + std::to_string(v));
    joins_.push_back({id, time, cfg, neighbors});
    queue_.push(time, EventKind::join, id, static_cast<std::int64_t>(joins_.size() - 1));
}

void Simulator::flush_improvements()
{
    if (cfg_.trace_level != TraceLevel::none)
        for (auto& imp : imp_buffer_)
            trace_.records.emplace_back(std::move(imp));
    imp_buffer_.clear();
}

void Simulator::handle_join(const SimEvent& ev)
{
    const auto& j = joins_[static_cast<std::size_t>(ev.aux)];
    nodes_.resize(std::max(nodes_.size(), static_cast<std::size_t>(j.id) + 1));
    while (topo_.size() <= j.id)
        topo_.add_node({});
    for (int v : j.neighbors)
        topo_.link(j.id, v);
    boot(j.id, ev.time, j.cfg);
}

void Simulator::handle_opt(const SimEvent& ev)
{
    Node& n = *nodes_[static_cast<std::size_t>(ev.node)];
    if (n.done())
        return;
    if (n.busy_until() > ev.time) {
        queue_.push(n.busy_until(), EventKind::opt, ev.node);
        return;
    }
    n.opt_event(ev.time, cfg_.cost, &imp_buffer_);
    flush_improvements();
    if (!n.done())
        queue_.push(n.busy_until(), EventKind::opt, ev.node);
}

void Simulator::handle_net(const SimEvent& ev)
{
    Node& n = *nodes_[static_cast<std::size_t>(ev.node)];
    if (n.done())
        return;
    if (n.busy_until() > ev.time) {
        queue_.push(n.busy_until(), EventKind::net, ev.node, ev.aux);
        return;
    }
    const int id = ev.node;
    const auto bytes = payload_size(cfg_.problem.dimension());
    std::vector<int> accepted;
    const auto out = n.net_event(ev.time, cfg_.radio.tx_time(bytes), cfg_.radio.listen_window, &imp_buffer_, &accepted);
    const bool full = cfg_.trace_level == TraceLevel::full;
    for (std::size_t i = 0; i < imp_buffer_.size(); ++i) {
        if (full)
            trace_.records.emplace_back(NetRecord{ev.time, accepted[i], id, NetKind::accept});
        if (cfg_.trace_level != TraceLevel::none)
            trace_.records.emplace_back(std::move(imp_buffer_[i]));
    }
    imp_buffer_.clear();

    if (out) {
        Packet pkt{id, encode(*out), n.local_best_origin()};
        trace_.max_payload = std::max<std::int64_t>(trace_.max_payload, static_cast<std::int64_t>(pkt.payload.size()));
        if (full)
            trace_.records.emplace_back(NetRecord{ev.time, id, -1, NetKind::send});
        for (const auto& d : broadcast(topo_, cfg_.channel, id, ev.time, channel_rng_)) {
            const std::size_t slot = deliveries_.size();
            deliveries_.push_back({pkt, d.receiver, d.time});
            if (cfg_.channel.collision_window > SimTime::zero()) {
                auto& recent = recent_[d.receiver];
                std::erase_if(recent, [&](std::size_t s) {
                    return deliveries_[s].time + cfg_.channel.collision_window <= d.time;
                });
                for (std::size_t s : recent) {
                    if (deliveries_[s].packet.sender != id) {
                        deliveries_[s].voided = true;
                        deliveries_[slot].voided = true;
                    }
                }
                recent.push_back(slot);
            }
            queue_.push(d.time, EventKind::deliver, d.receiver, static_cast<std::int64_t>(slot));
        }
    }
    const SimTime next = SimTime{ev.aux} + n.config().comm_period;
    queue_.push(std::max(next, n.busy_until()), EventKind::net, id, next.count());
}

void Simulator::handle_deliver(const SimEvent& ev)
{
    auto& d = deliveries_[static_cast<std::size_t>(ev.aux)];
    Node& n = *nodes_[static_cast<std::size_t>(d.receiver)];
    if (d.voided || n.done()) {
        d.packet.payload.clear();
        return;
    }
    if (cfg_.trace_level == TraceLevel::full)
        trace_.records.emplace_back(NetRecord{ev.time, d.packet.sender, d.receiver, NetKind::recv});
    n.inbox().push_back({d.packet.sender, decode(d.packet.payload, cfg_.problem.dimension()), d.packet.origin});
    d.packet.payload.clear();
}

Trace Simulator::run()
{
    if (ran_)
        throw std::logic_error("simulation: run called twice");
    ran_ = true;
    SimTime clock{};
    while (!queue_.empty()) {
        const SimEvent ev = queue_.pop();
        if (ev.time < clock)
            throw std::logic_error("simulation: event queue went back in time");
        clock = ev.time;
        switch (ev.kind) {
        case EventKind::join: handle_join(ev); break;
        case EventKind::deliver: handle_deliver(ev); break;
        case EventKind::net: handle_net(ev); break;
        case EventKind::opt: handle_opt(ev); break;
        }
    }
    SimTime end{};
    for (const auto& n : nodes_)
        if (n)
            end = std::max({end, n->done_time(), n->busy_until()});
    trace_.end = end;
    for (auto& n : nodes_) {
        if (!n)
            continue;
        n->finish(end);
        trace_.finals.push_back(
            {n->id(), n->algorithm(), n->boot_time(), n->done_time(), n->evals(), n->ledger(), n->local_best()});
    }
    return std::move(trace_);
}

} // namespace dowsn
