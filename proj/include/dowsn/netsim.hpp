#pragma once

// Deterministic discrete-event simulation of a DOWSN network.

#include "dowsn/island.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace dowsn {

// ---- packets ---------------------------------------------------------------

constexpr std::size_t kMaxPayloadBytes = 128;

class PayloadTooLarge : public std::length_error {
public:
    using std::length_error::length_error;
};

std::size_t payload_size(int dimension);

// Big-endian 32-bit raw values: x_1..x_n, then the fitness.
std::vector<std::uint8_t> encode(const Solution& s);
Solution decode(std::span<const std::uint8_t> payload, int dimension);

struct Packet {
    int sender;
    std::vector<std::uint8_t> payload;
    int origin; // lineage tag, not part of the payload
};

// ---- topology --------------------------------------------------------------

class Topology {
public:
    Topology() = default;
    explicit Topology(int nodes);

    int size() const noexcept { return static_cast<int>(adj_.size()); }
    const std::vector<int>& neighbors(int node) const { return adj_.at(static_cast<std::size_t>(node)); }
    bool linked(int a, int b) const;
    void link(int a, int b);
    // Adds a node with the given neighbors and returns its id.
    int add_node(const std::vector<int>& neighbors);
    bool connected() const;

private:
    std::vector<std::vector<int>> adj_;
};

enum class TopologyKind { complete, ring, random_geometric };

std::string_view to_string(TopologyKind k) noexcept;
std::optional<TopologyKind> parse_topology_kind(std::string_view s) noexcept;

struct TopologySpec {
    TopologyKind kind = TopologyKind::random_geometric;
    double range = 0.6; // radio range in the unit square
};

// Random geometric graphs are resampled until connected; throws
// std::runtime_error if that fails repeatedly.
Topology gen_topology(const TopologySpec& spec, int nodes, Rng& rng);

// ---- channel ---------------------------------------------------------------

struct ChannelModel {
    double loss_prob = 0.0;
    SimTime collision_window{0};
    SimTime latency{1'000};
};

void validate(const ChannelModel& ch);

struct Delivery {
    SimTime time;
    int receiver;
};

// Receivers of one broadcast sent at `clock`, after independent losses.
std::vector<Delivery> broadcast(const Topology& topo, const ChannelModel& ch, int sender, SimTime clock, Rng& rng);

// ---- events ----------------------------------------------------------------

enum class EventKind { join = 0, deliver = 1, net = 2, opt = 3 };

struct SimEvent {
    SimTime time;
    EventKind kind;
    int node;
    std::int64_t aux; // delivery slot or join slot
    std::uint64_t seq;
};

// Min-ordered on (time, kind, node, seq).
class EventQueue {
public:
    void push(SimTime time, EventKind kind, int node, std::int64_t aux = 0);
    SimEvent pop();
    bool empty() const noexcept { return heap_.empty(); }
    std::size_t size() const noexcept { return heap_.size(); }

private:
    struct Later {
        bool operator()(const SimEvent& a, const SimEvent& b) const noexcept;
    };
    std::priority_queue<SimEvent, std::vector<SimEvent>, Later> heap_;
    std::uint64_t seq_ = 0;
};

// ---- trace -----------------------------------------------------------------

enum class TraceLevel { none, improvements, full };

std::string_view to_string(TraceLevel l) noexcept;
std::optional<TraceLevel> parse_trace_level(std::string_view s) noexcept;

enum class NetKind { send, recv, accept };

struct NetRecord {
    SimTime time;
    int src;
    int dst; // -1 for a broadcast
    NetKind kind;
};

struct FinalRecord {
    int node;
    AlgorithmId algorithm;
    SimTime boot;
    SimTime done;
    std::int64_t evals;
    EnergyLedger ledger;
    Solution best;
};

using TraceRecord = std::variant<Improvement, NetRecord>;

struct Trace {
    int dimension = 0;
    SimTime end{};
    std::vector<TraceRecord> records; // in emission order
    std::vector<FinalRecord> finals;  // one per node, by id
    std::int64_t max_payload = 0;     // largest payload emitted

    // Mean and minimum of the final node-local bests.
    double network_fitness() const;
    double min_fitness() const;

    std::string serialize(TraceLevel level = TraceLevel::full) const;
    // Inverse of serialize; throws std::runtime_error naming the bad line.
    static Trace parse(std::string_view text);
};

// ---- simulator -------------------------------------------------------------

struct SimConfig {
    Problem problem{FunctionId::sphere, 5};
    AlgoParams params;
    int nodes = 5;
    NodeConfig node;
    AdbMode mode = AdbMode::homogeneous; // heterogeneous draws each node's algorithm at boot
    TopologySpec topology;
    ChannelModel channel;
    CostModel cost;
    RadioModel radio;
    std::uint64_t seed = 0;
    TraceLevel trace_level = TraceLevel::full;
};

void validate(const SimConfig& cfg);

// Seed of node `id`'s random streams within a run.
std::uint64_t node_seed(std::uint64_t run_seed, int id);

class Simulator {
public:
    explicit Simulator(SimConfig cfg);
    Simulator(const Simulator&) = delete;
    Simulator& operator=(const Simulator&) = delete;

    const SimConfig& config() const noexcept { return cfg_; }
    const Topology& topology() const noexcept { return topo_; }
    // Throws std::out_of_range for ids that have not booted yet.
    const Node& node(int id) const;
    int node_count() const noexcept { return static_cast<int>(nodes_.size()); }

    // Schedules node `id` to boot at `time` wired to `neighbors`. The id must
    // be the next unused one (std::invalid_argument otherwise). Must be called
    // before run(). The algorithm follows the configured mode.
    void join_node(int id, SimTime time, const NodeConfig& cfg, const std::vector<int>& neighbors);

    Trace run();

private:
    struct PendingJoin {
        int id;
        SimTime time;
        NodeConfig cfg;
        std::vector<int> neighbors;
    };
    struct PendingDelivery {
        Packet packet;
        int receiver;
        SimTime time;
        bool voided = false;
    };

    void boot(int id, SimTime time, NodeConfig cfg);
    void handle_opt(const SimEvent& ev);
    void handle_net(const SimEvent& ev);
    void handle_deliver(const SimEvent& ev);
    void handle_join(const SimEvent& ev);
    void flush_improvements();

    SimConfig cfg_;
    Topology topo_;
    std::vector<std::unique_ptr<Node>> nodes_;
    std::vector<PendingJoin> joins_;
    std::vector<PendingDelivery> deliveries_;
    std::map<int, std::vector<std::size_t>> recent_; // receiver -> delivery slots, for collisions
    EventQueue queue_;
    Rng channel_rng_;
    Trace trace_;
    std::vector<Improvement> imp_buffer_;
    bool ran_ = false;
};

} // namespace dowsn
