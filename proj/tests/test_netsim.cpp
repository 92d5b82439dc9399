#include "dowsn/netsim.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace dowsn;

namespace {

SimConfig small_config(int nodes = 5, std::uint64_t seed = 11)
{
    SimConfig cfg;
    cfg.problem = Problem(FunctionId::sphere, 5);
    cfg.nodes = nodes;
    cfg.node.eval_budget = 200;
    cfg.topology.kind = TopologyKind::complete;
    cfg.seed = seed;
    return cfg;
}

Trace run(const SimConfig& cfg)
{
    Simulator sim(cfg);
    return sim.run();
}

// (evals, fitness, x) of node `id`'s own improvements.
std::vector<std::tuple<std::int64_t, Fx, std::vector<Fx>>> trajectory(const Trace& t, int id)
{
    std::vector<std::tuple<std::int64_t, Fx, std::vector<Fx>>> out;
    for (const auto& rec : t.records)
        if (const auto* imp = std::get_if<Improvement>(&rec); imp && imp->node == id)
            out.emplace_back(imp->evals, imp->fitness, imp->x);
    return out;
}

std::size_t count_net(const Trace& t, NetKind kind)
{
    std::size_t n = 0;
    for (const auto& rec : t.records)
        if (const auto* net = std::get_if<NetRecord>(&rec); net && net->kind == kind)
            ++n;
    return n;
}

} // namespace

TEST_CASE("payload sizes and the dimension limit")
{
    CHECK(payload_size(15) == 64);
    CHECK(payload_size(31) == 128);
    CHECK_THROWS_AS(payload_size(32), PayloadTooLarge);
    CHECK_THROWS_AS(payload_size(0), std::invalid_argument);
}

TEST_CASE("wire format is big-endian raw values")
{
    Solution s{{Fx::one(), Fx::from_raw(-2)}, Fx::from_raw(0x01020304)};
    const auto bytes = encode(s);
    const std::vector<std::uint8_t> expected{0x00, 0x01, 0x00, 0x00, 0xFF, 0xFF, 0xFF, 0xFE, 0x01, 0x02, 0x03, 0x04};
    CHECK(bytes == expected);
    CHECK(decode(bytes, 2) == s);
    CHECK_THROWS_AS(decode(bytes, 3), std::invalid_argument);
    CHECK_THROWS_AS(encode(Solution{{Fx::one()}, std::nullopt}), std::invalid_argument);
}

TEST_CASE("encode and decode round-trip")
{
    Rng rng(3);
    for (int n : {1, 2, 5, 15, 31}) {
        const Problem p(FunctionId::sphere, n);
        for (int i = 0; i < 100; ++i) {
            Solution s = random_solution(rng, p);
            s.fitness = Fx::from_raw(static_cast<std::int32_t>(rng.next_u64()));
            CHECK(decode(encode(s), n) == s);
        }
    }
}

TEST_CASE("topology generators")
{
    Rng rng(5);
    const auto complete = gen_topology({TopologyKind::complete, 0}, 5, rng);
    const auto ring = gen_topology({TopologyKind::ring, 0}, 5, rng);
    const auto dense = gen_topology({TopologyKind::random_geometric, 1.5}, 6, rng);
    for (int v = 0; v < 5; ++v) {
        CHECK(complete.neighbors(v).size() == 4);
        CHECK(ring.neighbors(v).size() == 2);
    }
    for (int v = 0; v < 6; ++v)
        CHECK(dense.neighbors(v).size() == 5);
    for (int seed = 0; seed < 50; ++seed) {
        Rng r(static_cast<std::uint64_t>(seed));
        const auto g = gen_topology({TopologyKind::random_geometric, 0.5}, 8, r);
        CHECK(g.connected());
        for (int a = 0; a < g.size(); ++a) {
            CHECK_FALSE(g.linked(a, a));
            for (int b : g.neighbors(a))
                CHECK(g.linked(b, a));
        }
    }
    Topology t(2);
    CHECK_THROWS_AS(t.link(1, 1), std::invalid_argument);
    CHECK(gen_topology({TopologyKind::ring, 0}, 1, rng).neighbors(0).empty());
}

TEST_CASE("broadcast losses")
{
    Rng rng(9);
    Topology star(5);
    for (int v = 1; v < 5; ++v)
        star.link(0, v);
    ChannelModel ch;
    CHECK(broadcast(star, ch, 0, SimTime{10}, rng).size() == 4);
    CHECK(broadcast(star, ch, 0, SimTime{10}, rng).front().time == SimTime{10} + ch.latency);
    ch.loss_prob = 1;
    CHECK(broadcast(star, ch, 0, SimTime{10}, rng).empty());
    ch.loss_prob = 0.3;
    std::size_t delivered = 0;
    constexpr int kTrials = 10'000;
    for (int i = 0; i < kTrials; ++i)
        delivered += broadcast(star, ch, 0, SimTime{}, rng).size();
    CHECK(double(delivered) / (4.0 * kTrials) == doctest::Approx(0.7).epsilon(0.01 / 0.7));
    ch.loss_prob = 1.2;
    CHECK_THROWS_AS(validate(ch), std::invalid_argument);
}

TEST_CASE("event queue ordering")
{
    EventQueue q;
    q.push(SimTime{5}, EventKind::opt, 0);
    q.push(SimTime{5}, EventKind::net, 3);
    q.push(SimTime{5}, EventKind::deliver, 4);
    q.push(SimTime{5}, EventKind::net, 1);
    q.push(SimTime{1}, EventKind::opt, 9);
    std::vector<std::pair<EventKind, int>> order;
    while (!q.empty()) {
        const auto ev = q.pop();
        order.emplace_back(ev.kind, ev.node);
    }
    const std::vector<std::pair<EventKind, int>> expected{{EventKind::opt, 9},
                                                          {EventKind::deliver, 4},
                                                          {EventKind::net, 1},
                                                          {EventKind::net, 3},
                                                          {EventKind::opt, 0}};
    CHECK(order == expected);
}

TEST_CASE("runs are deterministic")
{
    const auto cfg = small_config();
    const auto a = run(cfg);
    const auto b = run(cfg);
    CHECK(a.serialize() == b.serialize());
    auto other = cfg;
    other.seed = cfg.seed + 1;
    CHECK(run(other).serialize() != a.serialize());
}

TEST_CASE("trace invariants")
{
    auto cfg = small_config();
    cfg.topology = {TopologyKind::ring, 0};
    cfg.node.algorithm = AlgorithmId::nusa;
    const auto t = run(cfg);
    Simulator probe(cfg);
    const auto& topo = probe.topology();

    // Causality: every receive follows a send by a neighbor.
    std::vector<std::pair<SimTime, int>> sends;
    SimTime last{};
    std::vector<std::optional<Fx>> best(5);
    std::optional<double> network;
    for (const auto& rec : t.records) {
        if (const auto* net = std::get_if<NetRecord>(&rec)) {
            CHECK(net->time >= last);
            last = net->time;
            if (net->kind == NetKind::send) {
                sends.emplace_back(net->time, net->src);
            } else if (net->kind == NetKind::recv) {
                CHECK(topo.linked(net->src, net->dst));
                const bool found = std::any_of(sends.begin(), sends.end(), [&](const auto& s) {
                    return s.second == net->src && s.first < net->time;
                });
                CHECK(found);
            }
        } else {
            const auto& imp = std::get<Improvement>(rec);
            auto& b = best[static_cast<std::size_t>(imp.node)];
            if (b)
                CHECK(imp.fitness < *b);
            b = imp.fitness;
            double m = INFINITY;
            for (const auto& v : best)
                if (v)
                    m = std::min(m, v->to_real());
            if (network)
                CHECK(m <= *network);
            network = m;
        }
    }
    CHECK(count_net(t, NetKind::send) > 0);
    CHECK(count_net(t, NetKind::recv) > 0);
    CHECK(t.max_payload == 24);

    // Ledgers partition each node's lifetime.
    REQUIRE(t.finals.size() == 5);
    for (const auto& f : t.finals) {
        CHECK(f.ledger.total() == t.end - f.boot);
        CHECK(f.evals == 200);
        CHECK(f.best.fitness == best[static_cast<std::size_t>(f.node)]);
    }
}

TEST_CASE("stand-alone nodes exchange nothing")
{
    auto cfg = small_config();
    cfg.node.communicating = false;
    const auto t = run(cfg);
    CHECK(count_net(t, NetKind::send) == 0);
    CHECK(count_net(t, NetKind::recv) == 0);
    for (const auto& f : t.finals) {
        CHECK(f.ledger.time(PowerState::tx) == SimTime::zero());
        CHECK(f.ledger.time(PowerState::rx) == SimTime::zero());
    }
}

TEST_CASE("q = 0 reproduces the stand-alone trajectory")
{
    auto cfg = small_config();
    cfg.node.algorithm = AlgorithmId::tsome;
    auto solo = cfg;
    solo.node.communicating = false;
    cfg.node.q = Fx::zero();
    const auto a = run(cfg);
    const auto b = run(solo);
    CHECK(count_net(a, NetKind::recv) > 0);
    CHECK(count_net(a, NetKind::accept) == 0);
    for (int id = 0; id < cfg.nodes; ++id)
        CHECK(trajectory(a, id) == trajectory(b, id));
}

TEST_CASE("communication spreads the best solution")
{
    auto cfg = small_config();
    cfg.node.algorithm = AlgorithmId::rs;
    cfg.node.q = Fx::one();
    const auto t = run(cfg);
    CHECK(count_net(t, NetKind::accept) > 0);
    // Lineage: an adopted solution always comes from another node's optimizer.
    std::set<int> origins;
    for (const auto& rec : t.records) {
        if (const auto* imp = std::get_if<Improvement>(&rec); imp && imp->adopted) {
            CHECK(imp->origin != imp->node);
            origins.insert(imp->origin);
        }
    }
    CHECK_FALSE(origins.empty());
}

TEST_CASE("joining at time zero equals a static network")
{
    auto cfg = small_config(4);
    auto bigger = small_config(5);
    Simulator sim(cfg);
    sim.join_node(4, SimTime::zero(), cfg.node, {0, 1, 2, 3});
    const auto joined = sim.run();
    const auto fixed = run(bigger);
    CHECK(joined.serialize() == fixed.serialize());
}

TEST_CASE("join errors and late joiners")
{
    auto cfg = small_config(3);
    Simulator sim(cfg);
    CHECK_THROWS_AS(sim.join_node(2, SimTime{0}, cfg.node, {0}), std::invalid_argument);
    CHECK_THROWS_AS(sim.join_node(4, SimTime{0}, cfg.node, {0}), std::invalid_argument);
    CHECK_THROWS_AS(sim.join_node(3, SimTime{0}, cfg.node, {7}), std::invalid_argument);
    auto node_cfg = cfg.node;
    node_cfg.q = Fx::one();
    sim.join_node(3, SimTime{3'000'000}, node_cfg, {0, 1, 2});
    const auto t = sim.run();
    REQUIRE(t.finals.size() == 4);
    CHECK(t.finals[3].boot == SimTime{3'000'000});

    // The joiner's first accepted solution is no worse than the network best at join time.
    Fx at_join = Fx::max();
    std::optional<Fx> first;
    for (const auto& rec : t.records) {
        const auto* imp = std::get_if<Improvement>(&rec);
        if (!imp)
            continue;
        if (imp->node < 3 && imp->time <= SimTime{3'000'000})
            at_join = min(at_join, imp->fitness);
        if (imp->node == 3 && imp->adopted && !first)
            first = imp->fitness;
    }
    REQUIRE(first.has_value());
    CHECK(*first <= at_join);
    CHECK_THROWS_AS(sim.join_node(4, SimTime{0}, cfg.node, {0}), std::logic_error);
}

TEST_CASE("collisions void overlapping deliveries")
{
    auto cfg = small_config();
    cfg.channel.collision_window = SimTime{10'000'000};
    const auto t = run(cfg);
    // Synchronized senders collide at every receiver.
    CHECK(count_net(t, NetKind::send) > 0);
    CHECK(count_net(t, NetKind::recv) == 0);
}

TEST_CASE("trace text round-trip")
{
    const auto t = run(small_config());
    const auto text = t.serialize(TraceLevel::full);
    const auto back = Trace::parse(text);
    CHECK(back.serialize(TraceLevel::full) == text);
    CHECK(back.network_fitness() == doctest::Approx(t.network_fitness()));
    CHECK(back.min_fitness() <= back.network_fitness());

    const auto none = Trace::parse(t.serialize(TraceLevel::none));
    CHECK(none.records.empty());
    CHECK(none.finals.size() == 5);

    CHECK_THROWS_WITH_AS(Trace::parse("# dowsn-trace dim=1 end=1.0\nXYZ,1\n"), doctest::Contains("line 2"),
                         std::runtime_error);
    CHECK_THROWS_AS(Trace::parse("IMP,0.0,0,1,0,0\n"), std::runtime_error);
}

TEST_CASE("configuration errors")
{
    auto cfg = small_config();
    cfg.problem = Problem(FunctionId::sphere, 31);
    CHECK_NOTHROW(Simulator{cfg});
    cfg.nodes = 0;
    CHECK_THROWS_AS(Simulator{cfg}, std::invalid_argument);
    cfg = small_config();
    cfg.channel.loss_prob = -1;
    CHECK_THROWS_AS(Simulator{cfg}, std::invalid_argument);
}
