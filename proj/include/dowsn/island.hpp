#pragma once

// One sensor node: an optimization process and a network process sharing the
// node-local best solution.

#include "dowsn/algos.hpp"
#include "dowsn/energy.hpp"

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

namespace dowsn {

struct NodeConfig {
    AlgorithmId algorithm = AlgorithmId::tsome;
    Fx q = Fx::from_real(0.9); // imitation rate
    SimTime comm_period{250'000};
    std::int64_t eval_budget = 1000;
    SimTime time_budget{60'000'000};
    bool communicating = true;
};

void validate(const NodeConfig& cfg);

// A change of a node-local best. origin is the node whose optimizer first
// produced the solution; it travels with the solution through the network.
struct Improvement {
    SimTime time;
    int node;
    std::int64_t evals;
    Fx fitness;
    std::vector<Fx> x;
    int origin;
    bool adopted; // arrived in a packet rather than from the local optimizer
};

struct Incoming {
    int sender;
    Solution solution;
    int origin;
};

class Node {
public:
    Node(int id, const NodeConfig& cfg, const Problem& problem, const AlgoParams& params, Rng opt_rng,
         Rng net_rng, SimTime boot);

    int id() const noexcept { return id_; }
    const NodeConfig& config() const noexcept { return cfg_; }
    AlgorithmId algorithm() const noexcept { return algorithm_of(opt_); }
    const OptimizerState& optimizer() const noexcept { return opt_; }
    const Solution& local_best() const noexcept { return best_; }
    int local_best_origin() const noexcept { return best_origin_; }
    std::int64_t evals() const noexcept { return evals_; }
    bool done() const noexcept { return done_; }
    SimTime boot_time() const noexcept { return boot_; }
    SimTime busy_until() const noexcept { return busy_until_; }
    SimTime done_time() const noexcept { return done_time_; }
    SimTime deadline() const noexcept { return boot_ + cfg_.time_budget; }
    const EnergyLedger& ledger() const noexcept { return ledger_; }
    std::deque<Incoming>& inbox() noexcept { return inbox_; }

    // Runs one optimizer iteration starting at `now` (the node must be idle
    // and not done). Evaluations cost cost.per_eval(n) each; improvements are
    // appended to log. Returns the cpu time spent.
    SimTime opt_event(SimTime now, const CostModel& cost, std::vector<Improvement>* log);

    // Imitation rule: adopt iff the incoming fitness is strictly better and a
    // uniform draw falls below q. Returns whether it was adopted.
    bool consider_incoming(const Incoming& in, SimTime now, std::vector<Improvement>* log);

    // Network period at `now`: drains the inbox (adopted senders are appended
    // to accepted), occupies the radio for tx + listen time and returns the
    // solution to broadcast, if any.
    std::optional<Solution> net_event(SimTime now, SimTime tx_time, SimTime listen_time,
                                      std::vector<Improvement>* log, std::vector<int>* accepted);

    // Closes the ledger at the end of the simulation: the remaining lifetime
    // is low-power mode.
    void finish(SimTime end);

private:
    void offer(std::span<const Fx> x, Fx f, SimTime t, std::vector<Improvement>* log);

    int id_;
    NodeConfig cfg_;
    const Problem* problem_;
    const AlgoParams* params_;
    OptimizerState opt_;
    Rng opt_rng_;
    Rng net_rng_;
    Solution best_;
    int best_origin_;
    std::int64_t evals_ = 0;
    bool done_ = false;
    bool finished_ = false;
    SimTime boot_;
    SimTime busy_until_;
    SimTime done_time_{};
    EnergyLedger ledger_;
    std::deque<Incoming> inbox_;
};

} // namespace dowsn
