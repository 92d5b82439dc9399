#include "dowsn/island.hpp"

#include <algorithm>
#include <stdexcept>

namespace dowsn {

void validate(const NodeConfig& cfg)
{
    if (cfg.q < Fx::zero() || cfg.q > Fx::one())
        throw std::invalid_argument("node: imitation rate q must lie in [0, 1]");
    if (cfg.comm_period <= SimTime::zero())
        throw std::invalid_argument("node: communication period must be positive");
    if (cfg.eval_budget <= 0)
        throw std::invalid_argument("node: evaluation budget must be positive");
    if (cfg.time_budget <= SimTime::zero())
        throw std::invalid_argument("node: time budget must be positive");
}

Node::Node(int id, const NodeConfig& cfg, const Problem& problem, const AlgoParams& params, Rng opt_rng,
           Rng net_rng, SimTime boot)
    : id_(id),
      cfg_(cfg),
      problem_(&problem),
      params_(&params),
      opt_(init_state(cfg.algorithm, params, problem, opt_rng, cfg.eval_budget)),
      opt_rng_(std::move(opt_rng)),
      net_rng_(std::move(net_rng)),
      best_origin_(id),
      boot_(boot),
      busy_until_(boot)
{
    validate(cfg);
}

void Node::offer(std::span<const Fx> x, Fx f, SimTime t, std::vector<Improvement>* log)
{
    if (best_.fitness && !(f < *best_.fitness))
        return;
    best_.x.assign(x.begin(), x.end());
    best_.fitness = f;
    best_origin_ = id_;
    if (log)
        log->push_back({t, id_, evals_, f, best_.x, id_, false});
}

SimTime Node::opt_event(SimTime now, const CostModel& cost, std::vector<Improvement>* log)
{
    if (done_)
        throw std::logic_error("node: optimization event after completion");
    if (now < busy_until_)
        throw std::logic_error("node: optimization event while busy");
    const SimTime per_eval = cost.per_eval(problem_->dimension());
    const SimTime remaining = deadline() - now;
    std::int64_t allowance = cfg_.eval_budget - evals_;
    if (per_eval > SimTime::zero())
        allowance = std::min(allowance, (remaining.count() + per_eval.count() - 1) / per_eval.count());
    if (remaining <= SimTime::zero())
        allowance = 0;

    int used = 0;
    if (allowance > 0) {
        Evaluator eval(*problem_);
        eval.set_allowance(allowance);
        eval.set_observer([&](std::span<const Fx> x, Fx f) {
            ++evals_;
            offer(x, f, now + per_eval * eval.count(), log);
        });
        used = step(opt_, *params_, eval, opt_rng_);
    }
    const SimTime cpu = per_eval * used;
    ledger_.record(PowerState::cpu, cpu);
    busy_until_ = now + cpu;
    if (evals_ >= cfg_.eval_budget || busy_until_ >= deadline() || allowance <= 0) {
        done_ = true;
        done_time_ = busy_until_;
    }
    return cpu;
}

bool Node::consider_incoming(const Incoming& in, SimTime now, std::vector<Improvement>* log)
{
    if (done_ || !in.solution.fitness)
        return false;
    if (best_.fitness && !(*in.solution.fitness < *best_.fitness))
        return false;
    if (!(net_rng_.unit() < cfg_.q))
        return false;
    best_ = in.solution;
    best_origin_ = in.origin;
    adopt(opt_, best_, *params_, *problem_);
    if (log)
        log->push_back({now, id_, evals_, *best_.fitness, best_.x, in.origin, true});
    return true;
}

std::optional<Solution> Node::net_event(SimTime now, SimTime tx_time, SimTime listen_time,
                                        std::vector<Improvement>* log, std::vector<int>* accepted)
{
    if (done_)
        return std::nullopt;
    if (now < busy_until_)
        throw std::logic_error("node: network event while busy");
    while (!inbox_.empty()) {
        const Incoming in = std::move(inbox_.front());
        inbox_.pop_front();
        if (consider_incoming(in, now, log) && accepted)
            accepted->push_back(in.sender);
    }
    std::optional<Solution> out;
    if (best_.fitness) {
        out = best_;
        ledger_.record(PowerState::tx, tx_time);
        busy_until_ = now + tx_time;
    } else {
        busy_until_ = now;
    }
    ledger_.record(PowerState::rx, listen_time);
    busy_until_ += listen_time;
    return out;
}

void Node::finish(SimTime end)
{
    if (finished_)
        return;
    finished_ = true;
    const SimTime lifetime = std::max(end, busy_until_) - boot_;
    const SimTime active = ledger_.total();
    ledger_.record(PowerState::lpm, std::max(SimTime::zero(), lifetime - active));
}

} // namespace dowsn
