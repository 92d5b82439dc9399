#include "dowsn/energy.hpp"

#include "dowsn/fx.hpp"

#include <cmath>
#include <stdexcept>

namespace dowsn {

SimTime from_seconds(double s)
{
    if (!std::isfinite(s))
        throw std::invalid_argument("time must be finite");
    return SimTime{std::llround(s * 1e6)};
}

void EnergyLedger::record(PowerState s, SimTime dt)
{
    if (dt < SimTime::zero())
        throw std::invalid_argument("energy: negative duration");
    t_[static_cast<std::size_t>(s)] += dt;
}

void EnergyLedger::record_seconds(PowerState s, double dt)
{
    if (!(dt >= 0))
        throw std::invalid_argument("energy: negative duration");
    record(s, from_seconds(dt));
}

SimTime EnergyLedger::total() const noexcept
{
    SimTime sum{};
    for (const auto t : t_)
        sum += t;
    return sum;
}

void validate(const CurrentModel& cm)
{
    if (!(cm.i_cpu > 0 && cm.i_lpm > 0 && cm.i_tx > 0 && cm.i_rx > 0 && cm.voltage > 0))
        throw std::invalid_argument("energy: currents and voltage must be positive");
}

double duty_cycle(const EnergyLedger& ledger)
{
    const auto total = ledger.total();
    if (total == SimTime::zero())
        throw DivByZeroError("energy: duty cycle of an empty ledger");
    return static_cast<double>((ledger.time(PowerState::tx) + ledger.time(PowerState::rx)).count())
           / static_cast<double>(total.count());
}

EnergyReport energy(const EnergyLedger& ledger, const CurrentModel& cm)
{
    const double total = to_seconds(ledger.total());
    if (total <= 0)
        throw DivByZeroError("energy: power of an empty ledger");
    const double charge = cm.i_cpu * ledger.seconds(PowerState::cpu) + cm.i_lpm * ledger.seconds(PowerState::lpm)
                          + cm.i_tx * ledger.seconds(PowerState::tx) + cm.i_rx * ledger.seconds(PowerState::rx);
    const double joules = cm.voltage * charge;
    return {joules * 1e3, joules / total * 1e3};
}

SimTime RadioModel::tx_time(std::size_t bytes) const
{
    if (bitrate_bps <= 0)
        throw std::invalid_argument("radio: bit rate must be positive");
    // Rounded up to the next microsecond.
    const auto bits = static_cast<std::int64_t>(bytes) * 8 * 1'000'000;
    return SimTime{(bits + bitrate_bps - 1) / bitrate_bps};
}

} // namespace dowsn
