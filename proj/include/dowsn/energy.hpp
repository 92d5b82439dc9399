#pragma once

// Per-node energy accounting over the four mote operating states.

#include <array>
#include <chrono>
#include <cstdint>

namespace dowsn {

// Simulated time. Integer microseconds keep every clock computation exact.
using SimTime = std::chrono::microseconds;

SimTime from_seconds(double s);
constexpr double to_seconds(SimTime t) noexcept { return static_cast<double>(t.count()) * 1e-6; }

enum class PowerState { cpu, lpm, tx, rx };

class EnergyLedger {
public:
    // Throws std::invalid_argument for negative durations.
    void record(PowerState s, SimTime dt);
    void record_seconds(PowerState s, double dt);

    SimTime time(PowerState s) const noexcept { return t_[static_cast<std::size_t>(s)]; }
    double seconds(PowerState s) const noexcept { return to_seconds(time(s)); }
    SimTime total() const noexcept;

    friend bool operator==(const EnergyLedger&, const EnergyLedger&) = default;

private:
    std::array<SimTime, 4> t_{};
};

// Currents in amperes, supply in volts.
struct CurrentModel {
    double i_cpu = 1.8e-3;
    double i_lpm = 54.5e-6;
    double i_tx = 19.5e-3;
    double i_rx = 21.8e-3;
    double voltage = 3.0;
};

void validate(const CurrentModel& cm);

struct EnergyReport {
    double energy_mJ;
    double power_mW;
};

// Radio-on share of the node time: (tx + rx) / (cpu + lpm + tx + rx).
// Throws DivByZeroError on an empty ledger.
double duty_cycle(const EnergyLedger& ledger);

// Energy V * sum(I_s * T_s) and the average power over the ledger's total time.
EnergyReport energy(const EnergyLedger& ledger, const CurrentModel& cm = {});

// Maps evaluations to cpu time: c0 + c1 * n per fitness evaluation.
struct CostModel {
    SimTime c0{30'000};
    SimTime c1{1'000};

    SimTime per_eval(int dimension) const noexcept { return c0 + c1 * dimension; }
};

// Radio timing of one communication period: the frame goes out at the given
// bit rate, then the node listens for a fixed window.
struct RadioModel {
    std::int64_t bitrate_bps = 250'000;
    SimTime listen_window{5'000};

    SimTime tx_time(std::size_t bytes) const;
};

} // namespace dowsn
