#pragma once

// Declarative experiments: configuration loading and validation, seeded
// repetition sweeps, and the artifacts derived from their traces.

#include "dowsn/netsim.hpp"
#include "dowsn/stats.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace dowsn {

struct Diagnostic {
    std::string source; // file name or "override"
    int line = 0;       // 1-based; 0 when unknown
    int column = 0;
    std::string message;

    std::string str() const;
};

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<Diagnostic> diags);
    const std::vector<Diagnostic>& diagnostics() const noexcept { return diags_; }

private:
    std::vector<Diagnostic> diags_;
};

// One network configuration of a sweep.
struct Variant {
    std::string label;
    AdbMode mode = AdbMode::homogeneous;
    bool communicating = true;
    Fx q = Fx::from_real(0.9);
    SimTime period{250'000};
    int nodes = 5;
};

struct ExperimentConfig {
    std::string name = "experiment";
    std::vector<FunctionId> problems;  // default: all fifteen
    std::vector<int> dimensions{5, 15, 25};
    int repetitions = 16;
    std::uint64_t seed = 1;
    std::vector<Variant> variants;     // the first one is the reference for comparisons
    // What the variants were built from: modes crossed with a sweep over one
    // network parameter, starting from the network defaults.
    Variant network;
    std::vector<std::string> modes;
    std::string sweep_parameter;
    std::vector<std::string> sweep_values;
    TopologySpec topology{TopologyKind::random_geometric, 0.6};
    std::int64_t eval_budget = 1000;
    SimTime time_budget{60'000'000};
    ChannelModel channel;
    CostModel cost;
    std::map<FunctionId, CostModel> function_cost; // per-function replacements of `cost`
    RadioModel radio;
    AlgoParams params;
    TraceLevel trace_level = TraceLevel::improvements;
    int threads = 0; // 0: hardware concurrency
};

// Parses and validates YAML text. Overrides are "dotted.key=value" strings
// applied on top of the document (they win). Throws ConfigError listing
// every problem found.
ExperimentConfig load_config(const std::string& text, const std::string& source,
                             const std::vector<std::string>& overrides = {});
ExperimentConfig load_config_file(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

// Canonical YAML form of a resolved configuration, and its hash (hex FNV-1a).
std::string canonical_yaml(const ExperimentConfig& cfg);
std::string config_hash(const ExperimentConfig& cfg);

// Seed of one repetition, shared by all variants so they see common random
// numbers: mix(mix(mix(master, problem), dimension), repetition).
std::uint64_t run_seed(std::uint64_t master, FunctionId problem, int dimension, int repetition);

SimConfig sim_config(const ExperimentConfig& cfg, const Variant& v, FunctionId problem, int dimension, int repetition);

std::size_t run_count(const ExperimentConfig& cfg);

struct RunReport {
    std::filesystem::path directory;
    std::size_t runs = 0;
    std::size_t failures = 0;
    std::vector<std::string> errors;
};

using Progress = std::function<void(std::size_t done, std::size_t total)>;

// Runs every (variant, problem, dimension, repetition) and writes under
// output_root/cfg.name: traces/, manifest.csv, summary and energy CSVs, and
// config.yaml. An INCOMPLETE marker exists until everything is written.
RunReport run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& output_root,
                         const Progress& progress = {});

// Rebuilds summary tables from a run directory's traces; returns the text of
// the combined tables and rewrites the CSV files.
std::string write_tables(const std::filesystem::path& run_dir);

// Network fitness against per-node evaluation count, averaged over
// repetitions, for every (variant, problem, dimension) in a run directory.
std::string trend_csv(const std::filesystem::path& run_dir, int stride);

// Network fitness at per-node evaluation count 1..budget for one trace
// (average and minimum over the node-local bests).
struct TrendPoint {
    std::int64_t evals;
    double average;
    double minimum;
};
std::vector<TrendPoint> trace_trend(const Trace& trace, std::int64_t budget);

// Energy CSV rows (per node) for a trace.
std::vector<std::vector<std::string>> energy_rows(const Trace& trace, const CurrentModel& cm = {});

} // namespace dowsn
