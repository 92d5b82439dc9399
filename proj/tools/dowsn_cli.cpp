// Command-line front end. Talks to the simulator through the C interface only.

#include "dowsn/dowsn.h"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

enum Exit { kOk = 0, kRunFailure = 1, kConfigError = 2 };

std::string take(char* s)
{
    std::string out = s ? s : "";
    dowsn_string_free(s);
    return out;
}

// Anything that stops a configuration from loading counts as a configuration error.
int config_failure(dowsn_status st)
{
    std::cerr << "dowsn: " << dowsn_status_name(st) << "\n" << dowsn_last_error() << "\n";
    return kConfigError;
}

std::string join_list(const std::vector<std::string>& items)
{
    std::string out = "[";
    for (std::size_t i = 0; i < items.size(); ++i)
        out += (i ? "," : "") + items[i];
    return out + "]";
}

struct Loaded {
    dowsn_experiment* exp = nullptr;
    ~Loaded() { dowsn_experiment_free(exp); }
};

dowsn_status load(const std::string& path, const std::vector<std::string>& overrides, Loaded& out)
{
    std::vector<const char*> ptrs;
    for (const auto& o : overrides)
        ptrs.push_back(o.c_str());
    return dowsn_experiment_load_file(path.c_str(), ptrs.data(), ptrs.size(), &out.exp);
}

int write_or_print(const std::string& text, const std::string& path)
{
    if (path.empty() || path == "-") {
        std::cout << text;
        return kOk;
    }
    std::ofstream f(path, std::ios::binary);
    f << text;
    if (!f) {
        std::cerr << "dowsn: cannot write " << path << "\n";
        return kRunFailure;
    }
    return kOk;
}

void progress(size_t done, size_t total, void*)
{
    std::fprintf(stderr, "\r%zu/%zu runs", done, total);
    if (done == total)
        std::fputc('\n', stderr);
    std::fflush(stderr);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Distributed optimization over simulated wireless sensor networks"};
    app.set_version_flag("--version", std::string(dowsn_version()));
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "Run every configuration of an experiment");
    std::string run_config;
    std::vector<std::string> sets;
    std::string output;
    std::optional<int> reps, threads;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> dims, problems;
    std::string trace;
    bool quiet = false;
    run->add_option("config", run_config, "Experiment YAML file")->required()->check(CLI::ExistingFile);
    run->add_option("--set", sets, "Override a configuration key (dotted.key=value); repeatable");
    run->add_option("-o,--output", output, "Output root (default: $DOWSN_OUTPUT_ROOT, then ./out)");
    run->add_option("--reps", reps, "Repetitions per configuration");
    run->add_option("--seed", seed, "Master seed");
    run->add_option("--threads", threads, "Worker threads (0: all cores)");
    run->add_option("--dims", dims, "Dimensions to run")->delimiter(',');
    run->add_option("--problems", problems, "Problem ids, e.g. f1,f3")->delimiter(',');
    run->add_option("--trace", trace, "Trace detail: none, improvements or full");
    run->add_flag("-q,--quiet", quiet, "No progress output");

    // validate
    auto* validate = app.add_subcommand("validate", "Check a configuration without running it");
    std::string validate_config;
    std::vector<std::string> validate_sets;
    validate->add_option("config", validate_config, "Experiment YAML file")->required();
    validate->add_option("--set", validate_sets, "Override a configuration key; repeatable");

    // trend
    auto* trend = app.add_subcommand("trend", "Average fitness against evaluations, as CSV");
    std::string trend_dir, trend_out;
    int stride = 1;
    trend->add_option("dir", trend_dir, "Run directory")->required()->check(CLI::ExistingDirectory);
    trend->add_option("--stride", stride, "Emit every stride-th evaluation count")->check(CLI::PositiveNumber);
    trend->add_option("-o,--output", trend_out, "Output file (default: stdout)");

    // tables
    auto* tables = app.add_subcommand("tables", "Rebuild summary tables from a run directory");
    std::string tables_dir, tables_out;
    tables->add_option("dir", tables_dir, "Run directory")->required()->check(CLI::ExistingDirectory);
    tables->add_option("-o,--output", tables_out, "Also write the text tables to this file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    if (*run) {
        // Dedicated flags come after --set so they take precedence.
        if (reps)
            sets.push_back("repetitions=" + std::to_string(*reps));
        if (seed)
            sets.push_back("seed=" + std::to_string(*seed));
        if (threads)
            sets.push_back("threads=" + std::to_string(*threads));
        if (!dims.empty())
            sets.push_back("dimensions=" + join_list(dims));
        if (!problems.empty())
            sets.push_back("problems=" + join_list(problems));
        if (!trace.empty())
            sets.push_back("trace=" + trace);

        Loaded l;
        if (const auto st = load(run_config, sets, l); st != DOWSN_OK)
            return config_failure(st);
        if (output.empty()) {
            const char* env = std::getenv("DOWSN_OUTPUT_ROOT");
            output = env && *env ? env : "out";
        }
        size_t runs = 0;
        dowsn_experiment_run_count(l.exp, &runs);
        if (!quiet)
            std::cerr << "running " << runs << " simulations into " << output << "\n";
        char* dir = nullptr;
        size_t failures = 0;
        const auto st = dowsn_experiment_run(l.exp, output.c_str(), quiet ? nullptr : progress, nullptr, &dir, &failures);
        const std::string run_dir = take(dir);
        if (st != DOWSN_OK) {
            std::cerr << "dowsn: " << dowsn_last_error() << "\n";
            if (!run_dir.empty())
                std::cerr << "partial output left in " << run_dir << " (marked INCOMPLETE)\n";
            return st == DOWSN_ERR_CONFIG ? kConfigError : kRunFailure;
        }
        std::cout << run_dir << "\n";
        return kOk;
    }

    if (*validate) {
        Loaded l;
        if (const auto st = load(validate_config, validate_sets, l); st != DOWSN_OK)
            return config_failure(st);
        size_t runs = 0, variants = 0;
        dowsn_experiment_run_count(l.exp, &runs);
        dowsn_experiment_variant_count(l.exp, &variants);
        char* name = nullptr;
        char* hash = nullptr;
        dowsn_experiment_name(l.exp, &name);
        dowsn_experiment_hash(l.exp, &hash);
        std::cout << "ok: " << take(name) << ", " << variants << " variants, " << runs << " runs, config "
                  << take(hash) << "\n";
        for (size_t i = 0; i < variants; ++i) {
            char* label = nullptr;
            dowsn_experiment_variant_label(l.exp, i, &label);
            std::cout << "  " << (i == 0 ? "* " : "  ") << take(label) << "\n";
        }
        return kOk;
    }

    if (*trend) {
        char* csv = nullptr;
        if (const auto st = dowsn_trend(trend_dir.c_str(), stride, &csv); st != DOWSN_OK) {
            std::cerr << "dowsn: " << dowsn_last_error() << "\n";
            return kRunFailure;
        }
        return write_or_print(take(csv), trend_out);
    }

    if (*tables) {
        char* text = nullptr;
        if (const auto st = dowsn_tables(tables_dir.c_str(), &text); st != DOWSN_OK) {
            std::cerr << "dowsn: " << dowsn_last_error() << "\n";
            return kRunFailure;
        }
        return write_or_print(take(text), tables_out);
    }
    return kOk;
}
