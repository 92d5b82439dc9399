#include "dowsn/dowsn.h"

#include "dowsn/experiment.hpp"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <filesystem>
#include <new>

struct dowsn_experiment {
    dowsn::ExperimentConfig cfg;
};

namespace {

thread_local std::string g_last_error;

dowsn_status fail(dowsn_status s, std::string msg)
{
    g_last_error = std::move(msg);
    return s;
}

char* dup(const std::string& s)
{
    auto* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out)
        throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

// Runs f, translating exceptions into status codes.
template <class F>
dowsn_status guarded(F&& f) noexcept
{
    g_last_error.clear();
    try {
        return f();
    } catch (const dowsn::ConfigError& e) {
        return fail(DOWSN_ERR_CONFIG, e.what());
    } catch (const dowsn::PayloadTooLarge& e) {
        return fail(DOWSN_ERR_PAYLOAD, e.what());
    } catch (const dowsn::FxError& e) {
        return fail(DOWSN_ERR_ARITHMETIC, e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return fail(DOWSN_ERR_IO, e.what());
    } catch (const std::invalid_argument& e) {
        return fail(DOWSN_ERR_INVALID_ARGUMENT, e.what());
    } catch (const std::out_of_range& e) {
        return fail(DOWSN_ERR_INVALID_ARGUMENT, e.what());
    } catch (const std::bad_alloc&) {
        return fail(DOWSN_ERR_INTERNAL, "out of memory");
    } catch (const std::runtime_error& e) {
        return fail(DOWSN_ERR_IO, e.what());
    } catch (const std::exception& e) {
        return fail(DOWSN_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(DOWSN_ERR_INTERNAL, "unknown error");
    }
}

std::vector<std::string> override_list(const char* const* overrides, std::size_t n)
{
    if (n > 0 && !overrides)
        throw std::invalid_argument("overrides is null but override_count is not zero");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) {
        if (!overrides[i])
            throw std::invalid_argument("null override string");
        out.emplace_back(overrides[i]);
    }
    return out;
}

#define DOWSN_REQUIRE(cond, msg)                                                                                       \
    do {                                                                                                               \
        if (!(cond))                                                                                                   \
            return fail(DOWSN_ERR_INVALID_ARGUMENT, msg);                                                              \
    } while (0)

} // namespace

extern "C" {

const char* dowsn_version(void) { return "1.0.0"; }

const char* dowsn_last_error(void) { return g_last_error.c_str(); }

const char* dowsn_status_name(dowsn_status status)
{
    switch (status) {
    case DOWSN_OK: return "ok";
    case DOWSN_ERR_INVALID_ARGUMENT: return "invalid argument";
    case DOWSN_ERR_CONFIG: return "configuration error";
    case DOWSN_ERR_IO: return "i/o error";
    case DOWSN_ERR_RUN: return "run failure";
    case DOWSN_ERR_PAYLOAD: return "payload too large";
    case DOWSN_ERR_ARITHMETIC: return "fixed-point arithmetic error";
    case DOWSN_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

void dowsn_string_free(char* s) { std::free(s); }

dowsn_status dowsn_experiment_load_file(const char* path, const char* const* overrides, size_t override_count,
                                        dowsn_experiment** out)
{
    return guarded([&] {
        DOWSN_REQUIRE(path && out, "path and out must not be null");
        *out = nullptr;
        auto exp = std::make_unique<dowsn_experiment>();
        exp->cfg = dowsn::load_config_file(path, override_list(overrides, override_count));
        *out = exp.release();
        return DOWSN_OK;
    });
}

dowsn_status dowsn_experiment_load_string(const char* yaml, const char* source_name, const char* const* overrides,
                                          size_t override_count, dowsn_experiment** out)
{
    return guarded([&] {
        DOWSN_REQUIRE(yaml && out, "yaml and out must not be null");
        *out = nullptr;
        auto exp = std::make_unique<dowsn_experiment>();
        exp->cfg = dowsn::load_config(yaml, source_name ? source_name : "<string>",
                                      override_list(overrides, override_count));
        *out = exp.release();
        return DOWSN_OK;
    });
}

void dowsn_experiment_free(dowsn_experiment* exp) { delete exp; }

dowsn_status dowsn_experiment_run_count(const dowsn_experiment* exp, size_t* runs)
{
    return guarded([&] {
        DOWSN_REQUIRE(exp && runs, "null argument");
        *runs = dowsn::run_count(exp->cfg);
        return DOWSN_OK;
    });
}

dowsn_status dowsn_experiment_name(const dowsn_experiment* exp, char** name)
{
    return guarded([&] {
        DOWSN_REQUIRE(exp && name, "null argument");
        *name = dup(exp->cfg.name);
        return DOWSN_OK;
    });
}

dowsn_status dowsn_experiment_hash(const dowsn_experiment* exp, char** hash)
{
    return guarded([&] {
        DOWSN_REQUIRE(exp && hash, "null argument");
        *hash = dup(dowsn::config_hash(exp->cfg));
        return DOWSN_OK;
    });
}

dowsn_status dowsn_experiment_canonical(const dowsn_experiment* exp, char** yaml)
{
    return guarded([&] {
        DOWSN_REQUIRE(exp && yaml, "null argument");
        *yaml = dup(dowsn::canonical_yaml(exp->cfg));
        return DOWSN_OK;
    });
}

dowsn_status dowsn_experiment_variant_count(const dowsn_experiment* exp, size_t* count)
{
    return guarded([&] {
        DOWSN_REQUIRE(exp && count, "null argument");
        *count = exp->cfg.variants.size();
        return DOWSN_OK;
    });
}

dowsn_status dowsn_experiment_variant_label(const dowsn_experiment* exp, size_t index, char** label)
{
    return guarded([&] {
        DOWSN_REQUIRE(exp && label, "null argument");
        DOWSN_REQUIRE(index < exp->cfg.variants.size(), "variant index out of range");
        *label = dup(exp->cfg.variants[index].label);
        return DOWSN_OK;
    });
}

dowsn_status dowsn_experiment_run(const dowsn_experiment* exp, const char* output_root, dowsn_progress_fn progress,
                                  void* user, char** run_dir, size_t* failures)
{
    return guarded([&] {
        DOWSN_REQUIRE(exp && output_root, "exp and output_root must not be null");
        dowsn::Progress cb;
        if (progress)
            cb = [&](std::size_t done, std::size_t total) { progress(done, total, user); };
        const auto report = dowsn::run_experiment(exp->cfg, output_root, cb);
        if (run_dir)
            *run_dir = dup(report.directory.string());
        if (failures)
            *failures = report.failures;
        if (report.failures > 0) {
            std::string msg = std::to_string(report.failures) + " of " + std::to_string(report.runs) + " runs failed";
            for (std::size_t i = 0; i < report.errors.size() && i < 5; ++i)
                msg += "\n" + report.errors[i];
            return fail(DOWSN_ERR_RUN, msg);
        }
        return DOWSN_OK;
    });
}

dowsn_status dowsn_experiment_simulate(const dowsn_experiment* exp, size_t variant, const char* problem, int dimension,
                                       int repetition, dowsn_trace_level level, char** trace, double* network_fitness,
                                       double* min_fitness)
{
    return guarded([&] {
        DOWSN_REQUIRE(exp && problem, "exp and problem must not be null");
        DOWSN_REQUIRE(variant < exp->cfg.variants.size(), "variant index out of range");
        DOWSN_REQUIRE(level >= DOWSN_TRACE_NONE && level <= DOWSN_TRACE_FULL, "unknown trace level");
        DOWSN_REQUIRE(repetition >= 0, "repetition must be non-negative");
        const auto id = dowsn::parse_function_id(problem);
        DOWSN_REQUIRE(id.has_value(), "unknown problem id");
        dowsn::payload_size(dimension);
        auto sc = dowsn::sim_config(exp->cfg, exp->cfg.variants[variant], *id, dimension, repetition);
        sc.trace_level = static_cast<dowsn::TraceLevel>(level);
        dowsn::Simulator sim(sc);
        const auto t = sim.run();
        if (trace)
            *trace = dup(t.serialize(sc.trace_level));
        if (network_fitness)
            *network_fitness = t.network_fitness();
        if (min_fitness)
            *min_fitness = t.min_fitness();
        return DOWSN_OK;
    });
}

dowsn_status dowsn_tables(const char* run_dir, char** text)
{
    return guarded([&] {
        DOWSN_REQUIRE(run_dir, "run_dir must not be null");
        const auto out = dowsn::write_tables(run_dir);
        if (text)
            *text = dup(out);
        return DOWSN_OK;
    });
}

dowsn_status dowsn_trend(const char* run_dir, int stride, char** csv)
{
    return guarded([&] {
        DOWSN_REQUIRE(run_dir && csv, "run_dir and csv must not be null");
        DOWSN_REQUIRE(stride >= 1, "stride must be at least 1");
        *csv = dup(dowsn::trend_csv(run_dir, stride));
        return DOWSN_OK;
    });
}

dowsn_status dowsn_payload_size(int dimension, size_t* bytes)
{
    return guarded([&] {
        DOWSN_REQUIRE(bytes, "bytes must not be null");
        *bytes = dowsn::payload_size(dimension);
        return DOWSN_OK;
    });
}

dowsn_status dowsn_evaluate(const char* problem, const int32_t* x_raw, int dimension, int32_t* fitness_raw)
{
    return guarded([&] {
        DOWSN_REQUIRE(problem && x_raw && fitness_raw, "null argument");
        const auto id = dowsn::parse_function_id(problem);
        DOWSN_REQUIRE(id.has_value(), "unknown problem id");
        DOWSN_REQUIRE(dimension >= 1 && dimension <= dowsn::Problem::kMaxDimension, "dimension must lie in [1, 31]");
        const dowsn::Problem p(*id, dimension);
        std::vector<dowsn::Fx> x;
        for (int i = 0; i < dimension; ++i)
            x.push_back(dowsn::Fx::from_raw(x_raw[i]));
        DOWSN_REQUIRE(p.contains(x), "point outside the search box");
        *fitness_raw = p.evaluate(x).raw();
        return DOWSN_OK;
    });
}

dowsn_status dowsn_energy(double t_cpu, double t_lpm, double t_tx, double t_rx, double* energy_mj, double* power_mw,
                          double* duty_cycle)
{
    return guarded([&] {
        dowsn::EnergyLedger l;
        l.record_seconds(dowsn::PowerState::cpu, t_cpu);
        l.record_seconds(dowsn::PowerState::lpm, t_lpm);
        l.record_seconds(dowsn::PowerState::tx, t_tx);
        l.record_seconds(dowsn::PowerState::rx, t_rx);
        const auto e = dowsn::energy(l);
        if (energy_mj)
            *energy_mj = e.energy_mJ;
        if (power_mw)
            *power_mw = e.power_mW;
        if (duty_cycle)
            *duty_cycle = dowsn::duty_cycle(l);
        return DOWSN_OK;
    });
}

} // extern "C"
