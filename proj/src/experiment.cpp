#include "dowsn/experiment.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;

namespace dowsn {

std::string Diagnostic::str() const
{
    std::string out = source;
    if (line > 0) {
        out += ':' + std::to_string(line);
        if (column > 0)
            out += ':' + std::to_string(column);
    }
    return out + ": " + message;
}

namespace {

std::string join_diagnostics(const std::vector<Diagnostic>& diags)
{
    std::string out;
    for (const auto& d : diags) {
        if (!out.empty())
            out += '\n';
        out += d.str();
    }
    return out;
}

} // namespace

ConfigError::ConfigError(std::vector<Diagnostic> diags)
    : std::runtime_error(join_diagnostics(diags)), diags_(std::move(diags))
{
}

// ---- config parsing ---------------------------------------------------------

namespace {

struct ModeSpec {
    std::string_view key;
    AdbMode mode;
    bool communicating;
};

constexpr std::array<ModeSpec, 4> kModes{{
    {"sa", AdbMode::homogeneous, true},
    {"sa-alone", AdbMode::homogeneous, false},
    {"ma", AdbMode::heterogeneous, true},
    {"ma-alone", AdbMode::heterogeneous, false},
}};

class Reader {
public:
    Reader(std::string source, std::set<std::string> overridden)
        : source_(std::move(source)), overridden_(std::move(overridden))
    {
    }

    void error(const YAML::Node& n, const std::string& path, const std::string& msg)
    {
        Diagnostic d;
        if (overridden_.count(path)) {
            d.source = "override " + path;
        } else {
            d.source = source_;
            if (n.IsDefined() && n.Mark().line >= 0) {
                d.line = n.Mark().line + 1;
                d.column = n.Mark().column + 1;
            }
        }
        d.message = path.empty() ? msg : path + ": " + msg;
        diags_.push_back(std::move(d));
    }

    std::vector<Diagnostic>& diagnostics() { return diags_; }

    // Reports keys of map `n` that are not in `known`.
    void check_keys(const YAML::Node& n, const std::string& path, std::initializer_list<std::string_view> known)
    {
        if (!n.IsMap()) {
            error(n, path, "expected a mapping");
            return;
        }
        for (const auto& kv : n) {
            const auto key = kv.first.as<std::string>();
            if (std::find(known.begin(), known.end(), key) == known.end()) {
                std::string list;
                for (auto k : known)
                    list += (list.empty() ? "" : ", ") + std::string(k);
                error(kv.first, join(path, key), "unknown key (expected one of: " + list + ")");
            }
        }
    }

    static std::string join(const std::string& path, const std::string& key)
    {
        return path.empty() ? key : path + "." + key;
    }

    template <class T>
    std::optional<T> scalar(const YAML::Node& n, const std::string& path, const char* what)
    {
        if (!n.IsScalar()) {
            error(n, path, std::string("expected ") + what);
            return std::nullopt;
        }
        try {
            return n.as<T>();
        } catch (const YAML::Exception&) {
            error(n, path, std::string("expected ") + what + ", got '" + n.Scalar() + "'");
            return std::nullopt;
        }
    }

    std::optional<double> number(const YAML::Node& n, const std::string& path)
    {
        auto v = scalar<double>(n, path, "a number");
        if (v && !std::isfinite(*v)) {
            error(n, path, "must be finite");
            return std::nullopt;
        }
        return v;
    }

    std::optional<std::int64_t> integer(const YAML::Node& n, const std::string& path)
    {
        return scalar<std::int64_t>(n, path, "an integer");
    }

    std::optional<SimTime> seconds(const YAML::Node& n, const std::string& path, bool allow_zero)
    {
        const auto v = number(n, path);
        if (!v)
            return std::nullopt;
        if (*v < 0 || (!allow_zero && *v == 0)) {
            error(n, path, allow_zero ? "must be non-negative" : "must be positive");
            return std::nullopt;
        }
        if (*v > 1e9) {
            error(n, path, "is unreasonably large");
            return std::nullopt;
        }
        return from_seconds(*v);
    }

    std::optional<Fx> unit_fx(const YAML::Node& n, const std::string& path, bool closed)
    {
        const auto v = number(n, path);
        if (!v)
            return std::nullopt;
        if (*v < 0 || *v > 1 || (!closed && (*v == 0 || *v == 1))) {
            error(n, path, std::string("must lie in ") + (closed ? "[0, 1]" : "(0, 1)") + ", got " + n.Scalar());
            return std::nullopt;
        }
        return Fx::from_real(*v);
    }

private:
    std::string source_;
    std::set<std::string> overridden_;
    std::vector<Diagnostic> diags_;
};

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

// Applies "a.b.c=value" on top of the document.
void apply_override(YAML::Node& root, const std::string& spec, std::set<std::string>& paths,
                    std::vector<Diagnostic>& diags)
{
    const auto eq = spec.find('=');
    const std::string key = trim(spec.substr(0, eq));
    if (eq == std::string::npos || key.empty()) {
        diags.push_back({"override", 0, 0, "'" + spec + "' is not of the form key=value"});
        return;
    }
    YAML::Node value;
    try {
        value = YAML::Load(spec.substr(eq + 1));
    } catch (const YAML::Exception& e) {
        diags.push_back({"override " + key, 0, 0, "cannot parse value: " + e.msg});
        return;
    }
    std::vector<std::string> parts;
    std::stringstream ss(key);
    for (std::string part; std::getline(ss, part, '.');)
        parts.push_back(part);
    if (std::any_of(parts.begin(), parts.end(), [](const std::string& p) { return p.empty(); })) {
        diags.push_back({"override " + key, 0, 0, "malformed key"});
        return;
    }
    if (!root.IsMap() && !root.IsNull()) {
        diags.push_back({"override " + key, 0, 0, "the document is not a mapping"});
        return;
    }
    std::vector<YAML::Node> chain{root};
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        YAML::Node next = chain.back()[parts[i]];
        if (next.IsDefined() && !next.IsMap() && !next.IsNull()) {
            diags.push_back({"override " + key, 0, 0, "'" + parts[i] + "' is not a mapping"});
            return;
        }
        if (!next.IsDefined() || next.IsNull())
            chain.back()[parts[i]] = YAML::Node(YAML::NodeType::Map);
        chain.push_back(chain.back()[parts[i]]);
    }
    chain.back()[parts.back()] = value;
    paths.insert(key);
}

std::string variant_suffix(const std::string& parameter, const std::string& text)
{
    return "_" + parameter + text;
}

ExperimentConfig parse_document(const YAML::Node& root, Reader& rd)
{
    ExperimentConfig cfg;
    rd.check_keys(root, "",
                  {"name", "problems", "dimensions", "repetitions", "seed", "network", "modes", "sweep", "budget",
                   "channel", "cost", "radio", "algorithms", "trace", "threads"});
    if (!root.IsMap())
        return cfg;

    if (const auto n = root["name"]) {
        if (auto v = rd.scalar<std::string>(n, "name", "a string")) {
            const bool ok = !v->empty() && v->find_first_of("/\\") == std::string::npos && *v != "." && *v != "..";
            if (ok)
                cfg.name = *v;
            else
                rd.error(n, "name", "must be a plain directory name");
        }
    }

    if (const auto n = root["problems"]) {
        if (n.IsScalar() && n.Scalar() == "all") {
            // default below
        } else if (!n.IsSequence() || n.size() == 0) {
            rd.error(n, "problems", "expected 'all' or a non-empty list of ids f1..f15");
        } else {
            for (std::size_t i = 0; i < n.size(); ++i) {
                const auto key = rd.scalar<std::string>(n[i], "problems", "a problem id");
                if (!key)
                    continue;
                if (const auto id = parse_function_id(*key)) {
                    if (std::find(cfg.problems.begin(), cfg.problems.end(), *id) != cfg.problems.end())
                        rd.error(n[i], "problems", "duplicate id " + *key);
                    else
                        cfg.problems.push_back(*id);
                } else {
                    rd.error(n[i], "problems", "unknown problem id '" + *key + "' (expected f1..f15)");
                }
            }
        }
    }
    if (cfg.problems.empty())
        for (const auto& info : function_registry())
            cfg.problems.push_back(info.id);

    if (const auto n = root["dimensions"]) {
        const auto check_dim = [&](const YAML::Node& d) -> std::optional<int> {
            const auto v = rd.integer(d, "dimensions");
            if (!v)
                return std::nullopt;
            if (*v < 1) {
                rd.error(d, "dimensions", "dimension must be at least 1");
                return std::nullopt;
            }
            if (*v > Problem::kMaxDimension) {
                rd.error(d, "dimensions",
                         "dimension " + std::to_string(*v) + " exceeds the payload limit: a " +
                             std::to_string(kMaxPayloadBytes) + "-byte packet carries at most " +
                             std::to_string(Problem::kMaxDimension) + " variables plus the fitness");
                return std::nullopt;
            }
            return static_cast<int>(*v);
        };
        cfg.dimensions.clear();
        if (n.IsSequence() && n.size() > 0) {
            for (std::size_t i = 0; i < n.size(); ++i)
                if (const auto d = check_dim(n[i]))
                    cfg.dimensions.push_back(*d);
        } else if (n.IsScalar()) {
            if (const auto d = check_dim(n))
                cfg.dimensions.push_back(*d);
        } else {
            rd.error(n, "dimensions", "expected an integer or a non-empty list");
        }
    }

    if (const auto n = root["repetitions"]) {
        if (const auto v = rd.integer(n, "repetitions")) {
            if (*v < 1 || *v > 100000)
                rd.error(n, "repetitions", "must lie in [1, 100000]");
            else
                cfg.repetitions = static_cast<int>(*v);
        }
    }
    if (const auto n = root["seed"])
        if (const auto v = rd.scalar<std::uint64_t>(n, "seed", "a non-negative integer"))
            cfg.seed = *v;
    if (const auto n = root["threads"]) {
        if (const auto v = rd.integer(n, "threads")) {
            if (*v < 0 || *v > 1024)
                rd.error(n, "threads", "must lie in [0, 1024]");
            else
                cfg.threads = static_cast<int>(*v);
        }
    }
    if (const auto n = root["trace"]) {
        if (const auto v = rd.scalar<std::string>(n, "trace", "a trace level")) {
            if (const auto l = parse_trace_level(*v))
                cfg.trace_level = *l;
            else
                rd.error(n, "trace", "expected none, improvements or full");
        }
    }

    Variant base;
    if (const auto net = root["network"]) {
        rd.check_keys(net, "network", {"nodes", "topology", "range", "period", "q"});
        if (net.IsMap()) {
            if (const auto n = net["nodes"]) {
                if (const auto v = rd.integer(n, "network.nodes")) {
                    if (*v < 1 || *v > 10000)
                        rd.error(n, "network.nodes", "must lie in [1, 10000]");
                    else
                        base.nodes = static_cast<int>(*v);
                }
            }
            if (const auto n = net["topology"]) {
                if (const auto v = rd.scalar<std::string>(n, "network.topology", "a topology kind")) {
                    if (const auto k = parse_topology_kind(*v))
                        cfg.topology.kind = *k;
                    else
                        rd.error(n, "network.topology", "expected complete, ring or random_geometric");
                }
            }
            if (const auto n = net["range"]) {
                if (const auto v = rd.number(n, "network.range")) {
                    if (*v <= 0)
                        rd.error(n, "network.range", "must be positive");
                    else
                        cfg.topology.range = *v;
                }
            }
            if (const auto n = net["period"])
                if (const auto v = rd.seconds(n, "network.period", false))
                    base.period = *v;
            if (const auto n = net["q"])
                if (const auto v = rd.unit_fx(n, "network.q", true))
                    base.q = *v;
        }
    }

    if (const auto b = root["budget"]) {
        rd.check_keys(b, "budget", {"evaluations", "time"});
        if (b.IsMap()) {
            if (const auto n = b["evaluations"]) {
                if (const auto v = rd.integer(n, "budget.evaluations")) {
                    if (*v < 1)
                        rd.error(n, "budget.evaluations", "must be positive");
                    else
                        cfg.eval_budget = *v;
                }
            }
            if (const auto n = b["time"])
                if (const auto v = rd.seconds(n, "budget.time", false))
                    cfg.time_budget = *v;
        }
    }

    if (const auto c = root["channel"]) {
        rd.check_keys(c, "channel", {"loss", "collision_window", "latency"});
        if (c.IsMap()) {
            if (const auto n = c["loss"]) {
                if (const auto v = rd.number(n, "channel.loss")) {
                    if (*v < 0 || *v > 1)
                        rd.error(n, "channel.loss", "must lie in [0, 1]");
                    else
                        cfg.channel.loss_prob = *v;
                }
            }
            if (const auto n = c["collision_window"])
                if (const auto v = rd.seconds(n, "channel.collision_window", true))
                    cfg.channel.collision_window = *v;
            if (const auto n = c["latency"])
                if (const auto v = rd.seconds(n, "channel.latency", true))
                    cfg.channel.latency = *v;
        }
    }

    const auto read_cost = [&](const YAML::Node& c, const std::string& path, CostModel& out, bool per_function) {
        if (per_function)
            rd.check_keys(c, path, {"c0", "c1"});
        if (!c.IsMap())
            return;
        if (const auto n = c["c0"])
            if (const auto v = rd.seconds(n, path + ".c0", true))
                out.c0 = *v;
        if (const auto n = c["c1"])
            if (const auto v = rd.seconds(n, path + ".c1", true))
                out.c1 = *v;
    };
    if (const auto c = root["cost"]) {
        rd.check_keys(c, "cost", {"c0", "c1", "functions"});
        read_cost(c, "cost", cfg.cost, false);
        if (c.IsMap() && c["functions"]) {
            const auto fns = c["functions"];
            if (!fns.IsMap()) {
                rd.error(fns, "cost.functions", "expected a mapping from problem id to {c0, c1}");
            } else {
                for (const auto& kv : fns) {
                    const auto key = kv.first.as<std::string>();
                    const auto id = parse_function_id(key);
                    if (!id) {
                        rd.error(kv.first, "cost.functions", "unknown problem id '" + key + "'");
                        continue;
                    }
                    CostModel m = cfg.cost;
                    read_cost(kv.second, "cost.functions." + key, m, true);
                    cfg.function_cost[*id] = m;
                }
            }
        }
    }
    if (const auto r = root["radio"]) {
        rd.check_keys(r, "radio", {"bitrate", "listen"});
        if (r.IsMap()) {
            if (const auto n = r["bitrate"]) {
                if (const auto v = rd.integer(n, "radio.bitrate")) {
                    if (*v <= 0)
                        rd.error(n, "radio.bitrate", "must be positive");
                    else
                        cfg.radio.bitrate_bps = *v;
                }
            }
            if (const auto n = r["listen"])
                if (const auto v = rd.seconds(n, "radio.listen", true))
                    cfg.radio.listen_window = *v;
        }
    }

    if (const auto a = root["algorithms"]) {
        rd.check_keys(a, "algorithms", {"3some", "nusa", "ispo"});
        if (a.IsMap()) {
            if (const auto t = a["3some"]) {
                rd.check_keys(t, "algorithms.3some", {"alpha_e", "delta", "k", "rho", "short_budget"});
                auto& p = cfg.params.tsome;
                if (t.IsMap()) {
                    if (const auto n = t["alpha_e"])
                        if (const auto v = rd.unit_fx(n, "algorithms.3some.alpha_e", false))
                            p.alpha_e = *v;
                    if (const auto n = t["delta"])
                        if (const auto v = rd.unit_fx(n, "algorithms.3some.delta", true))
                            p.delta = *v;
                    if (const auto n = t["rho"])
                        if (const auto v = rd.unit_fx(n, "algorithms.3some.rho", true))
                            p.rho = *v;
                    if (const auto n = t["k"])
                        if (const auto v = rd.integer(n, "algorithms.3some.k"))
                            p.k = static_cast<int>(std::clamp<std::int64_t>(*v, -1, 1 << 20));
                    if (const auto n = t["short_budget"])
                        if (const auto v = rd.integer(n, "algorithms.3some.short_budget"))
                            p.short_budget = static_cast<int>(std::clamp<std::int64_t>(*v, -1, 1 << 30));
                }
            }
            if (const auto t = a["nusa"]) {
                rd.check_keys(t, "algorithms.nusa", {"b", "samples", "alpha", "t0"});
                auto& p = cfg.params.nusa;
                if (t.IsMap()) {
                    if (const auto n = t["b"])
                        if (const auto v = rd.integer(n, "algorithms.nusa.b"))
                            p.b = static_cast<int>(std::clamp<std::int64_t>(*v, -1, 64));
                    if (const auto n = t["samples"])
                        if (const auto v = rd.integer(n, "algorithms.nusa.samples"))
                            p.N_s = static_cast<int>(std::clamp<std::int64_t>(*v, -1, 1 << 20));
                    if (const auto n = t["alpha"])
                        if (const auto v = rd.unit_fx(n, "algorithms.nusa.alpha", false))
                            p.alpha = *v;
                    if (const auto n = t["t0"]) {
                        if (const auto v = rd.number(n, "algorithms.nusa.t0")) {
                            if (*v <= 0 || *v > 30000)
                                rd.error(n, "algorithms.nusa.t0", "must lie in (0, 30000]");
                            else
                                p.T0 = Fx::from_real(*v);
                        }
                    }
                }
            }
            if (const auto t = a["ispo"]) {
                rd.check_keys(t, "algorithms.ispo", {"A", "P", "B", "S_f", "H"});
                auto& p = cfg.params.ispo;
                if (t.IsMap()) {
                    const auto fx_in = [&](const char* key, Fx& out, double lo) {
                        if (const auto n = t[key]) {
                            const std::string path = std::string("algorithms.ispo.") + key;
                            if (const auto v = rd.number(n, path)) {
                                if (*v <= lo || *v > 30000)
                                    rd.error(n, path, "out of range");
                                else
                                    out = Fx::from_real(*v);
                            }
                        }
                    };
                    fx_in("A", p.A, 0);
                    fx_in("B", p.B, 0);
                    fx_in("S_f", p.S_f, 1);
                    if (const auto n = t["P"])
                        if (const auto v = rd.integer(n, "algorithms.ispo.P"))
                            p.P = static_cast<int>(std::clamp<std::int64_t>(*v, -1, 64));
                    if (const auto n = t["H"])
                        if (const auto v = rd.integer(n, "algorithms.ispo.H"))
                            p.H = static_cast<int>(std::clamp<std::int64_t>(*v, -1, 1 << 20));
                }
            }
            try {
                validate(cfg.params);
            } catch (const std::invalid_argument& e) {
                rd.error(a, "algorithms", e.what());
            }
        }
    }

    // Variants: modes crossed with an optional one-parameter sweep.
    std::vector<const ModeSpec*> modes;
    if (const auto n = root["modes"]) {
        const auto add = [&](const YAML::Node& m) {
            const auto key = rd.scalar<std::string>(m, "modes", "a mode name");
            if (!key)
                return;
            const auto it = std::find_if(kModes.begin(), kModes.end(), [&](const ModeSpec& s) { return s.key == *key; });
            if (it == kModes.end())
                rd.error(m, "modes", "unknown mode '" + *key + "' (expected sa, sa-alone, ma or ma-alone)");
            else if (std::find(modes.begin(), modes.end(), &*it) != modes.end())
                rd.error(m, "modes", "duplicate mode '" + *key + "'");
            else
                modes.push_back(&*it);
        };
        if (n.IsSequence() && n.size() > 0) {
            for (std::size_t i = 0; i < n.size(); ++i)
                add(n[i]);
        } else if (n.IsScalar()) {
            add(n);
        } else {
            rd.error(n, "modes", "expected a mode name or a non-empty list");
        }
    } else {
        for (const auto& m : kModes)
            modes.push_back(&m);
    }

    struct SweepValue {
        std::string text;
        Variant apply;
    };
    std::string sweep_param;
    std::vector<SweepValue> sweep;
    if (const auto s = root["sweep"]) {
        rd.check_keys(s, "sweep", {"parameter", "values"});
        if (s.IsMap()) {
            const auto pn = s["parameter"];
            const auto vn = s["values"];
            if (!pn)
                rd.error(s, "sweep", "missing 'parameter' (q, period or nodes)");
            if (!vn || !vn.IsSequence() || vn.size() == 0)
                rd.error(vn ? vn : s, "sweep.values", "expected a non-empty list");
            const auto param = pn ? rd.scalar<std::string>(pn, "sweep.parameter", "q, period or nodes") : std::nullopt;
            if (param && *param != "q" && *param != "period" && *param != "nodes") {
                rd.error(pn, "sweep.parameter", "expected q, period or nodes");
            } else if (param && vn && vn.IsSequence()) {
                sweep_param = *param;
                std::set<std::string> seen;
                for (std::size_t i = 0; i < vn.size(); ++i) {
                    SweepValue sv{vn[i].IsScalar() ? vn[i].Scalar() : std::string{}, base};
                    bool ok = false;
                    if (*param == "q") {
                        if (const auto v = rd.unit_fx(vn[i], "sweep.values", true)) {
                            sv.apply.q = *v;
                            ok = true;
                        }
                    } else if (*param == "period") {
                        if (const auto v = rd.seconds(vn[i], "sweep.values", false)) {
                            sv.apply.period = *v;
                            ok = true;
                        }
                    } else if (const auto v = rd.integer(vn[i], "sweep.values")) {
                        if (*v < 1 || *v > 10000) {
                            rd.error(vn[i], "sweep.values", "node count must lie in [1, 10000]");
                        } else {
                            sv.apply.nodes = static_cast<int>(*v);
                            ok = true;
                        }
                    }
                    if (ok && !seen.insert(sv.text).second) {
                        rd.error(vn[i], "sweep.values", "duplicate value " + sv.text);
                        ok = false;
                    }
                    if (ok)
                        sweep.push_back(std::move(sv));
                }
            }
        }
    }
    cfg.network = base;
    for (const ModeSpec* m : modes)
        cfg.modes.emplace_back(m->key);
    cfg.sweep_parameter = sweep_param;
    for (const auto& sv : sweep)
        cfg.sweep_values.push_back(sv.text);
    if (sweep.empty())
        sweep.push_back({"", base});
    for (const ModeSpec* m : modes) {
        for (const auto& sv : sweep) {
            Variant v = sv.apply;
            v.mode = m->mode;
            v.communicating = m->communicating;
            v.label = std::string(m->key) + (sweep_param.empty() ? "" : variant_suffix(sweep_param, sv.text));
            cfg.variants.push_back(std::move(v));
        }
    }

    return cfg;
}

} // namespace

ExperimentConfig load_config(const std::string& text, const std::string& source,
                             const std::vector<std::string>& overrides)
{
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError({{source, e.mark.line + 1, e.mark.column + 1, "YAML syntax error: " + e.msg}});
    }
    std::vector<Diagnostic> pre;
    std::set<std::string> overridden;
    if (root.IsNull())
        root = YAML::Node(YAML::NodeType::Map);
    for (const auto& o : overrides)
        apply_override(root, o, overridden, pre);
    if (!root.IsMap() && !root.IsNull())
        pre.push_back({source, root.Mark().line + 1, root.Mark().column + 1, "top level must be a mapping"});
    if (!pre.empty())
        throw ConfigError(pre);
    Reader rd(source, overridden);
    ExperimentConfig cfg = parse_document(root, rd);
    if (!rd.diagnostics().empty())
        throw ConfigError(rd.diagnostics());
    return cfg;
}

ExperimentConfig load_config_file(const fs::path& path, const std::vector<std::string>& overrides)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError({{path.string(), 0, 0, "cannot read the file"}});
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_config(ss.str(), path.string(), overrides);
}

// ---- canonical form ---------------------------------------------------------

namespace {

std::string seconds_text(SimTime t)
{
    char buf[48];
    std::snprintf(buf, sizeof buf, "%lld.%06lld", static_cast<long long>(t.count() / 1'000'000),
                  static_cast<long long>(t.count() % 1'000'000));
    return buf;
}

std::string fnv1a(std::string_view text)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void emit_cost(YAML::Emitter& e, const CostModel& c)
{
    e << YAML::Key << "c0" << YAML::Value << seconds_text(c.c0);
    e << YAML::Key << "c1" << YAML::Value << seconds_text(c.c1);
}

} // namespace

std::string canonical_yaml(const ExperimentConfig& cfg)
{
    YAML::Emitter e;
    e << YAML::BeginMap;
    e << YAML::Key << "name" << YAML::Value << cfg.name;
    e << YAML::Key << "problems" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (auto id : cfg.problems)
        e << std::string(function_info(id).key);
    e << YAML::EndSeq;
    e << YAML::Key << "dimensions" << YAML::Value << YAML::Flow << cfg.dimensions;
    e << YAML::Key << "repetitions" << YAML::Value << cfg.repetitions;
    e << YAML::Key << "seed" << YAML::Value << cfg.seed;
    e << YAML::Key << "network" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "nodes" << YAML::Value << cfg.network.nodes;
    e << YAML::Key << "topology" << YAML::Value << std::string(to_string(cfg.topology.kind));
    e << YAML::Key << "range" << YAML::Value << cfg.topology.range;
    e << YAML::Key << "period" << YAML::Value << seconds_text(cfg.network.period);
    e << YAML::Key << "q" << YAML::Value << to_string(cfg.network.q);
    e << YAML::EndMap;
    e << YAML::Key << "modes" << YAML::Value << YAML::Flow << cfg.modes;
    if (!cfg.sweep_parameter.empty()) {
        e << YAML::Key << "sweep" << YAML::Value << YAML::Flow << YAML::BeginMap;
        e << YAML::Key << "parameter" << YAML::Value << cfg.sweep_parameter;
        e << YAML::Key << "values" << YAML::Value << YAML::Flow << YAML::BeginSeq;
        for (const auto& v : cfg.sweep_values)
            e << YAML::DoubleQuoted << v;
        e << YAML::EndSeq << YAML::EndMap;
    }
    e << YAML::Key << "budget" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "evaluations" << YAML::Value << cfg.eval_budget;
    e << YAML::Key << "time" << YAML::Value << seconds_text(cfg.time_budget);
    e << YAML::EndMap;
    e << YAML::Key << "channel" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "loss" << YAML::Value << cfg.channel.loss_prob;
    e << YAML::Key << "collision_window" << YAML::Value << seconds_text(cfg.channel.collision_window);
    e << YAML::Key << "latency" << YAML::Value << seconds_text(cfg.channel.latency);
    e << YAML::EndMap;
    e << YAML::Key << "cost" << YAML::Value << YAML::BeginMap;
    emit_cost(e, cfg.cost);
    if (!cfg.function_cost.empty()) {
        e << YAML::Key << "functions" << YAML::Value << YAML::BeginMap;
        for (const auto& [id, c] : cfg.function_cost) {
            e << YAML::Key << std::string(function_info(id).key) << YAML::Value << YAML::Flow << YAML::BeginMap;
            emit_cost(e, c);
            e << YAML::EndMap;
        }
        e << YAML::EndMap;
    }
    e << YAML::EndMap;
    e << YAML::Key << "radio" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "bitrate" << YAML::Value << cfg.radio.bitrate_bps;
    e << YAML::Key << "listen" << YAML::Value << seconds_text(cfg.radio.listen_window);
    e << YAML::EndMap;
    const auto& t = cfg.params.tsome;
    const auto& nu = cfg.params.nusa;
    const auto& is = cfg.params.ispo;
    e << YAML::Key << "algorithms" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "3some" << YAML::Value << YAML::Flow << YAML::BeginMap;
    e << YAML::Key << "alpha_e" << YAML::Value << to_string(t.alpha_e) << YAML::Key << "delta" << YAML::Value
      << to_string(t.delta) << YAML::Key << "k" << YAML::Value << t.k << YAML::Key << "rho" << YAML::Value
      << to_string(t.rho) << YAML::Key << "short_budget" << YAML::Value << t.short_budget;
    e << YAML::EndMap;
    e << YAML::Key << "nusa" << YAML::Value << YAML::Flow << YAML::BeginMap;
    e << YAML::Key << "b" << YAML::Value << nu.b << YAML::Key << "samples" << YAML::Value << nu.N_s << YAML::Key
      << "alpha" << YAML::Value << to_string(nu.alpha) << YAML::Key << "t0" << YAML::Value << to_string(nu.T0);
    e << YAML::EndMap;
    e << YAML::Key << "ispo" << YAML::Value << YAML::Flow << YAML::BeginMap;
    e << YAML::Key << "A" << YAML::Value << to_string(is.A) << YAML::Key << "P" << YAML::Value << is.P << YAML::Key
      << "B" << YAML::Value << to_string(is.B) << YAML::Key << "S_f" << YAML::Value << to_string(is.S_f)
      << YAML::Key << "H" << YAML::Value << is.H;
    e << YAML::EndMap;
    e << YAML::EndMap;
    e << YAML::Key << "trace" << YAML::Value << std::string(to_string(cfg.trace_level));
    e << YAML::EndMap;
    return std::string(e.c_str()) + "\n";
}

std::string config_hash(const ExperimentConfig& cfg) { return fnv1a(canonical_yaml(cfg)); }

std::uint64_t run_seed(std::uint64_t master, FunctionId problem, int dimension, int repetition)
{
    auto s = mix_seed(master, static_cast<std::uint64_t>(problem));
    s = mix_seed(s, static_cast<std::uint64_t>(dimension));
    return mix_seed(s, static_cast<std::uint64_t>(repetition));
}

SimConfig sim_config(const ExperimentConfig& cfg, const Variant& v, FunctionId problem, int dimension, int repetition)
{
    SimConfig s;
    s.problem = Problem(problem, dimension);
    s.params = cfg.params;
    s.nodes = v.nodes;
    s.node.algorithm = AlgorithmId::tsome;
    s.node.q = v.q;
    s.node.comm_period = v.period;
    s.node.eval_budget = cfg.eval_budget;
    s.node.time_budget = cfg.time_budget;
    s.node.communicating = v.communicating;
    s.mode = v.mode;
    s.topology = cfg.topology;
    s.channel = cfg.channel;
    const auto fc = cfg.function_cost.find(problem);
    s.cost = fc == cfg.function_cost.end() ? cfg.cost : fc->second;
    s.radio = cfg.radio;
    s.seed = run_seed(cfg.seed, problem, dimension, repetition);
    s.trace_level = cfg.trace_level;
    return s;
}

std::size_t run_count(const ExperimentConfig& cfg)
{
    return cfg.variants.size() * cfg.problems.size() * cfg.dimensions.size() *
           static_cast<std::size_t>(cfg.repetitions);
}

// ---- artifacts --------------------------------------------------------------

namespace {

constexpr const char* kIncomplete = "INCOMPLETE";
constexpr const char* kManifest = "manifest.csv";

std::string num(double v, const char* f = "%.6e")
{
    if (std::isnan(v))
        return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string trace_name(FunctionId f, int dim, int rep)
{
    return std::string(function_info(f).key) + "_d" + std::to_string(dim) + "_r" + std::to_string(rep) + ".trace";
}

void write_file(const fs::path& path, const std::string& text)
{
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw std::runtime_error("cannot write " + tmp.string());
        out << text;
        if (!out.flush())
            throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string sanitize(std::string s)
{
    std::replace(s.begin(), s.end(), ',', ';');
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

struct ManifestRow {
    std::string variant;
    FunctionId problem;
    int dim;
    int rep;
    std::string trace; // relative to the run directory
    bool ok;
};

struct Manifest {
    std::string hash;
    std::vector<ManifestRow> rows;
};

Manifest read_manifest(const fs::path& run_dir)
{
    const fs::path path = run_dir / kManifest;
    if (!fs::exists(path))
        throw std::runtime_error(run_dir.string() + " has no " + kManifest + "; is it a run directory?");
    std::istringstream in(read_file(path));
    Manifest m;
    std::string line;
    int line_no = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        if (line[0] == '#') {
            const auto pos = line.find("config=");
            if (pos != std::string::npos)
                m.hash = line.substr(pos + 7, 16);
            continue;
        }
        if (!header) {
            header = true;
            continue;
        }
        std::vector<std::string> f;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');)
            f.push_back(cell);
        if (f.size() < 10)
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": truncated row");
        const auto id = parse_function_id(f[1]);
        if (!id)
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": unknown problem " + f[1]);
        m.rows.push_back({f[0], *id, std::stoi(f[2]), std::stoi(f[3]), f[5], f[9] == "ok"});
    }
    return m;
}

// Groups keyed by variant, in first-appearance order.
std::vector<std::string> variant_order(const Manifest& m)
{
    std::vector<std::string> out;
    for (const auto& r : m.rows)
        if (std::find(out.begin(), out.end(), r.variant) == out.end())
            out.push_back(r.variant);
    return out;
}

template <class T>
std::vector<T> ordered_unique(const Manifest& m, T ManifestRow::*field)
{
    std::vector<T> out;
    for (const auto& r : m.rows)
        if (std::find(out.begin(), out.end(), r.*field) == out.end())
            out.push_back(r.*field);
    return out;
}

std::string csv_line(const std::vector<std::string>& cells)
{
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i)
            out += ',';
        out += cells[i];
    }
    return out + '\n';
}

} // namespace

std::vector<std::vector<std::string>> energy_rows(const Trace& trace, const CurrentModel& cm)
{
    std::vector<std::vector<std::string>> rows;
    EnergyLedger sum;
    double total_mj = 0, total_mw = 0, total_dc = 0;
    for (const auto& f : trace.finals) {
        const auto e = energy(f.ledger, cm);
        const double dc = duty_cycle(f.ledger);
        rows.push_back({std::to_string(f.node), std::string(to_string(f.algorithm)),
                        num(f.ledger.seconds(PowerState::cpu), "%.6f"), num(f.ledger.seconds(PowerState::lpm), "%.6f"),
                        num(f.ledger.seconds(PowerState::tx), "%.6f"), num(f.ledger.seconds(PowerState::rx), "%.6f"),
                        num(dc, "%.6f"), num(e.power_mW, "%.6f"), num(e.energy_mJ, "%.6f")});
        for (auto s : {PowerState::cpu, PowerState::lpm, PowerState::tx, PowerState::rx})
            sum.record(s, f.ledger.time(s));
        total_mj += e.energy_mJ;
        total_mw += e.power_mW;
        total_dc += dc;
    }
    if (!trace.finals.empty()) {
        const double k = static_cast<double>(trace.finals.size());
        rows.push_back({"mean", "", num(sum.seconds(PowerState::cpu) / k, "%.6f"),
                        num(sum.seconds(PowerState::lpm) / k, "%.6f"), num(sum.seconds(PowerState::tx) / k, "%.6f"),
                        num(sum.seconds(PowerState::rx) / k, "%.6f"), num(total_dc / k, "%.6f"),
                        num(total_mw / k, "%.6f"), num(total_mj / k, "%.6f")});
    }
    return rows;
}

RunReport run_experiment(const ExperimentConfig& cfg, const fs::path& output_root, const Progress& progress)
{
    if (cfg.variants.empty() || cfg.problems.empty() || cfg.dimensions.empty())
        throw std::invalid_argument("experiment: nothing to run");
    RunReport report;
    report.directory = output_root / cfg.name;
    const fs::path dir = report.directory;
    fs::create_directories(dir / "traces");
    write_file(dir / kIncomplete, "run in progress\n");
    const std::string yaml = canonical_yaml(cfg);
    const std::string hash = fnv1a(yaml);
    write_file(dir / "config.yaml", yaml);

    struct Job {
        const Variant* variant;
        FunctionId problem;
        int dim;
        int rep;
        std::string trace;
        std::string status = "ok";
        double network = NAN, minimum = NAN;
        SimTime end{};
        std::uint64_t seed = 0;
    };
    std::vector<Job> jobs;
    for (const auto& v : cfg.variants) {
        fs::create_directories(dir / "traces" / v.label);
        for (int d : cfg.dimensions)
            for (auto f : cfg.problems)
                for (int r = 0; r < cfg.repetitions; ++r)
                    jobs.push_back({&v, f, d, r, (fs::path("traces") / v.label / trace_name(f, d, r)).generic_string()});
    }
    report.runs = jobs.size();

    std::atomic<std::size_t> next{0}, done{0};
    std::mutex progress_mutex;
    const auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            Job& j = jobs[i];
            try {
                const SimConfig sc = sim_config(cfg, *j.variant, j.problem, j.dim, j.rep);
                j.seed = sc.seed;
                Simulator sim(sc);
                const Trace t = sim.run();
                j.network = t.network_fitness();
                j.minimum = t.min_fitness();
                j.end = t.end;
                write_file(dir / j.trace, t.serialize(cfg.trace_level));
            } catch (const std::exception& e) {
                j.status = "failed: " + sanitize(e.what());
            }
            const auto n = ++done;
            if (progress) {
                std::lock_guard lock(progress_mutex);
                progress(n, jobs.size());
            }
        }
    };
    unsigned threads = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads) : std::thread::hardware_concurrency();
    threads = std::clamp<unsigned>(threads, 1, static_cast<unsigned>(std::max<std::size_t>(jobs.size(), 1)));
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 1; t < threads; ++t)
            pool.emplace_back(worker);
        worker();
    }

    std::string manifest = "# dowsn manifest config=" + hash + "\n";
    manifest += "variant,problem,dim,rep,seed,trace,network_fitness,min_fitness,end_s,status\n";
    for (const auto& j : jobs) {
        manifest += csv_line({j.variant->label, std::string(function_info(j.problem).key), std::to_string(j.dim),
                              std::to_string(j.rep), std::to_string(j.seed), j.trace, num(j.network), num(j.minimum),
                              seconds_text(j.end), j.status});
        if (j.status != "ok") {
            ++report.failures;
            report.errors.push_back(j.variant->label + " " + std::string(function_info(j.problem).key) + " d" +
                                    std::to_string(j.dim) + " r" + std::to_string(j.rep) + ": " + j.status);
        }
    }
    write_file(dir / kManifest, manifest);
    write_tables(dir);
    if (report.failures == 0) {
        fs::remove(dir / kIncomplete);
    } else {
        std::string text = std::to_string(report.failures) + " run(s) failed\n";
        for (const auto& e : report.errors)
            text += e + "\n";
        write_file(dir / kIncomplete, text);
    }
    return report;
}

std::string write_tables(const fs::path& run_dir)
{
    const Manifest m = read_manifest(run_dir);
    const auto variants = variant_order(m);
    const auto dims = ordered_unique(m, &ManifestRow::dim);
    const auto problems = ordered_unique(m, &ManifestRow::problem);
    if (variants.empty())
        throw std::runtime_error("manifest lists no runs");
    const std::string& ref = variants.front();

    // (variant, problem, dim) -> per-repetition (average, minimum) fitness.
    std::map<std::tuple<std::string, FunctionId, int>, std::vector<std::pair<double, double>>> values;
    std::map<std::pair<std::string, int>, std::string> energy;
    for (const auto& r : m.rows) {
        if (!r.ok)
            continue;
        const Trace t = Trace::parse(read_file(run_dir / r.trace));
        values[{r.variant, r.problem, r.dim}].emplace_back(t.network_fitness(), t.min_fitness());
        auto& e = energy[{r.variant, r.dim}];
        for (const auto& row : energy_rows(t)) {
            std::vector<std::string> cells{std::string(function_info(r.problem).key), std::to_string(r.rep)};
            cells.insert(cells.end(), row.begin(), row.end());
            e += csv_line(cells);
        }
    }

    const auto column = [](const std::vector<std::pair<double, double>>& v, bool min) {
        std::vector<double> out;
        for (const auto& p : v)
            out.push_back(min ? p.second : p.first);
        return out;
    };

    std::string text;
    for (int d : dims) {
        std::string combined = "# dowsn table config=" + m.hash + " dim=" + std::to_string(d) + " reference=" + ref + "\n";
        std::vector<std::string> head{"problem"};
        for (const auto& v : variants) {
            head.push_back(v + "_mean");
            head.push_back(v + "_std");
            if (v != ref)
                head.push_back(v + "_mark");
        }
        combined += csv_line(head);

        char line[256];
        text += "dimension " + std::to_string(d) + " (marks: " + ref + " against each column)\n";
        std::snprintf(line, sizeof line, "%-8s", "problem");
        text += line;
        for (const auto& v : variants) {
            std::snprintf(line, sizeof line, "  %-28s", v.c_str());
            text += line;
        }
        text += "\n";

        std::map<std::string, std::string> per_variant;
        for (auto f : problems) {
            const std::string key(function_info(f).key);
            std::vector<std::string> row{key};
            std::snprintf(line, sizeof line, "%-8s", key.c_str());
            text += line;
            const auto ref_it = values.find({ref, f, d});
            for (const auto& v : variants) {
                const auto it = values.find({v, f, d});
                std::string mark;
                std::string cell = "-";
                if (it != values.end() && !it->second.empty()) {
                    const auto avg = column(it->second, false);
                    const auto mins = column(it->second, true);
                    const auto s = aggregate(avg);
                    const auto smin = aggregate(mins);
                    if (v != ref && ref_it != values.end() && !ref_it->second.empty())
                        mark = std::string(1, to_char(wilcoxon(column(ref_it->second, false), avg)));
                    row.push_back(num(s.mean));
                    row.push_back(num(s.std));
                    per_variant[v] += csv_line({key, std::to_string(s.count), num(s.mean), num(s.std), num(smin.mean),
                                                num(smin.std), mark, s.single ? "single-run" : ""});
                    cell = num(s.mean, "%.3e") + " +- " + num(s.std, "%.2e") + (mark.empty() ? "" : " " + mark);
                } else {
                    row.push_back("nan");
                    row.push_back("nan");
                }
                if (v != ref)
                    row.push_back(mark);
                std::snprintf(line, sizeof line, "  %-28s", cell.c_str());
                text += line;
            }
            text += "\n";
            combined += csv_line(row);
        }
        text += "\n";
        write_file(run_dir / ("table_d" + std::to_string(d) + ".csv"), combined);
        for (const auto& v : variants) {
            std::string s = "# dowsn summary config=" + m.hash + " dim=" + std::to_string(d) + " variant=" + v +
                            " reference=" + ref + "\n";
            s += "problem,runs,mean,std,min_mean,min_std,mark,note\n" + per_variant[v];
            write_file(run_dir / ("summary_d" + std::to_string(d) + "_" + v + ".csv"), s);
            std::string e = "# dowsn energy config=" + m.hash + " dim=" + std::to_string(d) + " variant=" + v + "\n";
            e += "problem,rep,node,algorithm,T_cpu,T_lpm,T_tx,T_rx,duty_cycle,power_mW,energy_mJ\n";
            e += energy[{v, d}];
            write_file(run_dir / ("energy_d" + std::to_string(d) + "_" + v + ".csv"), e);
        }
    }
    return text;
}

std::vector<TrendPoint> trace_trend(const Trace& trace, std::int64_t budget)
{
    std::map<int, std::vector<std::pair<std::int64_t, double>>> per_node;
    for (const auto& rec : trace.records)
        if (const auto* imp = std::get_if<Improvement>(&rec))
            per_node[imp->node].emplace_back(imp->evals, imp->fitness.to_real());
    std::vector<TrendPoint> out;
    std::map<int, std::size_t> cursor;
    std::map<int, double> best;
    for (std::int64_t e = 1; e <= budget; ++e) {
        for (auto& [node, list] : per_node) {
            auto& c = cursor[node];
            while (c < list.size() && list[c].first <= e) {
                best[node] = list[c].second;
                ++c;
            }
        }
        double sum = 0, mn = INFINITY;
        for (const auto& [node, f] : best) {
            sum += f;
            mn = std::min(mn, f);
        }
        out.push_back({e, best.empty() ? NAN : sum / static_cast<double>(best.size()), best.empty() ? NAN : mn});
    }
    return out;
}

std::string trend_csv(const fs::path& run_dir, int stride)
{
    if (stride < 1)
        throw std::invalid_argument("trend: stride must be at least 1");
    const Manifest m = read_manifest(run_dir);
    std::string out = "# dowsn trend config=" + m.hash + " stride=" + std::to_string(stride) + "\n";
    out += "variant,problem,dim,evals,network_fitness,min_fitness,runs\n";
    std::vector<std::tuple<std::string, FunctionId, int>> groups;
    for (const auto& r : m.rows) {
        const auto key = std::make_tuple(r.variant, r.problem, r.dim);
        if (std::find(groups.begin(), groups.end(), key) == groups.end())
            groups.push_back(key);
    }
    for (const auto& [variant, problem, dim] : groups) {
        std::vector<Trace> traces;
        std::int64_t budget = 0;
        for (const auto& r : m.rows) {
            if (r.variant != variant || r.problem != problem || r.dim != dim || !r.ok)
                continue;
            traces.push_back(Trace::parse(read_file(run_dir / r.trace)));
            bool has_imp = false;
            for (const auto& rec : traces.back().records)
                has_imp = has_imp || std::holds_alternative<Improvement>(rec);
            if (!has_imp)
                throw std::runtime_error(r.trace + " has no improvement records; rerun with trace: improvements");
            for (const auto& f : traces.back().finals)
                budget = std::max(budget, f.evals);
        }
        if (traces.empty())
            continue;
        std::vector<double> avg(static_cast<std::size_t>(budget), 0.0), mn(static_cast<std::size_t>(budget), 0.0);
        std::vector<int> count(static_cast<std::size_t>(budget), 0);
        for (const auto& t : traces) {
            const auto pts = trace_trend(t, budget);
            for (std::size_t i = 0; i < pts.size(); ++i) {
                if (std::isnan(pts[i].average))
                    continue;
                avg[i] += pts[i].average;
                mn[i] += pts[i].minimum;
                ++count[i];
            }
        }
        for (std::int64_t e = stride; e <= budget; e += stride) {
            const auto i = static_cast<std::size_t>(e - 1);
            const double k = count[i];
            out += csv_line({variant, std::string(function_info(problem).key), std::to_string(dim), std::to_string(e),
                             count[i] ? num(avg[i] / k) : "nan", count[i] ? num(mn[i] / k) : "nan",
                             std::to_string(count[i])});
        }
    }
    return out;
}

} // namespace dowsn
