#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "tdm/canonical.hpp"
#include "tdm/economics.hpp"
#include "tdm/protocol.hpp"
#include "tdm/sim.hpp"

namespace fs = std::filesystem;
using tdm::Json;
using tdm::econ::Rational;

namespace {

constexpr const char* kToolVersion = "1.0.0";
constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInvariant = 3;

bool g_quiet = false;

void info(const std::string& msg) {
    if (!g_quiet) std::cout << msg << "\n";
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

std::string json_sha256(const Json& j) {
    std::string dump = tdm::canonical_dump(j);
    return tdm::hex(tdm::sha256(tdm::Bytes(dump.begin(), dump.end())));
}

// --------------------------------------------------------------------------
// run

int cmd_run(const std::string& config_path, std::optional<uint64_t> seed_flag,
            const std::string& out_dir) {
    tdm::sim::ScenarioConfig config;
    try {
        config = tdm::sim::ScenarioConfig::from_json(Json::parse(read_file(config_path)));
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    if (seed_flag) {
        config.master_seed = *seed_flag;
    } else if (const char* env = std::getenv("TDM_SEED")) {
        try {
            config.master_seed = std::stoull(env);
        } catch (const std::exception&) {
            std::cerr << "config error: TDM_SEED is not an integer\n";
            return kExitConfig;
        }
    }

    auto started = std::chrono::steady_clock::now();
    tdm::sim::RunResult result;
    try {
        result = tdm::sim::run_scenario(config);
    } catch (const tdm::DomainError& e) {
        std::cerr << "invariant violation: " << e.what() << "\n";
        return kExitInvariant;
    }
    auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - started)
                       .count();

    const std::string config_digest = json_sha256(config.to_json());
    fs::create_directories(out_dir);
    fs::path report_path = fs::path(out_dir) / "report.json";
    fs::path events_path = fs::path(out_dir) / "events.log";
    fs::path manifest_path = fs::path(out_dir) / "manifest.json";

    Json report_json = result.report.to_json();
    report_json["config_digest"] = config_digest;
    write_file(report_path, tdm::canonical_dump(report_json) + "\n");

    std::ostringstream events;
    for (const auto& rec : result.event_log) events << tdm::canonical_dump(rec) << "\n";
    Json finalize;
    finalize["tick"] = config.horizon;
    finalize["op"] = "finalize";
    finalize["args"] = Json::object();
    finalize["result"] = Json{{"snapshot_digest", result.report.snapshot_digest}};
    events << tdm::canonical_dump(finalize) << "\n";
    write_file(events_path, events.str());

    Json manifest;
    manifest["tool_version"] = kToolVersion;
    manifest["config_digest"] = config_digest;
    manifest["master_seed"] = config.master_seed;
    manifest["outputs"] = Json{{"report", report_path.string()}, {"events", events_path.string()}};
    manifest["duration_ms"] = elapsed;
    write_file(manifest_path, tdm::canonical_dump(manifest) + "\n");

    info("report:   " + report_path.string());
    info("events:   " + events_path.string());
    info("manifest: " + manifest_path.string());
    return kExitOk;
}

// --------------------------------------------------------------------------
// econ

struct GridSpec {
    std::string name;
    Rational from, to;
    int steps = 0;
};

std::optional<GridSpec> parse_grid(const std::string& text) {
    if (text.empty()) return std::nullopt;
    auto eq = text.find('=');
    if (eq == std::string::npos) throw std::runtime_error("grid needs name=from:to:steps");
    GridSpec g;
    g.name = text.substr(0, eq);
    std::string rest = text.substr(eq + 1);
    auto c1 = rest.find(':');
    auto c2 = rest.find(':', c1 == std::string::npos ? 0 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
        throw std::runtime_error("grid needs name=from:to:steps");
    g.from = tdm::econ::parse_rational(rest.substr(0, c1));
    g.to = tdm::econ::parse_rational(rest.substr(c1 + 1, c2 - c1 - 1));
    g.steps = std::stoi(rest.substr(c2 + 1));
    if (g.steps < 2) throw std::runtime_error("grid needs steps >= 2");
    return g;
}

// Evaluates one economics formula over named rational inputs; the grid
// sweep rebinds one name per row.
int run_econ(const std::string& which, std::map<std::string, Rational> vals,
             const std::optional<GridSpec>& grid) {
    auto eval = [&](const std::map<std::string, Rational>& v) -> std::string {
        auto at = [&](const char* name) { return v.at(name); };
        if (which == "liveness")
            return tdm::econ::render(
                tdm::econ::liveness_budget(at("k"), at("D"), at("c"), at("N")));
        if (which == "honest")
            return tdm::econ::render(tdm::econ::honest_ev(at("alpha"), at("k"), at("D")));
        if (which == "dishonest")
            return tdm::econ::render(tdm::econ::dishonest_ev(at("p"), at("beta"), at("gamma"),
                                                             at("alpha"), at("k"), at("ell"),
                                                             at("D")));
        if (which == "threshold") {
            auto t = tdm::econ::dishonest_alpha_threshold(at("p"), at("beta"), at("gamma"),
                                                          at("k"), at("ell"));
            return t ? tdm::econ::render(*t) : std::string("unbounded");
        }
        if (which == "contribution")
            return tdm::econ::render(
                tdm::econ::contribution_ev(at("alpha"), at("k"), at("D"), at("E")));
        if (which == "minprice")
            return tdm::econ::render(
                tdm::econ::min_data_price(at("E"), at("supply"), at("k"), at("reward")));
        if (which == "unitvalue")
            return tdm::econ::render(tdm::econ::token_unit_value(at("R"), at("supply")));
        throw std::runtime_error("unknown econ formula " + which);
    };

    try {
        if (!grid) {
            std::cout << eval(vals) << "\n";
            return kExitOk;
        }
        if (!vals.count(grid->name))
            throw std::runtime_error("grid parameter '" + grid->name + "' is not a flag of " +
                                     which);
        for (int i = 0; i < grid->steps; ++i) {
            Rational x = grid->from +
                         (grid->to - grid->from) * Rational(i) / Rational(grid->steps - 1);
            auto v = vals;
            v[grid->name] = x;
            std::cout << grid->name << "=" << tdm::econ::render(x) << "\t" << eval(v) << "\n";
        }
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "econ error: " << e.what() << "\n";
        return kExitConfig;
    }
}

// --------------------------------------------------------------------------
// replay

int cmd_replay(const std::string& log_path) {
    std::istringstream in;
    try {
        in.str(read_file(log_path));
    } catch (const std::exception& e) {
        std::cerr << "replay error: " << e.what() << "\n";
        return kExitConfig;
    }

    std::unique_ptr<tdm::Engine> engine;
    bool finalized = false;
    std::string line;
    size_t line_no = 0;
    try {
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            Json rec = Json::parse(line);
            const std::string op = rec.at("op");
            if (op == "genesis") {
                const Json& args = rec.at("args");
                tdm::FaultModel fault;
                fault.drop_probability = args.at("fault").at("drop_probability");
                fault.rng_seed = args.at("fault").at("rng_seed");
                engine = std::make_unique<tdm::Engine>(
                    tdm::structure_from_json(args.at("structure")), fault);
            } else if (op == "finalize") {
                if (!engine) throw std::runtime_error("finalize before genesis");
                std::string expected = rec.at("result").at("snapshot_digest");
                std::string actual = tdm::snapshot_digest(engine->structure());
                if (actual != expected) {
                    std::cerr << "replay digest mismatch: expected " << expected << ", got "
                              << actual << "\n";
                    return kExitInvariant;
                }
                finalized = true;
                continue;
            } else {
                if (!engine) throw std::runtime_error("op before genesis");
                Json recomputed = engine->apply_logged_op(rec);
                if (recomputed != rec.at("result")) {
                    std::cerr << "replay result mismatch at line " << line_no << " (op " << op
                              << "): recorded " << tdm::canonical_dump(rec.at("result"))
                              << ", recomputed " << tdm::canonical_dump(recomputed) << "\n";
                    return kExitInvariant;
                }
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "replay failed at line " << line_no << ": " << e.what() << "\n";
        return kExitInvariant;
    }
    if (!engine) {
        std::cerr << "replay error: no genesis record\n";
        return kExitConfig;
    }
    if (!finalized) {
        std::cerr << "replay error: log truncated (no finalize record)\n";
        return kExitInvariant;
    }
    std::cout << tdm::snapshot_digest(engine->structure()) << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"tokenized data structure simulator"};
    app.require_subcommand(1);
    app.add_flag("--quiet", g_quiet, "suppress informational output");

    // run
    auto* run = app.add_subcommand("run", "run a scenario config");
    std::string config_path, out_dir = ".";
    std::optional<uint64_t> seed_flag;
    uint64_t seed_value = 0;
    run->add_option("config", config_path, "scenario config JSON")->required();
    auto* seed_opt = run->add_option("--seed", seed_value, "master seed override");
    run->add_option("--out", out_dir, "output directory");

    // econ
    auto* econ = app.add_subcommand("econ", "closed-form incentive tables");
    econ->require_subcommand(1);
    std::string grid_text;
    struct EconCmd {
        CLI::App* sub;
        std::map<std::string, std::string> raw;
    };
    std::map<std::string, EconCmd> econ_cmds;
    auto add_econ = [&](const std::string& name, const std::vector<std::string>& flags,
                        const std::map<std::string, std::string>& defaults) {
        auto* sub = econ->add_subcommand(name);
        auto& cmd = econ_cmds[name];
        cmd.sub = sub;
        for (const auto& f : flags) {
            auto it = defaults.find(f);
            cmd.raw[f] = it != defaults.end() ? it->second : "";
            auto* opt = sub->add_option("--" + f, cmd.raw[f]);
            if (it == defaults.end()) opt->required();
        }
        sub->add_option("--grid", grid_text, "sweep: name=from:to:steps");
    };
    add_econ("liveness", {"k", "D", "c", "N"}, {});
    add_econ("honest", {"alpha", "k", "D"}, {});
    add_econ("dishonest", {"p", "beta", "gamma", "alpha", "k", "ell", "D"},
             {{"beta", "1"}, {"gamma", "0"}, {"ell", "0"}});
    add_econ("threshold", {"p", "beta", "gamma", "k", "ell"},
             {{"beta", "1"}, {"gamma", "0"}, {"k", "1"}, {"ell", "0"}});
    add_econ("contribution", {"alpha", "k", "D", "E"}, {});
    add_econ("minprice", {"E", "supply", "k", "reward"}, {});
    add_econ("unitvalue", {"R", "supply"}, {});

    // replay
    auto* replay = app.add_subcommand("replay", "replay an events.log");
    std::string log_path;
    replay->add_option("log", log_path, "events.log path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    if (run->parsed()) {
        if (seed_opt->count() > 0) seed_flag = seed_value;
        return cmd_run(config_path, seed_flag, out_dir);
    }
    if (econ->parsed()) {
        for (auto& [name, cmd] : econ_cmds) {
            if (!cmd.sub->parsed()) continue;
            try {
                std::map<std::string, Rational> vals;
                for (const auto& [flag, raw] : cmd.raw)
                    vals[flag] = tdm::econ::parse_rational(raw);
                return run_econ(name, std::move(vals), parse_grid(grid_text));
            } catch (const std::exception& e) {
                std::cerr << "econ error: " << e.what() << "\n";
                return kExitConfig;
            }
        }
    }
    if (replay->parsed()) return cmd_replay(log_path);
    return kExitConfig;
}
