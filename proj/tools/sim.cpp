// Batch front end: one sweep per invocation, results as CSV plus a manifest
// that replays the run when passed back as --config.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "chainsim/engine.hpp"
#include "chainsim/experiments.hpp"

namespace fs = std::filesystem;
using namespace chainsim;

namespace {

struct Options {
    std::string command;
    std::string config;
    std::vector<std::string> sets;
    std::uint32_t workers = 0;
    std::uint32_t jobs = 0;
    std::string out;
    bool dump_graph = false;
    bool dump_trace = false;
    std::string metrics;
};

AttackKind attack_for(const std::string& command) {
    if (command == "attack51") return AttackKind::fifty_one;
    if (command == "selfish") return AttackKind::selfish_mining;
    if (command == "sybil") return AttackKind::sybil;
    return AttackKind::none;
}

std::vector<Metric> default_metrics(const std::string& command) {
    if (command == "attack51")
        return {Metric::attacker_blocks_main, Metric::pct_main_by_attacker, Metric::pct_attacker_in_main};
    if (command == "selfish")
        return {Metric::selfish_episodes, Metric::attacker_blocks_main, Metric::pct_main_by_attacker};
    if (command == "sybil") return {Metric::coverage};
    return {Metric::main_chain_length, Metric::total_blocks, Metric::attacker_blocks_total,
            Metric::attacker_blocks_main, Metric::pct_main_by_attacker};
}

std::vector<Metric> parse_metrics(const std::string& text) {
    std::vector<Metric> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find(',', start);
        if (end == std::string::npos) end = text.size();
        const auto name = text.substr(start, end - start);
        auto m = parse_metric(name);
        if (!m) throw ConfigError("unknown metric '" + name + "'");
        out.push_back(*m);
        start = end + 1;
    }
    return out;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    f << content;
    if (!f) throw std::runtime_error("cannot write " + path.string());
}

// First cell, first repetition: the run a reader would look at first.
Scenario representative(const SimConfig& cfg, const std::string& command) {
    SimConfig one = cfg;
    const auto seed = repetition_seeds(cfg.run.seed, 1).front();
    NodeId victim = cfg.attack.victim;
    if (command == "attack51" || command == "selfish") {
        one.attack.attacker_hashrate = parse_grid(cfg.run.h_grid).front() / 100.0;
    } else if (command == "sybil") {
        one.protocol = parse_protocol_list(cfg.run.sybil_protocols, cfg.protocol).front().params;
        one.attack.sybil_fraction = parse_grid(cfg.run.sybil_fractions).front();
        victim = rotated_victims(cfg.topology.nodes, 1, cfg.run.seed).front();
    }
    if (one.run.trace == TraceLevel::off) one.run.trace = TraceLevel::blocks;
    return make_scenario(one, seed, victim);
}

}  // namespace

int main(int argc, char** argv) {
    Options opt;
    CLI::App app{"Agent-based proof-of-work network simulator"};
    app.add_option("command", opt.command, "attack51 | selfish | sybil | baseline")
        ->required()
        ->check(CLI::IsMember({"attack51", "selfish", "sybil", "baseline"}));
    app.add_option("--config", opt.config, "sectioned key=value file")->required();
    app.add_option("--set", opt.sets, "override, key=value or section.key=value");
    app.add_option("--workers", opt.workers, "engine worker threads per run");
    app.add_option("--jobs", opt.jobs, "repetitions run concurrently");
    app.add_option("--out", opt.out, "output directory");
    app.add_flag("--dump-graph", opt.dump_graph, "write the first repetition's overlay as an edge list");
    app.add_flag("--dump-trace", opt.dump_trace, "write the first run's event trace and block list");
    app.add_option("--metrics", opt.metrics, "comma list of metric columns");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    SimConfig cfg;
    std::vector<Metric> metrics;
    try {
        auto overrides = opt.sets;
        overrides.push_back("attack=" + std::string(to_string(attack_for(opt.command))));
        if (opt.workers) overrides.push_back("workers=" + std::to_string(opt.workers));
        if (opt.jobs) overrides.push_back("jobs=" + std::to_string(opt.jobs));
        if (!opt.out.empty()) overrides.push_back("output_dir=" + opt.out);
        cfg = parse_config_file(opt.config, overrides);
        metrics = opt.metrics.empty() ? default_metrics(opt.command) : parse_metrics(opt.metrics);
        if (opt.command == "attack51" || opt.command == "selfish") parse_grid(cfg.run.h_grid);
    } catch (const std::exception& e) {
        std::cerr << "sim: " << e.what() << '\n';
        return 1;
    }

    try {
        const std::string manifest = "# command = " + opt.command + "\n" + cfg.to_text();
        const fs::path dir = cfg.run.output_dir;
        fs::create_directories(dir);

        SweepTable table;
        const auto R = cfg.run.repetitions;
        if (opt.command == "attack51" || opt.command == "selfish") {
            table = sweep_hashrate(cfg, parse_grid(cfg.run.h_grid), R);
        } else if (opt.command == "sybil") {
            const auto variants = parse_protocol_list(cfg.run.sybil_protocols, cfg.protocol);
            table = sweep_sybil(cfg, variants, parse_grid(cfg.run.sybil_fractions), R);
        } else {
            table = run_baseline(cfg, R);
        }

        const fs::path csv = dir / (opt.command + "_" + config_hash(manifest) + ".csv");
        write_file(csv, table.to_csv(metrics));
        write_file(dir / "manifest.txt", manifest);

        if (opt.dump_graph || opt.dump_trace) {
            const auto scenario = representative(cfg, opt.command);
            if (opt.dump_graph) {
                std::ofstream g(dir / "graph.txt");
                scenario.overlay->write_edge_list(g);
            }
            if (opt.dump_trace) {
                const auto result = run_simulation(scenario);
                std::ofstream t(dir / "trace.tsv");
                result.trace.write_tsv(t);
                std::ofstream c(dir / "blocks.txt");
                write_chain_dump(c, result.ledger.blocks);
            }
        }
        std::cout << csv.string() << '\n';
    } catch (const std::exception& e) {
        std::cerr << "sim: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
