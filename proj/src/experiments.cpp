#include "chainsim/experiments.hpp"

#include <array>
#include <charconv>
#include <functional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "chainsim/engine.hpp"
#include "chainsim/worker_pool.hpp"

namespace chainsim {

namespace {

std::string fmt(double x) {
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    return std::string(buf.data(), ptr);
}

// Runs job(i) for i in [0, count) on `jobs` threads; job i writes slot i only.
void run_jobs(std::size_t count, std::uint32_t jobs, const std::function<void(std::size_t)>& job) {
    const std::size_t width = std::max<std::size_t>(1, std::min<std::size_t>(jobs, count));
    WorkerPool pool(width);
    pool.run([&](std::size_t w) {
        for (std::size_t i = w; i < count; i += width) job(i);
    });
}

struct Cell {
    std::string param;
    SimConfig cfg;
};

SweepTable run_cells(const std::vector<Cell>& cells, std::size_t R, std::uint64_t master, bool probe) {
    if (R == 0) throw std::invalid_argument("repetitions must be >= 1");
    if (cells.empty()) throw std::invalid_argument("empty sweep");
    SweepTable table;
    table.runs = R;
    table.seeds = repetition_seeds(master, R);

    const auto& topo = cells.front().cfg.topology;
    std::vector<std::shared_ptr<const Overlay>> overlays(R);
    const std::uint32_t jobs = cells.front().cfg.run.jobs;
    run_jobs(R, jobs, [&](std::size_t r) { overlays[r] = make_overlay(topo, table.seeds[r]); });
    const auto victims = probe ? rotated_victims(topo.nodes, R, master) : std::vector<NodeId>{};

    std::vector<MetricsRecord> records(cells.size() * R);
    run_jobs(records.size(), jobs, [&](std::size_t i) {
        const auto& cell = cells[i / R];
        const std::size_t r = i % R;
        const NodeId victim = probe ? victims[r] : cell.cfg.attack.victim;
        auto scenario = make_scenario(cell.cfg, overlays[r], table.seeds[r], victim);
        records[i] = run_simulation(scenario).metrics;
    });

    for (std::size_t c = 0; c < cells.size(); ++c) {
        SweepRow row;
        row.param = cells[c].param;
        row.records.assign(records.begin() + static_cast<std::ptrdiff_t>(c * R),
                           records.begin() + static_cast<std::ptrdiff_t>((c + 1) * R));
        row.summaries = aggregate(row.records);
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace

void SweepTable::write_csv(std::ostream& out, std::span<const Metric> metrics) const {
    out << "param,metric,mean,stddev,runs\n";
    for (const auto& row : rows)
        for (Metric m : metrics) {
            const auto& s = find_summary(row.summaries, m);
            out << row.param << ',' << to_string(m) << ',' << fmt(s.mean) << ',' << fmt(s.stddev) << ',' << s.runs
                << '\n';
        }
}

std::string SweepTable::to_csv(std::span<const Metric> metrics) const {
    std::ostringstream out;
    write_csv(out, metrics);
    return out.str();
}

const SweepRow& SweepTable::row(std::string_view param) const {
    for (const auto& r : rows)
        if (r.param == param) return r;
    throw std::out_of_range("no sweep row '" + std::string(param) + "'");
}

std::vector<std::uint64_t> repetition_seeds(std::uint64_t master, std::size_t R) {
    std::vector<std::uint64_t> seeds;
    std::unordered_set<std::uint64_t> used;
    auto rng = RandomStream::derive(master, 0, StreamPurpose::sweep);
    while (seeds.size() < R) {
        const auto s = rng.next();
        if (used.insert(s).second) seeds.push_back(s);
    }
    return seeds;
}

std::vector<NodeId> rotated_victims(std::size_t n, std::size_t R, std::uint64_t master) {
    if (n == 0) throw std::invalid_argument("no nodes to pick victims from");
    std::vector<NodeId> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = static_cast<NodeId>(i);
    auto rng = RandomStream::derive(master, 1, StreamPurpose::sweep);
    for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
    std::vector<NodeId> victims(R);
    for (std::size_t r = 0; r < R; ++r) victims[r] = perm[r % n];
    return victims;
}

SweepTable sweep_hashrate(const SimConfig& base, std::span<const double> h_percents, std::size_t R) {
    if (!base.attack.has_miner_attacker())
        throw std::invalid_argument("hash-rate sweep needs attack = fifty_one or selfish_mining");
    std::vector<Cell> cells;
    for (double h : h_percents) {
        if (!(h >= 1.0 && h <= 99.0)) throw std::invalid_argument("h = " + fmt(h) + " outside [1,99]");
        Cell cell{"h=" + fmt(h), base};
        cell.cfg.attack.attacker_hashrate = h / 100.0;
        cell.cfg.validate();
        cells.push_back(std::move(cell));
    }
    return run_cells(cells, R, base.run.seed, false);
}

SweepTable sweep_sybil(const SimConfig& base, std::span<const ProtocolVariant> variants,
                       std::span<const double> fractions, std::size_t R) {
    std::vector<Cell> cells;
    for (const auto& v : variants)
        for (double f : fractions) {
            if (!(f >= 0.0 && f < 1.0)) throw std::invalid_argument("sybil fraction " + fmt(f) + " outside [0,1)");
            Cell cell{v.label + ";sybil_fraction=" + fmt(f), base};
            cell.cfg.protocol = v.params;
            cell.cfg.attack.attack = AttackKind::sybil;
            cell.cfg.attack.sybil_fraction = f;
            cell.cfg.validate();
            cells.push_back(std::move(cell));
        }
    return run_cells(cells, R, base.run.seed, true);
}

SweepTable run_baseline(const SimConfig& base, std::size_t R) {
    Cell cell{"baseline", base};
    cell.cfg.attack.attack = AttackKind::none;
    cell.cfg.attack.attacker_hashrate = 0.0;
    cell.cfg.validate();
    return run_cells({cell}, R, base.run.seed, false);
}

}  // namespace chainsim
