#include "chainsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <tuple>

namespace chainsim {

BlockTree BlockLedger::global_tree() const {
    struct Published {
        ReceiptKey key;
        const Block* block;
    };
    std::vector<Published> published;
    for (std::size_t i = 0; i < blocks.size(); ++i)
        if (first_honest_receipt[i]) published.push_back({*first_honest_receipt[i], &blocks[i]});
    // Height breaks ties between blocks first seen together, so parents go first.
    std::sort(published.begin(), published.end(), [](const Published& a, const Published& b) {
        return std::tie(a.key, a.block->height, a.block->id) < std::tie(b.key, b.block->height, b.block->id);
    });

    BlockTree tree;
    std::uint64_t seq = 0;
    for (const auto& p : published) tree.insert_block(*p.block, ++seq);
    return tree;
}

std::string_view to_string(Metric m) {
    switch (m) {
        case Metric::attacker_blocks_total: return "attacker_blocks_total";
        case Metric::attacker_blocks_main: return "attacker_blocks_main";
        case Metric::main_chain_length: return "main_chain_length";
        case Metric::total_blocks: return "total_blocks";
        case Metric::pct_main_by_attacker: return "pct_main_by_attacker";
        case Metric::pct_attacker_in_main: return "pct_attacker_in_main";
        case Metric::pct_total_by_attacker: return "pct_total_by_attacker";
        case Metric::selfish_episodes: return "selfish_episodes";
        case Metric::coverage: return "coverage";
    }
    return "?";
}

std::optional<Metric> parse_metric(std::string_view name) {
    for (auto m : kAllMetrics)
        if (to_string(m) == name) return m;
    return std::nullopt;
}

double metric_value(const MetricsRecord& r, Metric m) {
    switch (m) {
        case Metric::attacker_blocks_total: return static_cast<double>(r.attacker_blocks_total);
        case Metric::attacker_blocks_main: return static_cast<double>(r.attacker_blocks_main);
        case Metric::main_chain_length: return static_cast<double>(r.main_chain_length);
        case Metric::total_blocks: return static_cast<double>(r.total_blocks);
        case Metric::pct_main_by_attacker: return r.pct_main_by_attacker;
        case Metric::pct_attacker_in_main: return r.pct_attacker_in_main;
        case Metric::pct_total_by_attacker: return r.pct_total_by_attacker;
        case Metric::selfish_episodes: return static_cast<double>(r.selfish_episodes);
        case Metric::coverage: return r.coverage;
    }
    return 0.0;
}

namespace {
double percent(std::uint64_t num, std::uint64_t den) {
    return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}
}  // namespace

MetricsRecord attack51_metrics(const BlockLedger& ledger, NodeId attacker) {
    MetricsRecord r;
    r.total_blocks = ledger.blocks.size();
    if (r.total_blocks == 0) return r;

    const BlockTree tree = ledger.global_tree();
    const auto main = tree.main_chain();
    r.main_chain_length = main.size() - 1;

    if (attacker != kNoNode) {
        for (const auto& b : ledger.blocks)
            if (b.miner == attacker) ++r.attacker_blocks_total;
        for (BlockId id : main)
            if (id != kGenesisId && tree.block(id).miner == attacker) ++r.attacker_blocks_main;
    }
    r.pct_main_by_attacker = percent(r.attacker_blocks_main, r.main_chain_length);
    r.pct_attacker_in_main = percent(r.attacker_blocks_main, r.attacker_blocks_total);
    r.pct_total_by_attacker = percent(r.attacker_blocks_total, r.total_blocks);
    return r;
}

double coverage_metric(std::span<const std::uint8_t> received, NodeId victim, std::span<const std::uint8_t> sybil) {
    if (received.size() != sybil.size()) throw std::invalid_argument("received/sybil size mismatch");
    std::size_t reached = 0;
    std::size_t potential = 0;
    for (std::size_t i = 0; i < received.size(); ++i) {
        if (i == victim || sybil[i]) continue;
        ++potential;
        if (received[i]) ++reached;
    }
    if (potential == 0) throw std::invalid_argument("coverage denominator is 0");
    return static_cast<double>(reached) / static_cast<double>(potential);
}

std::vector<MetricSummary> aggregate(std::span<const MetricsRecord> records) {
    if (records.empty()) throw std::invalid_argument("cannot aggregate an empty record list");
    std::vector<MetricSummary> out;
    std::vector<double> values(records.size());
    for (auto m : kAllMetrics) {
        for (std::size_t i = 0; i < records.size(); ++i) values[i] = metric_value(records[i], m);
        // Summing in sorted order makes the result independent of input order.
        std::sort(values.begin(), values.end());
        const double n = static_cast<double>(values.size());
        const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        out.push_back({m, mean, std::sqrt(ss / n), records.size()});
    }
    return out;
}

const MetricSummary& find_summary(const std::vector<MetricSummary>& s, Metric m) {
    for (const auto& x : s)
        if (x.metric == m) return x;
    throw std::out_of_range("metric not aggregated");
}

}  // namespace chainsim
