#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "chainsim/chain.hpp"
#include "chainsim/types.hpp"

namespace chainsim {

struct ReceiptKey {
    std::uint64_t step = 0;
    std::uint32_t sub_step = 0;
    NodeId node = 0;

    auto operator<=>(const ReceiptKey&) const = default;
};

/// Block-level record of a run: every block ever created and the first time
/// any honest node received it (absent for blocks that were never published).
struct BlockLedger {
    std::vector<Block> blocks;
    std::vector<std::optional<ReceiptKey>> first_honest_receipt;

    /// Omniscient end-of-run tree over genesis plus every published block,
    /// with arrival order given by first honest receipt.
    BlockTree global_tree() const;
};

struct MetricsRecord {
    std::uint64_t attacker_blocks_total = 0;
    std::uint64_t attacker_blocks_main = 0;
    std::uint64_t main_chain_length = 0;  // genesis excluded
    std::uint64_t total_blocks = 0;
    double pct_main_by_attacker = 0.0;
    double pct_attacker_in_main = 0.0;
    double pct_total_by_attacker = 0.0;
    std::uint64_t selfish_episodes = 0;
    double coverage = 0.0;

    bool operator==(const MetricsRecord&) const = default;
};

enum class Metric : std::uint8_t {
    attacker_blocks_total,
    attacker_blocks_main,
    main_chain_length,
    total_blocks,
    pct_main_by_attacker,
    pct_attacker_in_main,
    pct_total_by_attacker,
    selfish_episodes,
    coverage,
};

inline constexpr Metric kAllMetrics[] = {
    Metric::attacker_blocks_total, Metric::attacker_blocks_main, Metric::main_chain_length,
    Metric::total_blocks,          Metric::pct_main_by_attacker, Metric::pct_attacker_in_main,
    Metric::pct_total_by_attacker, Metric::selfish_episodes,     Metric::coverage,
};

std::string_view to_string(Metric m);
std::optional<Metric> parse_metric(std::string_view name);
double metric_value(const MetricsRecord& r, Metric m);

/// Main chain of the global tree plus attacker counts and the three shares.
MetricsRecord attack51_metrics(const BlockLedger& ledger, NodeId attacker);

/// Fraction of honest, non-originator nodes that received the probe.
/// Throws std::invalid_argument when no such node exists.
double coverage_metric(std::span<const std::uint8_t> received, NodeId victim, std::span<const std::uint8_t> sybil);

struct MetricSummary {
    Metric metric;
    double mean = 0.0;
    double stddev = 0.0;  // population
    std::size_t runs = 0;

    bool operator==(const MetricSummary&) const = default;
};

/// Mean and population standard deviation of every metric. The result does
/// not depend on the order of `records`. Throws on an empty list.
std::vector<MetricSummary> aggregate(std::span<const MetricsRecord> records);

const MetricSummary& find_summary(const std::vector<MetricSummary>& s, Metric m);

}  // namespace chainsim
