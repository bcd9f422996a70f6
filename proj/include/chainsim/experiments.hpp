#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "chainsim/config.hpp"
#include "chainsim/metrics.hpp"

namespace chainsim {

struct SweepRow {
    std::string param;
    std::vector<MetricSummary> summaries;
    std::vector<MetricsRecord> records;  // one per repetition, in seed order
};

struct SweepTable {
    std::vector<SweepRow> rows;
    std::size_t runs = 0;
    std::vector<std::uint64_t> seeds;

    /// `param,metric,mean,stddev,runs`, one line per (row, metric).
    void write_csv(std::ostream& out, std::span<const Metric> metrics) const;
    std::string to_csv(std::span<const Metric> metrics) const;
    const SweepRow& row(std::string_view param) const;
};

/// R distinct seeds derived from the master seed. The same list is reused at
/// every parameter point so that points differ only in the swept value.
std::vector<std::uint64_t> repetition_seeds(std::uint64_t master, std::size_t R);

/// First R entries (cycling) of a seeded permutation of the node ids.
std::vector<NodeId> rotated_victims(std::size_t n, std::size_t R, std::uint64_t master);

/// Runs R simulations per attacker hash-rate (in percent, 1..99). The base
/// config must describe a 51% or selfish-mining attack.
SweepTable sweep_hashrate(const SimConfig& base, std::span<const double> h_percents, std::size_t R);

/// Probe-mode coverage for every (protocol variant, Sybil fraction) cell.
SweepTable sweep_sybil(const SimConfig& base, std::span<const ProtocolVariant> variants,
                       std::span<const double> fractions, std::size_t R);

/// Attack-free reference run, a single row named "baseline".
SweepTable run_baseline(const SimConfig& base, std::size_t R);

}  // namespace chainsim
