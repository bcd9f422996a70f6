#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "chainsim/agents.hpp"
#include "chainsim/config.hpp"
#include "chainsim/gossip.hpp"
#include "chainsim/metrics.hpp"
#include "chainsim/overlay.hpp"

namespace chainsim {

/// Position on the two-level clock. Mining happens at sub_step 0 only;
/// propagation sub-steps follow, one message hop each.
struct Clock {
    std::uint64_t mining_step = 0;
    std::uint32_t sub_step = 0;
    std::uint32_t substeps_per_step = 32;

    /// Global sub-step index used for fail-safe deadlines.
    std::uint64_t now() const { return mining_step * substeps_per_step + sub_step; }
};

enum class EventKind : std::uint8_t { mined, probe, send, recv, drop, release, abandon, failsafe };

std::string_view to_string(EventKind k);

struct TraceEvent {
    std::uint64_t step = 0;
    std::uint32_t sub_step = 0;
    EventKind kind = EventKind::mined;
    NodeId node = 0;
    std::uint64_t subject = 0;  // block or message id
    std::uint64_t peer = 0;     // counterpart node, parent block, ...
    std::uint64_t extra = 0;    // height or phase

    bool operator==(const TraceEvent&) const = default;
};

/// Ordered by (mining step, sub-step, node, per-node sequence).
struct EventTrace {
    std::vector<TraceEvent> events;

    /// One tab-separated `step sub_step kind node payload` line per event.
    void write_tsv(std::ostream& out) const;
    std::string to_tsv() const;
};

struct Delivery {
    NodeId to = kNoNode;
    NodeId from = kNoNode;
    std::uint32_t seq = 0;  // sender's emission sequence within the sub-step
    Message msg;

    bool operator==(const Delivery&) const = default;
};

/// Contiguous [begin, end) id range owned by one worker.
struct AgentRange {
    NodeId begin = 0;
    NodeId end = 0;

    std::size_t size() const { return end - begin; }
    bool operator==(const AgentRange&) const = default;
};

/// Splits 0..n-1 into min(workers, n) contiguous ranges whose sizes differ by
/// at most one, larger ranges first.
std::vector<AgentRange> partition_agents(std::size_t n, std::size_t workers);

/// Rebuilds `inboxes` from the per-worker delivery buffers. Each inbox ends
/// up sorted by (sender, emission sequence), whatever the buffer layout.
void merge_inboxes(std::span<const std::vector<Delivery>> worker_buffers,
                   std::vector<std::vector<Delivery>>& inboxes);

/// Everything a single run needs, fully resolved.
struct Scenario {
    std::shared_ptr<const Overlay> overlay;
    std::vector<Role> roles;
    std::vector<std::uint8_t> sybil;  // one flag per node; empty means none
    NodeId attacker = kNoNode;
    NodeId victim = kNoNode;
    ProtocolParams protocol;
    MiningParams mining;
    AttackConfig attack;
    std::uint64_t seed = 1;
    std::uint32_t substeps_per_step = 32;
    std::uint32_t workers = 1;
    TraceLevel trace = TraceLevel::off;

    /// Probe-only dissemination from the victim (Sybil experiments) instead
    /// of mining.
    bool probe_mode() const { return attack.attack == AttackKind::sybil; }
};

struct RunResult {
    EventTrace trace;
    BlockLedger ledger;
    MetricsRecord metrics;
    std::vector<std::uint8_t> probe_received;  // probe mode only
    std::uint64_t failsafe_firings = 0;
    std::uint64_t truncated_deliveries = 0;  // still in flight when a step hit its sub-step cap
    std::uint64_t messages_sent = 0;
};

inline constexpr MsgId kProbeMsgId = MsgId{1} << 63;

/// Builds the overlay and roles for one run of `cfg`. Sybil runs use `victim`
/// and sample their Sybil set from `seed`.
Scenario make_scenario(const SimConfig& cfg, std::uint64_t seed, NodeId victim);
Scenario make_scenario(const SimConfig& cfg, std::shared_ptr<const Overlay> overlay, std::uint64_t seed,
                       NodeId victim);

std::shared_ptr<const Overlay> make_overlay(const TopologyConfig& topo, std::uint64_t seed);

RunResult run_simulation(const Scenario& scenario);

/// Single run with the configured seed and victim.
RunResult run_simulation(const SimConfig& cfg);

}  // namespace chainsim
