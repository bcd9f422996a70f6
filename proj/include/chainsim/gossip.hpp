#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "chainsim/rng.hpp"
#include "chainsim/types.hpp"

namespace chainsim {

enum class MessageKind : std::uint8_t { block, probe };
enum class Phase : std::uint8_t { none, stem, fluff };
enum class Protocol : std::uint8_t { broadcast, fixed_probability, probabilistic_broadcast, dandelion, dandelion_pm };

std::string_view to_string(Protocol p);
std::string_view to_string(Phase p);
std::optional<Protocol> parse_protocol(std::string_view name);

constexpr bool is_dandelion(Protocol p) { return p == Protocol::dandelion || p == Protocol::dandelion_pm; }

struct Message {
    MsgId id = 0;
    MessageKind kind = MessageKind::probe;
    NodeId origin = kNoNode;
    BlockId block_ref = kNoBlock;
    std::uint32_t ttl = 0;
    std::uint32_t hops = 0;
    Phase phase = Phase::none;

    bool operator==(const Message&) const = default;
};

struct ProtocolParams {
    Protocol protocol = Protocol::broadcast;
    double p = 0.5;  // forward probability, i.e. 1 - threshold
    std::uint32_t stem_hops = 2;
    std::uint32_t failsafe_timeout = 20;  // propagation sub-steps
    std::uint32_t ttl_init = 16;

    /// Throws std::invalid_argument naming the violated constraint.
    void validate() const;
};

/// A fresh message as emitted by its creator: full TTL, zero hops, stem phase
/// for the Dandelion family.
Message make_origin_message(const ProtocolParams& params, MsgId id, MessageKind kind, NodeId origin,
                            BlockId block_ref = kNoBlock);

struct Forward {
    NodeId to = kNoNode;
    Message msg;

    bool operator==(const Forward&) const = default;
};

/// Appends the copies `self` relays for `m` received from `from` (kNoNode when
/// self originated it or fires a fail-safe). Neighbors are visited in list
/// order, so random draws are consumed in a fixed order.
void decide_forwards(const ProtocolParams& params, NodeId self, const Message& m, NodeId from,
                     std::span<const NodeId> nbrs, RandomStream& rng, std::vector<Forward>& out);

std::vector<Forward> decide_forwards(const ProtocolParams& params, NodeId self, const Message& m, NodeId from,
                                     std::span<const NodeId> nbrs, RandomStream& rng);

enum class AcceptResult { fresh, duplicate };

/// Duplicate-suppression cache plus the Dandelion+- fail-safe timers of one node.
class GossipState {
public:
    AcceptResult accept(const Message& m);
    bool has_seen(MsgId id) const { return seen_.contains(id); }
    std::size_t seen_count() const { return seen_.size(); }

    /// Registers a fail-safe deadline for a stem-phase message under
    /// dandelion_pm. No-op for any other protocol/phase or if already watched.
    void stem_watch(const Message& m, std::uint64_t now, const ProtocolParams& params);

    /// A fluff-phase copy of `id` was observed: its fail-safe is no longer needed.
    void note_fluff(MsgId id) { stem_pending_.erase(id); }

    /// Removes and returns (as fluff) every watched message whose deadline has
    /// passed, in ascending msg id order.
    std::vector<Message> failsafe_tick(std::uint64_t now);

    bool has_pending() const { return !stem_pending_.empty(); }
    std::optional<std::uint64_t> deadline(MsgId id) const;

private:
    struct Pending {
        std::uint64_t deadline;
        Message copy;
    };

    std::unordered_set<MsgId> seen_;
    std::map<MsgId, Pending> stem_pending_;
};

}  // namespace chainsim
