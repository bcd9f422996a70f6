#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "chainsim/chain.hpp"
#include "chainsim/gossip.hpp"
#include "chainsim/rng.hpp"
#include "chainsim/types.hpp"

namespace chainsim {

enum class RoleKind : std::uint8_t { honest, pool, attacker51, selfish, sybil, passive };

std::string_view to_string(RoleKind k);

struct Role {
    RoleKind kind = RoleKind::passive;
    double hashrate = 0.0;

    bool is_miner() const { return hashrate > 0.0; }
    bool is_honest() const { return kind == RoleKind::honest || kind == RoleKind::pool || kind == RoleKind::passive; }
};

enum class AttackKind : std::uint8_t { none, fifty_one, selfish_mining, sybil };

std::string_view to_string(AttackKind k);
std::optional<AttackKind> parse_attack(std::string_view name);

/// What the selfish miner does when the public chain catches up with its
/// private tip: give up immediately, or keep racing until it falls behind.
enum class SelfishTiePolicy : std::uint8_t { abandon, persist };

std::string_view to_string(SelfishTiePolicy p);
std::optional<SelfishTiePolicy> parse_tie_policy(std::string_view name);

struct AttackConfig {
    AttackKind attack = AttackKind::none;
    double attacker_hashrate = 0.0;
    bool pools_enabled = false;
    std::uint32_t pool_count = 9;
    double pool_aggregate_share = 0.804;
    /// Optional explicit per-pool fractions of the non-attacker hash-rate;
    /// when set it overrides the equal split of pool_aggregate_share.
    std::vector<double> pool_shares;
    std::uint32_t selfish_lead = 2;
    SelfishTiePolicy selfish_tie = SelfishTiePolicy::persist;
    double sybil_fraction = 0.0;
    NodeId victim = 0;

    bool has_miner_attacker() const {
        return attack == AttackKind::fifty_one || attack == AttackKind::selfish_mining;
    }

    void validate() const;
};

/// Draws miners, pools and the attacker uniformly from the seed, then splits
/// the hash-rate: the attacker gets exactly h, pools share
/// pool_aggregate_share * (1 - h), remaining miners split what is left.
std::vector<Role> assign_hashrates(std::size_t n, double miner_fraction, const AttackConfig& cfg,
                                   std::uint64_t seed);

/// Id of the attacker in a role list, or kNoNode.
NodeId find_attacker(const std::vector<Role>& roles);

/// Samples round(fraction * n) Sybil nodes uniformly from every node except
/// the victim. Returns one flag per node.
std::vector<std::uint8_t> select_sybils(std::size_t n, double fraction, NodeId victim, std::uint64_t seed);

struct MinerContext {
    NodeId self = kNoNode;
    double hashrate = 0.0;
    std::uint64_t step = 0;
};

Block make_block(BlockId parent_id, std::uint32_t parent_height, NodeId miner, std::uint64_t step);

/// Honest mining: on success builds on the owner's fork choice.
std::optional<Block> honest_step(const MinerContext& ctx, const BlockTree& view, const MiningParams& params,
                                 RandomStream& rng);

struct SelfishState {
    std::vector<Block> private_chain;
    BlockId fork_base = kGenesisId;
    std::uint64_t episodes_finalized = 0;
    std::uint64_t episodes_abandoned = 0;

    std::uint32_t private_height(const BlockTree& public_view) const {
        return private_chain.empty() ? public_view.best_height() : private_chain.back().height;
    }
};

struct SelfishActions {
    std::optional<Block> mined;
    std::vector<Block> released;
    std::vector<Block> abandoned;
};

/// One mining step of the withholding strategy:
///  1. drop the private chain once the public chain has caught up with it
///     (ties count as caught up under SelfishTiePolicy::abandon);
///  2. mine on the private tip (or the public tip when nothing is withheld);
///  3. release everything once private height - public height >= selfish_lead.
SelfishActions selfish_step(const MinerContext& ctx, SelfishState& state, const BlockTree& public_view,
                            const MiningParams& params, const AttackConfig& cfg, RandomStream& rng);

enum class RelayDecision { drop, process_normally };

RelayDecision sybil_relay_filter(RoleKind kind, const Message& m, NodeId victim);

}  // namespace chainsim
