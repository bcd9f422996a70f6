#include "chainsim/agents.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace chainsim {

std::string_view to_string(RoleKind k) {
    switch (k) {
        case RoleKind::honest: return "honest";
        case RoleKind::pool: return "pool";
        case RoleKind::attacker51: return "attacker51";
        case RoleKind::selfish: return "selfish";
        case RoleKind::sybil: return "sybil";
        case RoleKind::passive: return "passive";
    }
    return "?";
}

std::string_view to_string(AttackKind k) {
    switch (k) {
        case AttackKind::none: return "none";
        case AttackKind::fifty_one: return "fifty_one";
        case AttackKind::selfish_mining: return "selfish_mining";
        case AttackKind::sybil: return "sybil";
    }
    return "?";
}

std::optional<AttackKind> parse_attack(std::string_view name) {
    for (auto k : {AttackKind::none, AttackKind::fifty_one, AttackKind::selfish_mining, AttackKind::sybil})
        if (to_string(k) == name) return k;
    return std::nullopt;
}

std::string_view to_string(SelfishTiePolicy p) { return p == SelfishTiePolicy::abandon ? "abandon" : "persist"; }

std::optional<SelfishTiePolicy> parse_tie_policy(std::string_view name) {
    if (name == "abandon") return SelfishTiePolicy::abandon;
    if (name == "persist") return SelfishTiePolicy::persist;
    return std::nullopt;
}

void AttackConfig::validate() const {
    if (!(attacker_hashrate >= 0.0 && attacker_hashrate < 1.0))
        throw std::invalid_argument("attacker_hashrate must lie in [0,1)");
    if (!(pool_aggregate_share >= 0.0 && pool_aggregate_share < 1.0))
        throw std::invalid_argument("pool_share must lie in [0,1)");
    if (!pool_shares.empty()) {
        if (pool_shares.size() != pool_count)
            throw std::invalid_argument("pool_shares must list exactly pool_count values");
        double sum = 0.0;
        for (double s : pool_shares) {
            if (!(s > 0.0)) throw std::invalid_argument("pool_shares entries must be > 0");
            sum += s;
        }
        if (!(sum < 1.0)) throw std::invalid_argument("pool_shares must sum to less than 1");
    }
    if (selfish_lead < 1) throw std::invalid_argument("selfish_lead must be >= 1");
    if (!(sybil_fraction >= 0.0 && sybil_fraction < 1.0))
        throw std::invalid_argument("sybil_fraction must lie in [0,1)");
}

std::vector<Role> assign_hashrates(std::size_t n, double miner_fraction, const AttackConfig& cfg,
                                   std::uint64_t seed) {
    if (!(miner_fraction > 0.0 && miner_fraction <= 1.0))
        throw std::invalid_argument("miner_fraction must lie in (0,1]");
    if (!(cfg.attacker_hashrate < 1.0)) throw std::invalid_argument("attacker_hashrate must be < 1");
    const bool attacker = cfg.has_miner_attacker();

    const auto miners = std::min<std::size_t>(n, static_cast<std::size_t>(std::llround(miner_fraction * n)));
    if (miners == 0) throw std::invalid_argument("miner count is 0");
    const std::size_t pools = cfg.pools_enabled ? cfg.pool_count : 0;
    const std::size_t reserved = (attacker ? 1 : 0) + pools;
    if (miners <= reserved)
        throw std::invalid_argument("miner count " + std::to_string(miners) +
                                    " leaves no regular honest miner besides attacker and pools");

    std::vector<NodeId> order(n);
    std::iota(order.begin(), order.end(), NodeId{0});
    auto rng = RandomStream::derive(seed, 0, StreamPurpose::roles);
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);

    const double h = attacker ? cfg.attacker_hashrate : 0.0;
    const double honest_total = 1.0 - h;

    std::vector<double> pool_rates(pools, 0.0);
    double pool_total = 0.0;
    for (std::size_t i = 0; i < pools; ++i) {
        pool_rates[i] = cfg.pool_shares.empty() ? honest_total * cfg.pool_aggregate_share / static_cast<double>(pools)
                                                : honest_total * cfg.pool_shares[i];
        pool_total += pool_rates[i];
    }
    const std::size_t regular = miners - reserved;
    const double regular_rate = (honest_total - pool_total) / static_cast<double>(regular);

    std::vector<Role> roles(n);
    std::size_t next = 0;
    if (attacker) {
        roles[order[next++]] = Role{cfg.attack == AttackKind::fifty_one ? RoleKind::attacker51 : RoleKind::selfish, h};
    }
    for (std::size_t i = 0; i < pools; ++i) roles[order[next++]] = Role{RoleKind::pool, pool_rates[i]};
    for (std::size_t i = 0; i < regular; ++i) roles[order[next++]] = Role{RoleKind::honest, regular_rate};
    return roles;
}

NodeId find_attacker(const std::vector<Role>& roles) {
    for (std::size_t i = 0; i < roles.size(); ++i)
        if (roles[i].kind == RoleKind::attacker51 || roles[i].kind == RoleKind::selfish) return static_cast<NodeId>(i);
    return kNoNode;
}

std::vector<std::uint8_t> select_sybils(std::size_t n, double fraction, NodeId victim, std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction < 1.0)) throw std::invalid_argument("sybil_fraction must lie in [0,1)");
    if (victim >= n) throw std::invalid_argument("victim id out of range");
    std::vector<NodeId> pool;
    pool.reserve(n - 1);
    for (NodeId i = 0; i < n; ++i)
        if (i != victim) pool.push_back(i);
    const auto count = std::min<std::size_t>(pool.size(), static_cast<std::size_t>(std::llround(fraction * n)));

    auto rng = RandomStream::derive(seed, victim, StreamPurpose::sybil);
    std::vector<std::uint8_t> flags(n, 0);
    for (std::size_t i = 0; i < count; ++i) {
        std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
        flags[pool[i]] = 1;
    }
    return flags;
}

Block make_block(BlockId parent_id, std::uint32_t parent_height, NodeId miner, std::uint64_t step) {
    return Block{make_block_id(step, miner), parent_id, miner, parent_height + 1, step};
}

std::optional<Block> honest_step(const MinerContext& ctx, const BlockTree& view, const MiningParams& params,
                                 RandomStream& rng) {
    if (mine_tick(ctx.hashrate, params, rng) == MineOutcome::idle) return std::nullopt;
    const BlockId tip = view.select_tip(ctx.self);
    return make_block(tip, view.block(tip).height, ctx.self, ctx.step);
}

SelfishActions selfish_step(const MinerContext& ctx, SelfishState& state, const BlockTree& public_view,
                            const MiningParams& params, const AttackConfig& cfg, RandomStream& rng) {
    SelfishActions actions;
    const std::uint32_t public_height = public_view.best_height();

    if (!state.private_chain.empty()) {
        const std::uint32_t private_height = state.private_chain.back().height;
        const bool caught_up = cfg.selfish_tie == SelfishTiePolicy::abandon ? public_height >= private_height
                                                                            : public_height > private_height;
        if (caught_up) {
            actions.abandoned = std::move(state.private_chain);
            state.private_chain.clear();
            state.fork_base = public_view.select_tip(ctx.self);
            ++state.episodes_abandoned;
        }
    }

    if (mine_tick(ctx.hashrate, params, rng) == MineOutcome::mined) {
        Block b;
        if (state.private_chain.empty()) {
            state.fork_base = public_view.select_tip(ctx.self);
            b = make_block(state.fork_base, public_view.block(state.fork_base).height, ctx.self, ctx.step);
        } else {
            const Block& tip = state.private_chain.back();
            b = make_block(tip.id, tip.height, ctx.self, ctx.step);
        }
        state.private_chain.push_back(b);
        actions.mined = b;
    }

    if (!state.private_chain.empty() && state.private_chain.back().height >= public_height + cfg.selfish_lead) {
        actions.released = std::move(state.private_chain);
        state.private_chain.clear();
        state.fork_base = actions.released.back().id;
        ++state.episodes_finalized;
    }
    return actions;
}

RelayDecision sybil_relay_filter(RoleKind kind, const Message& m, NodeId victim) {
    if (kind == RoleKind::sybil && m.origin == victim) return RelayDecision::drop;
    return RelayDecision::process_normally;
}

}  // namespace chainsim
