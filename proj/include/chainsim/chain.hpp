#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "chainsim/rng.hpp"
#include "chainsim/types.hpp"

namespace chainsim {

struct Block {
    BlockId id = kGenesisId;
    BlockId parent = kNoBlock;
    NodeId miner = kNoNode;
    std::uint32_t height = 0;
    std::uint64_t mined_step = 0;

    bool operator==(const Block&) const = default;
};

Block genesis_block();

struct MiningParams {
    double blocks_per_step = 0.5;
    std::uint64_t total_steps = 2000;
    double miner_fraction = 0.1;

    void validate() const;
};

enum class MineOutcome { mined, idle };

/// One Bernoulli draw with success probability blocks_per_step * hashrate.
MineOutcome mine_tick(double hashrate, const MiningParams& params, RandomStream& rng);

enum class InsertResult { extended_best, created_or_deepened_fork, duplicate, orphan };

/// One node's view of the fork tree, rooted at genesis.
///
/// Blocks whose parent is unknown are buffered and attached as soon as the
/// parent shows up. The tree caches the fork-choice result for its owner so
/// that the per-step tip lookup is O(1).
class BlockTree {
public:
    explicit BlockTree(NodeId owner = kNoNode);

    /// `seq` is the receipt sequence number used for arrival tie-breaks;
    /// genesis has arrival 0. Throws std::invalid_argument when the height
    /// is inconsistent with a known parent.
    InsertResult insert_block(const Block& b, std::uint64_t seq);

    bool contains(BlockId id) const { return entries_.contains(id); }
    const Block& block(BlockId id) const;
    std::uint64_t arrival(BlockId id) const;
    std::span<const BlockId> children(BlockId id) const;
    std::size_t size() const { return entries_.size(); }
    std::size_t orphan_count() const { return orphan_ids_.size(); }
    NodeId owner() const { return owner_; }

    /// Fork choice for `self`: highest tip, then most blocks mined by `self`
    /// on the root-to-tip path, then earliest arrival, then smallest id.
    BlockId select_tip(NodeId self) const;

    /// Cached select_tip(owner()).
    BlockId best_tip() const { return best_; }
    std::uint32_t best_height() const { return entries_.at(best_).block.height; }

    /// Longest chain, genesis first; height ties go to the earliest-arrived
    /// tip, then to the smallest id.
    std::vector<BlockId> main_chain() const;

    /// Genesis-to-`tip` path.
    std::vector<BlockId> path_to(BlockId tip) const;

private:
    struct Entry {
        Block block;
        std::uint64_t arrival = 0;
        std::uint32_t own_count = 0;
        std::vector<BlockId> children;
    };

    bool better_for_owner(const Entry& a, const Entry& b) const;
    void attach(const Block& b, std::uint64_t seq);

    NodeId owner_;
    BlockId best_ = kGenesisId;
    std::unordered_map<BlockId, Entry> entries_;
    std::unordered_map<BlockId, std::vector<std::pair<Block, std::uint64_t>>> waiting_;
    std::unordered_set<BlockId> orphan_ids_;
};

/// Text dump, one `block_id parent_id miner height mined_step` line per block.
void write_chain_dump(std::ostream& out, std::span<const Block> blocks);

}  // namespace chainsim
