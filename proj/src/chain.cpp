#include "chainsim/chain.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>
#include <string>

namespace chainsim {

Block genesis_block() { return Block{}; }

void MiningParams::validate() const {
    if (!(blocks_per_step > 0.0)) throw std::invalid_argument("blocks_per_step must be > 0");
    if (blocks_per_step > 1.0) throw std::invalid_argument("blocks_per_step must be <= 1");
    if (!(miner_fraction > 0.0 && miner_fraction <= 1.0))
        throw std::invalid_argument("miner_fraction must lie in (0,1]");
}

MineOutcome mine_tick(double hashrate, const MiningParams& params, RandomStream& rng) {
    if (!(hashrate >= 0.0 && hashrate <= 1.0)) throw std::invalid_argument("hashrate must lie in [0,1]");
    const double p = params.blocks_per_step * hashrate;
    if (p > 1.0) throw std::invalid_argument("blocks_per_step * hashrate exceeds 1");
    if (hashrate == 0.0) return MineOutcome::idle;
    return rng.bernoulli(p) ? MineOutcome::mined : MineOutcome::idle;
}

BlockTree::BlockTree(NodeId owner) : owner_(owner) {
    Entry g;
    g.block = genesis_block();
    entries_.emplace(kGenesisId, std::move(g));
}

const Block& BlockTree::block(BlockId id) const { return entries_.at(id).block; }

std::uint64_t BlockTree::arrival(BlockId id) const { return entries_.at(id).arrival; }

std::span<const BlockId> BlockTree::children(BlockId id) const { return entries_.at(id).children; }

bool BlockTree::better_for_owner(const Entry& a, const Entry& b) const {
    if (a.block.height != b.block.height) return a.block.height > b.block.height;
    if (a.own_count != b.own_count) return a.own_count > b.own_count;
    if (a.arrival != b.arrival) return a.arrival < b.arrival;
    return a.block.id < b.block.id;
}

void BlockTree::attach(const Block& b, std::uint64_t seq) {
    Entry& parent = entries_.at(b.parent);
    Entry e;
    e.block = b;
    e.arrival = seq;
    e.own_count = parent.own_count + (b.miner == owner_ && owner_ != kNoNode ? 1 : 0);
    parent.children.push_back(b.id);
    auto [it, inserted] = entries_.emplace(b.id, std::move(e));
    (void)inserted;
    if (better_for_owner(it->second, entries_.at(best_))) best_ = b.id;
}

InsertResult BlockTree::insert_block(const Block& b, std::uint64_t seq) {
    if (entries_.contains(b.id) || orphan_ids_.contains(b.id)) return InsertResult::duplicate;

    auto parent = entries_.find(b.parent);
    if (parent == entries_.end()) {
        waiting_[b.parent].emplace_back(b, seq);
        orphan_ids_.insert(b.id);
        return InsertResult::orphan;
    }
    if (b.height != parent->second.block.height + 1)
        throw std::invalid_argument("block " + std::to_string(b.id) + " height inconsistent with parent");

    const bool extends_best = b.parent == best_;
    attach(b, seq);

    // Attach any buffered descendants, breadth first.
    std::vector<BlockId> resolved{b.id};
    for (std::size_t i = 0; i < resolved.size(); ++i) {
        auto w = waiting_.find(resolved[i]);
        if (w == waiting_.end()) continue;
        auto pending = std::move(w->second);
        waiting_.erase(w);
        const auto parent_height = entries_.at(resolved[i]).block.height;
        for (auto& [child, child_seq] : pending) {
            orphan_ids_.erase(child.id);
            if (child.height != parent_height + 1) continue;  // malformed; never valid
            attach(child, child_seq);
            resolved.push_back(child.id);
        }
    }
    return extends_best ? InsertResult::extended_best : InsertResult::created_or_deepened_fork;
}

BlockId BlockTree::select_tip(NodeId self) const {
    if (self == owner_) return best_;

    std::vector<const Entry*> order;
    order.reserve(entries_.size());
    for (const auto& [id, e] : entries_) order.push_back(&e);
    std::sort(order.begin(), order.end(), [](const Entry* a, const Entry* b) {
        return a->block.height != b->block.height ? a->block.height < b->block.height : a->block.id < b->block.id;
    });

    std::unordered_map<BlockId, std::uint32_t> own;
    own.reserve(order.size());
    const Entry* best = nullptr;
    std::uint32_t best_own = 0;
    for (const Entry* e : order) {
        std::uint32_t count = 0;
        if (e->block.id != kGenesisId)
            count = own.at(e->block.parent) + (self != kNoNode && e->block.miner == self ? 1 : 0);
        own.emplace(e->block.id, count);

        bool take = best == nullptr;
        if (!take) {
            if (e->block.height != best->block.height)
                take = e->block.height > best->block.height;
            else if (count != best_own)
                take = count > best_own;
            else if (e->arrival != best->arrival)
                take = e->arrival < best->arrival;
            else
                take = e->block.id < best->block.id;
        }
        if (take) {
            best = e;
            best_own = count;
        }
    }
    return best->block.id;
}

std::vector<BlockId> BlockTree::main_chain() const {
    const Entry* best = nullptr;
    for (const auto& [id, e] : entries_) {
        if (best == nullptr || e.block.height > best->block.height ||
            (e.block.height == best->block.height &&
             (e.arrival < best->arrival || (e.arrival == best->arrival && e.block.id < best->block.id))))
            best = &e;
    }
    return path_to(best->block.id);
}

std::vector<BlockId> BlockTree::path_to(BlockId tip) const {
    std::vector<BlockId> path;
    for (BlockId cur = tip;; cur = entries_.at(cur).block.parent) {
        path.push_back(cur);
        if (cur == kGenesisId) break;
    }
    std::reverse(path.begin(), path.end());
    return path;
}

void write_chain_dump(std::ostream& out, std::span<const Block> blocks) {
    for (const auto& b : blocks) {
        out << b.id << ' ';
        if (b.parent == kNoBlock)
            out << '-';
        else
            out << b.parent;
        out << ' ';
        if (b.miner == kNoNode)
            out << '-';
        else
            out << b.miner;
        out << ' ' << b.height << ' ' << b.mined_step << '\n';
    }
}

}  // namespace chainsim
