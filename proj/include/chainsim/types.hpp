#pragma once

#include <cstdint>
#include <limits>

namespace chainsim {

using NodeId = std::uint32_t;
using BlockId = std::uint64_t;
using MsgId = std::uint64_t;

inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();
inline constexpr BlockId kGenesisId = 0;
inline constexpr BlockId kNoBlock = std::numeric_limits<BlockId>::max();

// Block ids encode (mining step, miner) so that they are reproducible across
// runs and sort by creation step first.
constexpr BlockId make_block_id(std::uint64_t mining_step, NodeId miner) {
    return ((mining_step + 1) << 32) | miner;
}

}  // namespace chainsim
