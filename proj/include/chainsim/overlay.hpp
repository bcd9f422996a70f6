#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "chainsim/types.hpp"

namespace chainsim {

using Edge = std::pair<NodeId, NodeId>;

/// Immutable, connected, simple undirected graph over dense ids 0..n-1.
///
/// Edges are kept as (u, v) with u < v in ascending order; adjacency is stored
/// in CSR form with each neighbor list sorted ascending, which fixes the
/// iteration order every protocol uses when it consumes random draws.
class Overlay {
public:
    /// Builds an overlay from an explicit edge list. Throws std::invalid_argument
    /// on self-loops, duplicates, out-of-range ids or a disconnected result.
    static Overlay from_edges(std::size_t node_count, std::vector<Edge> edges, std::uint64_t seed = 0);

    std::size_t node_count() const { return offsets_.size() - 1; }
    std::size_t edge_count() const { return edges_.size(); }
    std::uint64_t seed() const { return seed_; }

    const std::vector<Edge>& edges() const { return edges_; }

    /// Sorted neighbor list of v. Throws std::out_of_range for v >= node_count().
    std::span<const NodeId> neighbors(NodeId v) const;
    std::size_t degree(NodeId v) const { return neighbors(v).size(); }

    bool has_edge(NodeId u, NodeId v) const;

    /// Edge-list text: header `# nodes=<n> edges=<m> seed=<s>`, then one `u v` per line.
    void write_edge_list(std::ostream& out) const;

private:
    Overlay() = default;

    std::vector<Edge> edges_;
    std::vector<std::size_t> offsets_;
    std::vector<NodeId> targets_;
    std::uint64_t seed_ = 0;
};

/// Maximum number of regeneration attempts before a generator gives up on
/// producing a connected graph.
inline constexpr int kMaxGenerationAttempts = 1000;

/// Uniform G(n, m): m distinct edges drawn without replacement, regenerated
/// with a deterministically advanced seed until connected.
Overlay generate_random_graph(std::size_t n, std::size_t m, std::uint64_t seed);

/// Watts-Strogatz ring lattice with k nearest neighbors per node, each lattice
/// edge rewired with probability beta. Edge count is always n*k/2.
Overlay generate_small_world(std::size_t n, std::size_t k, double beta, std::uint64_t seed);

/// True when the edge list spans a single component over n nodes.
bool is_connected(std::size_t n, const std::vector<Edge>& edges);

}  // namespace chainsim
