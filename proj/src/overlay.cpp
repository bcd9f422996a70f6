#include "chainsim/overlay.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_set>

#include "chainsim/rng.hpp"

namespace chainsim {
namespace {

std::uint64_t pair_key(NodeId u, NodeId v) {
    if (u > v) std::swap(u, v);
    return (static_cast<std::uint64_t>(u) << 32) | v;
}

struct DisjointSets {
    explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }

    std::size_t find(std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }

    bool unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent[std::max(a, b)] = std::min(a, b);
        return true;
    }

    std::vector<std::size_t> parent;
};

// Draws m distinct pairs out of the n(n-1)/2 possible ones.
std::vector<Edge> sample_pairs(std::size_t n, std::size_t m, RandomStream& rng) {
    const std::uint64_t total = static_cast<std::uint64_t>(n) * (n - 1) / 2;
    const bool complement = m > total / 2;
    const std::uint64_t draws = complement ? total - m : m;

    std::unordered_set<std::uint64_t> chosen;
    chosen.reserve(draws * 2);
    while (chosen.size() < draws) {
        auto u = static_cast<NodeId>(rng.below(n));
        auto v = static_cast<NodeId>(rng.below(n));
        if (u == v) continue;
        chosen.insert(pair_key(u, v));
    }

    std::vector<Edge> edges;
    edges.reserve(m);
    if (complement) {
        for (NodeId u = 0; u < n; ++u)
            for (NodeId v = u + 1; v < n; ++v)
                if (!chosen.contains(pair_key(u, v))) edges.emplace_back(u, v);
    } else {
        for (auto key : chosen) edges.emplace_back(static_cast<NodeId>(key >> 32), static_cast<NodeId>(key));
    }
    return edges;
}

std::vector<Edge> ring_lattice_rewired(std::size_t n, std::size_t k, double beta, RandomStream& rng) {
    std::vector<std::unordered_set<NodeId>> adj(n);
    const std::size_t half = k / 2;
    for (NodeId i = 0; i < n; ++i) {
        for (std::size_t j = 1; j <= half; ++j) {
            auto t = static_cast<NodeId>((i + j) % n);
            adj[i].insert(t);
            adj[t].insert(i);
        }
    }

    // Classic ordering: one lap per lattice distance, rewiring the far end.
    for (std::size_t j = 1; j <= half; ++j) {
        for (NodeId i = 0; i < n; ++i) {
            auto t = static_cast<NodeId>((i + j) % n);
            if (!adj[i].contains(t)) continue;  // already rewired away
            if (!rng.bernoulli(beta)) continue;
            if (adj[i].size() + 1 >= n) continue;  // nowhere to go
            NodeId w;
            do {
                w = static_cast<NodeId>(rng.below(n));
            } while (w == i || adj[i].contains(w));
            adj[i].erase(t);
            adj[t].erase(i);
            adj[i].insert(w);
            adj[w].insert(i);
        }
    }

    std::vector<Edge> edges;
    edges.reserve(n * half);
    for (NodeId u = 0; u < n; ++u)
        for (NodeId v : adj[u])
            if (u < v) edges.emplace_back(u, v);
    return edges;
}

}  // namespace

bool is_connected(std::size_t n, const std::vector<Edge>& edges) {
    if (n == 0) return false;
    DisjointSets sets(n);
    std::size_t components = n;
    for (const auto& [u, v] : edges)
        if (sets.unite(u, v)) --components;
    return components == 1;
}

Overlay Overlay::from_edges(std::size_t node_count, std::vector<Edge> edges, std::uint64_t seed) {
    if (node_count == 0) throw std::invalid_argument("overlay needs at least one node");
    for (auto& e : edges) {
        if (e.first == e.second) throw std::invalid_argument("self-loop on node " + std::to_string(e.first));
        if (e.first >= node_count || e.second >= node_count)
            throw std::invalid_argument("edge endpoint out of range");
        if (e.first > e.second) std::swap(e.first, e.second);
    }
    std::sort(edges.begin(), edges.end());
    if (std::adjacent_find(edges.begin(), edges.end()) != edges.end())
        throw std::invalid_argument("duplicate edge");
    if (!is_connected(node_count, edges)) throw std::invalid_argument("overlay is not connected");

    Overlay o;
    o.seed_ = seed;
    o.offsets_.assign(node_count + 1, 0);
    for (const auto& [u, v] : edges) {
        ++o.offsets_[u + 1];
        ++o.offsets_[v + 1];
    }
    std::partial_sum(o.offsets_.begin(), o.offsets_.end(), o.offsets_.begin());
    o.targets_.resize(edges.size() * 2);
    std::vector<std::size_t> cursor(o.offsets_.begin(), o.offsets_.end() - 1);
    // Edges are sorted by (u, v), so filling in this order leaves every list sorted.
    for (const auto& [u, v] : edges) o.targets_[cursor[u]++] = v;
    for (const auto& [u, v] : edges) o.targets_[cursor[v]++] = u;
    for (std::size_t i = 0; i < node_count; ++i)
        std::sort(o.targets_.begin() + static_cast<std::ptrdiff_t>(o.offsets_[i]),
                  o.targets_.begin() + static_cast<std::ptrdiff_t>(o.offsets_[i + 1]));
    o.edges_ = std::move(edges);
    return o;
}

std::span<const NodeId> Overlay::neighbors(NodeId v) const {
    if (v >= node_count()) throw std::out_of_range("node id " + std::to_string(v) + " out of range");
    return {targets_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
}

bool Overlay::has_edge(NodeId u, NodeId v) const {
    auto nb = neighbors(u);
    return std::binary_search(nb.begin(), nb.end(), v);
}

void Overlay::write_edge_list(std::ostream& out) const {
    out << "# nodes=" << node_count() << " edges=" << edge_count() << " seed=" << seed_ << '\n';
    for (const auto& [u, v] : edges_) out << u << ' ' << v << '\n';
}

Overlay generate_random_graph(std::size_t n, std::size_t m, std::uint64_t seed) {
    if (n < 2) throw std::invalid_argument("random graph needs n >= 2");
    if (m < n - 1) throw std::invalid_argument("m < n-1: a connected graph is impossible");
    if (m > static_cast<std::uint64_t>(n) * (n - 1) / 2)
        throw std::invalid_argument("m exceeds the complete-graph bound n(n-1)/2");

    for (int attempt = 0; attempt < kMaxGenerationAttempts; ++attempt) {
        auto rng = RandomStream::derive(seed, static_cast<std::uint64_t>(attempt), StreamPurpose::topology);
        auto edges = sample_pairs(n, m, rng);
        if (is_connected(n, edges)) return Overlay::from_edges(n, std::move(edges), seed);
    }
    throw std::runtime_error("no connected random graph after " + std::to_string(kMaxGenerationAttempts) +
                             " attempts");
}

Overlay generate_small_world(std::size_t n, std::size_t k, double beta, std::uint64_t seed) {
    if (n < 2) throw std::invalid_argument("small-world graph needs n >= 2");
    if (k % 2 != 0) throw std::invalid_argument("small-world base degree k must be even");
    if (k < 2 || k >= n) throw std::invalid_argument("small-world base degree must satisfy 2 <= k < n");
    if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("rewire probability beta must lie in [0,1]");

    for (int attempt = 0; attempt < kMaxGenerationAttempts; ++attempt) {
        auto rng = RandomStream::derive(seed, static_cast<std::uint64_t>(attempt), StreamPurpose::topology);
        auto edges = ring_lattice_rewired(n, k, beta, rng);
        if (is_connected(n, edges)) return Overlay::from_edges(n, std::move(edges), seed);
    }
    throw std::runtime_error("no connected small-world graph after " + std::to_string(kMaxGenerationAttempts) +
                             " attempts");
}

}  // namespace chainsim
