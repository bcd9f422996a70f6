#include <stdexcept>
#include <algorithm>
#include <queue>
#include <set>
#include <sstream>

#include "chainsim/overlay.hpp"
#include "doctest.h"

using namespace chainsim;

namespace {

// Plain BFS over the raw edge list, independent of the CSR adjacency.
bool bfs_connected(std::size_t n, const std::vector<Edge>& edges) {
    std::vector<std::vector<NodeId>> adj(n);
    for (auto [u, v] : edges) {
        adj[u].push_back(v);
        adj[v].push_back(u);
    }
    std::vector<char> seen(n, 0);
    std::queue<NodeId> q;
    q.push(0);
    seen[0] = 1;
    std::size_t count = 1;
    while (!q.empty()) {
        const auto u = q.front();
        q.pop();
        for (auto w : adj[u])
            if (!seen[w]) {
                seen[w] = 1;
                ++count;
                q.push(w);
            }
    }
    return count == n;
}

void check_structure(const Overlay& o) {
    std::set<Edge> edge_set;
    for (auto [u, v] : o.edges()) {
        REQUIRE(u < v);
        REQUIRE(edge_set.insert({u, v}).second);
    }
    std::size_t degree_sum = 0;
    for (NodeId v = 0; v < o.node_count(); ++v) {
        const auto nb = o.neighbors(v);
        REQUIRE(std::is_sorted(nb.begin(), nb.end()));
        REQUIRE(std::adjacent_find(nb.begin(), nb.end()) == nb.end());
        degree_sum += nb.size();
        std::size_t recount = 0;
        for (auto [a, b] : o.edges()) recount += (a == v || b == v);
        REQUIRE(recount == nb.size());
        for (auto w : nb) {
            REQUIRE(w != v);
            REQUIRE(edge_set.contains({std::min(v, w), std::max(v, w)}));
        }
    }
    CHECK(degree_sum == 2 * o.edge_count());
    CHECK(bfs_connected(o.node_count(), o.edges()));
}

}  // namespace

TEST_CASE("from_edges normalizes and rejects bad input") {
    auto o = Overlay::from_edges(3, {{2, 1}, {1, 0}});
    CHECK(o.edges() == std::vector<Edge>{{0, 1}, {1, 2}});
    CHECK_THROWS_AS(Overlay::from_edges(3, {{0, 0}, {1, 2}}), std::invalid_argument);
    CHECK_THROWS_AS(Overlay::from_edges(3, {{0, 1}, {1, 0}, {1, 2}}), std::invalid_argument);
    CHECK_THROWS_AS(Overlay::from_edges(3, {{0, 3}, {1, 2}}), std::invalid_argument);
    CHECK_THROWS_AS(Overlay::from_edges(4, {{0, 1}, {2, 3}}), std::invalid_argument);
}

TEST_CASE("neighbors of a path and a complete graph") {
    auto path = Overlay::from_edges(3, {{0, 1}, {1, 2}});
    auto nb = path.neighbors(1);
    CHECK(std::vector<NodeId>(nb.begin(), nb.end()) == std::vector<NodeId>{0, 2});
    auto k4 = Overlay::from_edges(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}});
    nb = k4.neighbors(0);
    CHECK(std::vector<NodeId>(nb.begin(), nb.end()) == std::vector<NodeId>{1, 2, 3});
    CHECK_THROWS_AS(k4.neighbors(4), std::out_of_range);
    CHECK(k4.has_edge(3, 1));
    CHECK_FALSE(path.has_edge(0, 2));
}

TEST_CASE("random graph 500/2000") {
    auto o = generate_random_graph(500, 2000, 11);
    CHECK(o.node_count() == 500);
    CHECK(o.edge_count() == 2000);
    check_structure(o);
}

TEST_CASE("random graph with two nodes is a single edge") {
    auto o = generate_random_graph(2, 1, 5);
    CHECK(o.edges() == std::vector<Edge>{{0, 1}});
    CHECK(o.degree(0) == 1);
    CHECK(o.degree(1) == 1);
}

TEST_CASE("random graph 10000/40000 has mean degree 8") {
    auto o = generate_random_graph(10000, 40000, 3);
    std::size_t degree_sum = 0;
    for (NodeId v = 0; v < 10000; ++v) degree_sum += o.degree(v);
    CHECK(degree_sum == 80000);
    CHECK(bfs_connected(10000, o.edges()));
}

TEST_CASE("random graph argument checks") {
    CHECK_THROWS_AS(generate_random_graph(10, 8, 1), std::invalid_argument);
    CHECK_THROWS_AS(generate_random_graph(10, 46, 1), std::invalid_argument);
    CHECK_THROWS_AS(generate_random_graph(1, 0, 1), std::invalid_argument);
    CHECK(generate_random_graph(10, 45, 1).edge_count() == 45);
}

TEST_CASE("generation is a function of the seed") {
    for (std::uint64_t seed : {1ULL, 2ULL, 99ULL}) {
        CHECK(generate_random_graph(200, 600, seed).edges() == generate_random_graph(200, 600, seed).edges());
        CHECK(generate_small_world(200, 6, 0.3, seed).edges() == generate_small_world(200, 6, 0.3, seed).edges());
    }
    CHECK(generate_random_graph(200, 600, 1).edges() != generate_random_graph(200, 600, 2).edges());
}

TEST_CASE("random graph property sweep") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const std::size_t n = 2 + seed % 30;
        const std::size_t max_m = n * (n - 1) / 2;
        const std::size_t m = (n - 1) + (seed * 7) % (max_m - (n - 1) + 1);
        auto o = generate_random_graph(n, m, seed);
        CHECK(o.edge_count() == m);
        check_structure(o);
    }
}

TEST_CASE("small world without rewiring is a ring lattice") {
    auto o = generate_small_world(20, 4, 0.0, 1);
    CHECK(o.edge_count() == 40);
    for (NodeId v = 0; v < 20; ++v) {
        CHECK(o.degree(v) == 4);
        CHECK(o.has_edge(v, (v + 1) % 20));
        CHECK(o.has_edge(v, (v + 2) % 20));
    }
}

TEST_CASE("small world keeps n*k/2 edges for any beta") {
    for (double beta : {0.0, 0.1, 0.5, 1.0})
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            auto o = generate_small_world(100, 6, beta, seed);
            CHECK(o.edge_count() == 300);
            check_structure(o);
        }
    CHECK(generate_small_world(10000, 8, 0.1, 1).edge_count() == 40000);
}

TEST_CASE("small world (6, 2, 0.5) is a connected 6-edge graph for many seeds") {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        auto o = generate_small_world(6, 2, 0.5, seed);
        REQUIRE(o.edge_count() == 6);
        REQUIRE(bfs_connected(6, o.edges()));
    }
}

TEST_CASE("small world argument checks") {
    CHECK_THROWS_AS(generate_small_world(10, 3, 0.1, 1), std::invalid_argument);
    CHECK_THROWS_AS(generate_small_world(10, 10, 0.1, 1), std::invalid_argument);
    CHECK_THROWS_AS(generate_small_world(10, 0, 0.1, 1), std::invalid_argument);
    CHECK_THROWS_AS(generate_small_world(10, 4, 1.5, 1), std::invalid_argument);
}

TEST_CASE("edge list dump") {
    auto o = Overlay::from_edges(3, {{1, 2}, {0, 1}}, 77);
    std::ostringstream out;
    o.write_edge_list(out);
    CHECK(out.str() == "# nodes=3 edges=2 seed=77\n0 1\n1 2\n");
}
