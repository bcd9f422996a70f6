#include <stdexcept>
#include <algorithm>
#include <map>
#include <numeric>
#include <cmath>
#include <queue>
#include <set>
#include <sstream>

#include "chainsim/engine.hpp"
#include "doctest.h"

using namespace chainsim;

namespace {

SimConfig small_mining(std::size_t nodes = 60, std::size_t edges = 150) {
    SimConfig cfg;
    cfg.topology.nodes = nodes;
    cfg.topology.edges = edges;
    cfg.mining.total_steps = 120;
    cfg.mining.miner_fraction = 0.2;
    cfg.run.seed = 5;
    return cfg;
}

// Sybils receive but never relay the victim's message.
std::vector<std::uint8_t> reach_oracle(const Overlay& o, NodeId victim, const std::vector<std::uint8_t>& sybil) {
    std::vector<std::uint8_t> got(o.node_count(), 0);
    std::queue<NodeId> q;
    got[victim] = 1;
    q.push(victim);
    while (!q.empty()) {
        const auto u = q.front();
        q.pop();
        if (u != victim && sybil[u]) continue;
        for (auto w : o.neighbors(u))
            if (!got[w]) {
                got[w] = 1;
                q.push(w);
            }
    }
    return got;
}

Scenario probe_scenario(std::shared_ptr<const Overlay> o, NodeId victim, std::vector<std::uint8_t> sybil,
                        Protocol proto = Protocol::broadcast) {
    Scenario sc;
    sc.overlay = std::move(o);
    sc.roles.assign(sc.overlay->node_count(), Role{RoleKind::passive, 0.0});
    for (std::size_t i = 0; i < sybil.size(); ++i)
        if (sybil[i]) sc.roles[i].kind = RoleKind::sybil;
    sc.sybil = std::move(sybil);
    sc.victim = victim;
    sc.attack.attack = AttackKind::sybil;
    sc.attack.victim = victim;
    sc.protocol.protocol = proto;
    return sc;
}

}  // namespace

TEST_CASE("partition examples") {
    CHECK(partition_agents(10, 2) == std::vector<AgentRange>{{0, 5}, {5, 10}});
    const auto three = partition_agents(10, 3);
    REQUIRE(three.size() == 3);
    CHECK(three[0].size() == 4);
    CHECK(three[1].size() == 3);
    CHECK(three[2].size() == 3);
    CHECK(partition_agents(7, 1) == std::vector<AgentRange>{{0, 7}});
    CHECK(partition_agents(3, 8).size() == 3);
    CHECK_THROWS_AS(partition_agents(3, 0), std::invalid_argument);
}

TEST_CASE("partitions cover every id once with balanced sizes") {
    for (std::size_t n = 1; n < 60; ++n)
        for (std::size_t w = 1; w < 10; ++w) {
            const auto ranges = partition_agents(n, w);
            REQUIRE(ranges.size() == std::min(n, w));
            NodeId expect = 0;
            std::size_t lo = n, hi = 0;
            for (const auto& r : ranges) {
                CHECK(r.begin == expect);
                expect = r.end;
                lo = std::min(lo, r.size());
                hi = std::max(hi, r.size());
            }
            CHECK(expect == n);
            CHECK(hi - lo <= 1);
        }
}

TEST_CASE("merge_inboxes sorts by sender then emission sequence") {
    Delivery from7{5, 7, 0, {}};
    Delivery from3{5, 3, 0, {}};
    std::vector<std::vector<Delivery>> buffers{{from7}, {from3}};
    std::vector<std::vector<Delivery>> inboxes(8);
    merge_inboxes(buffers, inboxes);
    REQUIRE(inboxes[5].size() == 2);
    CHECK(inboxes[5][0].from == 3);
    CHECK(inboxes[5][1].from == 7);
    CHECK(inboxes[0].empty());

    std::vector<std::vector<Delivery>> none(2);
    merge_inboxes(none, inboxes);
    for (const auto& in : inboxes) CHECK(in.empty());
}

TEST_CASE("merge_inboxes is independent of how deliveries are spread over workers") {
    auto rng = RandomStream::derive(3, 0, StreamPurpose::sweep);
    std::vector<Delivery> all;
    for (NodeId from = 0; from < 20; ++from)
        for (std::uint32_t seq = 0; seq < 5; ++seq) {
            Delivery d{static_cast<NodeId>(rng.below(10)), from, seq, {}};
            d.msg.id = rng.next();
            all.push_back(d);
        }
    std::vector<std::vector<Delivery>> reference(10);
    merge_inboxes(std::vector<std::vector<Delivery>>{all}, reference);
    for (int trial = 0; trial < 50; ++trial) {
        auto shuffled = all;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        std::vector<std::vector<Delivery>> buffers(1 + rng.below(5));
        for (const auto& d : shuffled) buffers[rng.below(buffers.size())].push_back(d);
        std::vector<std::vector<Delivery>> inboxes(10);
        merge_inboxes(buffers, inboxes);
        CHECK(inboxes == reference);
    }
}

TEST_CASE("zero steps leaves an empty trace and a bare genesis") {
    auto cfg = small_mining();
    cfg.mining.total_steps = 0;
    cfg.run.trace = TraceLevel::full;
    const auto r = run_simulation(cfg);
    CHECK(r.trace.events.empty());
    CHECK(r.ledger.blocks.empty());
    CHECK(r.metrics.main_chain_length == 0);
    CHECK(r.ledger.global_tree().main_chain() == std::vector<BlockId>{kGenesisId});
}

TEST_CASE("a lone miner with certain success grows the chain by one per step") {
    SimConfig cfg;
    cfg.topology.nodes = 10;
    cfg.topology.edges = 15;
    cfg.mining.miner_fraction = 0.1;
    cfg.mining.blocks_per_step = 1.0;
    cfg.mining.total_steps = 5;
    const auto r = run_simulation(cfg);
    CHECK(r.metrics.main_chain_length == 5);
    CHECK(r.metrics.total_blocks == 5);
    CHECK(r.truncated_deliveries == 0);
}

TEST_CASE("results do not depend on the worker count") {
    for (auto proto : {Protocol::broadcast, Protocol::fixed_probability, Protocol::dandelion_pm}) {
        auto cfg = small_mining();
        cfg.protocol.protocol = proto;
        cfg.protocol.p = 0.8;
        cfg.attack.attack = AttackKind::selfish_mining;
        cfg.attack.attacker_hashrate = 0.4;
        cfg.run.trace = TraceLevel::full;
        cfg.run.workers = 1;
        const auto one = run_simulation(cfg);
        CHECK_FALSE(one.trace.events.empty());
        for (std::uint32_t w : {2u, 3u, 4u, 7u}) {
            cfg.run.workers = w;
            const auto many = run_simulation(cfg);
            CHECK(many.trace.to_tsv() == one.trace.to_tsv());
            CHECK(many.metrics == one.metrics);
            CHECK(many.ledger.blocks == one.ledger.blocks);
        }
    }
}

TEST_CASE("different seeds give different traces") {
    auto cfg = small_mining();
    cfg.run.trace = TraceLevel::blocks;
    const auto a = run_simulation(cfg);
    cfg.run.seed = 6;
    const auto b = run_simulation(cfg);
    CHECK(a.trace.to_tsv() != b.trace.to_tsv());
}

TEST_CASE("broadcast reaches every node without adversaries") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto o = std::make_shared<const Overlay>(generate_random_graph(80, 120, seed));
        const auto r = run_simulation(probe_scenario(o, static_cast<NodeId>(seed), std::vector<std::uint8_t>(80, 0)));
        CHECK(r.metrics.coverage == 1.0);
        CHECK(std::accumulate(r.probe_received.begin(), r.probe_received.end(), 0) == 80);
    }
}

TEST_CASE("probe coverage matches the reachability oracle with random sybils") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        auto o = std::make_shared<const Overlay>(generate_random_graph(60, 150 + seed, seed));
        const NodeId victim = static_cast<NodeId>(seed % 60);
        auto sybil = select_sybils(60, 0.25, victim, seed);
        const auto r = run_simulation(probe_scenario(o, victim, sybil));
        const auto expect = reach_oracle(*o, victim, sybil);
        CHECK(r.probe_received == expect);
        CHECK(r.metrics.coverage == doctest::Approx(coverage_metric(expect, victim, sybil)));
    }
}

TEST_CASE("coverage on a star and on K4") {
    std::vector<Edge> star;
    for (NodeId v = 1; v < 6; ++v) star.push_back({0, v});
    auto so = std::make_shared<const Overlay>(Overlay::from_edges(6, star));
    std::vector<std::uint8_t> center(6, 0);
    center[0] = 1;
    CHECK(run_simulation(probe_scenario(so, 3, center)).metrics.coverage == 0.0);

    auto k4 = std::make_shared<const Overlay>(Overlay::from_edges(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}));
    std::vector<std::uint8_t> one(4, 0);
    one[2] = 1;
    CHECK(run_simulation(probe_scenario(k4, 0, one)).metrics.coverage == 1.0);
}

TEST_CASE("a zero sybil fraction behaves like a run without the filter") {
    SimConfig cfg;
    cfg.topology.nodes = 200;
    cfg.topology.edges = 500;
    cfg.attack.attack = AttackKind::sybil;
    cfg.attack.sybil_fraction = 0.0;
    cfg.attack.victim = 17;
    cfg.run.trace = TraceLevel::full;
    for (auto proto : {Protocol::fixed_probability, Protocol::dandelion}) {
        cfg.protocol.protocol = proto;
        const auto with = run_simulation(cfg);
        auto plain = make_scenario(cfg, cfg.run.seed, 17);
        for (auto& r : plain.roles) r.kind = RoleKind::passive;
        CHECK(run_simulation(plain).trace.to_tsv() == with.trace.to_tsv());
    }
}

TEST_CASE("dandelion stem emits one copy per hop and Dandelion+- stays quiet on a clean stem") {
    auto o = std::make_shared<const Overlay>(generate_random_graph(300, 900, 2));
    int clean = 0;
    for (std::uint32_t stem : {1u, 2u, 5u}) {
        for (NodeId victim = 0; victim < 20; ++victim) {
            auto sc = probe_scenario(o, victim, std::vector<std::uint8_t>(300, 0), Protocol::dandelion_pm);
            sc.protocol.stem_hops = stem;
            sc.seed = victim;
            sc.trace = TraceLevel::full;
            const auto r = run_simulation(sc);
            std::map<std::pair<std::uint64_t, std::uint32_t>, int> per_hop;
            std::vector<NodeId> path{victim};
            std::set<NodeId> visited{victim};
            bool simple = true;
            for (const auto& e : r.trace.events)
                if (e.kind == EventKind::send && e.extra == static_cast<std::uint64_t>(Phase::stem)) {
                    ++per_hop[{e.step, e.sub_step}];
                    path.push_back(static_cast<NodeId>(e.peer));
                    simple &= visited.insert(static_cast<NodeId>(e.peer)).second;
                }
            for (const auto& [when, count] : per_hop) CHECK(count == 1);
            CHECK(per_hop.size() <= stem);
            if (!simple) {
                // the stem ran into a node that already holds the message and died there
                CHECK(r.failsafe_firings >= 1);
                continue;
            }
            CHECK(per_hop.size() == stem);
            // Stem nodes never relay the fluff (they already hold the message),
            // so a stem node hears it back only from the fluffing node itself
            // or from a non-stem neighbor the flood reaches.
            const NodeId fluffer = path.back();
            std::set<NodeId> flooded;
            std::queue<NodeId> q;
            q.push(fluffer);
            while (!q.empty()) {
                const auto u = q.front();
                q.pop();
                for (auto w : o->neighbors(u))
                    if (!visited.contains(w) && flooded.insert(w).second) q.push(w);
            }
            bool hears_back = true;
            for (std::size_t i = 0; i + 1 < path.size(); ++i) {
                const NodeId x = path[i];
                bool ok = o->has_edge(x, fluffer) && x != path[path.size() - 2];
                for (auto w : o->neighbors(x)) ok |= flooded.contains(w);
                hears_back &= ok;
            }
            if (hears_back) {
                ++clean;
                CHECK(r.failsafe_firings == 0);
            } else {
                CHECK(r.failsafe_firings >= 1);
            }
        }
    }
    CHECK(clean > 40);
}

TEST_CASE("fail-safe recovers a stem swallowed by a sybil") {
    // Path 0-1-2-3: the victim's only neighbor drops its stem.
    auto o = std::make_shared<const Overlay>(Overlay::from_edges(4, {{0, 1}, {1, 2}, {2, 3}}));
    std::vector<std::uint8_t> sybil{0, 0, 1, 0};
    auto plain = probe_scenario(o, 1, sybil, Protocol::dandelion);
    plain.protocol.stem_hops = 3;
    auto pm = plain;
    pm.protocol.protocol = Protocol::dandelion_pm;
    pm.protocol.failsafe_timeout = 4;
    const auto lost = run_simulation(plain);
    const auto saved = run_simulation(pm);
    // node 1 stems to 0 or 2; both outcomes keep node 3 out of reach
    CHECK(saved.failsafe_firings >= 1);
    CHECK(saved.probe_received[0] == 1);
    CHECK(saved.metrics.coverage >= lost.metrics.coverage);
}

TEST_CASE("main chain growth without an attacker") {
    // Dissemination finishes inside each mining step, so the longest chain
    // grows by exactly one in every step where at least one miner succeeds.
    SimConfig cfg;
    cfg.topology.nodes = 100;
    cfg.topology.edges = 400;
    cfg.mining.total_steps = 2000;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        cfg.run.seed = seed;
        const auto r = run_simulation(cfg);
        std::set<std::uint64_t> productive;
        for (const auto& b : r.ledger.blocks) productive.insert(b.mined_step);
        CHECK(r.truncated_deliveries == 0);
        CHECK(r.metrics.main_chain_length == productive.size());
        CHECK(r.metrics.main_chain_length <= r.metrics.total_blocks);
        // 10 miners at 0.05 each: P(some success) = 1 - 0.95^10 ~ 0.4013, sd over 2000 steps ~ 22
        CHECK(std::abs(static_cast<double>(r.metrics.main_chain_length) - 2000 * (1 - std::pow(0.95, 10))) < 66);
        CHECK(r.metrics.total_blocks <= 1000 + 66);
    }
}

TEST_CASE("deliveries still in flight at the sub-step cap are dropped and counted") {
    std::vector<Edge> path;
    for (NodeId v = 0; v + 1 < 10; ++v) path.push_back({v, v + 1});
    auto o = std::make_shared<const Overlay>(Overlay::from_edges(10, path));
    auto sc = probe_scenario(o, 0, std::vector<std::uint8_t>(10, 0));
    sc.substeps_per_step = 4;
    const auto r = run_simulation(sc);
    CHECK(r.truncated_deliveries == 1);
    CHECK(r.metrics.coverage == doctest::Approx(3.0 / 9.0));
}

TEST_CASE("trace lines are tab separated") {
    auto o = std::make_shared<const Overlay>(Overlay::from_edges(2, {{0, 1}}));
    auto sc = probe_scenario(o, 0, {0, 0});
    sc.trace = TraceLevel::full;
    const auto tsv = run_simulation(sc).trace.to_tsv();
    CHECK(tsv ==
          "0\t0\tprobe\t0\tmsg=9223372036854775808\n"
          "0\t0\tsend\t0\tmsg=9223372036854775808 to=1 phase=none\n"
          "0\t1\trecv\t1\tmsg=9223372036854775808 from=0 phase=none\n");
}

TEST_CASE("selfish runs count finalized episodes") {
    auto cfg = small_mining();
    cfg.mining.total_steps = 400;
    cfg.attack.attack = AttackKind::selfish_mining;
    cfg.attack.attacker_hashrate = 0.45;
    const auto r = run_simulation(cfg);
    CHECK(r.metrics.selfish_episodes > 0);
    CHECK(r.metrics.attacker_blocks_main <= r.metrics.attacker_blocks_total);
    CHECK(r.metrics.attacker_blocks_main <= r.metrics.main_chain_length);

    cfg.attack.attacker_hashrate = 0.0;
    CHECK(run_simulation(cfg).metrics.selfish_episodes == 0);
}
