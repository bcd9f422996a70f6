#include "chainsim/engine.hpp"

#include <algorithm>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "chainsim/worker_pool.hpp"

namespace chainsim {

std::string_view to_string(EventKind k) {
    switch (k) {
        case EventKind::mined: return "mined";
        case EventKind::probe: return "probe";
        case EventKind::send: return "send";
        case EventKind::recv: return "recv";
        case EventKind::drop: return "drop";
        case EventKind::release: return "release";
        case EventKind::abandon: return "abandon";
        case EventKind::failsafe: return "failsafe";
    }
    return "?";
}

void EventTrace::write_tsv(std::ostream& out) const {
    for (const auto& e : events) {
        out << e.step << '\t' << e.sub_step << '\t' << to_string(e.kind) << '\t' << e.node << '\t';
        switch (e.kind) {
            case EventKind::mined:
                out << "block=" << e.subject << " parent=" << e.peer << " height=" << e.extra;
                break;
            case EventKind::probe:
            case EventKind::failsafe:
                out << "msg=" << e.subject;
                break;
            case EventKind::send:
                out << "msg=" << e.subject << " to=" << e.peer << " phase=" << to_string(static_cast<Phase>(e.extra));
                break;
            case EventKind::recv:
                out << "msg=" << e.subject << " from=" << e.peer
                    << " phase=" << to_string(static_cast<Phase>(e.extra));
                break;
            case EventKind::drop:
                out << "msg=" << e.subject << " from=" << e.peer;
                break;
            case EventKind::release:
            case EventKind::abandon:
                out << "block=" << e.subject << " height=" << e.extra;
                break;
        }
        out << '\n';
    }
}

std::string EventTrace::to_tsv() const {
    std::ostringstream out;
    write_tsv(out);
    return out.str();
}

std::vector<AgentRange> partition_agents(std::size_t n, std::size_t workers) {
    if (workers == 0) throw std::invalid_argument("workers must be >= 1");
    std::vector<AgentRange> ranges;
    if (n == 0) return ranges;
    workers = std::min(workers, n);
    const std::size_t base = n / workers;
    const std::size_t extra = n % workers;
    NodeId begin = 0;
    for (std::size_t w = 0; w < workers; ++w) {
        const auto size = static_cast<NodeId>(base + (w < extra ? 1 : 0));
        ranges.push_back({begin, begin + size});
        begin += size;
    }
    return ranges;
}

void merge_inboxes(std::span<const std::vector<Delivery>> worker_buffers,
                   std::vector<std::vector<Delivery>>& inboxes) {
    for (auto& inbox : inboxes) inbox.clear();
    for (const auto& buffer : worker_buffers)
        for (const auto& d : buffer) inboxes.at(d.to).push_back(d);
    auto key_less = [](const Delivery& a, const Delivery& b) {
        return a.from != b.from ? a.from < b.from : a.seq < b.seq;
    };
    for (auto& inbox : inboxes)
        if (!std::is_sorted(inbox.begin(), inbox.end(), key_less)) std::sort(inbox.begin(), inbox.end(), key_less);
}

std::shared_ptr<const Overlay> make_overlay(const TopologyConfig& topo, std::uint64_t seed) {
    if (topo.kind == TopologyKind::small_world)
        return std::make_shared<const Overlay>(generate_small_world(topo.nodes, topo.k, topo.beta, seed));
    return std::make_shared<const Overlay>(generate_random_graph(topo.nodes, topo.edges, seed));
}

Scenario make_scenario(const SimConfig& cfg, std::shared_ptr<const Overlay> overlay, std::uint64_t seed,
                       NodeId victim) {
    Scenario sc;
    const std::size_t n = overlay->node_count();
    sc.overlay = std::move(overlay);
    sc.protocol = cfg.protocol;
    sc.mining = cfg.mining;
    sc.attack = cfg.attack;
    sc.seed = seed;
    sc.substeps_per_step = cfg.run.substeps_per_step;
    sc.workers = cfg.run.workers;
    sc.trace = cfg.run.trace;

    if (sc.probe_mode()) {
        if (victim >= n) throw std::invalid_argument("victim id out of range");
        sc.victim = victim;
        sc.attack.victim = victim;
        sc.roles.assign(n, Role{RoleKind::passive, 0.0});
        sc.sybil = select_sybils(n, cfg.attack.sybil_fraction, victim, seed);
        for (std::size_t i = 0; i < n; ++i)
            if (sc.sybil[i]) sc.roles[i].kind = RoleKind::sybil;
    } else {
        sc.roles = assign_hashrates(n, cfg.mining.miner_fraction, cfg.attack, seed);
        sc.sybil.assign(n, 0);
        sc.attacker = find_attacker(sc.roles);
    }
    return sc;
}

Scenario make_scenario(const SimConfig& cfg, std::uint64_t seed, NodeId victim) {
    return make_scenario(cfg, make_overlay(cfg.topology, seed), seed, victim);
}

namespace {

struct WorkerBuffers {
    std::vector<Delivery> out;
    std::vector<TraceEvent> events;
    std::vector<Block> new_blocks;
    std::vector<std::pair<BlockId, NodeId>> honest_receipts;
    std::vector<Forward> scratch;
    bool pending = false;
    std::uint64_t failsafe = 0;
    std::uint64_t sent = 0;
};

struct NodeState {
    GossipState gossip;
    std::unique_ptr<BlockTree> view;
    SelfishState selfish;
    std::uint64_t receipt_seq = 0;
    std::uint32_t emit_seq = 0;
};

class Simulation {
public:
    explicit Simulation(const Scenario& sc)
        : sc_(sc),
          overlay_(*sc.overlay),
          n_(overlay_.node_count()),
          ranges_(partition_agents(n_, std::max<std::uint32_t>(1, sc.workers))),
          pool_(ranges_.size()),
          nodes_(n_),
          inbox_(n_),
          buffers_(ranges_.size()) {
        if (sc.roles.size() != n_) throw std::invalid_argument("role list does not match the overlay");
        if (sc.substeps_per_step < 2) throw std::invalid_argument("substeps_per_step must be >= 2");
        sc.protocol.validate();
        clock_.substeps_per_step = sc.substeps_per_step;
        for (std::size_t v = 0; v < n_; ++v) {
            const auto kind = sc.roles[v].kind;
            if (sc.roles[v].is_miner() || kind == RoleKind::attacker51 || kind == RoleKind::selfish)
                nodes_[v].view = std::make_unique<BlockTree>(static_cast<NodeId>(v));
        }
    }

    RunResult run() {
        const std::uint64_t steps = sc_.probe_mode() ? 1 : sc_.mining.total_steps;
        for (std::uint64_t step = 0; step < steps; ++step) {
            clock_.mining_step = step;
            clock_.sub_step = 0;
            pool_.run([&](std::size_t w) {
                for (NodeId v = ranges_[w].begin; v < ranges_[w].end; ++v) mining_phase(v, buffers_[w]);
            });
            merge();

            for (std::uint32_t sub = 1; sub < sc_.substeps_per_step; ++sub) {
                if (!in_flight_ && !timers_pending_) break;
                clock_.sub_step = sub;
                pool_.run([&](std::size_t w) {
                    for (NodeId v = ranges_[w].begin; v < ranges_[w].end; ++v) propagate(v, buffers_[w]);
                });
                merge();
            }
            if (in_flight_) {
                for (auto& inbox : inbox_) {
                    result_.truncated_deliveries += inbox.size();
                    inbox.clear();
                }
                in_flight_ = false;
            }
        }
        finish();
        return std::move(result_);
    }

private:
    bool full_trace() const { return sc_.trace == TraceLevel::full; }
    bool block_trace() const { return sc_.trace != TraceLevel::off; }

    void record(WorkerBuffers& buf, EventKind kind, NodeId node, std::uint64_t subject, std::uint64_t peer = 0,
                std::uint64_t extra = 0) {
        buf.events.push_back({clock_.mining_step, clock_.sub_step, kind, node, subject, peer, extra});
    }

    RandomStream gossip_stream(NodeId v) const {
        return RandomStream::derive(sc_.seed, v, StreamPurpose::gossip, clock_.mining_step, clock_.sub_step);
    }

    const Block& lookup(BlockId id) const { return result_.ledger.blocks[block_index_.at(id)]; }

    void emit(NodeId v, const Message& m, NodeId from, RandomStream& rng, WorkerBuffers& buf) {
        auto& ns = nodes_[v];
        buf.scratch.clear();
        decide_forwards(sc_.protocol, v, m, from, overlay_.neighbors(v), rng, buf.scratch);
        if (m.phase == Phase::stem && !buf.scratch.empty() && buf.scratch.front().msg.phase == Phase::fluff)
            ns.gossip.note_fluff(m.id);  // this node started the fluff itself
        for (const auto& f : buf.scratch) {
            buf.out.push_back({f.to, v, ns.emit_seq++, f.msg});
            if (full_trace())
                record(buf, EventKind::send, v, f.msg.id, f.to, static_cast<std::uint64_t>(f.msg.phase));
        }
        buf.sent += buf.scratch.size();
    }

    // The originator caches its own message, arms the fail-safe, then relays.
    void publish(NodeId v, const Message& m, RandomStream& rng, WorkerBuffers& buf) {
        auto& ns = nodes_[v];
        ns.gossip.accept(m);
        ns.gossip.stem_watch(m, clock_.now(), sc_.protocol);
        emit(v, m, kNoNode, rng, buf);
    }

    Message block_message(NodeId v, const Block& b) const {
        return make_origin_message(sc_.protocol, b.id, MessageKind::block, v, b.id);
    }

    void mining_phase(NodeId v, WorkerBuffers& buf) {
        auto& ns = nodes_[v];
        ns.emit_seq = 0;
        const Role& role = sc_.roles[v];

        if (sc_.probe_mode()) {
            if (clock_.mining_step == 0 && v == sc_.victim) {
                auto rng = gossip_stream(v);
                const auto m = make_origin_message(sc_.protocol, kProbeMsgId, MessageKind::probe, v);
                if (block_trace()) record(buf, EventKind::probe, v, m.id);
                publish(v, m, rng, buf);
            }
            buf.pending |= ns.gossip.has_pending();
            return;
        }
        if (!role.is_miner()) {
            buf.pending |= ns.gossip.has_pending();
            return;
        }

        auto mrng = RandomStream::derive(sc_.seed, v, StreamPurpose::mining, clock_.mining_step, 0);
        const MinerContext ctx{v, role.hashrate, clock_.mining_step};
        std::optional<RandomStream> grng;
        auto gossip_rng = [&]() -> RandomStream& {
            if (!grng) grng = gossip_stream(v);
            return *grng;
        };

        if (role.kind == RoleKind::selfish) {
            auto actions = selfish_step(ctx, ns.selfish, *ns.view, sc_.mining, sc_.attack, mrng);
            for (const auto& b : actions.abandoned)
                if (block_trace()) record(buf, EventKind::abandon, v, b.id, 0, b.height);
            if (actions.mined) {
                buf.new_blocks.push_back(*actions.mined);
                if (block_trace())
                    record(buf, EventKind::mined, v, actions.mined->id, actions.mined->parent, actions.mined->height);
            }
            for (const auto& b : actions.released) {
                ns.view->insert_block(b, ++ns.receipt_seq);
                if (block_trace()) record(buf, EventKind::release, v, b.id, 0, b.height);
                publish(v, block_message(v, b), gossip_rng(), buf);
            }
        } else if (auto b = honest_step(ctx, *ns.view, sc_.mining, mrng)) {
            buf.new_blocks.push_back(*b);
            ns.view->insert_block(*b, ++ns.receipt_seq);
            if (block_trace()) record(buf, EventKind::mined, v, b->id, b->parent, b->height);
            if (role.is_honest()) buf.honest_receipts.emplace_back(b->id, v);
            publish(v, block_message(v, *b), gossip_rng(), buf);
        }
        buf.pending |= ns.gossip.has_pending();
    }

    void propagate(NodeId v, WorkerBuffers& buf) {
        auto& ns = nodes_[v];
        const auto& inbox = inbox_[v];
        if (inbox.empty() && !ns.gossip.has_pending()) return;
        ns.emit_seq = 0;
        const Role& role = sc_.roles[v];
        auto rng = gossip_stream(v);
        const std::uint64_t now = clock_.now();

        for (const auto& d : inbox) {
            const Message& m = d.msg;
            if (full_trace()) record(buf, EventKind::recv, v, m.id, d.from, static_cast<std::uint64_t>(m.phase));
            if (m.phase == Phase::fluff) ns.gossip.note_fluff(m.id);
            if (ns.gossip.accept(m) == AcceptResult::duplicate) continue;

            if (m.kind == MessageKind::block) {
                if (role.is_honest()) buf.honest_receipts.emplace_back(m.block_ref, v);
                if (ns.view) ns.view->insert_block(lookup(m.block_ref), ++ns.receipt_seq);
            }
            if (sybil_relay_filter(role.kind, m, sc_.victim) == RelayDecision::drop) {
                if (full_trace()) record(buf, EventKind::drop, v, m.id, d.from);
                continue;
            }
            ns.gossip.stem_watch(m, now, sc_.protocol);
            emit(v, m, d.from, rng, buf);
        }

        for (const auto& fired : ns.gossip.failsafe_tick(now)) {
            ++buf.failsafe;
            if (block_trace()) record(buf, EventKind::failsafe, v, fired.id);
            emit(v, fired, kNoNode, rng, buf);
        }
        buf.pending |= ns.gossip.has_pending();
    }

    // Barrier work: fold every worker's output in worker order, which is
    // ascending node order because ranges are contiguous.
    void merge() {
        auto& ledger = result_.ledger;
        timers_pending_ = false;
        std::vector<std::vector<Delivery>> outs;
        outs.reserve(buffers_.size());
        for (auto& buf : buffers_) {
            for (const auto& b : buf.new_blocks) {
                block_index_.emplace(b.id, ledger.blocks.size());
                ledger.blocks.push_back(b);
                ledger.first_honest_receipt.emplace_back();
            }
            for (const auto& [id, node] : buf.honest_receipts) {
                auto& first = ledger.first_honest_receipt[block_index_.at(id)];
                if (!first) first = ReceiptKey{clock_.mining_step, clock_.sub_step, node};
            }
            result_.trace.events.insert(result_.trace.events.end(), buf.events.begin(), buf.events.end());
            result_.failsafe_firings += buf.failsafe;
            result_.messages_sent += buf.sent;
            timers_pending_ |= buf.pending;
            outs.push_back(std::move(buf.out));

            buf.out.clear();
            buf.new_blocks.clear();
            buf.honest_receipts.clear();
            buf.events.clear();
            buf.pending = false;
            buf.failsafe = 0;
            buf.sent = 0;
        }
        merge_inboxes(outs, inbox_);
        in_flight_ = false;
        for (const auto& o : outs) in_flight_ |= !o.empty();
        // Hand the capacity back to the workers.
        for (std::size_t w = 0; w < buffers_.size(); ++w) {
            buffers_[w].out = std::move(outs[w]);
            buffers_[w].out.clear();
        }
    }

    void finish() {
        if (sc_.probe_mode()) {
            result_.probe_received.resize(n_);
            for (std::size_t v = 0; v < n_; ++v) result_.probe_received[v] = nodes_[v].gossip.has_seen(kProbeMsgId);
            result_.metrics.coverage = coverage_metric(result_.probe_received, sc_.victim, sc_.sybil);
            return;
        }
        result_.metrics = attack51_metrics(result_.ledger, sc_.attacker);
        if (sc_.attacker != kNoNode && sc_.roles[sc_.attacker].kind == RoleKind::selfish)
            result_.metrics.selfish_episodes = nodes_[sc_.attacker].selfish.episodes_finalized;
    }

    const Scenario& sc_;
    const Overlay& overlay_;
    std::size_t n_;
    std::vector<AgentRange> ranges_;
    WorkerPool pool_;
    std::vector<NodeState> nodes_;
    std::vector<std::vector<Delivery>> inbox_;
    std::vector<WorkerBuffers> buffers_;
    std::unordered_map<BlockId, std::size_t> block_index_;
    RunResult result_;
    Clock clock_;
    bool in_flight_ = false;
    bool timers_pending_ = false;
};

}  // namespace

RunResult run_simulation(const Scenario& scenario) {
    if (!scenario.overlay) throw std::invalid_argument("scenario has no overlay");
    Simulation sim(scenario);
    return sim.run();
}

RunResult run_simulation(const SimConfig& cfg) {
    cfg.validate();
    return run_simulation(make_scenario(cfg, cfg.run.seed, cfg.attack.victim));
}

}  // namespace chainsim
