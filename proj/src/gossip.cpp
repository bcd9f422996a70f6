#include "chainsim/gossip.hpp"

#include <stdexcept>

namespace chainsim {

std::string_view to_string(Protocol p) {
    switch (p) {
        case Protocol::broadcast: return "broadcast";
        case Protocol::fixed_probability: return "fixed_probability";
        case Protocol::probabilistic_broadcast: return "probabilistic_broadcast";
        case Protocol::dandelion: return "dandelion";
        case Protocol::dandelion_pm: return "dandelion_pm";
    }
    return "?";
}

std::string_view to_string(Phase p) {
    switch (p) {
        case Phase::none: return "none";
        case Phase::stem: return "stem";
        case Phase::fluff: return "fluff";
    }
    return "?";
}

std::optional<Protocol> parse_protocol(std::string_view name) {
    for (auto p : {Protocol::broadcast, Protocol::fixed_probability, Protocol::probabilistic_broadcast,
                   Protocol::dandelion, Protocol::dandelion_pm})
        if (to_string(p) == name) return p;
    return std::nullopt;
}

void ProtocolParams::validate() const {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p must lie in [0,1]");
    if (stem_hops < 1) throw std::invalid_argument("stem_hops must be >= 1");
    if (failsafe_timeout < 1) throw std::invalid_argument("failsafe_timeout must be >= 1");
    if (ttl_init < 1) throw std::invalid_argument("ttl must be >= 1");
}

Message make_origin_message(const ProtocolParams& params, MsgId id, MessageKind kind, NodeId origin,
                            BlockId block_ref) {
    Message m;
    m.id = id;
    m.kind = kind;
    m.origin = origin;
    m.block_ref = block_ref;
    m.ttl = params.ttl_init;
    m.hops = 0;
    m.phase = is_dandelion(params.protocol) ? Phase::stem : Phase::none;
    return m;
}

void decide_forwards(const ProtocolParams& params, NodeId self, const Message& m, NodeId from,
                     std::span<const NodeId> nbrs, RandomStream& rng, std::vector<Forward>& out) {
    (void)self;
    if (m.ttl == 0) return;

    Message copy = m;
    copy.ttl = m.ttl - 1;
    copy.hops = m.hops + 1;

    auto flood = [&](Message msg) {
        for (NodeId n : nbrs)
            if (n != from) out.push_back({n, msg});
    };

    switch (params.protocol) {
        case Protocol::broadcast:
            flood(copy);
            break;
        case Protocol::fixed_probability:
            for (NodeId n : nbrs)
                if (n != from && rng.bernoulli(params.p)) out.push_back({n, copy});
            break;
        case Protocol::probabilistic_broadcast:
            if (rng.bernoulli(params.p)) flood(copy);
            break;
        case Protocol::dandelion:
        case Protocol::dandelion_pm:
            if (m.phase == Phase::stem && m.hops < params.stem_hops) {
                if (nbrs.empty()) return;
                std::size_t eligible = 0;
                for (NodeId n : nbrs)
                    if (n != from) ++eligible;
                if (eligible == 0) {
                    out.push_back({from, copy});  // dead end: bounce back
                    return;
                }
                auto pick = rng.below(eligible);
                for (NodeId n : nbrs) {
                    if (n == from) continue;
                    if (pick-- == 0) {
                        out.push_back({n, copy});
                        break;
                    }
                }
            } else {
                copy.phase = Phase::fluff;
                flood(copy);
            }
            break;
    }
}

std::vector<Forward> decide_forwards(const ProtocolParams& params, NodeId self, const Message& m, NodeId from,
                                     std::span<const NodeId> nbrs, RandomStream& rng) {
    std::vector<Forward> out;
    decide_forwards(params, self, m, from, nbrs, rng, out);
    return out;
}

AcceptResult GossipState::accept(const Message& m) {
    return seen_.insert(m.id).second ? AcceptResult::fresh : AcceptResult::duplicate;
}

void GossipState::stem_watch(const Message& m, std::uint64_t now, const ProtocolParams& params) {
    if (params.protocol != Protocol::dandelion_pm || m.phase != Phase::stem) return;
    stem_pending_.try_emplace(m.id, Pending{now + params.failsafe_timeout, m});
}

std::vector<Message> GossipState::failsafe_tick(std::uint64_t now) {
    std::vector<Message> fired;
    for (auto it = stem_pending_.begin(); it != stem_pending_.end();) {
        if (it->second.deadline <= now) {
            Message m = it->second.copy;
            m.phase = Phase::fluff;
            fired.push_back(m);
            it = stem_pending_.erase(it);
        } else {
            ++it;
        }
    }
    return fired;
}

std::optional<std::uint64_t> GossipState::deadline(MsgId id) const {
    auto it = stem_pending_.find(id);
    if (it == stem_pending_.end()) return std::nullopt;
    return it->second.deadline;
}

}  // namespace chainsim
