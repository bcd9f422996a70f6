#include "chainsim/config.hpp"

#include <array>
#include <cmath>
#include <charconv>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

namespace chainsim {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        parts.push_back(trim(s.substr(start, pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return parts;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
    throw ConfigError("key '" + std::string(key) + "': cannot read '" + std::string(value) + "' as " +
                      std::string(expected));
}

template <typename T>
T read_uint(std::string_view key, std::string_view v) {
    std::uint64_t x = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) bad_value(key, v, "a non-negative integer");
    if (x > std::numeric_limits<T>::max()) bad_value(key, v, "an integer in range");
    return static_cast<T>(x);
}

double read_double(std::string_view key, std::string_view v) {
    double x = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) bad_value(key, v, "a number");
    return x;
}

bool read_bool(std::string_view key, std::string_view v) {
    if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "off" || v == "no" || v == "0") return false;
    bad_value(key, v, "a boolean");
}

std::string fmt_double(double x) {
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    return std::string(buf.data(), ptr);
}

std::string_view to_string(TopologyKind k) { return k == TopologyKind::small_world ? "small_world" : "random"; }

std::string_view to_string(TraceLevel t) {
    switch (t) {
        case TraceLevel::off: return "off";
        case TraceLevel::blocks: return "blocks";
        case TraceLevel::full: return "full";
    }
    return "off";
}

struct KeySpec {
    std::string_view section;
    std::string_view key;
    std::function<void(SimConfig&, std::string_view)> set;
    std::function<std::string(const SimConfig&)> get;
};

#define CS_UINT(SEC, KEY, FIELD, TYPE)                                                         \
    KeySpec {                                                                                  \
        SEC, #KEY, [](SimConfig& c, std::string_view v) { c.FIELD = read_uint<TYPE>(#KEY, v); }, \
            [](const SimConfig& c) { return std::to_string(c.FIELD); }                         \
    }
#define CS_DOUBLE(SEC, KEY, FIELD)                                                          \
    KeySpec {                                                                               \
        SEC, #KEY, [](SimConfig& c, std::string_view v) { c.FIELD = read_double(#KEY, v); }, \
            [](const SimConfig& c) { return fmt_double(c.FIELD); }                          \
    }
#define CS_STRING(SEC, KEY, FIELD)                                                    \
    KeySpec {                                                                         \
        SEC, #KEY, [](SimConfig& c, std::string_view v) { c.FIELD = std::string(v); }, \
            [](const SimConfig& c) { return c.FIELD; }                                \
    }

const std::vector<KeySpec>& key_table() {
    static const std::vector<KeySpec> table = {
        {"topology", "type",
         [](SimConfig& c, std::string_view v) {
             if (v == "random") c.topology.kind = TopologyKind::random;
             else if (v == "small_world") c.topology.kind = TopologyKind::small_world;
             else bad_value("type", v, "random or small_world");
         },
         [](const SimConfig& c) { return std::string(to_string(c.topology.kind)); }},
        CS_UINT("topology", nodes, topology.nodes, std::size_t),
        CS_UINT("topology", edges, topology.edges, std::size_t),
        CS_UINT("topology", k, topology.k, std::size_t),
        CS_DOUBLE("topology", beta, topology.beta),

        {"protocol", "protocol",
         [](SimConfig& c, std::string_view v) {
             auto p = parse_protocol(v);
             if (!p) bad_value("protocol", v, "a protocol name");
             c.protocol.protocol = *p;
         },
         [](const SimConfig& c) { return std::string(to_string(c.protocol.protocol)); }},
        CS_DOUBLE("protocol", p, protocol.p),
        CS_UINT("protocol", stem_hops, protocol.stem_hops, std::uint32_t),
        CS_UINT("protocol", failsafe_timeout, protocol.failsafe_timeout, std::uint32_t),
        CS_UINT("protocol", ttl_init, protocol.ttl_init, std::uint32_t),

        CS_DOUBLE("mining", blocks_per_step, mining.blocks_per_step),
        CS_UINT("mining", total_steps, mining.total_steps, std::uint64_t),
        CS_DOUBLE("mining", miner_fraction, mining.miner_fraction),

        {"attack", "attack",
         [](SimConfig& c, std::string_view v) {
             auto a = parse_attack(v);
             if (!a) bad_value("attack", v, "none, fifty_one, selfish_mining or sybil");
             c.attack.attack = *a;
         },
         [](const SimConfig& c) { return std::string(to_string(c.attack.attack)); }},
        CS_DOUBLE("attack", attacker_hashrate, attack.attacker_hashrate),
        {"attack", "pools", [](SimConfig& c, std::string_view v) { c.attack.pools_enabled = read_bool("pools", v); },
         [](const SimConfig& c) { return std::string(c.attack.pools_enabled ? "on" : "off"); }},
        CS_UINT("attack", pool_count, attack.pool_count, std::uint32_t),
        CS_DOUBLE("attack", pool_aggregate_share, attack.pool_aggregate_share),
        {"attack", "pool_shares",
         [](SimConfig& c, std::string_view v) {
             c.attack.pool_shares.clear();
             if (v.empty()) return;
             for (auto part : split(v, ',')) c.attack.pool_shares.push_back(read_double("pool_shares", part));
         },
         [](const SimConfig& c) {
             std::string out;
             for (std::size_t i = 0; i < c.attack.pool_shares.size(); ++i) {
                 if (i) out += ',';
                 out += fmt_double(c.attack.pool_shares[i]);
             }
             return out;
         }},
        CS_UINT("attack", selfish_lead, attack.selfish_lead, std::uint32_t),
        {"attack", "selfish_tie",
         [](SimConfig& c, std::string_view v) {
             auto t = parse_tie_policy(v);
             if (!t) bad_value("selfish_tie", v, "abandon or persist");
             c.attack.selfish_tie = *t;
         },
         [](const SimConfig& c) { return std::string(to_string(c.attack.selfish_tie)); }},
        CS_DOUBLE("attack", sybil_fraction, attack.sybil_fraction),
        CS_UINT("attack", victim, attack.victim, NodeId),

        CS_UINT("run", seed, run.seed, std::uint64_t),
        CS_UINT("run", workers, run.workers, std::uint32_t),
        CS_UINT("run", jobs, run.jobs, std::uint32_t),
        CS_UINT("run", repetitions, run.repetitions, std::uint32_t),
        CS_UINT("run", substeps_per_step, run.substeps_per_step, std::uint32_t),
        CS_STRING("run", output_dir, run.output_dir),
        {"run", "trace",
         [](SimConfig& c, std::string_view v) {
             if (v == "off") c.run.trace = TraceLevel::off;
             else if (v == "blocks") c.run.trace = TraceLevel::blocks;
             else if (v == "full") c.run.trace = TraceLevel::full;
             else bad_value("trace", v, "off, blocks or full");
         },
         [](const SimConfig& c) { return std::string(to_string(c.run.trace)); }},
        CS_STRING("run", h_grid, run.h_grid),
        CS_STRING("run", sybil_fractions, run.sybil_fractions),
        CS_STRING("run", sybil_protocols, run.sybil_protocols),
    };
    return table;
}

#undef CS_UINT
#undef CS_DOUBLE
#undef CS_STRING

const KeySpec& find_key(std::string_view section, std::string_view key) {
    for (const auto& spec : key_table()) {
        if (spec.key != key) continue;
        if (!section.empty() && spec.section != section)
            throw ConfigError("key '" + std::string(key) + "' belongs to section [" + std::string(spec.section) +
                              "], not [" + std::string(section) + "]");
        return spec;
    }
    throw ConfigError("unknown key '" + std::string(key) + "'");
}

bool known_section(std::string_view s) {
    return s == "topology" || s == "protocol" || s == "mining" || s == "attack" || s == "run";
}

void apply(SimConfig& cfg, std::string_view section, std::string_view key, std::string_view value) {
    find_key(section, key).set(cfg, value);
}

void apply_override(SimConfig& cfg, std::string_view text) {
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ConfigError("override '" + std::string(text) + "' is not key=value");
    auto key = trim(text.substr(0, eq));
    const auto value = trim(text.substr(eq + 1));
    std::string_view section;
    if (const auto dot = key.find('.'); dot != std::string_view::npos) {
        section = key.substr(0, dot);
        key = key.substr(dot + 1);
        if (!known_section(section)) throw ConfigError("unknown section '" + std::string(section) + "'");
    }
    apply(cfg, section, key, value);
}

void check(bool ok, std::string_view key, std::string_view constraint) {
    if (!ok) throw ConfigError("key '" + std::string(key) + "': " + std::string(constraint));
}

template <typename F>
void rewrap(std::string_view section, F&& f) {
    try {
        f();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("[" + std::string(section) + "] " + e.what());
    }
}

}  // namespace

void SimConfig::validate() const {
    const auto n = topology.nodes;
    check(n >= 2, "nodes", "must be >= 2");
    check(n <= std::numeric_limits<NodeId>::max() / 2, "nodes", "too large");
    if (topology.kind == TopologyKind::random) {
        check(topology.edges >= n - 1, "edges", "must be >= nodes-1 for a connected graph");
        check(topology.edges <= n * (n - 1) / 2, "edges", "must be <= nodes*(nodes-1)/2");
    } else {
        check(topology.k % 2 == 0, "k", "must be even");
        check(topology.k >= 2 && topology.k < n, "k", "must satisfy 2 <= k < nodes");
        check(topology.beta >= 0.0 && topology.beta <= 1.0, "beta", "must lie in [0,1]");
    }
    rewrap("protocol", [&] { protocol.validate(); });
    rewrap("mining", [&] { mining.validate(); });
    rewrap("attack", [&] { attack.validate(); });
    check(attack.victim < n, "victim", "must be a node id below nodes");
    if (attack.attack == AttackKind::sybil) {
        const auto sybils = static_cast<std::size_t>(std::llround(attack.sybil_fraction * static_cast<double>(n)));
        check(sybils + 1 < n, "sybil_fraction", "leaves no honest receiver besides the victim");
    }
    if (attack.has_miner_attacker()) {
        const auto miners = static_cast<std::size_t>(std::llround(mining.miner_fraction * static_cast<double>(n)));
        const std::size_t pools = attack.pools_enabled ? attack.pool_count : 0;
        check(miners >= pools + 2, "miner_fraction", "leaves no regular miner next to the attacker and pools");
    } else if (attack.attack == AttackKind::none) {
        check(std::llround(mining.miner_fraction * static_cast<double>(n)) >= 1, "miner_fraction",
              "yields zero miners");
    }
    check(run.workers >= 1, "workers", "must be >= 1");
    check(run.jobs >= 1, "jobs", "must be >= 1");
    check(run.repetitions >= 1, "repetitions", "must be >= 1");
    check(run.substeps_per_step >= 2, "substeps_per_step", "must be >= 2");
    check(!run.output_dir.empty(), "output_dir", "must not be empty");
    try {
        for (double h : parse_grid(run.h_grid)) check(h >= 1.0 && h <= 99.0, "h_grid", "values must lie in [1,99]");
        for (double f : parse_grid(run.sybil_fractions))
            check(f >= 0.0 && f < 1.0, "sybil_fractions", "values must lie in [0,1)");
        parse_protocol_list(run.sybil_protocols, protocol);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

std::string SimConfig::to_text() const {
    std::ostringstream out;
    std::string_view section;
    for (const auto& spec : key_table()) {
        if (spec.section != section) {
            if (!section.empty()) out << '\n';
            section = spec.section;
            out << '[' << section << "]\n";
        }
        out << spec.key << " = " << spec.get(*this) << '\n';
    }
    return out.str();
}

SimConfig parse_config_text(std::string_view text, const std::vector<std::string>& overrides) {
    SimConfig cfg;
    std::string_view section;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        try {
            if (line.front() == '[') {
                if (line.back() != ']') throw ConfigError("malformed section header");
                section = trim(line.substr(1, line.size() - 2));
                if (!known_section(section)) throw ConfigError("unknown section '" + std::string(section) + "'");
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string_view::npos) throw ConfigError("expected key = value");
            apply(cfg, section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    for (const auto& o : overrides) apply_override(cfg, o);
    cfg.validate();
    return cfg;
}

SimConfig parse_config_file(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_config_text(buf.str(), overrides);
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::vector<double> parse_grid(std::string_view text) {
    text = trim(text);
    if (text.empty()) throw std::invalid_argument("empty grid");
    std::vector<double> values;
    if (const auto dots = text.find(".."); dots != std::string_view::npos) {
        const auto lo = read_uint<std::int64_t>("grid", trim(text.substr(0, dots)));
        const auto hi = read_uint<std::int64_t>("grid", trim(text.substr(dots + 2)));
        if (lo > hi) throw std::invalid_argument("grid range '" + std::string(text) + "' is empty");
        for (auto v = lo; v <= hi; ++v) values.push_back(static_cast<double>(v));
        return values;
    }
    for (auto part : split(text, ',')) {
        double x = 0;
        const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), x);
        if (part.empty() || ec != std::errc() || ptr != part.data() + part.size())
            throw std::invalid_argument("bad grid value '" + std::string(part) + "'");
        values.push_back(x);
    }
    return values;
}

std::vector<ProtocolVariant> parse_protocol_list(std::string_view text, const ProtocolParams& base) {
    std::vector<ProtocolVariant> variants;
    for (auto entry : split(text, ',')) {
        if (entry.empty()) throw std::invalid_argument("empty protocol entry");
        const auto slash = entry.find('/');
        const auto name = trim(entry.substr(0, slash));
        auto proto = parse_protocol(name);
        if (!proto) throw std::invalid_argument("unknown protocol '" + std::string(name) + "'");
        ProtocolVariant v{base, {}};
        v.params.protocol = *proto;
        if (slash != std::string_view::npos) {
            const auto arg = trim(entry.substr(slash + 1));
            if (*proto == Protocol::fixed_probability || *proto == Protocol::probabilistic_broadcast) {
                double p = 0;
                const auto [ptr, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), p);
                if (arg.empty() || ec != std::errc() || ptr != arg.data() + arg.size())
                    throw std::invalid_argument("bad forward probability in '" + std::string(entry) + "'");
                v.params.p = p;
            } else if (is_dandelion(*proto)) {
                std::uint32_t hops = 0;
                const auto [ptr, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), hops);
                if (arg.empty() || ec != std::errc() || ptr != arg.data() + arg.size())
                    throw std::invalid_argument("bad stem length in '" + std::string(entry) + "'");
                v.params.stem_hops = hops;
            } else {
                throw std::invalid_argument("protocol '" + std::string(name) + "' takes no parameter");
            }
        }
        v.params.validate();
        v.label = describe(v.params);
        variants.push_back(std::move(v));
    }
    return variants;
}

std::string describe(const ProtocolParams& p) {
    std::string out = "protocol=" + std::string(to_string(p.protocol));
    if (p.protocol == Protocol::fixed_probability || p.protocol == Protocol::probabilistic_broadcast)
        out += ";p=" + fmt_double(p.p);
    else if (is_dandelion(p.protocol))
        out += ";stem_hops=" + std::to_string(p.stem_hops);
    return out;
}

std::string config_hash(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = digits[h & 0xf];
    return out;
}

}  // namespace chainsim
