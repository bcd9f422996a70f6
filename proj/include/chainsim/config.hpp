#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "chainsim/agents.hpp"
#include "chainsim/chain.hpp"
#include "chainsim/gossip.hpp"

namespace chainsim {

enum class TopologyKind : std::uint8_t { random, small_world };
enum class TraceLevel : std::uint8_t { off, blocks, full };

struct TopologyConfig {
    TopologyKind kind = TopologyKind::random;
    std::size_t nodes = 500;
    std::size_t edges = 2000;  // random graphs
    std::size_t k = 8;         // small world
    double beta = 0.1;         // small world
};

struct RunConfig {
    std::uint64_t seed = 1;
    std::uint32_t workers = 1;
    std::uint32_t jobs = 1;  // repetitions simulated concurrently by sweeps
    std::uint32_t repetitions = 20;
    std::uint32_t substeps_per_step = 32;
    std::string output_dir = "results";
    TraceLevel trace = TraceLevel::off;
    std::string h_grid = "1..99";
    std::string sybil_fractions = "0.05,0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.45,0.5";
    std::string sybil_protocols = "broadcast,fixed_probability,probabilistic_broadcast,dandelion,dandelion_pm";
};

struct SimConfig {
    TopologyConfig topology;
    ProtocolParams protocol;
    MiningParams mining;
    AttackConfig attack;
    RunConfig run;

    /// Cross-module checks; throws ConfigError naming the offending key.
    void validate() const;

    /// Sectioned key=value text that parse_config_text() reads back to an
    /// identical configuration.
    std::string to_text() const;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parses sectioned key=value text ([topology] [protocol] [mining] [attack]
/// [run]), then applies `overrides` (`key=value` or `section.key=value`).
/// Unknown keys, bad values and violated invariants raise ConfigError.
SimConfig parse_config_text(std::string_view text, const std::vector<std::string>& overrides = {});

SimConfig parse_config_file(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// `a..b` (inclusive integer range) or a comma list of numbers.
std::vector<double> parse_grid(std::string_view text);

/// One entry of a Sybil sweep: a protocol plus its tunable parameter.
struct ProtocolVariant {
    ProtocolParams params;
    std::string label;
};

/// Comma list of `name` or `name/x`, where x is the forward probability for
/// the probabilistic protocols and the stem length for the Dandelion family.
std::vector<ProtocolVariant> parse_protocol_list(std::string_view text, const ProtocolParams& base);

std::string describe(const ProtocolParams& p);

/// FNV-1a over the text, as 16 hex digits.
std::string config_hash(std::string_view text);

}  // namespace chainsim
