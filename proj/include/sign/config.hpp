#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace sign {

enum class Condition { NL, NL_SW, SCHEMA };
enum class PairingMode { single_pair, full_matching };
enum class AdoptionMode { bilateral_independent, speaker_hearer };
enum class FallbackMode { random_name, none };
enum class AgreementMetric { pairwise, modal };
enum class TokenAccounting { output_only, output_plus_prompt };

std::string to_string(Condition c);
std::string to_string(PairingMode m);
std::string to_string(AdoptionMode m);
std::string to_string(FallbackMode m);
std::string to_string(AgreementMetric m);
std::string to_string(TokenAccounting a);

// Stochastic stand-in for an LLM agent: how often it produces a decodable
// message, how long its noise is, and how its retry behaves.
struct MockPolicyParams {
    double compliance_prob = 1.0;
    int verbosity_tokens = 8;
    double noise_mentions_name_prob = 0.0;
    // Added to compliance_prob on the reminder retry. Default: no boost.
    double retry_compliance_boost = 0.0;

    bool operator==(const MockPolicyParams&) const = default;
};

// One OpenAI-compatible chat-completion endpoint.
struct EndpointProfile {
    std::string base_url;
    std::string model_name;
    // Name of the environment variable holding the API key ("" = no auth).
    std::string api_key_env;
    double timeout_s = 60.0;
    int max_transport_retries = 3;
    // Servers disagree on the repetition-penalty field name; "repeat_penalty"
    // is the default, "frequency_penalty" the usual alternative.
    std::string repeat_penalty_field = "repeat_penalty";
    int backoff_initial_ms = 250;

    bool operator==(const EndpointProfile&) const = default;
};

struct DecodingParams {
    int max_new_tokens = 32;
    double temperature = 0.7;
    double top_p = 0.9;
    double repeat_penalty = 1.1;

    bool operator==(const DecodingParams&) const = default;
};

// One agent's policy assignment.
struct RosterEntry {
    enum class Kind { mock, scripted, llm };

    Kind kind = Kind::mock;
    MockPolicyParams mock;
    std::vector<int> script;      // 1-based name indices, kind == scripted
    EndpointProfile endpoint;     // kind == llm
    DecodingParams decoding;      // kind == llm
    std::string templates_dir = "templates"; // kind == llm

    // Only the fields the kind actually uses take part in equality.
    bool operator==(const RosterEntry& other) const {
        if (kind != other.kind) return false;
        switch (kind) {
        case Kind::mock: return mock == other.mock;
        case Kind::scripted: return script == other.script;
        case Kind::llm:
            return endpoint == other.endpoint && decoding == other.decoding &&
                   templates_dir == other.templates_dir;
        }
        return false;
    }
};

// All experiment knobs for one run.
struct GameConfig {
    int n_agents = 12;
    int lexicon_size = 12;
    int rounds = 300;
    int memory_window = 5;
    double lose_shift_alpha = 0.75;
    Condition condition = Condition::SCHEMA;
    PairingMode pairing_mode = PairingMode::single_pair;
    AdoptionMode adoption_mode = AdoptionMode::bilateral_independent;
    FallbackMode fallback_mode = FallbackMode::random_name;
    AgreementMetric agreement_metric = AgreementMetric::pairwise;
    TokenAccounting token_accounting = TokenAccounting::output_only;
    std::uint64_t seed = 0;
    std::vector<RosterEntry> roster; // exactly n_agents entries

    bool operator==(const GameConfig&) const = default;
};

// Returns cfg unchanged if every invariant holds; otherwise throws
// ConfigError with a named code (e.g. "nl-requires-k0").
GameConfig validate_config(const GameConfig& cfg);

// JSON (de)serialization. from_json expands roster entries carrying a
// "count" field (an integer, or "all" for the remaining agents) into
// per-agent entries, so a parsed config always has exactly n_agents
// roster entries. Round-trips exactly: config_from_json(config_to_json(c)) == c.
nlohmann::json config_to_json(const GameConfig& cfg);
GameConfig config_from_json(const nlohmann::json& j);
GameConfig load_config_file(const std::string& path);

} // namespace sign
