#include "sign/config.hpp"

#include <fstream>
#include <set>

#include "sign/errors.hpp"

namespace sign {

namespace {

using nlohmann::json;

template <typename T>
struct EnumEntry {
    T value;
    const char* name;
};

constexpr EnumEntry<Condition> kConditions[] = {
    {Condition::NL, "NL"}, {Condition::NL_SW, "NL_SW"}, {Condition::SCHEMA, "SCHEMA"}};
constexpr EnumEntry<PairingMode> kPairingModes[] = {
    {PairingMode::single_pair, "single_pair"}, {PairingMode::full_matching, "full_matching"}};
constexpr EnumEntry<AdoptionMode> kAdoptionModes[] = {
    {AdoptionMode::bilateral_independent, "bilateral_independent"},
    {AdoptionMode::speaker_hearer, "speaker_hearer"}};
constexpr EnumEntry<FallbackMode> kFallbackModes[] = {
    {FallbackMode::random_name, "random_name"}, {FallbackMode::none, "none"}};
constexpr EnumEntry<AgreementMetric> kMetrics[] = {
    {AgreementMetric::pairwise, "pairwise"}, {AgreementMetric::modal, "modal"}};
constexpr EnumEntry<TokenAccounting> kAccounting[] = {
    {TokenAccounting::output_only, "output_only"},
    {TokenAccounting::output_plus_prompt, "output_plus_prompt"}};

template <typename T, std::size_t N>
std::string enum_name(const EnumEntry<T> (&table)[N], T v) {
    for (const auto& e : table) {
        if (e.value == v) return e.name;
    }
    return "?";
}

template <typename T, std::size_t N>
T enum_value(const EnumEntry<T> (&table)[N], const std::string& s, const char* field) {
    for (const auto& e : table) {
        if (s == e.name) return e.value;
    }
    std::string allowed;
    for (const auto& e : table) {
        if (!allowed.empty()) allowed += "|";
        allowed += e.name;
    }
    throw ConfigError("config-parse",
                      std::string(field) + " must be one of " + allowed + ", got \"" + s + "\"");
}

void require_keys(const json& j, const std::set<std::string>& allowed, const char* where) {
    if (!j.is_object()) {
        throw ConfigError("config-parse", std::string(where) + " must be a JSON object");
    }
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!allowed.count(key)) {
            throw ConfigError("config-parse",
                              std::string("unknown key \"") + key + "\" in " + where);
        }
    }
}

template <typename T>
T get_field(const json& j, const char* key, const char* where) {
    auto it = j.find(key);
    if (it == j.end()) {
        throw ConfigError("config-parse",
                          std::string("missing required key \"") + key + "\" in " + where);
    }
    try {
        return it->get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config-parse",
                          std::string("bad value for \"") + key + "\" in " + where + ": " + e.what());
    }
}

template <typename T>
T get_field_or(const json& j, const char* key, const char* where, T fallback) {
    if (j.find(key) == j.end()) return fallback;
    return get_field<T>(j, key, where);
}

json endpoint_to_json(const EndpointProfile& ep) {
    return json{{"base_url", ep.base_url},
                {"model_name", ep.model_name},
                {"api_key_env", ep.api_key_env},
                {"timeout_s", ep.timeout_s},
                {"max_transport_retries", ep.max_transport_retries},
                {"repeat_penalty_field", ep.repeat_penalty_field},
                {"backoff_initial_ms", ep.backoff_initial_ms}};
}

EndpointProfile endpoint_from_json(const json& j) {
    require_keys(j, {"base_url", "model_name", "api_key_env", "timeout_s",
                     "max_transport_retries", "repeat_penalty_field", "backoff_initial_ms"},
                 "endpoint");
    EndpointProfile ep;
    ep.base_url = get_field<std::string>(j, "base_url", "endpoint");
    ep.model_name = get_field_or<std::string>(j, "model_name", "endpoint", "");
    ep.api_key_env = get_field_or<std::string>(j, "api_key_env", "endpoint", "");
    ep.timeout_s = get_field_or<double>(j, "timeout_s", "endpoint", ep.timeout_s);
    ep.max_transport_retries =
        get_field_or<int>(j, "max_transport_retries", "endpoint", ep.max_transport_retries);
    ep.repeat_penalty_field =
        get_field_or<std::string>(j, "repeat_penalty_field", "endpoint", ep.repeat_penalty_field);
    ep.backoff_initial_ms =
        get_field_or<int>(j, "backoff_initial_ms", "endpoint", ep.backoff_initial_ms);
    return ep;
}

json decoding_to_json(const DecodingParams& dp) {
    return json{{"max_new_tokens", dp.max_new_tokens},
                {"temperature", dp.temperature},
                {"top_p", dp.top_p},
                {"repeat_penalty", dp.repeat_penalty}};
}

DecodingParams decoding_from_json(const json& j) {
    require_keys(j, {"max_new_tokens", "temperature", "top_p", "repeat_penalty"}, "decoding");
    DecodingParams dp;
    dp.max_new_tokens = get_field_or<int>(j, "max_new_tokens", "decoding", dp.max_new_tokens);
    dp.temperature = get_field_or<double>(j, "temperature", "decoding", dp.temperature);
    dp.top_p = get_field_or<double>(j, "top_p", "decoding", dp.top_p);
    dp.repeat_penalty = get_field_or<double>(j, "repeat_penalty", "decoding", dp.repeat_penalty);
    return dp;
}

json roster_entry_to_json(const RosterEntry& e) {
    switch (e.kind) {
    case RosterEntry::Kind::mock:
        return json{{"kind", "mock"},
                    {"compliance_prob", e.mock.compliance_prob},
                    {"verbosity_tokens", e.mock.verbosity_tokens},
                    {"noise_mentions_name_prob", e.mock.noise_mentions_name_prob},
                    {"retry_compliance_boost", e.mock.retry_compliance_boost}};
    case RosterEntry::Kind::scripted:
        return json{{"kind", "scripted"}, {"script", e.script}};
    case RosterEntry::Kind::llm:
        return json{{"kind", "llm"},
                    {"endpoint", endpoint_to_json(e.endpoint)},
                    {"decoding", decoding_to_json(e.decoding)},
                    {"templates_dir", e.templates_dir}};
    }
    throw std::logic_error("unhandled roster kind");
}

// Returns the entry plus how many agents it covers (0 = all remaining).
std::pair<RosterEntry, int> roster_entry_from_json(const json& j) {
    std::string kind = get_field<std::string>(j, "kind", "roster entry");
    int count = 1;
    if (auto it = j.find("count"); it != j.end()) {
        if (it->is_string() && it->get<std::string>() == "all") {
            count = 0;
        } else if (it->is_number_integer()) {
            count = it->get<int>();
            if (count < 1) {
                throw ConfigError("config-parse", "roster entry count must be >= 1 or \"all\"");
            }
        } else {
            throw ConfigError("config-parse", "roster entry count must be an integer or \"all\"");
        }
    }

    RosterEntry e;
    if (kind == "mock") {
        require_keys(j, {"kind", "count", "compliance_prob", "verbosity_tokens",
                         "noise_mentions_name_prob", "retry_compliance_boost"},
                     "mock roster entry");
        e.kind = RosterEntry::Kind::mock;
        e.mock.compliance_prob =
            get_field_or<double>(j, "compliance_prob", "mock roster entry", 1.0);
        e.mock.verbosity_tokens =
            get_field_or<int>(j, "verbosity_tokens", "mock roster entry", 8);
        e.mock.noise_mentions_name_prob =
            get_field_or<double>(j, "noise_mentions_name_prob", "mock roster entry", 0.0);
        e.mock.retry_compliance_boost =
            get_field_or<double>(j, "retry_compliance_boost", "mock roster entry", 0.0);
    } else if (kind == "scripted") {
        require_keys(j, {"kind", "count", "script"}, "scripted roster entry");
        e.kind = RosterEntry::Kind::scripted;
        e.script = get_field<std::vector<int>>(j, "script", "scripted roster entry");
    } else if (kind == "llm") {
        require_keys(j, {"kind", "count", "endpoint", "decoding", "templates_dir"},
                     "llm roster entry");
        e.kind = RosterEntry::Kind::llm;
        e.endpoint = endpoint_from_json(get_field<json>(j, "endpoint", "llm roster entry"));
        if (j.find("decoding") != j.end()) {
            e.decoding = decoding_from_json(j.at("decoding"));
        }
        e.templates_dir =
            get_field_or<std::string>(j, "templates_dir", "llm roster entry", e.templates_dir);
    } else {
        throw ConfigError("config-parse",
                          "roster entry kind must be mock|scripted|llm, got \"" + kind + "\"");
    }
    return {e, count};
}

void validate_roster_entry(const RosterEntry& e, const GameConfig& cfg, int agent_index) {
    const std::string where = "roster entry for agent " + std::to_string(agent_index);
    switch (e.kind) {
    case RosterEntry::Kind::mock: {
        const auto& m = e.mock;
        if (m.compliance_prob < 0.0 || m.compliance_prob > 1.0 ||
            m.noise_mentions_name_prob < 0.0 || m.noise_mentions_name_prob > 1.0 ||
            m.retry_compliance_boost < 0.0 || m.retry_compliance_boost > 1.0) {
            throw ConfigError("mock-prob-out-of-range", where + ": probabilities must lie in [0,1]");
        }
        if (m.verbosity_tokens < 1) {
            throw ConfigError("verbosity-too-small", where + ": verbosity_tokens must be >= 1");
        }
        break;
    }
    case RosterEntry::Kind::scripted: {
        if (e.script.empty()) {
            throw ConfigError("script-empty", where + ": script must list at least one name");
        }
        for (int k : e.script) {
            if (k < 1 || k > cfg.lexicon_size) {
                throw ConfigError("script-name-out-of-range",
                                  where + ": script name " + std::to_string(k) +
                                      " outside lexicon 1.." + std::to_string(cfg.lexicon_size));
            }
        }
        break;
    }
    case RosterEntry::Kind::llm: {
        if (e.endpoint.base_url.empty()) {
            throw ConfigError("endpoint-base-url-empty", where + ": endpoint base_url is empty");
        }
        if (e.endpoint.timeout_s <= 0.0) {
            throw ConfigError("endpoint-timeout-invalid", where + ": endpoint timeout must be > 0");
        }
        if (e.endpoint.max_transport_retries < 0) {
            throw ConfigError("endpoint-retries-negative",
                              where + ": max_transport_retries must be >= 0");
        }
        break;
    }
    }
}

} // namespace

std::string to_string(Condition c) { return enum_name(kConditions, c); }
std::string to_string(PairingMode m) { return enum_name(kPairingModes, m); }
std::string to_string(AdoptionMode m) { return enum_name(kAdoptionModes, m); }
std::string to_string(FallbackMode m) { return enum_name(kFallbackModes, m); }
std::string to_string(AgreementMetric m) { return enum_name(kMetrics, m); }
std::string to_string(TokenAccounting a) { return enum_name(kAccounting, a); }

GameConfig validate_config(const GameConfig& cfg) {
    if (cfg.lexicon_size < 2) {
        throw ConfigError("lexicon-too-small", "lexicon_size must be >= 2");
    }
    if (cfg.n_agents < 2) {
        throw ConfigError("n-too-small", "n_agents must be >= 2");
    }
    if (cfg.pairing_mode == PairingMode::full_matching && cfg.n_agents % 2 != 0) {
        throw ConfigError("odd-n-full-matching", "full_matching pairing requires an even n_agents");
    }
    if (cfg.rounds < 1) {
        throw ConfigError("rounds-too-small", "rounds must be >= 1");
    }
    if (cfg.memory_window < 0) {
        throw ConfigError("memory-window-negative", "memory_window must be >= 0");
    }
    if (cfg.condition == Condition::NL && cfg.memory_window != 0) {
        throw ConfigError("nl-requires-k0", "condition NL forces memory_window = 0");
    }
    if (cfg.condition != Condition::NL && cfg.memory_window < 1) {
        throw ConfigError("memory-window-required",
                          to_string(cfg.condition) + " requires memory_window >= 1");
    }
    if (!(cfg.lose_shift_alpha >= 0.0 && cfg.lose_shift_alpha <= 1.0)) {
        throw ConfigError("alpha-out-of-range", "lose_shift_alpha must lie in [0,1]");
    }
    if (static_cast<int>(cfg.roster.size()) != cfg.n_agents) {
        throw ConfigError("roster-size-mismatch",
                          "roster has " + std::to_string(cfg.roster.size()) + " entries for " +
                              std::to_string(cfg.n_agents) + " agents");
    }
    for (int i = 0; i < cfg.n_agents; ++i) {
        validate_roster_entry(cfg.roster[static_cast<std::size_t>(i)], cfg, i);
    }
    return cfg;
}

nlohmann::json config_to_json(const GameConfig& cfg) {
    json roster = json::array();
    for (const auto& e : cfg.roster) {
        roster.push_back(roster_entry_to_json(e));
    }
    return json{{"n_agents", cfg.n_agents},
                {"lexicon_size", cfg.lexicon_size},
                {"rounds", cfg.rounds},
                {"memory_window", cfg.memory_window},
                {"lose_shift_alpha", cfg.lose_shift_alpha},
                {"condition", to_string(cfg.condition)},
                {"pairing_mode", to_string(cfg.pairing_mode)},
                {"adoption_mode", to_string(cfg.adoption_mode)},
                {"fallback_mode", to_string(cfg.fallback_mode)},
                {"agreement_metric", to_string(cfg.agreement_metric)},
                {"token_accounting", to_string(cfg.token_accounting)},
                {"seed", cfg.seed},
                {"roster", roster}};
}

GameConfig config_from_json(const nlohmann::json& j) {
    require_keys(j, {"n_agents", "lexicon_size", "rounds", "memory_window", "lose_shift_alpha",
                     "condition", "pairing_mode", "adoption_mode", "fallback_mode",
                     "agreement_metric", "token_accounting", "seed", "roster"},
                 "config");
    GameConfig cfg;
    cfg.n_agents = get_field<int>(j, "n_agents", "config");
    cfg.lexicon_size = get_field<int>(j, "lexicon_size", "config");
    cfg.rounds = get_field<int>(j, "rounds", "config");
    cfg.memory_window = get_field<int>(j, "memory_window", "config");
    cfg.lose_shift_alpha = get_field<double>(j, "lose_shift_alpha", "config");
    cfg.condition = enum_value(kConditions, get_field<std::string>(j, "condition", "config"),
                               "condition");
    cfg.pairing_mode =
        enum_value(kPairingModes,
                   get_field_or<std::string>(j, "pairing_mode", "config", "single_pair"),
                   "pairing_mode");
    cfg.adoption_mode =
        enum_value(kAdoptionModes,
                   get_field_or<std::string>(j, "adoption_mode", "config", "bilateral_independent"),
                   "adoption_mode");
    cfg.fallback_mode =
        enum_value(kFallbackModes,
                   get_field_or<std::string>(j, "fallback_mode", "config", "random_name"),
                   "fallback_mode");
    cfg.agreement_metric =
        enum_value(kMetrics, get_field_or<std::string>(j, "agreement_metric", "config", "pairwise"),
                   "agreement_metric");
    cfg.token_accounting =
        enum_value(kAccounting,
                   get_field_or<std::string>(j, "token_accounting", "config", "output_only"),
                   "token_accounting");
    cfg.seed = get_field<std::uint64_t>(j, "seed", "config");

    const json& roster = get_field<json>(j, "roster", "config");
    if (!roster.is_array() || roster.empty()) {
        throw ConfigError("config-parse", "roster must be a nonempty array");
    }
    for (const auto& entry : roster) {
        auto [e, count] = roster_entry_from_json(entry);
        int n = count == 0
                    ? std::max(0, cfg.n_agents - static_cast<int>(cfg.roster.size()))
                    : count;
        for (int i = 0; i < n; ++i) {
            cfg.roster.push_back(e);
        }
    }
    return cfg;
}

GameConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("config-unreadable", "cannot open config file " + path);
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config-parse", std::string("invalid JSON in ") + path + ": " + e.what());
    }
    return config_from_json(j);
}

} // namespace sign
