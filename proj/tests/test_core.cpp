#include <doctest.h>

#include "sign/codec.hpp"
#include "sign/config.hpp"
#include "sign/errors.hpp"
#include "sign/lexicon.hpp"

using namespace sign;

namespace {

GameConfig valid_mock_config() {
    GameConfig cfg;
    cfg.n_agents = 12;
    cfg.lexicon_size = 12;
    cfg.rounds = 300;
    cfg.memory_window = 5;
    cfg.lose_shift_alpha = 0.75;
    cfg.condition = Condition::SCHEMA;
    cfg.seed = 42;
    RosterEntry mock;
    mock.kind = RosterEntry::Kind::mock;
    mock.mock = {0.95, 8, 0.5, 0.0};
    cfg.roster.assign(12, mock);
    return cfg;
}

std::string error_code(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const ConfigError& e) {
        return e.code();
    }
    return "";
}

} // namespace

TEST_SUITE("core") {

TEST_CASE("make_lexicon renders C1..Cm in order") {
    Lexicon lex = make_lexicon(12);
    REQUIRE(lex.size() == 12);
    CHECK(lex.labels().front() == "C1");
    CHECK(lex.label(NameId{2}) == "C2");
    CHECK(lex.labels().back() == "C12");

    Lexicon minimal = make_lexicon(2);
    CHECK(minimal.labels() == std::vector<std::string>{"C1", "C2"});

    for (const auto& label : lex.labels()) {
        CHECK(label.find(' ') == std::string::npos);
    }
}

TEST_CASE("make_lexicon rejects m < 2") {
    CHECK(error_code([] { make_lexicon(1); }) == "lexicon-too-small");
    CHECK(error_code([] { make_lexicon(0); }) == "lexicon-too-small");
}

TEST_CASE("label round-trip through the schema codec for all k <= m <= 64") {
    for (int m = 2; m <= 64; ++m) {
        Lexicon lex = make_lexicon(m);
        for (int k = 1; k <= m; ++k) {
            SchemaParse p = parse_schema(format_schema(NameId{k}), lex);
            REQUIRE(p.ok());
            REQUIRE(p.name->index == k);
        }
    }
}

TEST_CASE("validate_config accepts the paper grid cell") {
    CHECK_NOTHROW(validate_config(valid_mock_config()));
}

TEST_CASE("validate_config rejects each violated invariant with its code") {
    auto check_code = [](auto mutate, const std::string& code) {
        GameConfig cfg = valid_mock_config();
        mutate(cfg);
        CHECK(error_code([&] { validate_config(cfg); }) == code);
    };

    check_code([](GameConfig& c) { c.condition = Condition::NL; }, "nl-requires-k0");
    check_code([](GameConfig& c) { c.lose_shift_alpha = 1.2; }, "alpha-out-of-range");
    check_code([](GameConfig& c) { c.lose_shift_alpha = -0.1; }, "alpha-out-of-range");
    check_code(
        [](GameConfig& c) {
            c.n_agents = 11;
            c.roster.resize(11);
            c.pairing_mode = PairingMode::full_matching;
        },
        "odd-n-full-matching");
    check_code(
        [](GameConfig& c) {
            c.n_agents = 1;
            c.roster.resize(1);
        },
        "n-too-small");
    check_code([](GameConfig& c) { c.rounds = 0; }, "rounds-too-small");
    check_code([](GameConfig& c) { c.memory_window = 0; }, "memory-window-required");
    check_code([](GameConfig& c) { c.memory_window = -1; }, "memory-window-negative");
    check_code([](GameConfig& c) { c.roster.pop_back(); }, "roster-size-mismatch");
    check_code([](GameConfig& c) { c.lexicon_size = 1; }, "lexicon-too-small");
    check_code([](GameConfig& c) { c.roster[3].mock.compliance_prob = 1.5; },
               "mock-prob-out-of-range");
    check_code([](GameConfig& c) { c.roster[0].mock.verbosity_tokens = 0; },
               "verbosity-too-small");
    check_code(
        [](GameConfig& c) {
            c.roster[0].kind = RosterEntry::Kind::scripted;
            c.roster[0].script = {13};
        },
        "script-name-out-of-range");
    check_code(
        [](GameConfig& c) {
            c.roster[0].kind = RosterEntry::Kind::llm;
            c.roster[0].endpoint.base_url = "";
        },
        "endpoint-base-url-empty");

    GameConfig nl = valid_mock_config();
    nl.condition = Condition::NL;
    nl.memory_window = 0;
    CHECK_NOTHROW(validate_config(nl));
}

TEST_CASE("config serialization round-trips exactly") {
    GameConfig cfg = valid_mock_config();
    cfg.roster[2].kind = RosterEntry::Kind::scripted;
    cfg.roster[2].script = {1, 5, 12};
    cfg.roster[7].kind = RosterEntry::Kind::llm;
    cfg.roster[7].endpoint.base_url = "http://localhost:8000/v1";
    cfg.roster[7].endpoint.model_name = "m";
    cfg.roster[7].endpoint.api_key_env = "KEY";
    cfg.roster[7].decoding.temperature = 0.7;
    cfg.pairing_mode = PairingMode::full_matching;
    cfg.adoption_mode = AdoptionMode::speaker_hearer;
    cfg.fallback_mode = FallbackMode::none;
    cfg.agreement_metric = AgreementMetric::modal;
    cfg.token_accounting = TokenAccounting::output_plus_prompt;
    cfg.seed = 0xdeadbeefcafef00dull;

    GameConfig back = config_from_json(config_to_json(cfg));
    CHECK(back == cfg);
    // And a second hop stays stable byte-for-byte.
    CHECK(config_to_json(back).dump() == config_to_json(cfg).dump());
}

TEST_CASE("roster count expansion fills the population") {
    nlohmann::json j = config_to_json(valid_mock_config());
    j["roster"] = nlohmann::json::array();
    j["roster"].push_back({{"kind", "scripted"}, {"script", {3}}, {"count", 2}});
    j["roster"].push_back({{"kind", "mock"}, {"count", "all"}, {"compliance_prob", 1.0}});
    GameConfig cfg = config_from_json(j);
    REQUIRE(cfg.roster.size() == 12);
    CHECK(cfg.roster[0].kind == RosterEntry::Kind::scripted);
    CHECK(cfg.roster[1].kind == RosterEntry::Kind::scripted);
    CHECK(cfg.roster[2].kind == RosterEntry::Kind::mock);
    CHECK(cfg.roster[11].kind == RosterEntry::Kind::mock);
}

TEST_CASE("unknown config keys are rejected") {
    nlohmann::json j = config_to_json(valid_mock_config());
    j["typo_field"] = 1;
    CHECK(error_code([&] { config_from_json(j); }) == "config-parse");
}

TEST_CASE("bad enum values are rejected") {
    nlohmann::json j = config_to_json(valid_mock_config());
    j["condition"] = "SCHEME";
    CHECK(error_code([&] { config_from_json(j); }) == "config-parse");
}

} // TEST_SUITE
