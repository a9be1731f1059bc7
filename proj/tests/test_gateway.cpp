#include <doctest.h>

#include <atomic>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "sign/engine.hpp"
#include "sign/errors.hpp"
#include "sign/gateway.hpp"

using namespace sign;
using nlohmann::json;

namespace {

const std::filesystem::path kTemplatesDir =
    std::filesystem::path(SIGN_REPO_DIR) / "templates";

// In-process OpenAI-compatible endpoint for client tests.
class StubServer {
public:
    explicit StubServer(httplib::Server::Handler handler) {
        server_.Post("/v1/chat/completions", std::move(handler));
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~StubServer() {
        server_.stop();
        thread_.join();
    }

    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
};

std::string completion_body(const std::string& content, int completion_tokens,
                            int prompt_tokens) {
    return json{{"choices", json::array({json{{"message", json{{"content", content}}}}})},
                {"usage", json{{"completion_tokens", completion_tokens},
                               {"prompt_tokens", prompt_tokens}}}}
        .dump();
}

EndpointProfile profile_for(const StubServer& server) {
    EndpointProfile ep;
    ep.base_url = server.base_url();
    ep.model_name = "stub-model";
    ep.timeout_s = 5.0;
    ep.max_transport_retries = 2;
    ep.backoff_initial_ms = 10;
    return ep;
}

AgentState sample_state() {
    AgentState s;
    s.agent_id = 3;
    s.current_name = NameId{4};
    s.memory.push_back({1, 7, NameId{5}, true});
    s.memory.push_back({2, 2, std::nullopt, false});
    return s;
}

} // namespace

TEST_SUITE("gateway") {

TEST_CASE("decoding defaults match the fixed experiment settings") {
    DecodingParams dp;
    CHECK(dp.max_new_tokens == 32);
    CHECK(dp.temperature == 0.7);
    CHECK(dp.top_p == 0.9);
    CHECK(dp.repeat_penalty == 1.1);
}

TEST_CASE("request bodies are byte-stable") {
    EndpointProfile ep;
    ep.base_url = "http://x";
    ep.model_name = "m";
    DecodingParams dp;
    std::vector<ChatMessage> messages{{"system", "s"}, {"user", "u"}};

    const std::string expected =
        R"({"max_tokens":32,"messages":[{"content":"s","role":"system"},)"
        R"({"content":"u","role":"user"}],"model":"m","repeat_penalty":1.1,)"
        R"("temperature":0.7,"top_p":0.9})";
    CHECK(build_request_body(ep, dp, messages).dump() == expected);
    CHECK(build_request_body(ep, dp, messages).dump() ==
          build_request_body(ep, dp, messages).dump());
}

TEST_CASE("the repetition-penalty field name is configurable") {
    EndpointProfile ep;
    ep.base_url = "http://x";
    ep.model_name = "m";
    ep.repeat_penalty_field = "frequency_penalty";
    json body = build_request_body(ep, DecodingParams{}, {{"user", "hi"}});
    CHECK(body.contains("frequency_penalty"));
    CHECK_FALSE(body.contains("repeat_penalty"));
}

TEST_CASE("shipped templates load and render per condition") {
    Lexicon lex = make_lexicon(12);
    AgentState state = sample_state();

    PromptTemplate schema = PromptTemplate::load(template_path(kTemplatesDir, Condition::SCHEMA));
    auto messages = build_prompt(schema, state, lex, false);
    REQUIRE(messages.size() == 2);
    CHECK(messages[0].role == "system");
    CHECK(messages[1].role == "user");
    bool has_tag = messages[0].content.find("@say {name:") != std::string::npos ||
                   messages[1].content.find("@say {name:") != std::string::npos;
    CHECK(has_tag);
    CHECK(messages[0].content.find("C1, C2") != std::string::npos);
    CHECK(messages[1].content.find("{{") == std::string::npos);

    // Memory is serialized oldest first with undecodable entries marked.
    CHECK(messages[1].content.find("partner 7 proposed C5") != std::string::npos);
    CHECK(messages[1].content.find("partner 2 proposed nothing decodable") != std::string::npos);
    CHECK(messages[1].content.find("partner 7") < messages[1].content.find("partner 2"));
}

TEST_CASE("the reminder prompt strictly extends the plain prompt") {
    Lexicon lex = make_lexicon(12);
    AgentState state = sample_state();
    for (Condition cond : {Condition::NL, Condition::NL_SW, Condition::SCHEMA}) {
        PromptTemplate tpl = PromptTemplate::load(template_path(kTemplatesDir, cond));
        auto plain = build_prompt(tpl, state, lex, false);
        auto reminded = build_prompt(tpl, state, lex, true);
        REQUIRE(plain.size() == reminded.size());
        for (std::size_t i = 0; i < plain.size(); ++i) {
            CHECK(reminded[i].content.substr(0, plain[i].content.size()) == plain[i].content);
        }
        CHECK(reminded[1].content.size() > plain[1].content.size());
    }
}

TEST_CASE("NL prompt with an empty window has no memory section") {
    Lexicon lex = make_lexicon(12);
    AgentState state;
    state.current_name = NameId{1};
    PromptTemplate tpl = PromptTemplate::load(template_path(kTemplatesDir, Condition::NL));
    auto messages = build_prompt(tpl, state, lex, false);
    for (const auto& m : messages) {
        CHECK(m.content.find("interaction") == std::string::npos);
    }
}

TEST_CASE("missing template file is a configuration error") {
    CHECK_THROWS_AS((void)PromptTemplate::load("/nonexistent/dir/schema.txt"), ConfigError);
}

TEST_CASE("complete returns text and endpoint-reported usage") {
    std::atomic<int> hits{0};
    StubServer server([&](const httplib::Request& req, httplib::Response& res) {
        ++hits;
        json body = json::parse(req.body);
        CHECK(body.at("model") == "stub-model");
        CHECK(body.at("max_tokens") == 32);
        CHECK(body.contains("repeat_penalty"));
        res.set_content(completion_body("@say {name: C3}", 6, 42), "application/json");
    });

    CompletionResult result = complete(profile_for(server), DecodingParams{},
                                       {{"system", "s"}, {"user", "u"}});
    CHECK(result.text == "@say {name: C3}");
    CHECK(result.completion_tokens == 6);
    CHECK(result.prompt_tokens == 42);
    CHECK(result.usage_reported);
    CHECK(hits == 1);
}

TEST_CASE("missing usage block falls back to whitespace counting") {
    StubServer server([](const httplib::Request&, httplib::Response& res) {
        res.set_content(json{{"choices", json::array({json{{"message",
                                                            json{{"content", "one two three"}}}}})}}
                            .dump(),
                        "application/json");
    });
    CompletionResult result = complete(profile_for(server), DecodingParams{}, {{"user", "u"}});
    CHECK(result.text == "one two three");
    CHECK(result.completion_tokens == 3);
    CHECK_FALSE(result.usage_reported);
}

TEST_CASE("HTTP 4xx fails immediately without retries") {
    std::atomic<int> hits{0};
    StubServer server([&](const httplib::Request&, httplib::Response& res) {
        ++hits;
        res.status = 404;
    });
    CHECK_THROWS_AS((void)complete(profile_for(server), DecodingParams{}, {{"user", "u"}}),
                    EndpointError);
    CHECK(hits == 1);
}

TEST_CASE("HTTP 5xx is retried with backoff until it succeeds") {
    std::atomic<int> hits{0};
    StubServer server([&](const httplib::Request&, httplib::Response& res) {
        if (++hits <= 2) {
            res.status = 500;
            return;
        }
        res.set_content(completion_body("ok", 1, 1), "application/json");
    });
    CompletionResult result = complete(profile_for(server), DecodingParams{}, {{"user", "u"}});
    CHECK(result.text == "ok");
    CHECK(hits == 3);
}

TEST_CASE("malformed response bodies raise endpoint errors") {
    StubServer server([](const httplib::Request&, httplib::Response& res) {
        res.set_content("{not json", "application/json");
    });
    CHECK_THROWS_AS((void)complete(profile_for(server), DecodingParams{}, {{"user", "u"}}),
                    EndpointError);

    StubServer no_choices([](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"choices":[]})", "application/json");
    });
    CHECK_THROWS_AS((void)complete(profile_for(no_choices), DecodingParams{}, {{"user", "u"}}),
                    EndpointError);
}

TEST_CASE("unreachable endpoints fail after the configured retries") {
    EndpointProfile ep;
    ep.base_url = "http://127.0.0.1:1"; // nothing listens on port 1
    ep.model_name = "m";
    ep.timeout_s = 0.2;
    ep.max_transport_retries = 1;
    ep.backoff_initial_ms = 5;
    CHECK_THROWS_AS((void)complete(ep, DecodingParams{}, {{"user", "u"}}), EndpointError);
}

TEST_CASE("llm_propose carries endpoint token accounting into the message") {
    StubServer server([](const httplib::Request&, httplib::Response& res) {
        res.set_content(completion_body("I pick C2 today", 9, 33), "application/json");
    });
    Lexicon lex = make_lexicon(12);
    PromptTemplate tpl = PromptTemplate::load(template_path(kTemplatesDir, Condition::SCHEMA));
    RawMessage msg = llm_propose(profile_for(server), DecodingParams{}, tpl, sample_state(), lex,
                                 false);
    CHECK(msg.text == "I pick C2 today");
    CHECK(msg.token_count == 9);
    CHECK(msg.prompt_tokens == 33);
    CHECK(msg.token_source == TokenSource::endpoint);
}

TEST_CASE("llm_propose flags estimated counts when usage is missing") {
    StubServer server([](const httplib::Request&, httplib::Response& res) {
        res.set_content(
            json{{"choices",
                  json::array({json{{"message", json{{"content", "four words in here"}}}}})}}
                .dump(),
            "application/json");
    });
    Lexicon lex = make_lexicon(12);
    PromptTemplate tpl = PromptTemplate::load(template_path(kTemplatesDir, Condition::SCHEMA));
    RawMessage msg = llm_propose(profile_for(server), DecodingParams{}, tpl, sample_state(), lex,
                                 false);
    CHECK(msg.token_count == 4);
    CHECK(msg.token_source == TokenSource::endpoint_estimated);
}

TEST_CASE("an LLM roster runs end to end against a stub endpoint") {
    // Every odd request is non-compliant, so each turn exercises the retry.
    std::atomic<int> hits{0};
    StubServer server([&](const httplib::Request&, httplib::Response& res) {
        int n = ++hits;
        if (n % 2 == 1) {
            res.set_content(completion_body("thinking about it", 4, 20), "application/json");
        } else {
            res.set_content(completion_body("@say {name: C4}", 6, 25), "application/json");
        }
    });

    GameConfig cfg;
    cfg.n_agents = 2;
    cfg.lexicon_size = 12;
    cfg.rounds = 3;
    cfg.memory_window = 2;
    cfg.lose_shift_alpha = 1.0;
    cfg.condition = Condition::SCHEMA;
    cfg.seed = 1;
    RosterEntry e;
    e.kind = RosterEntry::Kind::llm;
    e.endpoint = profile_for(server);
    e.templates_dir = kTemplatesDir.string();
    cfg.roster = {e, e};

    RunLog log = run_game(validate_config(cfg));
    REQUIRE(log.status == RunStatus::completed);
    REQUIRE(log.events.size() == 3);
    for (const auto& ev : log.events) {
        for (const auto& pi : ev.pairs) {
            for (const AgentTurn* turn : {&pi.first, &pi.second}) {
                CHECK(turn->message.token_source == TokenSource::endpoint);
                CHECK(turn->outcome.stage == DecodeStage::schema_retry);
                CHECK(turn->outcome.extra_tokens == 6);
                REQUIRE(turn->retry_message.has_value());
                CHECK(turn->retry_message->token_source == TokenSource::endpoint);
            }
        }
    }
    // 3 rounds x 2 agents x (first + retry)
    CHECK(hits == 12);
    CHECK(log.total_tokens == 3 * 2 * (4 + 6));
}

TEST_CASE("a dead endpoint aborts the run and keeps completed rounds") {
    GameConfig cfg;
    cfg.n_agents = 2;
    cfg.lexicon_size = 12;
    cfg.rounds = 5;
    cfg.memory_window = 2;
    cfg.lose_shift_alpha = 0.5;
    cfg.condition = Condition::SCHEMA;
    cfg.seed = 1;
    RosterEntry e;
    e.kind = RosterEntry::Kind::llm;
    e.endpoint.base_url = "http://127.0.0.1:1";
    e.endpoint.model_name = "m";
    e.endpoint.timeout_s = 0.2;
    e.endpoint.max_transport_retries = 0;
    e.endpoint.backoff_initial_ms = 5;
    e.templates_dir = kTemplatesDir.string();
    cfg.roster = {e, e};

    RunLog log = run_game(validate_config(cfg));
    CHECK(log.status == RunStatus::aborted);
    CHECK(log.events.empty());
    CHECK_FALSE(log.abort_reason.empty());
}

} // TEST_SUITE
