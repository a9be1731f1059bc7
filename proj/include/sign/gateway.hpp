#pragma once

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "sign/codec.hpp"
#include "sign/config.hpp"
#include "sign/policy.hpp"
#include "sign/state.hpp"

namespace sign {

struct ChatMessage {
    std::string role;
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

struct CompletionResult {
    std::string text;
    int completion_tokens = 0;
    int prompt_tokens = 0;
    bool usage_reported = false; // false -> token counts were estimated
    double latency_s = 0.0;
};

// One condition's prompt template: a plain-text file with [system], [user]
// and optional [reminder] sections. The body may use the placeholders
// {{lexicon}}, {{memory}}, {{schema_line}} and {{reminder}}; the reminder
// placeholder expands to the [reminder] section's sentence only on the
// retry prompt, so the retry prompt strictly extends the first one.
struct PromptTemplate {
    std::string system;
    std::string user;
    std::string reminder;

    static PromptTemplate load(const std::filesystem::path& file);
};

// Template file for a condition inside `dir`: nl.txt, nl_sw.txt, schema.txt.
std::filesystem::path template_path(const std::filesystem::path& dir, Condition condition);

std::vector<ChatMessage> build_prompt(const PromptTemplate& tpl, const AgentState& state,
                                      const Lexicon& lexicon, bool reminder);

// The exact request body sent to the endpoint; exposed so transcripts can
// be verified byte-for-byte (keys are emitted in sorted order).
nlohmann::json build_request_body(const EndpointProfile& profile, const DecodingParams& params,
                                  const std::vector<ChatMessage>& messages);

// One chat-completion round trip. Transport failures and HTTP 5xx are
// retried with exponential backoff up to profile.max_transport_retries;
// HTTP 4xx and malformed bodies raise EndpointError immediately.
CompletionResult complete(const EndpointProfile& profile, const DecodingParams& params,
                          const std::vector<ChatMessage>& messages);

RawMessage llm_propose(const EndpointProfile& profile, const DecodingParams& params,
                       const PromptTemplate& tpl, const AgentState& state, const Lexicon& lexicon,
                       bool reminder);

// Agent policy backed by one endpoint profile for the whole run.
class LlmPolicy : public AgentPolicy {
public:
    LlmPolicy(EndpointProfile profile, DecodingParams params, std::string templates_dir)
        : profile_(std::move(profile)), params_(params), templates_dir_(std::move(templates_dir)) {}

    RawMessage propose(const AgentState& state, int round, Condition condition,
                       const Lexicon& lexicon, RngStream& rng) override;
    RawMessage retry_propose(const AgentState& state, int round, Condition condition,
                             const Lexicon& lexicon, RngStream& rng) override;

private:
    const PromptTemplate& template_for(Condition condition);

    EndpointProfile profile_;
    DecodingParams params_;
    std::string templates_dir_;
    std::unordered_map<int, PromptTemplate> cache_;
};

} // namespace sign
