#include "sign/policy.hpp"

#include <algorithm>
#include <unordered_map>

#include "sign/errors.hpp"
#include "sign/gateway.hpp"

namespace sign {

namespace {

// Noise vocabulary: all lowercase, so no word can collide with a lexicon
// label (labels start with an uppercase C) and pure noise stays undecodable.
constexpr const char* kNoiseWords[] = {
    "well",  "maybe", "sounds", "good",  "we",    "could", "pick",  "something",
    "today", "that",  "one",    "works", "for",   "me",    "let",   "us",
    "keep",  "using", "the",    "same",  "idea",  "still", "think", "it",
    "over",  "again", "fine",   "sure",  "okay",  "right", "then",  "agreed",
};
constexpr std::size_t kNoiseWordCount = sizeof(kNoiseWords) / sizeof(kNoiseWords[0]);

// verbosity_tokens words of noise; when `mention` is set, one uniformly
// chosen token is replaced by that label so the text decodes to it.
RawMessage noise_message(int verbosity_tokens, const std::optional<std::string>& mention,
                         RngStream& rng) {
    std::vector<std::string> words;
    words.reserve(static_cast<std::size_t>(verbosity_tokens));
    for (int i = 0; i < verbosity_tokens; ++i) {
        words.push_back(kNoiseWords[rng.uniform_index(static_cast<std::uint32_t>(kNoiseWordCount))]);
    }
    if (mention) {
        words[rng.uniform_index(static_cast<std::uint32_t>(verbosity_tokens))] = *mention;
    }
    RawMessage msg;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (i > 0) msg.text += ' ';
        msg.text += words[i];
    }
    msg.token_count = count_tokens(msg.text);
    return msg;
}

RawMessage mock_propose_with(const AgentState& state, Condition condition, const Lexicon& lexicon,
                             const MockPolicyParams& params, double compliance, RngStream& rng) {
    switch (condition) {
    case Condition::SCHEMA: {
        if (rng.bernoulli(compliance)) {
            return format_schema(choose_proposal_name(state));
        }
        std::optional<std::string> mention;
        if (rng.bernoulli(params.noise_mentions_name_prob)) {
            mention = lexicon.label(choose_proposal_name(state));
        }
        return noise_message(params.verbosity_tokens, mention, rng);
    }
    case Condition::NL_SW: {
        std::optional<std::string> mention;
        if (rng.bernoulli(compliance)) {
            mention = lexicon.label(choose_proposal_name(state));
        }
        return noise_message(params.verbosity_tokens, mention, rng);
    }
    case Condition::NL: {
        // No memory and no own-name influence: a fresh uniform name each time.
        std::optional<std::string> mention;
        if (rng.bernoulli(compliance)) {
            NameId random_name{1 + static_cast<int>(
                                       rng.uniform_index(static_cast<std::uint32_t>(lexicon.size())))};
            mention = lexicon.label(random_name);
        }
        return noise_message(params.verbosity_tokens, mention, rng);
    }
    }
    throw std::logic_error("unhandled condition");
}

} // namespace

NameId choose_proposal_name(const AgentState& state) {
    std::unordered_map<int, int> counts;
    std::unordered_map<int, std::size_t> latest;
    std::size_t pos = 0;
    for (const auto& rec : state.memory) {
        if (rec.partner_name) {
            counts[rec.partner_name->index] += 1;
            latest[rec.partner_name->index] = pos;
        }
        ++pos;
    }
    if (counts.empty()) {
        return state.current_name;
    }
    int best_index = 0;
    int best_count = -1;
    std::size_t best_latest = 0;
    for (const auto& [index, count] : counts) {
        std::size_t seen = latest[index];
        if (count > best_count || (count == best_count && seen > best_latest)) {
            best_index = index;
            best_count = count;
            best_latest = seen;
        }
    }
    return NameId{best_index};
}

RawMessage mock_propose(const AgentState& state, Condition condition, const Lexicon& lexicon,
                        const MockPolicyParams& params, RngStream& rng) {
    return mock_propose_with(state, condition, lexicon, params, params.compliance_prob, rng);
}

RawMessage MockPolicy::propose(const AgentState& state, int /*round*/, Condition condition,
                               const Lexicon& lexicon, RngStream& rng) {
    return mock_propose_with(state, condition, lexicon, params_, params_.compliance_prob, rng);
}

RawMessage MockPolicy::retry_propose(const AgentState& state, int /*round*/, Condition condition,
                                     const Lexicon& lexicon, RngStream& rng) {
    double boosted = std::min(1.0, params_.compliance_prob + params_.retry_compliance_boost);
    return mock_propose_with(state, condition, lexicon, params_, boosted, rng);
}

RawMessage scripted_propose(std::span<const NameId> script, int round) {
    if (round < 0 || static_cast<std::size_t>(round) >= script.size()) {
        throw PolicyError("script exhausted: round " + std::to_string(round) +
                          " beyond script of length " + std::to_string(script.size()));
    }
    return format_schema(script[static_cast<std::size_t>(round)]);
}

RawMessage ScriptedPolicy::propose(const AgentState& /*state*/, int round, Condition /*condition*/,
                                   const Lexicon& /*lexicon*/, RngStream& /*rng*/) {
    return scripted_propose(script_, round);
}

bool apply_adoption(AgentState& state, NameId partner_name, double alpha, RngStream& rng) {
    if (!rng.bernoulli(alpha)) {
        return false;
    }
    state.current_name = partner_name;
    state.last_emitted = partner_name;
    return true;
}

std::unique_ptr<AgentPolicy> make_policy(const RosterEntry& entry) {
    switch (entry.kind) {
    case RosterEntry::Kind::mock:
        return std::make_unique<MockPolicy>(entry.mock);
    case RosterEntry::Kind::scripted: {
        std::vector<NameId> script;
        script.reserve(entry.script.size());
        for (int k : entry.script) {
            script.push_back(NameId{k});
        }
        return std::make_unique<ScriptedPolicy>(std::move(script));
    }
    case RosterEntry::Kind::llm:
        return std::make_unique<LlmPolicy>(entry.endpoint, entry.decoding, entry.templates_dir);
    }
    throw std::logic_error("unhandled roster kind");
}

} // namespace sign
