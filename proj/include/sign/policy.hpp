#pragma once

#include <memory>
#include <span>
#include <vector>

#include "sign/codec.hpp"
#include "sign/config.hpp"
#include "sign/rng.hpp"
#include "sign/state.hpp"

namespace sign {

// How an agent turns its state into messages and reacts to interactions.
// A policy instance is bound to exactly one agent in one run.
class AgentPolicy {
public:
    virtual ~AgentPolicy() = default;

    virtual RawMessage propose(const AgentState& state, int round, Condition condition,
                               const Lexicon& lexicon, RngStream& rng) = 0;

    // The reminder retry after a schema violation. Defaults to re-proposing.
    virtual RawMessage retry_propose(const AgentState& state, int round, Condition condition,
                                     const Lexicon& lexicon, RngStream& rng) {
        return propose(state, round, condition, lexicon, rng);
    }

    // Appends the partner record to memory (oldest-first eviction); no-op
    // on memory when the window is 0.
    virtual void on_result(AgentState& state, const InteractionRecord& record, int memory_window) {
        remember(state, record, memory_window);
    }
};

// The name an agent would propose: the most frequent non-empty partner name
// in its memory window, ties broken by the most recent occurrence; falls
// back to current_name when the window holds nothing decodable.
NameId choose_proposal_name(const AgentState& state);

// Desk-scale stochastic stand-in for an LLM agent.
class MockPolicy : public AgentPolicy {
public:
    explicit MockPolicy(MockPolicyParams params) : params_(params) {}

    RawMessage propose(const AgentState& state, int round, Condition condition,
                       const Lexicon& lexicon, RngStream& rng) override;
    RawMessage retry_propose(const AgentState& state, int round, Condition condition,
                             const Lexicon& lexicon, RngStream& rng) override;

    const MockPolicyParams& params() const { return params_; }

private:
    MockPolicyParams params_;
};

// Emits a predetermined name per round; the oracle agent for engine tests.
class ScriptedPolicy : public AgentPolicy {
public:
    explicit ScriptedPolicy(std::vector<NameId> script) : script_(std::move(script)) {}

    RawMessage propose(const AgentState& state, int round, Condition condition,
                       const Lexicon& lexicon, RngStream& rng) override;

private:
    std::vector<NameId> script_;
};

RawMessage mock_propose(const AgentState& state, Condition condition, const Lexicon& lexicon,
                        const MockPolicyParams& params, RngStream& rng);

// Throws PolicyError when round falls outside the script.
RawMessage scripted_propose(std::span<const NameId> script, int round);

// Lose-shift: with probability alpha the agent takes over partner_name as
// both its current name and its last emitted name. Returns whether it did.
// Callers only invoke this on a mismatch with a decodable partner name.
bool apply_adoption(AgentState& state, NameId partner_name, double alpha, RngStream& rng);

// Builds the policy for one roster entry (mock, scripted, or LLM-backed).
std::unique_ptr<AgentPolicy> make_policy(const RosterEntry& entry);

} // namespace sign
