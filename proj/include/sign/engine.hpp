#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "sign/codec.hpp"
#include "sign/config.hpp"
#include "sign/policy.hpp"
#include "sign/state.hpp"

namespace sign {

// Who talks to whom in one round. Pair order matters: under the
// speaker_hearer adoption mode the first agent of a pair is the speaker.
struct PairingPlan {
    std::vector<std::pair<int, int>> pairs;
};

// single_pair: one pair uniform over all C(n,2); full_matching: a uniformly
// random perfect matching (Fisher-Yates permutation, adjacent pairing).
PairingPlan plan_pairs(int n, PairingMode mode, RngStream& rng);

// One agent's side of a pair interaction.
struct AgentTurn {
    int agent_id = 0;
    RawMessage message;
    std::optional<RawMessage> retry_message;
    DecodeOutcome outcome;
    bool adopted = false;
};

struct PairInteraction {
    AgentTurn first;  // speaker under speaker_hearer
    AgentTurn second;
    bool mismatch = false;
};

// Everything that happened in one round, plus population agreement over
// last-emitted names measured after the round's updates.
struct RoundEvent {
    int round = 0; // 1-based
    std::vector<PairInteraction> pairs;
    int tokens_this_round = 0;
    long long cumulative_tokens = 0;
    double agreement_pairwise = 0.0;
    double agreement_modal = 0.0;
};

struct AgentSummary {
    int agent_id = 0;
    int current_name = 0;
    std::optional<int> last_emitted;
};

enum class RunStatus { completed, aborted };

std::string to_string(RunStatus s);

struct RunLog {
    GameConfig config;
    std::vector<RoundEvent> events;
    std::vector<AgentSummary> final_states;
    RunStatus status = RunStatus::completed;
    std::string abort_reason;
    long long total_tokens = 0;

    double final_agreement() const;
};

// The labeled substreams one run draws from.
struct RunRngs {
    RngStream init;
    RngStream pairing;
    RngStream adoption;
    RngStream fallback;
    std::vector<RngStream> policy; // labels "policy:<agent_id>"

    RunRngs(std::uint64_t seed, int n_agents);
};

struct Population {
    std::vector<AgentState> states;
    std::vector<std::unique_ptr<AgentPolicy>> policies;
};

// Uniform initial names from the "init" substream, empty memories.
Population init_population(const GameConfig& cfg, const Lexicon& lexicon,
                           std::vector<std::unique_ptr<AgentPolicy>> policies, RunRngs& rngs);

// One round of the game: pair, propose, decode (schema enforcement under
// SCHEMA, direct free-text decoding otherwise), lose-shift adoption, memory
// updates. cumulative_tokens is filled in by run_game.
RoundEvent run_round(Population& pop, const GameConfig& cfg, const Lexicon& lexicon,
                     int round_index, RunRngs& rngs);

// Executes cfg.rounds rounds. Policy and endpoint failures end the run
// early with status aborted and all completed rounds preserved. Mock-only
// rosters are bit-reproducible from the seed. `on_event`, when set, sees
// every RoundEvent as it completes (used for streaming log files).
RunLog run_game(const GameConfig& cfg, std::vector<std::unique_ptr<AgentPolicy>> policies,
                const std::function<void(const RoundEvent&)>& on_event = {});

// Builds the roster's policies from the config and runs.
RunLog run_game(const GameConfig& cfg,
                const std::function<void(const RoundEvent&)>& on_event = {});

} // namespace sign
