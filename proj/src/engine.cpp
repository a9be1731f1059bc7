#include "sign/engine.hpp"

#include <numeric>

#include "sign/errors.hpp"
#include "sign/metrics.hpp"

namespace sign {

namespace {

AgentTurn take_turn(Population& pop, int agent, int round_index, const GameConfig& cfg,
                    const Lexicon& lexicon, RunRngs& rngs) {
    auto& policy = *pop.policies[static_cast<std::size_t>(agent)];
    auto& state = pop.states[static_cast<std::size_t>(agent)];
    auto& rng = rngs.policy[static_cast<std::size_t>(agent)];

    AgentTurn turn;
    turn.agent_id = agent;
    turn.message = policy.propose(state, round_index, cfg.condition, lexicon, rng);

    if (cfg.condition == Condition::SCHEMA) {
        auto provider = [&]() -> RawMessage {
            turn.retry_message =
                policy.retry_propose(state, round_index, cfg.condition, lexicon, rng);
            return *turn.retry_message;
        };
        turn.outcome =
            enforce_schema(turn.message, provider, lexicon, cfg.fallback_mode, rngs.fallback);
    } else {
        // No retry and no random fallback outside the SCHEMA condition.
        DecodedName name = decode_free_text(turn.message, lexicon);
        turn.outcome.name = name;
        turn.outcome.compliant = false;
        turn.outcome.stage = name ? DecodeStage::free_text : DecodeStage::none;
        turn.outcome.extra_tokens = 0;
    }
    return turn;
}

int turn_tokens(const AgentTurn& turn, TokenAccounting accounting) {
    int total = turn.message.token_count + turn.outcome.extra_tokens;
    if (accounting == TokenAccounting::output_plus_prompt) {
        total += turn.message.prompt_tokens;
        if (turn.retry_message) total += turn.retry_message->prompt_tokens;
    }
    return total;
}

std::vector<DecodedName> last_emitted_names(const Population& pop) {
    std::vector<DecodedName> names;
    names.reserve(pop.states.size());
    for (const auto& s : pop.states) {
        names.push_back(s.last_emitted);
    }
    return names;
}

} // namespace

std::string to_string(RunStatus s) {
    return s == RunStatus::completed ? "completed" : "aborted";
}

double RunLog::final_agreement() const {
    if (events.empty()) return 0.0;
    const RoundEvent& last = events.back();
    return config.agreement_metric == AgreementMetric::pairwise ? last.agreement_pairwise
                                                                : last.agreement_modal;
}

RunRngs::RunRngs(std::uint64_t seed, int n_agents)
    : init(seed, "init"),
      pairing(seed, "pairing"),
      adoption(seed, "adoption"),
      fallback(seed, "fallback") {
    policy.reserve(static_cast<std::size_t>(n_agents));
    for (int i = 0; i < n_agents; ++i) {
        policy.emplace_back(seed, "policy:" + std::to_string(i));
    }
}

PairingPlan plan_pairs(int n, PairingMode mode, RngStream& rng) {
    PairingPlan plan;
    if (mode == PairingMode::single_pair) {
        int i = static_cast<int>(rng.uniform_index(static_cast<std::uint32_t>(n)));
        int j = static_cast<int>(rng.uniform_index(static_cast<std::uint32_t>(n - 1)));
        if (j >= i) ++j;
        plan.pairs.emplace_back(i, j);
        return plan;
    }
    if (n % 2 != 0) {
        throw ConfigError("odd-n-full-matching", "full_matching pairing requires an even n_agents");
    }
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    for (int k = n - 1; k >= 1; --k) {
        int r = static_cast<int>(rng.uniform_index(static_cast<std::uint32_t>(k + 1)));
        std::swap(perm[static_cast<std::size_t>(k)], perm[static_cast<std::size_t>(r)]);
    }
    for (int k = 0; k < n; k += 2) {
        plan.pairs.emplace_back(perm[static_cast<std::size_t>(k)],
                                perm[static_cast<std::size_t>(k + 1)]);
    }
    return plan;
}

Population init_population(const GameConfig& cfg, const Lexicon& lexicon,
                           std::vector<std::unique_ptr<AgentPolicy>> policies, RunRngs& rngs) {
    Population pop;
    pop.policies = std::move(policies);
    pop.states.reserve(static_cast<std::size_t>(cfg.n_agents));
    for (int i = 0; i < cfg.n_agents; ++i) {
        AgentState s;
        s.agent_id = i;
        s.current_name =
            NameId{1 + static_cast<int>(rngs.init.uniform_index(
                           static_cast<std::uint32_t>(lexicon.size())))};
        pop.states.push_back(std::move(s));
    }
    return pop;
}

RoundEvent run_round(Population& pop, const GameConfig& cfg, const Lexicon& lexicon,
                     int round_index, RunRngs& rngs) {
    PairingPlan plan = plan_pairs(cfg.n_agents, cfg.pairing_mode, rngs.pairing);

    RoundEvent ev;
    ev.round = round_index + 1;
    for (auto [i, j] : plan.pairs) {
        PairInteraction pi;
        pi.first = take_turn(pop, i, round_index, cfg, lexicon, rngs);
        pi.second = take_turn(pop, j, round_index, cfg, lexicon, rngs);

        auto& state_i = pop.states[static_cast<std::size_t>(i)];
        auto& state_j = pop.states[static_cast<std::size_t>(j)];
        const DecodedName yi = pi.first.outcome.name;
        const DecodedName yj = pi.second.outcome.name;

        if (yi) state_i.last_emitted = yi;
        if (yj) state_j.last_emitted = yj;

        // A failed decode never matches; two failures are no comparison at all.
        pi.mismatch = (yi && yj) ? (*yi != *yj) : (yi.has_value() != yj.has_value());

        if (pi.mismatch) {
            if (cfg.adoption_mode == AdoptionMode::bilateral_independent) {
                // Both updates use this round's decoded values, so applying
                // them in sequence is order-independent (mutual adoption swaps).
                if (yj) {
                    pi.first.adopted =
                        apply_adoption(state_i, *yj, cfg.lose_shift_alpha, rngs.adoption);
                }
                if (yi) {
                    pi.second.adopted =
                        apply_adoption(state_j, *yi, cfg.lose_shift_alpha, rngs.adoption);
                }
            } else if (yi) {
                pi.second.adopted =
                    apply_adoption(state_j, *yi, cfg.lose_shift_alpha, rngs.adoption);
            }
        }

        pop.policies[static_cast<std::size_t>(i)]->on_result(
            state_i, {ev.round, j, yj, pi.second.outcome.compliant}, cfg.memory_window);
        pop.policies[static_cast<std::size_t>(j)]->on_result(
            state_j, {ev.round, i, yi, pi.first.outcome.compliant}, cfg.memory_window);

        ev.tokens_this_round += turn_tokens(pi.first, cfg.token_accounting) +
                                turn_tokens(pi.second, cfg.token_accounting);
        ev.pairs.push_back(std::move(pi));
    }

    std::vector<DecodedName> names = last_emitted_names(pop);
    ev.agreement_pairwise = pairwise_agreement(names);
    ev.agreement_modal = modal_agreement(names);
    return ev;
}

RunLog run_game(const GameConfig& cfg, std::vector<std::unique_ptr<AgentPolicy>> policies,
                const std::function<void(const RoundEvent&)>& on_event) {
    Lexicon lexicon = make_lexicon(cfg.lexicon_size);
    RunRngs rngs(cfg.seed, cfg.n_agents);

    RunLog log;
    log.config = cfg;
    log.events.reserve(static_cast<std::size_t>(cfg.rounds));

    Population pop = init_population(cfg, lexicon, std::move(policies), rngs);

    long long cumulative = 0;
    try {
        for (int t = 0; t < cfg.rounds; ++t) {
            RoundEvent ev = run_round(pop, cfg, lexicon, t, rngs);
            cumulative += ev.tokens_this_round;
            ev.cumulative_tokens = cumulative;
            log.events.push_back(std::move(ev));
            if (on_event) on_event(log.events.back());
        }
        log.status = RunStatus::completed;
    } catch (const PolicyError& e) {
        log.status = RunStatus::aborted;
        log.abort_reason = e.what();
    } catch (const EndpointError& e) {
        log.status = RunStatus::aborted;
        log.abort_reason = e.what();
    }

    log.total_tokens = cumulative;
    log.final_states.reserve(pop.states.size());
    for (const auto& s : pop.states) {
        AgentSummary sum;
        sum.agent_id = s.agent_id;
        sum.current_name = s.current_name.index;
        if (s.last_emitted) sum.last_emitted = s.last_emitted->index;
        log.final_states.push_back(sum);
    }
    return log;
}

RunLog run_game(const GameConfig& cfg, const std::function<void(const RoundEvent&)>& on_event) {
    std::vector<std::unique_ptr<AgentPolicy>> policies;
    policies.reserve(cfg.roster.size());
    for (const auto& entry : cfg.roster) {
        policies.push_back(make_policy(entry));
    }
    return run_game(cfg, std::move(policies), on_event);
}

} // namespace sign
