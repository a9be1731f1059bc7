#pragma once

#include <deque>

#include "sign/lexicon.hpp"

namespace sign {

// One partner-only memory entry: what the partner's message decoded to in
// one interaction the owning agent took part in.
struct InteractionRecord {
    int round = 0; // 1-based
    int partner_id = 0;
    DecodedName partner_name;
    bool partner_compliant = false;

    bool operator==(const InteractionRecord&) const = default;
};

struct AgentState {
    int agent_id = 0;
    NameId current_name;
    DecodedName last_emitted; // stays empty until the agent first speaks
    std::deque<InteractionRecord> memory;
};

// FIFO append bounded by `capacity`; evicts oldest-first. No-op when
// capacity is 0 (the NL condition keeps no memory).
void remember(AgentState& state, const InteractionRecord& record, int capacity);

} // namespace sign
