#include "sign/state.hpp"

namespace sign {

void remember(AgentState& state, const InteractionRecord& record, int capacity) {
    if (capacity <= 0) return;
    state.memory.push_back(record);
    while (static_cast<int>(state.memory.size()) > capacity) {
        state.memory.pop_front();
    }
}

} // namespace sign
