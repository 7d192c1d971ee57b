#pragma once

#include <cstddef>
#include <cstdint>

#include "tgmem/event.hpp"

namespace tgmem {

// Bipartite user-item stream with planted periodic affinities. Users and
// items carry latent types; at any moment a user prefers one item type, and
// the preference rotates every `period` events, so link structure is
// predictable from recent memory but drifts over the stream. Event features
// one-hot the item's type. Vertex ids: users first, then items.
struct SyntheticConfig {
    std::size_t num_users = 40;
    std::size_t num_items = 160;
    std::size_t num_events = 2000;
    std::size_t num_types = 5;
    std::size_t period = 250;
    double noise = 0.1;  // probability of an off-preference interaction
    std::uint64_t seed = 42;

    void validate() const;
};

EventStream make_synthetic_stream(const SyntheticConfig& cfg);

}  // namespace tgmem
