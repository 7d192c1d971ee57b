#include "tgmem/synthetic.hpp"

#include <cmath>
#include <vector>

#include "tgmem/errors.hpp"
#include "tgmem/rng.hpp"

namespace tgmem {

void SyntheticConfig::validate() const {
    if (num_users == 0 || num_items == 0 || num_events == 0) {
        throw ArgumentError("synthetic: users, items, and events must be positive");
    }
    if (num_types == 0 || num_types > num_items) {
        throw ArgumentError("synthetic: need 1 <= num_types <= num_items");
    }
    if (period == 0) throw ArgumentError("synthetic: period must be positive");
    if (!std::isfinite(noise) || noise < 0.0 || noise > 1.0) {
        throw ArgumentError("synthetic: noise must lie in [0, 1]");
    }
}

EventStream make_synthetic_stream(const SyntheticConfig& cfg) {
    cfg.validate();
    const std::size_t types = cfg.num_types;

    // Item local index j has type j % types; items of one type are arranged
    // j = type + types * k.
    std::vector<std::size_t> type_count(types, 0);
    for (std::size_t j = 0; j < cfg.num_items; ++j) type_count[j % types] += 1;

    Rng rng(cfg.seed);
    EventStream stream;
    stream.num_vertices = cfg.num_users + cfg.num_items;
    stream.feature_dim = types;
    stream.events.reserve(cfg.num_events);

    for (std::size_t k = 0; k < cfg.num_events; ++k) {
        const std::uint32_t user = static_cast<std::uint32_t>(rng.below(cfg.num_users));
        const std::size_t phase = (k / cfg.period) % types;
        const std::size_t preferred = (user + phase) % types;

        std::size_t item_local;
        if (rng.uniform() >= cfg.noise && type_count[preferred] > 0) {
            item_local = preferred + types * rng.below(type_count[preferred]);
        } else {
            item_local = rng.below(cfg.num_items);
        }

        Event e;
        e.src = user;
        e.dst = static_cast<std::uint32_t>(cfg.num_users + item_local);
        // About one event per user per unit time keeps per-vertex gaps near 1.
        e.timestamp = static_cast<double>(k + 1) / static_cast<double>(cfg.num_users);
        e.features.assign(types, 0.0);
        e.features[item_local % types] = 1.0;
        e.polarity = Polarity::positive;
        stream.events.push_back(std::move(e));
    }
    return stream;
}

}  // namespace tgmem
