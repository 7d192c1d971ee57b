#include "tgmem/memory_store.hpp"

#include <algorithm>

#include "tgmem/errors.hpp"

namespace tgmem {

void MemoryStore::set_state(std::uint32_t v, const Tensor& s) {
    if (s.size() != dim_) {
        throw DimensionError("memory state dim " + std::to_string(s.size()) + " != " +
                             std::to_string(dim_));
    }
    set_state(v, s.flat());
}

void MemoryStore::set_state(std::uint32_t v, std::span<const double> s) {
    std::copy(s.begin(), s.end(), states_.begin() + v * dim_);
}

void MemoryStore::reset() {
    std::fill(states_.begin(), states_.end(), 0.0);
    std::fill(last_update_.begin(), last_update_.end(), 0.0);
}

}  // namespace tgmem
