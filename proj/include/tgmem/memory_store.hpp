#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tgmem/tensor.hpp"

namespace tgmem {

// Per-vertex state vectors plus the timestamp of each vertex's latest
// update. Fresh stores are all-zero with last_update 0.
class MemoryStore {
public:
    MemoryStore(std::size_t num_vertices, std::size_t dim)
        : num_vertices_(num_vertices), dim_(dim), states_(num_vertices * dim, 0.0),
          last_update_(num_vertices, 0.0) {}

    std::size_t num_vertices() const { return num_vertices_; }
    std::size_t dim() const { return dim_; }

    std::span<const double> state(std::uint32_t v) const {
        return {states_.data() + v * dim_, dim_};
    }
    Tensor state_tensor(std::uint32_t v) const { return Tensor::from_span(state(v)); }

    void set_state(std::uint32_t v, const Tensor& s);
    void set_state(std::uint32_t v, std::span<const double> s);

    double last_update(std::uint32_t v) const { return last_update_[v]; }
    void set_last_update(std::uint32_t v, double t) { last_update_[v] = t; }

    void reset();

    bool operator==(const MemoryStore& other) const = default;

private:
    std::size_t num_vertices_;
    std::size_t dim_;
    std::vector<double> states_;
    std::vector<double> last_update_;
};

}  // namespace tgmem
