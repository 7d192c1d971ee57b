#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "tgmem/checkpoint.hpp"
#include "tgmem/event.hpp"
#include "tgmem/memory_store.hpp"
#include "tgmem/tensor.hpp"

namespace tgmem {

// Streaming per-vertex statistics over state transitions, one accumulator
// row per (vertex, component). Component 0 collects deltas from positive
// events, component 1 from negatives. Means and diagonal variances are
// recomputed from the raw sums on every read; nothing else is cached.
// Storage is exactly 2 * |V| rows of width d regardless of batch size.
class GmmTracker {
public:
    static constexpr std::size_t kComponents = 2;

    GmmTracker(std::size_t num_vertices, std::size_t dim);

    std::size_t num_vertices() const { return num_vertices_; }
    std::size_t dim() const { return dim_; }
    std::size_t statistic_rows() const { return kComponents * num_vertices_; }
    std::size_t allocated_doubles() const { return xi_.size() + psi_.size(); }

    // xi += delta, psi += delta^2, n += 1. A non-finite delta is skipped and
    // counted instead of raising.
    void update(std::uint32_t v, Polarity polarity, const Tensor& delta);

    std::uint64_t count(std::uint32_t v, std::size_t component) const;
    Tensor mean(std::uint32_t v, std::size_t component) const;      // xi/n, zero when n == 0
    Tensor variance(std::uint32_t v, std::size_t component) const;  // psi/n - mean^2

    // Global mixture weights from total per-component counts; (0.5, 0.5)
    // before any update.
    std::array<double, kComponents> mixture_weights() const;

    std::uint64_t skipped_updates() const { return skipped_; }
    void reset();

    std::vector<NamedTensor> to_tensors() const;
    static GmmTracker from_tensors(const std::vector<NamedTensor>& tensors);

private:
    std::size_t row(std::uint32_t v, std::size_t component) const {
        return v * kComponents + component;
    }
    void check_row(std::uint32_t v, std::size_t component) const;

    std::size_t num_vertices_;
    std::size_t dim_;
    std::vector<double> xi_;   // 2V rows of d: running delta sums
    std::vector<double> psi_;  // 2V rows of d: running squared-delta sums
    std::vector<std::uint64_t> counts_;
    std::array<std::uint64_t, kComponents> totals_{};
    std::uint64_t skipped_ = 0;
};

enum class EventType : std::uint8_t { positive, negative, unknown };

// s_hat(t2) = s_v(t1) + (t2 - t1) * delta_hat, where t1 is the vertex's last
// update time. For a known event type delta_hat is that component's mean;
// for unknown it is the mixture mean. t2 must not precede t1.
Tensor predict_memory(const GmmTracker& tracker, const MemoryStore& mem, std::uint32_t v,
                      double t2, EventType type);

}  // namespace tgmem
