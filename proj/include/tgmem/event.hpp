#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace tgmem {

enum class Polarity : std::uint8_t { positive, negative };

// One timestamped interaction. Vertex ids are dense indices in [0, N).
// Feature length is uniform across a stream (possibly zero).
struct Event {
    std::uint32_t src = 0;
    std::uint32_t dst = 0;
    double timestamp = 0.0;
    std::vector<double> features;
    Polarity polarity = Polarity::positive;

    bool operator==(const Event& other) const = default;
};

struct TimeInterval {
    double begin = 0.0;
    double end = 0.0;

    bool contains(double t) const { return t >= begin && t <= end; }
};

// Chronologically sorted positive events over a fixed vertex set.
struct EventStream {
    std::vector<Event> events;
    std::size_t num_vertices = 0;
    std::size_t feature_dim = 0;

    std::size_t size() const { return events.size(); }
    bool empty() const { return events.empty(); }
};

// A contiguous chronological slice of a stream plus sampled negatives.
// `positives` views the owning stream's storage, so the stream must outlive
// the batch.
struct TemporalBatch {
    std::size_t index = 0;
    std::span<const Event> positives;
    std::vector<Event> negatives;
    TimeInterval interval;

    std::size_t size() const { return positives.size(); }
};

}  // namespace tgmem
