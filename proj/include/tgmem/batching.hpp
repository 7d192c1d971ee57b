#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "tgmem/event.hpp"

namespace tgmem {

struct SplitStreams {
    EventStream train;
    EventStream val;
    EventStream test;
};

// Count-based chronological split: the first floor(train_frac*|E|) events,
// the next floor(val_frac*|E|), and the remainder. Fractions must be
// positive and sum below 1. Vertex space and feature dim carry over.
SplitStreams chronological_split(const EventStream& stream, double train_frac, double val_frac);

// Slices the stream into ceil(|E|/b) contiguous batches; the last one may be
// partial. Batches view the stream's storage. b must be >= 1.
std::vector<TemporalBatch> partition_batches(const EventStream& stream, std::size_t batch_size);

// Draws `count_per_positive` negatives per positive: source and timestamp
// are inherited, the destination is uniform over all vertices, and a draw is
// rejected when dst == src or when the stream holds a positive event between
// the candidate pair (either direction) inside the batch interval. Features
// are zero. Throws SaturationError if one negative exceeds 10*|V| draws.
std::vector<Event> sample_negatives(const TemporalBatch& batch, const EventStream& stream,
                                    std::size_t count_per_positive, std::uint64_t seed);

// Probe variant: draws a fixed total number of negatives for the whole
// batch, each anchored to a uniformly chosen positive. Same rejection rule.
std::vector<Event> sample_negatives_fixed_total(const TemporalBatch& batch,
                                                const EventStream& stream, std::size_t total,
                                                std::uint64_t seed);

// Indices of batch positives that precede positive `pos_index` strictly in
// time and share at least one endpoint with it, in chronological order.
std::vector<std::size_t> pending_set(const TemporalBatch& batch, std::size_t pos_index);
// Same, locating `e` in the batch first; throws ArgumentError if absent.
std::vector<std::size_t> pending_set(const TemporalBatch& batch, const Event& e);

struct PendingStats {
    std::size_t num_pending_events = 0;  // positives with a nonempty pending set
    std::size_t max_chain = 0;           // longest e1 <- e2 <- ... dependency chain
    double frac_pending = 0.0;
};

PendingStats pending_stats(const TemporalBatch& batch);

// One row per batch: batch_index,num_positives,num_pending,max_chain,frac_pending
void write_batch_stats_csv(std::ostream& out, const std::vector<TemporalBatch>& batches);

}  // namespace tgmem
