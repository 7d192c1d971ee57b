#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "tgmem/event.hpp"
#include "tgmem/memory_store.hpp"
#include "tgmem/model.hpp"
#include "tgmem/pres.hpp"
#include "tgmem/tensor.hpp"

namespace tgmem {

// Rolling record of each vertex's most recent interaction partners, oldest
// first. Only positive events are recorded.
class NeighborLog {
public:
    explicit NeighborLog(std::size_t num_vertices, std::size_t cap = 10);

    void record(std::uint32_t src, std::uint32_t dst);
    std::span<const std::uint32_t> neighbors(std::uint32_t v) const;
    std::size_t cap() const { return cap_; }
    void reset();

private:
    std::size_t cap_;
    std::vector<std::vector<std::uint32_t>> lists_;
};

struct BatchScore {
    double probability;
    bool positive;
};

struct BatchOutcome {
    double bce = 0.0;
    double penalty = 0.0;
    std::size_t memory_writes = 0;
    std::vector<BatchScore> scores;  // cur positives first, then negatives
};

struct StepConfig {
    // Run backward and accumulate parameter gradients.
    bool backward = false;
    // Write updated memory, neighbor entries, and tracker observations.
    // With commit=false a step is a pure function of the given state, which
    // is what repeated-evaluation probes need.
    bool commit = true;
    // Allow tracker statistics to absorb this step's deltas (training yes,
    // evaluation no).
    bool update_tracker = true;
    // Record every distinct vertex-state leaf so callers can read the loss
    // gradient with respect to the starting memory.
    bool trace_memory_leaves = false;
};

struct StepResult {
    BatchOutcome outcome;
    double loss_total = 0.0;  // bce + penalty
    // (vertex, d loss / d starting state) for every vertex whose state
    // entered the tape; only filled when trace_memory_leaves is set.
    std::vector<std::pair<std::uint32_t, Tensor>> memory_leaf_grads;
};

// One lag-one step: apply `prev`'s events to memory (each vertex keeps its
// most recent message), then score `cur` from the updated states. `prev`
// may be null for the first batch. With a PresRuntime the raw updates pass
// through predict-and-fuse and the loss gains the smoothing penalty.
StepResult batch_step(Model& model, MemoryStore& mem, NeighborLog* nlog,
                      const TemporalBatch* prev, const TemporalBatch& cur, PresRuntime* pres,
                      const StepConfig& cfg);

// batch_step with commit only; returns the batch loss.
double process_batch(Model& model, MemoryStore& mem, const TemporalBatch* prev,
                     const TemporalBatch& cur, NeighborLog* nlog = nullptr,
                     PresRuntime* pres = nullptr);

struct CoherenceRow {
    std::size_t batch_index = 0;
    double min_coherence = 1.0;
    double mean_coherence = 1.0;
    double frac_undefined = 0.0;
};

struct EpochResult {
    double loss = 0.0;  // summed link loss over batches, penalty excluded
    double penalty = 0.0;
    double max_penalty = 0.0;
    double seconds = 0.0;
    std::size_t num_batches = 0;
    std::vector<CoherenceRow> coherence;  // one row per batch when collected
};

// One pass over the training stream: memory (and tracker, per options)
// reset, then per batch sample negatives, step, backward, sgd. Negative
// draws are seeded from (hyper.seed, epoch_index, batch index) so a rerun
// is bit-identical. epoch_index is 1-based.
EpochResult train_epoch(Model& model, MemoryStore& mem, const EventStream& train,
                        std::size_t epoch_index, PresRuntime* pres, NeighborLog* nlog,
                        bool collect_coherence = false);

// Average precision of a pooled score list: mean over positives of
// precision at the positive's rank, scores descending. Ties rank negatives
// ahead of positives. Throws UndefinedMetricError when no positives.
double average_precision(std::span<const BatchScore> scores);

// Rolls memory forward in lag-one order over `eval_batches` (negatives
// already attached), scoring each batch before its own events are applied.
// `warm` is the batch immediately preceding the evaluation window, usually
// the last training batch; its events are applied first. No parameters
// change and the tracker does not learn, but `mem` and `nlog` advance.
double evaluate_ap(Model& model, MemoryStore& mem, const TemporalBatch* warm,
                   const std::vector<TemporalBatch>& eval_batches, NeighborLog* nlog = nullptr,
                   PresRuntime* pres = nullptr);

}  // namespace tgmem
