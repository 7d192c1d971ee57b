#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tgmem/event.hpp"
#include "tgmem/gmm_tracker.hpp"
#include "tgmem/memory_store.hpp"
#include "tgmem/model.hpp"
#include "tgmem/parameter.hpp"
#include "tgmem/tape.hpp"
#include "tgmem/tensor.hpp"

namespace tgmem {

// Scalar gate blending predicted and freshly computed memory states.
// gamma = sigmoid(gamma_raw) keeps the blend inside (0, 1) while gamma_raw
// trains unconstrained. A pinned gate is the degenerate gamma = 1 case: the
// fused state IS the raw state and no gate parameter participates.
struct FusionGate {
    explicit FusionGate(double gamma_init = 0.9, bool pinned = false);

    double gamma_value() const;

    Parameter gamma_raw;  // 1x1
    bool pinned_one = false;
};

struct FusionVars {
    Var gamma;
    Var one_minus_gamma;
};

FusionVars lease_gate(Tape& tape, FusionGate& gate);
Var fuse(Tape& tape, const FusionVars& fv, const Tensor& s_hat, Var s_raw);

// s_bar = (1 - gamma) * s_hat + gamma * s_raw on the tape, so gradients
// reach both the raw-state subgraph and the gate. The prediction s_hat
// enters as a constant. A pinned gate returns s_raw unchanged.
Var correct_memory(Tape& tape, FusionGate& gate, const Tensor& s_hat, Var s_raw);

// Norms below this are treated as zero and the smoothing penalty vanishes.
inline constexpr double kCoherenceNormGuard = 1e-12;

// prediction_loss + beta * (1 - <S_prev/|S_prev|, S_new/|S_new|>) with
// Frobenius norms over same-shaped matrices; the penalty term is 0 when
// either norm falls below the guard.
double coherence_loss(double prediction_loss, const Tensor& s_prev, const Tensor& s_new,
                      double beta);

// Tape version over the fused per-vertex rows; s_prev is detached. Returns
// nullopt when the guard zeroes the term.
std::optional<Var> coherence_penalty(Tape& tape, const Tensor& s_prev,
                                     const std::vector<Var>& new_rows, double beta);

// <g_stale, g_fresh> / |g_fresh|^2; the alignment of a stale gradient with
// the fresh one. Throws UndefinedMetricError when the denominator is zero.
double coherence_ratio(const Tensor& g_stale, const Tensor& g_fresh);

// Link loss of a single event evaluated at explicit endpoint states, with
// embeddings formed from those states alone. Self-loops collapse to one
// state argument.
double event_pair_loss(Model& model, const Event& event, const Tensor& s_i, const Tensor& s_j,
                       double dt_i, double dt_j, double label = 1.0);

struct PairGradient {
    Tensor grad_i;
    Tensor grad_j;
    double loss = 0.0;
};

// Gradient of event_pair_loss with respect to the two endpoint states.
PairGradient event_pair_gradient(Model& model, const Event& event, const Tensor& s_i,
                                 const Tensor& s_j, double dt_i, double dt_j, double label = 1.0);

struct CoherenceReport {
    // Per positive: the minimum alignment ratio over its pending events.
    // 1.0 for an empty pending set; NaN when the fresh gradient vanished.
    std::vector<double> per_event;
    double min_coherence = 1.0;   // over defined events with nonempty pending sets
    double mean_coherence = 1.0;  // over the same set
    std::size_t num_with_pending = 0;
    std::size_t num_undefined = 0;
    double frac_undefined = 0.0;  // num_undefined / |B|
};

// Measures, per positive event, how well the gradient taken at the states a
// sequential (one event per step) pass would have produced after each
// pending event aligns with the gradient at the event's own sequential
// states. `mem` must hold the memory as of the batch start; it is not
// modified.
CoherenceReport empirical_memory_coherence(Model& model, const TemporalBatch& batch,
                                           const MemoryStore& mem);

struct PresOptions {
    bool enabled = false;
    double beta = 0.1;
    double gamma_init = 0.9;
    bool gamma_pinned = false;
    bool tracker_reset_each_epoch = true;
    bool collect_coherence = false;

    void validate() const;
};

// Mutable prediction-correction state carried through a training run.
struct PresRuntime {
    PresRuntime(const PresOptions& options_, std::size_t num_vertices, std::size_t dim)
        : options(options_), tracker(num_vertices, dim),
          gate(options_.gamma_init, options_.gamma_pinned) {}

    PresOptions options;
    GmmTracker tracker;
    FusionGate gate;
    // Wall seconds spent in prediction/fusion/tracker work, one entry per
    // processed batch; feeds the overhead scaling check.
    std::vector<double> overhead_seconds;
};

}  // namespace tgmem
