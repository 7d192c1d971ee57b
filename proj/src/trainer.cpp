#include "tgmem/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "tgmem/batching.hpp"
#include "tgmem/errors.hpp"
#include "tgmem/rng.hpp"

namespace tgmem {

NeighborLog::NeighborLog(std::size_t num_vertices, std::size_t cap)
    : cap_(cap), lists_(num_vertices) {
    if (cap == 0) throw ArgumentError("neighbor log cap must be positive");
}

void NeighborLog::record(std::uint32_t src, std::uint32_t dst) {
    auto push = [this](std::uint32_t v, std::uint32_t partner) {
        std::vector<std::uint32_t>& list = lists_.at(v);
        list.push_back(partner);
        if (list.size() > cap_) list.erase(list.begin());
    };
    push(src, dst);
    if (src != dst) push(dst, src);
}

std::span<const std::uint32_t> NeighborLog::neighbors(std::uint32_t v) const {
    return lists_.at(v);
}

void NeighborLog::reset() {
    for (auto& list : lists_) list.clear();
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// The message chosen for one vertex: its most recent event in the previous
// batch (latest timestamp, then latest position in positives-then-negatives
// order).
struct ChosenMessage {
    const Event* event = nullptr;
    std::size_t sequence = 0;
    std::uint32_t other = 0;
};

struct PendingWrite {
    std::uint32_t vertex = 0;
    Var fused;            // state to be written
    Tensor predicted;     // tracker extrapolation (empty when not in use)
    Tensor previous;      // state at batch start
    double event_time = 0.0;
    Polarity polarity = Polarity::positive;
};

EventType to_event_type(Polarity p) {
    return p == Polarity::positive ? EventType::positive : EventType::negative;
}

void check_batch_order(const TemporalBatch* prev, const TemporalBatch& cur) {
    if (prev == nullptr || prev->positives.empty() || cur.positives.empty()) return;
    if (prev->interval.end > cur.interval.begin) {
        throw ArgumentError("batch_step: previous batch must precede the current batch");
    }
}

// Most recent partners of each vertex once `prev`'s positives are taken into
// account, newest last, capped like the log itself.
class NeighborView {
public:
    NeighborView(const NeighborLog* log, const TemporalBatch* prev) : log_(log) {
        if (prev == nullptr) return;
        for (const Event& e : prev->positives) {
            extra_[e.src].push_back(e.dst);
            if (e.dst != e.src) extra_[e.dst].push_back(e.src);
        }
    }

    std::vector<std::uint32_t> partners(std::uint32_t v, std::size_t cap) const {
        std::vector<std::uint32_t> out;
        if (log_ != nullptr) {
            auto base = log_->neighbors(v);
            out.assign(base.begin(), base.end());
        }
        auto it = extra_.find(v);
        if (it != extra_.end()) out.insert(out.end(), it->second.begin(), it->second.end());
        if (out.size() > cap) out.erase(out.begin(), out.end() - static_cast<long>(cap));
        return out;
    }

private:
    const NeighborLog* log_;
    std::unordered_map<std::uint32_t, std::vector<std::uint32_t>> extra_;
};

}  // namespace

StepResult batch_step(Model& model, MemoryStore& mem, NeighborLog* nlog,
                      const TemporalBatch* prev, const TemporalBatch& cur, PresRuntime* pres,
                      const StepConfig& cfg) {
    check_batch_order(prev, cur);
    const bool pres_on = pres != nullptr && pres->options.enabled;
    const bool gated = pres_on && !pres->gate.pinned_one;
    double overhead = 0.0;

    Tape tape;
    ModelVars mv = lease_model(tape, model);
    std::optional<FusionVars> fv;
    if (gated) fv = lease_gate(tape, pres->gate);

    // One leaf per distinct vertex state, shared by every use on this tape.
    std::unordered_map<std::uint32_t, Var> state_leaves;
    auto state_leaf = [&](std::uint32_t v) {
        auto it = state_leaves.find(v);
        if (it != state_leaves.end()) return it->second;
        Var leaf = tape.leaf(mem.state_tensor(v));
        state_leaves.emplace(v, leaf);
        return leaf;
    };

    // Apply the previous batch: pick each vertex's last message, then one
    // memory update per touched vertex.
    std::vector<PendingWrite> writes;
    if (prev != nullptr) {
        std::unordered_map<std::uint32_t, ChosenMessage> chosen;
        std::size_t sequence = 0;
        auto consider = [&](const Event& e) {
            auto offer = [&](std::uint32_t self, std::uint32_t other) {
                ChosenMessage& slot = chosen[self];
                if (slot.event == nullptr || e.timestamp > slot.event->timestamp ||
                    (e.timestamp == slot.event->timestamp && sequence > slot.sequence)) {
                    slot = ChosenMessage{&e, sequence, other};
                }
            };
            offer(e.src, e.dst);
            if (e.dst != e.src) offer(e.dst, e.src);
            ++sequence;
        };
        for (const Event& e : prev->positives) consider(e);
        if (model.hyper().memory_update_source == MemoryUpdateSource::positives_and_negatives) {
            for (const Event& e : prev->negatives) consider(e);
        }

        std::vector<std::uint32_t> touched;
        touched.reserve(chosen.size());
        for (const auto& [v, pick] : chosen) touched.push_back(v);
        std::sort(touched.begin(), touched.end());

        writes.reserve(touched.size());
        for (std::uint32_t v : touched) {
            const ChosenMessage& pick = chosen[v];
            const Event& e = *pick.event;
            const double dt = e.timestamp - mem.last_update(v);
            Var features = tape.leaf(Tensor(e.features.size(), 1, e.features));
            Var message = message_fn(tape, mv, state_leaf(v), state_leaf(pick.other), features, dt);
            Var raw = memory_update(tape, mv, state_leaf(v), message);

            PendingWrite write;
            write.vertex = v;
            write.previous = mem.state_tensor(v);
            write.event_time = e.timestamp;
            write.polarity = e.polarity;
            if (pres_on) {
                const auto t0 = Clock::now();
                write.predicted = predict_memory(pres->tracker, mem, v, e.timestamp,
                                                 to_event_type(e.polarity));
                write.fused = gated ? fuse(tape, *fv, write.predicted, raw) : raw;
                overhead += seconds_since(t0);
            } else {
                write.fused = raw;
            }
            writes.push_back(std::move(write));
        }
    }

    // Score the current batch from the just-updated states.
    std::unordered_map<std::uint32_t, Var> updated;
    std::unordered_map<std::uint32_t, double> updated_time;
    for (const PendingWrite& w : writes) {
        updated.emplace(w.vertex, w.fused);
        updated_time.emplace(w.vertex, w.event_time);
    }
    auto scoring_state = [&](std::uint32_t v) {
        auto it = updated.find(v);
        return it != updated.end() ? it->second : state_leaf(v);
    };
    auto last_update_time = [&](std::uint32_t v) {
        auto it = updated_time.find(v);
        return it != updated_time.end() ? it->second : mem.last_update(v);
    };

    const EmbeddingMode mode = model.hyper().embedding_mode;
    NeighborView neighbor_view(nlog, mode == EmbeddingMode::neighbor_mean ? prev : nullptr);
    const std::size_t neighbor_cap = nlog != nullptr ? nlog->cap() : 10;

    auto embed_vertex = [&](std::uint32_t v, double t) {
        const double dt = std::max(0.0, t - last_update_time(v));
        std::vector<Var> neighbor_states;
        if (mode == EmbeddingMode::neighbor_mean) {
            for (std::uint32_t u : neighbor_view.partners(v, neighbor_cap)) {
                neighbor_states.push_back(scoring_state(u));
            }
        }
        return embed(tape, mv, mode, scoring_state(v), dt, neighbor_states);
    };

    StepResult result;
    std::vector<Var> loss_terms;
    loss_terms.reserve(cur.positives.size() + cur.negatives.size());
    auto score_event = [&](const Event& e, double label) {
        Var h_i = embed_vertex(e.src, e.timestamp);
        Var h_j = e.dst == e.src ? h_i : embed_vertex(e.dst, e.timestamp);
        Var logit = decode_logit(tape, mv, h_i, h_j);
        loss_terms.push_back(bce_with_logits(logit, label));
        const double p = 1.0 / (1.0 + std::exp(-tape.value(logit).at(0, 0)));
        result.outcome.scores.push_back(BatchScore{p, label > 0.5});
    };
    for (const Event& e : cur.positives) score_event(e, 1.0);
    for (const Event& e : cur.negatives) score_event(e, 0.0);
    if (loss_terms.empty()) {
        throw ArgumentError("batch_step: current batch has no events to score");
    }

    Var link_loss = add_n(loss_terms);
    Var total = link_loss;
    if (pres_on && pres->options.beta > 0.0 && !writes.empty()) {
        const auto t0 = Clock::now();
        const std::size_t dim = writes.front().previous.rows();
        Tensor s_prev(writes.size(), dim);
        std::vector<Var> new_rows;
        new_rows.reserve(writes.size());
        for (std::size_t r = 0; r < writes.size(); ++r) {
            for (std::size_t c = 0; c < dim; ++c) s_prev.at(r, c) = writes[r].previous.at(c, 0);
            new_rows.push_back(writes[r].fused);
        }
        std::optional<Var> penalty = coherence_penalty(tape, s_prev, new_rows, pres->options.beta);
        if (penalty.has_value()) {
            total = add(link_loss, *penalty);
            result.outcome.penalty = tape.value(*penalty).at(0, 0);
        }
        overhead += seconds_since(t0);
    }

    result.outcome.bce = tape.value(link_loss).at(0, 0);
    result.outcome.memory_writes = writes.size();
    result.loss_total = tape.value(total).at(0, 0);

    if (cfg.backward) {
        tape.backward(total);
        tape.harvest();
        if (cfg.trace_memory_leaves) {
            std::vector<std::uint32_t> traced;
            traced.reserve(state_leaves.size());
            for (const auto& [v, var] : state_leaves) traced.push_back(v);
            std::sort(traced.begin(), traced.end());
            for (std::uint32_t v : traced) {
                result.memory_leaf_grads.emplace_back(v, tape.adjoint(state_leaves.at(v)));
            }
        }
    }

    if (cfg.commit) {
        for (const PendingWrite& w : writes) {
            const Tensor& fused_value = tape.value(w.fused);
            mem.set_state(w.vertex, fused_value);
            mem.set_last_update(w.vertex, w.event_time);
            if (pres_on && cfg.update_tracker) {
                const auto t0 = Clock::now();
                pres->tracker.update(w.vertex, w.polarity, fused_value - w.predicted);
                overhead += seconds_since(t0);
            }
        }
        if (nlog != nullptr && prev != nullptr) {
            for (const Event& e : prev->positives) nlog->record(e.src, e.dst);
        }
        if (pres_on) pres->overhead_seconds.push_back(overhead);
    }
    return result;
}

double process_batch(Model& model, MemoryStore& mem, const TemporalBatch* prev,
                     const TemporalBatch& cur, NeighborLog* nlog, PresRuntime* pres) {
    StepConfig cfg;
    return batch_step(model, mem, nlog, prev, cur, pres, cfg).loss_total;
}

EpochResult train_epoch(Model& model, MemoryStore& mem, const EventStream& train,
                        std::size_t epoch_index, PresRuntime* pres, NeighborLog* nlog,
                        bool collect_coherence) {
    const Hyperparams& hyper = model.hyper();
    hyper.validate();
    if (pres != nullptr) pres->options.validate();

    const auto epoch_start = Clock::now();
    mem.reset();
    if (nlog != nullptr) nlog->reset();
    const bool pres_on = pres != nullptr && pres->options.enabled;
    if (pres_on && pres->options.tracker_reset_each_epoch) pres->tracker.reset();

    std::vector<Parameter*> params = model.parameters();
    if (pres_on && !pres->gate.pinned_one) params.push_back(&pres->gate.gamma_raw);

    EpochResult result;
    std::vector<TemporalBatch> batches = partition_batches(train, hyper.batch_size);
    result.num_batches = batches.size();

    std::optional<TemporalBatch> prev;
    for (std::size_t i = 0; i < batches.size(); ++i) {
        TemporalBatch cur = batches[i];
        cur.negatives = sample_negatives(
            cur, train, hyper.negatives_per_positive,
            mix_seed(hyper.seed, {seed_stream::kTrainNegatives, epoch_index, i}));

        StepConfig cfg;
        cfg.backward = true;
        StepResult step =
            batch_step(model, mem, nlog, prev.has_value() ? &*prev : nullptr, cur, pres, cfg);
        result.loss += step.outcome.bce;
        result.penalty += step.outcome.penalty;
        result.max_penalty = std::max(result.max_penalty, step.outcome.penalty);

        if (hyper.lr > 0.0) {
            sgd_step(params, hyper.lr);
        } else {
            for (Parameter* p : params) {
                p->grad = Tensor(p->grad.rows(), p->grad.cols());
            }
        }

        if (collect_coherence) {
            CoherenceReport report = empirical_memory_coherence(model, cur, mem);
            result.coherence.push_back(CoherenceRow{i, report.min_coherence,
                                                    report.mean_coherence,
                                                    report.frac_undefined});
        }
        prev = std::move(cur);
    }

    result.seconds = seconds_since(epoch_start);
    return result;
}

double average_precision(std::span<const BatchScore> scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a].probability != scores[b].probability) {
            return scores[a].probability > scores[b].probability;
        }
        // Negatives outrank positives at equal score, so ties never flatter
        // the model.
        if (scores[a].positive != scores[b].positive) return !scores[a].positive;
        return a < b;
    });

    std::size_t positives_seen = 0;
    double sum_precision = 0.0;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        if (!scores[order[rank]].positive) continue;
        positives_seen += 1;
        sum_precision +=
            static_cast<double>(positives_seen) / static_cast<double>(rank + 1);
    }
    if (positives_seen == 0) {
        throw UndefinedMetricError("average precision: no positive examples");
    }
    return sum_precision / static_cast<double>(positives_seen);
}

double evaluate_ap(Model& model, MemoryStore& mem, const TemporalBatch* warm,
                   const std::vector<TemporalBatch>& eval_batches, NeighborLog* nlog,
                   PresRuntime* pres) {
    std::vector<BatchScore> pooled;
    const TemporalBatch* prev = warm;
    StepConfig cfg;
    cfg.update_tracker = false;
    for (const TemporalBatch& batch : eval_batches) {
        StepResult step = batch_step(model, mem, nlog, prev, batch, pres, cfg);
        pooled.insert(pooled.end(), step.outcome.scores.begin(), step.outcome.scores.end());
        prev = &batch;
    }
    return average_precision(pooled);
}

}  // namespace tgmem
