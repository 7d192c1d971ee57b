#include "tgmem/pres.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <unordered_map>
#include <vector>

#include "tgmem/batching.hpp"
#include "tgmem/errors.hpp"

namespace tgmem {

namespace {

double logit(double p) { return std::log(p / (1.0 - p)); }

void check_unit_interval(double gamma_init) {
    if (!std::isfinite(gamma_init) || gamma_init <= 0.0 || gamma_init >= 1.0) {
        throw ArgumentError("gamma_init must lie strictly inside (0, 1)");
    }
}

}  // namespace

FusionGate::FusionGate(double gamma_init, bool pinned)
    : gamma_raw("pres/gamma_raw", Tensor::scalar(0.0)), pinned_one(pinned) {
    check_unit_interval(gamma_init);
    gamma_raw.value = Tensor::scalar(logit(gamma_init));
}

double FusionGate::gamma_value() const {
    if (pinned_one) return 1.0;
    const double raw = gamma_raw.value.at(0, 0);
    return 1.0 / (1.0 + std::exp(-raw));
}

FusionVars lease_gate(Tape& tape, FusionGate& gate) {
    if (gate.pinned_one) {
        throw ArgumentError("a pinned gate has no trainable blend weight");
    }
    Var gamma = sigmoid(tape.lease(gate.gamma_raw));
    Var one = tape.leaf(Tensor::scalar(1.0));
    return FusionVars{gamma, sub(one, gamma)};
}

Var fuse(Tape& tape, const FusionVars& fv, const Tensor& s_hat, Var s_raw) {
    if (s_hat.rows() != tape.value(s_raw).rows() || s_hat.cols() != tape.value(s_raw).cols()) {
        throw DimensionError("fuse: predicted and raw states must share a shape");
    }
    Var predicted = tape.leaf(s_hat);
    return add(hadamard(fv.one_minus_gamma, predicted), hadamard(fv.gamma, s_raw));
}

Var correct_memory(Tape& tape, FusionGate& gate, const Tensor& s_hat, Var s_raw) {
    if (gate.pinned_one) return s_raw;
    return fuse(tape, lease_gate(tape, gate), s_hat, s_raw);
}

double coherence_loss(double prediction_loss, const Tensor& s_prev, const Tensor& s_new,
                      double beta) {
    if (s_prev.rows() != s_new.rows() || s_prev.cols() != s_new.cols()) {
        throw DimensionError("coherence_loss: state matrices must share a shape");
    }
    if (!std::isfinite(beta) || beta < 0.0) {
        throw ArgumentError("coherence_loss: beta must be finite and non-negative");
    }
    const double norm_prev = frobenius_norm(s_prev);
    const double norm_new = frobenius_norm(s_new);
    if (norm_prev < kCoherenceNormGuard || norm_new < kCoherenceNormGuard) {
        return prediction_loss;
    }
    const double cosine = dot_flat(s_prev, s_new) / (norm_prev * norm_new);
    return prediction_loss + beta * (1.0 - cosine);
}

std::optional<Var> coherence_penalty(Tape& tape, const Tensor& s_prev,
                                     const std::vector<Var>& new_rows, double beta) {
    if (!std::isfinite(beta) || beta < 0.0) {
        throw ArgumentError("coherence_penalty: beta must be finite and non-negative");
    }
    if (beta == 0.0 || new_rows.empty()) return std::nullopt;
    std::size_t total = 0;
    for (const Var& row : new_rows) {
        const Tensor& value = tape.value(row);
        if (value.cols() != 1) {
            throw DimensionError("coherence_penalty: state rows must be column vectors");
        }
        total += value.rows();
    }
    if (s_prev.rows() * s_prev.cols() != total) {
        throw DimensionError("coherence_penalty: state matrices must share a shape");
    }

    const double norm_prev = frobenius_norm(s_prev);
    if (norm_prev < kCoherenceNormGuard) return std::nullopt;

    Var stacked = concat_rows(new_rows);
    if (frobenius_norm(tape.value(stacked)) < kCoherenceNormGuard) return std::nullopt;

    Tensor unit_prev(total, 1);
    std::size_t k = 0;
    for (double v : s_prev.flat()) unit_prev[k++] = v / norm_prev;

    Var cosine = dot(tape.leaf(unit_prev), div(stacked, l2_norm(stacked)));
    Var one = tape.leaf(Tensor::scalar(1.0));
    return scale(sub(one, cosine), beta);
}

double coherence_ratio(const Tensor& g_stale, const Tensor& g_fresh) {
    const double denom = dot_flat(g_fresh, g_fresh);
    if (denom <= kCoherenceNormGuard * kCoherenceNormGuard) {
        throw UndefinedMetricError("coherence ratio: fresh gradient has zero norm");
    }
    return dot_flat(g_stale, g_fresh) / denom;
}

double event_pair_loss(Model& model, const Event& event, const Tensor& s_i, const Tensor& s_j,
                       double dt_i, double dt_j, double label) {
    Tape tape;
    ModelVars mv = lease_model(tape, model);
    Var si = tape.leaf(s_i);
    Var sj = (event.src == event.dst) ? si : tape.leaf(s_j);
    Var hi = embed(tape, mv, model.hyper().embedding_mode, si, dt_i, {});
    Var hj = embed(tape, mv, model.hyper().embedding_mode, sj, dt_j, {});
    Var loss = bce_with_logits(decode_logit(tape, mv, hi, hj), label);
    return tape.value(loss).at(0, 0);
}

PairGradient event_pair_gradient(Model& model, const Event& event, const Tensor& s_i,
                                 const Tensor& s_j, double dt_i, double dt_j, double label) {
    Tape tape;
    ModelVars mv = lease_model(tape, model);
    Var si = tape.leaf(s_i);
    Var sj = (event.src == event.dst) ? si : tape.leaf(s_j);
    Var hi = embed(tape, mv, model.hyper().embedding_mode, si, dt_i, {});
    Var hj = embed(tape, mv, model.hyper().embedding_mode, sj, dt_j, {});
    Var loss = bce_with_logits(decode_logit(tape, mv, hi, hj), label);
    tape.backward(loss);
    PairGradient out{tape.adjoint(si), tape.adjoint(sj), tape.value(loss).at(0, 0)};
    return out;
}

namespace {

// Per-vertex state trail across a sequential pass: entry k holds the state a
// vertex acquired at step k (steps are 1-based; the batch-start snapshot is
// step 0). Lookup returns the latest entry at or before the requested step.
struct VertexTrail {
    std::vector<std::size_t> steps;
    std::vector<Tensor> states;
    std::vector<double> update_times;
};

class SequentialStates {
public:
    explicit SequentialStates(const MemoryStore& base) : base_(base) {}

    Tensor state_at(std::uint32_t v, std::size_t step) const {
        const VertexTrail* trail = find(v);
        if (trail == nullptr) return base_.state_tensor(v);
        const std::size_t idx = latest_index(*trail, step);
        if (idx == kNone) return base_.state_tensor(v);
        return trail->states[idx];
    }

    double update_time_at(std::uint32_t v, std::size_t step) const {
        const VertexTrail* trail = find(v);
        if (trail == nullptr) return base_.last_update(v);
        const std::size_t idx = latest_index(*trail, step);
        if (idx == kNone) return base_.last_update(v);
        return trail->update_times[idx];
    }

    void record(std::uint32_t v, std::size_t step, Tensor state, double t) {
        VertexTrail& trail = trails_[v];
        trail.steps.push_back(step);
        trail.states.push_back(std::move(state));
        trail.update_times.push_back(t);
    }

private:
    static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

    const VertexTrail* find(std::uint32_t v) const {
        auto it = trails_.find(v);
        return it == trails_.end() ? nullptr : &it->second;
    }

    static std::size_t latest_index(const VertexTrail& trail, std::size_t step) {
        auto it = std::upper_bound(trail.steps.begin(), trail.steps.end(), step);
        if (it == trail.steps.begin()) return kNone;
        return static_cast<std::size_t>(std::distance(trail.steps.begin(), it)) - 1;
    }

    const MemoryStore& base_;
    std::unordered_map<std::uint32_t, VertexTrail> trails_;
};

PairGradient gradient_at_step(Model& model, const Event& event, const SequentialStates& seq,
                              std::size_t step) {
    const Tensor s_i = seq.state_at(event.src, step);
    const Tensor s_j = seq.state_at(event.dst, step);
    const double dt_i = std::max(0.0, event.timestamp - seq.update_time_at(event.src, step));
    const double dt_j = std::max(0.0, event.timestamp - seq.update_time_at(event.dst, step));
    return event_pair_gradient(model, event, s_i, s_j, dt_i, dt_j, 1.0);
}

Tensor stack_pair(const Tensor& a, const Tensor& b) {
    Tensor out(a.rows() + b.rows(), 1);
    std::size_t k = 0;
    for (double v : a.flat()) out[k++] = v;
    for (double v : b.flat()) out[k++] = v;
    return out;
}

}  // namespace

CoherenceReport empirical_memory_coherence(Model& model, const TemporalBatch& batch,
                                           const MemoryStore& mem) {
    CoherenceReport report;
    report.per_event.reserve(batch.positives.size());

    SequentialStates seq(mem);
    for (std::size_t k = 0; k < batch.positives.size(); ++k) {
        const Event& event = batch.positives[k];
        const std::size_t step = k + 1;
        const Tensor s_i = seq.state_at(event.src, step - 1);
        const Tensor s_j = seq.state_at(event.dst, step - 1);
        const double dt_i = std::max(0.0, event.timestamp - seq.update_time_at(event.src, step - 1));
        const double dt_j = std::max(0.0, event.timestamp - seq.update_time_at(event.dst, step - 1));
        const Tensor features(event.features.size(), 1, event.features);
        const Tensor msg_i = message_value(model, s_i, s_j, features, dt_i);
        const Tensor new_i = memory_update_value(model, s_i, msg_i);
        if (event.src == event.dst) {
            seq.record(event.src, step, new_i, event.timestamp);
            continue;
        }
        const Tensor msg_j = message_value(model, s_j, s_i, features, dt_j);
        const Tensor new_j = memory_update_value(model, s_j, msg_j);
        seq.record(event.src, step, new_i, event.timestamp);
        seq.record(event.dst, step, new_j, event.timestamp);
    }

    double min_mu = std::numeric_limits<double>::infinity();
    double sum_mu = 0.0;
    std::size_t counted = 0;

    for (std::size_t k = 0; k < batch.positives.size(); ++k) {
        const Event& event = batch.positives[k];
        const std::vector<std::size_t> pending = pending_set(batch, k);
        if (pending.empty()) {
            report.per_event.push_back(1.0);
            continue;
        }
        report.num_with_pending += 1;

        const PairGradient fresh = gradient_at_step(model, event, seq, k + 1);
        const Tensor g_fresh = stack_pair(fresh.grad_i, fresh.grad_j);
        const double denom = dot_flat(g_fresh, g_fresh);
        if (denom <= kCoherenceNormGuard * kCoherenceNormGuard) {
            report.per_event.push_back(std::numeric_limits<double>::quiet_NaN());
            report.num_undefined += 1;
            continue;
        }

        double mu = std::numeric_limits<double>::infinity();
        for (std::size_t p : pending) {
            const PairGradient stale = gradient_at_step(model, event, seq, p + 1);
            const Tensor g_stale = stack_pair(stale.grad_i, stale.grad_j);
            mu = std::min(mu, dot_flat(g_stale, g_fresh) / denom);
        }
        report.per_event.push_back(mu);
        min_mu = std::min(min_mu, mu);
        sum_mu += mu;
        counted += 1;
    }

    if (counted > 0) {
        report.min_coherence = min_mu;
        report.mean_coherence = sum_mu / static_cast<double>(counted);
    }
    if (!batch.positives.empty()) {
        report.frac_undefined =
            static_cast<double>(report.num_undefined) / static_cast<double>(batch.positives.size());
    }
    return report;
}

void PresOptions::validate() const {
    if (!std::isfinite(beta) || beta < 0.0) {
        throw ArgumentError("pres: beta must be finite and non-negative");
    }
    if (!gamma_pinned) check_unit_interval(gamma_init);
}

}  // namespace tgmem
