#include "tgmem/model.hpp"

#include <cmath>

#include "tgmem/errors.hpp"
#include "tgmem/rng.hpp"

namespace tgmem {

MemoryUpdateSource parse_memory_update_source(const std::string& s) {
    if (s == "positives_only") return MemoryUpdateSource::positives_only;
    if (s == "positives_and_negatives") return MemoryUpdateSource::positives_and_negatives;
    throw ArgumentError("unknown memory update source '" + s + "'");
}

EmbeddingMode parse_embedding_mode(const std::string& s) {
    if (s == "identity") return EmbeddingMode::identity;
    if (s == "time_projection") return EmbeddingMode::time_projection;
    if (s == "neighbor_mean") return EmbeddingMode::neighbor_mean;
    throw ArgumentError("unknown embedding mode '" + s + "'");
}

std::string to_string(MemoryUpdateSource s) {
    return s == MemoryUpdateSource::positives_only ? "positives_only" : "positives_and_negatives";
}

std::string to_string(EmbeddingMode m) {
    switch (m) {
        case EmbeddingMode::identity: return "identity";
        case EmbeddingMode::time_projection: return "time_projection";
        default: return "neighbor_mean";
    }
}

void Hyperparams::validate() const {
    if (state_dim == 0) throw ArgumentError("state_dim must be >= 1");
    if (message_dim == 0) throw ArgumentError("message_dim must be >= 1");
    if (batch_size == 0) throw ArgumentError("batch_size must be >= 1");
    if (epochs == 0) throw ArgumentError("epochs must be >= 1");
    if (negatives_per_positive == 0) throw ArgumentError("negatives_per_positive must be >= 1");
    if (lr < 0.0 || !std::isfinite(lr)) throw ArgumentError("lr must be finite and >= 0");
}

namespace {

Tensor init_weight(std::size_t rows, std::size_t cols, Rng& rng) {
    Tensor w(rows, cols);
    const double stddev = 1.0 / std::sqrt(static_cast<double>(cols));
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.normal(0.0, stddev);
    return w;
}

}  // namespace

Model::Model(const Hyperparams& hyper, std::size_t feature_dim, std::uint64_t init_seed)
    : msg_w1("msg/w1", Tensor()),
      msg_b1("msg/b1", Tensor()),
      msg_w2("msg/w2", Tensor()),
      msg_b2("msg/b2", Tensor()),
      gru_wz("gru/wz", Tensor()),
      gru_wr("gru/wr", Tensor()),
      gru_wn("gru/wn", Tensor()),
      dec_w1("dec/w1", Tensor()),
      dec_b1("dec/b1", Tensor()),
      dec_w2("dec/w2", Tensor()),
      dec_b2("dec/b2", Tensor()),
      hyper_(hyper),
      feature_dim_(feature_dim) {
    hyper_.validate();
    const std::size_t ds = hyper_.state_dim;
    const std::size_t dm = hyper_.message_dim;
    Rng rng(init_seed);

    msg_w1 = Parameter("msg/w1", init_weight(dm, message_input_dim(), rng));
    msg_b1 = Parameter("msg/b1", Tensor(dm, 1));
    msg_w2 = Parameter("msg/w2", init_weight(dm, dm, rng));
    msg_b2 = Parameter("msg/b2", Tensor(dm, 1));

    gru_wz = Parameter("gru/wz", init_weight(ds, ds + dm, rng));
    gru_wr = Parameter("gru/wr", init_weight(ds, ds + dm, rng));
    gru_wn = Parameter("gru/wn", init_weight(ds, ds + dm, rng));

    if (hyper_.embedding_mode == EmbeddingMode::time_projection) {
        emb_weights.emplace_back("emb/w", init_weight(ds, ds, rng));
    } else if (hyper_.embedding_mode == EmbeddingMode::neighbor_mean) {
        emb_weights.emplace_back("emb/w_self", init_weight(ds, ds, rng));
        emb_weights.emplace_back("emb/w_neigh", init_weight(ds, ds, rng));
    }

    dec_w1 = Parameter("dec/w1", init_weight(ds, 2 * ds, rng));
    dec_b1 = Parameter("dec/b1", Tensor(ds, 1));
    dec_w2 = Parameter("dec/w2", init_weight(1, ds, rng));
    dec_b2 = Parameter("dec/b2", Tensor(1, 1));
}

std::vector<Parameter*> Model::parameters() {
    std::vector<Parameter*> out = {&msg_w1, &msg_b1, &msg_w2, &msg_b2,
                                   &gru_wz, &gru_wr, &gru_wn};
    for (Parameter& p : emb_weights) out.push_back(&p);
    out.push_back(&dec_w1);
    out.push_back(&dec_b1);
    out.push_back(&dec_w2);
    out.push_back(&dec_b2);
    return out;
}

ModelVars lease_model(Tape& tape, Model& model) {
    ModelVars mv;
    mv.msg_w1 = tape.lease(model.msg_w1);
    mv.msg_b1 = tape.lease(model.msg_b1);
    mv.msg_w2 = tape.lease(model.msg_w2);
    mv.msg_b2 = tape.lease(model.msg_b2);
    mv.gru_wz = tape.lease(model.gru_wz);
    mv.gru_wr = tape.lease(model.gru_wr);
    mv.gru_wn = tape.lease(model.gru_wn);
    for (Parameter& p : model.emb_weights) mv.emb_weights.push_back(tape.lease(p));
    mv.dec_w1 = tape.lease(model.dec_w1);
    mv.dec_b1 = tape.lease(model.dec_b1);
    mv.dec_w2 = tape.lease(model.dec_w2);
    mv.dec_b2 = tape.lease(model.dec_b2);
    return mv;
}

double time_encoding(double dt) { return std::log1p(dt); }

Var message_fn(Tape& tape, const ModelVars& mv, Var s_self, Var s_other, Var features,
               double dt) {
    if (dt < 0.0) throw ArgumentError("message_fn: negative time gap " + std::to_string(dt));
    Var phi = tape.leaf(Tensor::scalar(time_encoding(dt)));
    Var x = concat_rows({s_self, s_other, features, phi});
    Var hidden = tanh_op(add(matmul(mv.msg_w1, x), mv.msg_b1));
    return tanh_op(add(matmul(mv.msg_w2, hidden), mv.msg_b2));
}

Var memory_update(Tape& tape, const ModelVars& mv, Var state, Var message) {
    Var cat = concat_rows({state, message});
    Var z = sigmoid(matmul(mv.gru_wz, cat));
    Var r = sigmoid(matmul(mv.gru_wr, cat));
    Var cat_reset = concat_rows({hadamard(r, state), message});
    Var candidate = tanh_op(matmul(mv.gru_wn, cat_reset));
    const Tensor& s = tape.value(state);
    Var ones = tape.leaf(Tensor(s.rows(), s.cols(), std::vector<double>(s.size(), 1.0)));
    return add(hadamard(sub(ones, z), state), hadamard(z, candidate));
}

Var embed(Tape& tape, const ModelVars& mv, EmbeddingMode mode, Var state, double dt,
          const std::vector<Var>& neighbor_states) {
    switch (mode) {
        case EmbeddingMode::identity:
            return state;
        case EmbeddingMode::time_projection: {
            if (dt < 0.0) throw ArgumentError("embed: negative time gap " + std::to_string(dt));
            Var projected = matmul(mv.emb_weights[0], state);
            Var gain = tape.leaf(Tensor::scalar(1.0 + time_encoding(dt)));
            return hadamard(gain, projected);
        }
        case EmbeddingMode::neighbor_mean: {
            Var self_part = matmul(mv.emb_weights[0], state);
            if (neighbor_states.empty()) return self_part;
            Var mean_state = scale(add_n(neighbor_states),
                                   1.0 / static_cast<double>(neighbor_states.size()));
            return add(self_part, matmul(mv.emb_weights[1], mean_state));
        }
    }
    throw ArgumentError("embed: unknown mode");
}

Var decode_logit(Tape& tape, const ModelVars& mv, Var h_i, Var h_j) {
    Var x = concat_rows({h_i, h_j});
    Var hidden = tanh_op(add(matmul(mv.dec_w1, x), mv.dec_b1));
    return add(matmul(mv.dec_w2, hidden), mv.dec_b2);
}

Tensor message_value(Model& model, const Tensor& s_self, const Tensor& s_other,
                     const Tensor& features, double dt) {
    Tape tape;
    ModelVars mv = lease_model(tape, model);
    Var m = message_fn(tape, mv, tape.leaf(s_self), tape.leaf(s_other), tape.leaf(features), dt);
    return tape.value(m);
}

Tensor memory_update_value(Model& model, const Tensor& state, const Tensor& message) {
    Tape tape;
    ModelVars mv = lease_model(tape, model);
    Var s = memory_update(tape, mv, tape.leaf(state), tape.leaf(message));
    return tape.value(s);
}

double decode_probability(Model& model, const Tensor& h_i, const Tensor& h_j) {
    Tape tape;
    ModelVars mv = lease_model(tape, model);
    Var logit = decode_logit(tape, mv, tape.leaf(h_i), tape.leaf(h_j));
    double x = tape.value(logit)[0];
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace tgmem
