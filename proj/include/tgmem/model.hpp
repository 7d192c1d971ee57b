#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tgmem/parameter.hpp"
#include "tgmem/tape.hpp"
#include "tgmem/tensor.hpp"

namespace tgmem {

enum class MemoryUpdateSource : std::uint8_t { positives_only, positives_and_negatives };
enum class EmbeddingMode : std::uint8_t { identity, time_projection, neighbor_mean };

MemoryUpdateSource parse_memory_update_source(const std::string& s);
EmbeddingMode parse_embedding_mode(const std::string& s);
std::string to_string(MemoryUpdateSource s);
std::string to_string(EmbeddingMode m);

struct Hyperparams {
    std::size_t state_dim = 16;     // d_s
    std::size_t message_dim = 16;   // d_m
    std::size_t batch_size = 20;
    double lr = 0.1;                // 0 freezes parameters
    std::size_t epochs = 5;
    std::size_t negatives_per_positive = 1;
    std::uint64_t seed = 7;
    MemoryUpdateSource memory_update_source = MemoryUpdateSource::positives_only;
    EmbeddingMode embedding_mode = EmbeddingMode::identity;

    void validate() const;  // throws ArgumentError
};

// Message MLP, GRU gates, optional embedding projection, link decoder.
// Parameter layout is fixed by construction order, which keeps checkpoints
// and seeded initialization stable.
class Model {
public:
    Model(const Hyperparams& hyper, std::size_t feature_dim, std::uint64_t init_seed);

    const Hyperparams& hyper() const { return hyper_; }
    std::size_t feature_dim() const { return feature_dim_; }
    std::size_t message_input_dim() const { return 2 * hyper_.state_dim + feature_dim_ + 1; }

    std::vector<Parameter*> parameters();

    Parameter msg_w1, msg_b1, msg_w2, msg_b2;
    Parameter gru_wz, gru_wr, gru_wn;
    std::vector<Parameter> emb_weights;  // mode-dependent, see embed()
    Parameter dec_w1, dec_b1, dec_w2, dec_b2;

private:
    Hyperparams hyper_;
    std::size_t feature_dim_;
};

// Per-tape handles to the model's parameters.
struct ModelVars {
    Var msg_w1, msg_b1, msg_w2, msg_b2;
    Var gru_wz, gru_wr, gru_wn;
    std::vector<Var> emb_weights;
    Var dec_w1, dec_b1, dec_w2, dec_b2;
};

ModelVars lease_model(Tape& tape, Model& model);

// log(1 + dt); the time encoding fed to the message MLP and the
// time-projection embedding.
double time_encoding(double dt);

// m = tanh(W2 tanh(W1 [s_self; s_other; feat; time_encoding(dt)] + b1) + b2).
// dt must be >= 0.
Var message_fn(Tape& tape, const ModelVars& mv, Var s_self, Var s_other, Var features, double dt);

// Standard GRU cell without bias terms:
// z = sigma(Wz [s; m]), r = sigma(Wr [s; m]), n = tanh(Wn [r*s; m]),
// s' = (1 - z)*s + z*n.
Var memory_update(Tape& tape, const ModelVars& mv, Var state, Var message);

// Embedding of one vertex. `dt` is event time minus the vertex's last
// update (time_projection only); `neighbor_states` are the states of the
// vertex's most recent temporal neighbors (neighbor_mean only; empty means
// no neighbors yet).
Var embed(Tape& tape, const ModelVars& mv, EmbeddingMode mode, Var state, double dt,
          const std::vector<Var>& neighbor_states);

// Link logit for an embedded pair; probability is sigmoid(logit).
Var decode_logit(Tape& tape, const ModelVars& mv, Var h_i, Var h_j);

// Value-level convenience wrappers (throwaway tape); used by tests and the
// sequential per-event reference path.
Tensor message_value(Model& model, const Tensor& s_self, const Tensor& s_other,
                     const Tensor& features, double dt);
Tensor memory_update_value(Model& model, const Tensor& state, const Tensor& message);
double decode_probability(Model& model, const Tensor& h_i, const Tensor& h_j);

}  // namespace tgmem
