#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tgmem/tensor.hpp"

namespace tgmem {

struct Parameter;

// Handle to a node on a Tape. Cheap to copy; valid for the tape's lifetime.
struct Var {
    class Tape* tape = nullptr;
    std::int32_t id = -1;
};

// Append-only reverse-mode tape over Tensors. Forward calls append nodes in
// topological order; backward() walks the nodes exactly once in reverse, so
// every node's adjoint is complete before it propagates to its inputs.
// Every primitive checks its output for NaN/Inf and throws NumericError.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Differentiable leaf holding a copy of `value`.
    Var leaf(const Tensor& value);
    // Leaf tied to a Parameter: after backward(), harvest() accumulates the
    // leaf's adjoint into the parameter's grad.
    Var lease(Parameter& p);

    // Seeds d(loss)/d(loss) = 1 and runs the reverse sweep. `loss` must be
    // scalar (1x1). Adjoints from a previous backward() are discarded.
    void backward(Var loss);
    // Adds the adjoint of every leased leaf into its parameter's grad.
    void harvest();

    const Tensor& value(Var v) const;
    // Adjoint of a node; only valid after backward().
    const Tensor& adjoint(Var v) const;

    std::size_t size() const { return nodes_.size(); }

    // Primitives append a node and return its handle. Binary ops require
    // matching shapes unless stated otherwise.
    friend Var matmul(Var a, Var b);
    friend Var add(Var a, Var b);
    friend Var sub(Var a, Var b);
    // Elementwise product; either side may be scalar (1x1), broadcast over
    // the other.
    friend Var hadamard(Var a, Var b);
    friend Var concat_rows(const std::vector<Var>& parts);
    friend Var scale(Var a, double k);
    friend Var sigmoid(Var a);
    friend Var tanh_op(Var a);
    friend Var relu(Var a);
    friend Var l2_norm(Var a);   // Frobenius norm over all entries -> scalar
    friend Var dot(Var a, Var b);  // flattened inner product -> scalar
    friend Var mean(Var a);        // mean over all entries -> scalar
    friend Var div(Var a, Var b);  // elementwise; scalar b broadcasts
    friend Var log_op(Var a);
    // Numerically stable binary cross-entropy of a scalar logit against a
    // constant label: softplus(x) - y*x. Local gradient sigmoid(x) - y.
    friend Var bce_with_logits(Var logit, double label);
    friend Var add_n(const std::vector<Var>& terms);

private:
    enum class Op : std::uint8_t {
        leaf,
        matmul,
        add,
        sub,
        hadamard,
        concat_rows,
        scale,
        sigmoid,
        tanh_act,
        relu,
        l2_norm,
        dot,
        mean,
        div,
        log_e,
        bce_logits,
        add_n,
    };

    struct Node {
        Op op;
        std::vector<std::int32_t> inputs;
        double attr = 0.0;  // scale factor or bce label
    };

    Var append(Op op, std::vector<std::int32_t> inputs, Tensor value, double attr = 0.0);
    void check_mine(Var v, const char* op) const;
    void propagate(std::int32_t id);

    std::vector<Node> nodes_;
    std::vector<Tensor> values_;
    std::vector<Tensor> adjoints_;
    std::vector<std::pair<std::int32_t, Parameter*>> leases_;
    bool swept_ = false;
};

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var hadamard(Var a, Var b);
Var concat_rows(const std::vector<Var>& parts);
Var scale(Var a, double k);
Var sigmoid(Var a);
Var tanh_op(Var a);
Var relu(Var a);
Var l2_norm(Var a);
Var dot(Var a, Var b);
Var mean(Var a);
Var div(Var a, Var b);
Var log_op(Var a);
Var bce_with_logits(Var logit, double label);
Var add_n(const std::vector<Var>& terms);

}  // namespace tgmem
