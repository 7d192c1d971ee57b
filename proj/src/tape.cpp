#include "tgmem/tape.hpp"

#include <cmath>
#include <utility>

#include "tgmem/errors.hpp"
#include "tgmem/parameter.hpp"

namespace tgmem {

namespace {

double stable_sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

Var Tape::append(Op op, std::vector<std::int32_t> inputs, Tensor value, double attr) {
    value.require_finite("tape op");
    nodes_.push_back(Node{op, std::move(inputs), attr});
    values_.push_back(std::move(value));
    return Var{this, static_cast<std::int32_t>(nodes_.size() - 1)};
}

void Tape::check_mine(Var v, const char* op) const {
    if (v.tape != this || v.id < 0 || v.id >= static_cast<std::int32_t>(nodes_.size())) {
        throw ArgumentError(std::string(op) + ": var does not belong to this tape");
    }
}

Var Tape::leaf(const Tensor& value) { return append(Op::leaf, {}, value); }

Var Tape::lease(Parameter& p) {
    Var v = leaf(p.value);
    leases_.emplace_back(v.id, &p);
    return v;
}

const Tensor& Tape::value(Var v) const {
    check_mine(v, "value");
    return values_[v.id];
}

const Tensor& Tape::adjoint(Var v) const {
    check_mine(v, "adjoint");
    if (!swept_) throw ArgumentError("adjoint requested before backward()");
    return adjoints_[v.id];
}

void Tape::backward(Var loss) {
    check_mine(loss, "backward");
    const Tensor& l = values_[loss.id];
    if (l.rows() != 1 || l.cols() != 1) {
        throw DimensionError("backward: loss must be scalar, got " + std::to_string(l.rows()) +
                             "x" + std::to_string(l.cols()));
    }
    adjoints_.assign(values_.size(), Tensor());
    for (std::size_t i = 0; i < values_.size(); ++i) {
        adjoints_[i] = Tensor(values_[i].rows(), values_[i].cols());
    }
    adjoints_[loss.id][0] = 1.0;
    swept_ = true;
    for (std::int32_t id = static_cast<std::int32_t>(nodes_.size()) - 1; id >= 0; --id) {
        propagate(id);
    }
}

void Tape::harvest() {
    if (!swept_) throw ArgumentError("harvest requested before backward()");
    for (auto& [id, p] : leases_) {
        const Tensor& adj = adjoints_[id];
        for (std::size_t i = 0; i < adj.size(); ++i) p->grad[i] += adj[i];
    }
}

void Tape::propagate(std::int32_t id) {
    const Node& n = nodes_[id];
    const Tensor& out = values_[id];
    const Tensor& d = adjoints_[id];
    auto in = [&](std::size_t k) -> const Tensor& { return values_[n.inputs[k]]; };
    auto din = [&](std::size_t k) -> Tensor& { return adjoints_[n.inputs[k]]; };

    switch (n.op) {
        case Op::leaf:
            break;
        case Op::matmul: {
            const Tensor& a = in(0);
            const Tensor& b = in(1);
            Tensor& da = din(0);
            Tensor& db = din(1);
            // dA += dC * B^T ; dB += A^T * dC
            for (std::size_t r = 0; r < a.rows(); ++r)
                for (std::size_t k = 0; k < a.cols(); ++k) {
                    double acc = 0.0;
                    for (std::size_t c = 0; c < b.cols(); ++c) acc += d.at(r, c) * b.at(k, c);
                    da.at(r, k) += acc;
                }
            for (std::size_t k = 0; k < b.rows(); ++k)
                for (std::size_t c = 0; c < b.cols(); ++c) {
                    double acc = 0.0;
                    for (std::size_t r = 0; r < a.rows(); ++r) acc += a.at(r, k) * d.at(r, c);
                    db.at(k, c) += acc;
                }
            break;
        }
        case Op::add:
            for (std::size_t i = 0; i < d.size(); ++i) din(0)[i] += d[i];
            for (std::size_t i = 0; i < d.size(); ++i) din(1)[i] += d[i];
            break;
        case Op::sub:
            for (std::size_t i = 0; i < d.size(); ++i) din(0)[i] += d[i];
            for (std::size_t i = 0; i < d.size(); ++i) din(1)[i] -= d[i];
            break;
        case Op::hadamard: {
            const Tensor& a = in(0);
            const Tensor& b = in(1);
            bool a_scalar = a.size() == 1 && b.size() != 1;
            bool b_scalar = b.size() == 1 && a.size() != 1;
            if (a_scalar) {
                for (std::size_t i = 0; i < d.size(); ++i) {
                    din(0)[0] += d[i] * b[i];
                    din(1)[i] += d[i] * a[0];
                }
            } else if (b_scalar) {
                for (std::size_t i = 0; i < d.size(); ++i) {
                    din(0)[i] += d[i] * b[0];
                    din(1)[0] += d[i] * a[i];
                }
            } else {
                for (std::size_t i = 0; i < d.size(); ++i) {
                    din(0)[i] += d[i] * b[i];
                    din(1)[i] += d[i] * a[i];
                }
            }
            break;
        }
        case Op::concat_rows: {
            std::size_t row = 0;
            for (std::size_t k = 0; k < n.inputs.size(); ++k) {
                Tensor& dk = din(k);
                for (std::size_t r = 0; r < dk.rows(); ++r)
                    for (std::size_t c = 0; c < dk.cols(); ++c) dk.at(r, c) += d.at(row + r, c);
                row += dk.rows();
            }
            break;
        }
        case Op::scale:
            for (std::size_t i = 0; i < d.size(); ++i) din(0)[i] += n.attr * d[i];
            break;
        case Op::sigmoid:
            for (std::size_t i = 0; i < d.size(); ++i)
                din(0)[i] += d[i] * out[i] * (1.0 - out[i]);
            break;
        case Op::tanh_act:
            for (std::size_t i = 0; i < d.size(); ++i)
                din(0)[i] += d[i] * (1.0 - out[i] * out[i]);
            break;
        case Op::relu: {
            const Tensor& a = in(0);
            // Subgradient 0 at the kink.
            for (std::size_t i = 0; i < d.size(); ++i)
                if (a[i] > 0.0) din(0)[i] += d[i];
            break;
        }
        case Op::l2_norm: {
            const Tensor& a = in(0);
            double norm = out[0];
            if (norm > 0.0) {
                double g = d[0] / norm;
                for (std::size_t i = 0; i < a.size(); ++i) din(0)[i] += g * a[i];
            }
            break;
        }
        case Op::dot: {
            const Tensor& a = in(0);
            const Tensor& b = in(1);
            for (std::size_t i = 0; i < a.size(); ++i) {
                din(0)[i] += d[0] * b[i];
                din(1)[i] += d[0] * a[i];
            }
            break;
        }
        case Op::mean: {
            double g = d[0] / static_cast<double>(in(0).size());
            for (std::size_t i = 0; i < in(0).size(); ++i) din(0)[i] += g;
            break;
        }
        case Op::div: {
            const Tensor& a = in(0);
            const Tensor& b = in(1);
            if (b.size() == 1 && a.size() != 1) {
                double inv = 1.0 / b[0];
                for (std::size_t i = 0; i < a.size(); ++i) {
                    din(0)[i] += d[i] * inv;
                    din(1)[0] -= d[i] * a[i] * inv * inv;
                }
            } else {
                for (std::size_t i = 0; i < a.size(); ++i) {
                    double inv = 1.0 / b[i];
                    din(0)[i] += d[i] * inv;
                    din(1)[i] -= d[i] * a[i] * inv * inv;
                }
            }
            break;
        }
        case Op::log_e: {
            const Tensor& a = in(0);
            for (std::size_t i = 0; i < a.size(); ++i) din(0)[i] += d[i] / a[i];
            break;
        }
        case Op::bce_logits: {
            double x = in(0)[0];
            din(0)[0] += d[0] * (stable_sigmoid(x) - n.attr);
            break;
        }
        case Op::add_n:
            for (std::size_t k = 0; k < n.inputs.size(); ++k)
                for (std::size_t i = 0; i < d.size(); ++i) din(k)[i] += d[i];
            break;
    }
}

namespace {

Tape* shared_tape(Var a, Var b, const char* op) {
    if (a.tape == nullptr || a.tape != b.tape) {
        throw ArgumentError(std::string(op) + ": vars must share one tape");
    }
    return a.tape;
}

void require_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b)) {
        throw DimensionError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) +
                             "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                             "x" + std::to_string(b.cols()));
    }
}

}  // namespace

Var matmul(Var a, Var b) {
    Tape* t = shared_tape(a, b, "matmul");
    const Tensor& x = t->value(a);
    const Tensor& y = t->value(b);
    if (x.cols() != y.rows()) {
        throw DimensionError("matmul: inner dims " + std::to_string(x.cols()) + " vs " +
                             std::to_string(y.rows()));
    }
    Tensor out(x.rows(), y.cols());
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t k = 0; k < x.cols(); ++k) {
            double v = x.at(r, k);
            if (v == 0.0) continue;
            for (std::size_t c = 0; c < y.cols(); ++c) out.at(r, c) += v * y.at(k, c);
        }
    return t->append(Tape::Op::matmul, {a.id, b.id}, std::move(out));
}

Var add(Var a, Var b) {
    Tape* t = shared_tape(a, b, "add");
    require_shape(t->value(a), t->value(b), "add");
    return t->append(Tape::Op::add, {a.id, b.id}, t->value(a) + t->value(b));
}

Var sub(Var a, Var b) {
    Tape* t = shared_tape(a, b, "sub");
    require_shape(t->value(a), t->value(b), "sub");
    return t->append(Tape::Op::sub, {a.id, b.id}, t->value(a) - t->value(b));
}

Var hadamard(Var a, Var b) {
    Tape* t = shared_tape(a, b, "hadamard");
    const Tensor& x = t->value(a);
    const Tensor& y = t->value(b);
    if (x.size() == 1 && y.size() != 1) {
        Tensor out(y.rows(), y.cols());
        for (std::size_t i = 0; i < y.size(); ++i) out[i] = x[0] * y[i];
        return t->append(Tape::Op::hadamard, {a.id, b.id}, std::move(out));
    }
    if (y.size() == 1 && x.size() != 1) {
        Tensor out(x.rows(), x.cols());
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * y[0];
        return t->append(Tape::Op::hadamard, {a.id, b.id}, std::move(out));
    }
    require_shape(x, y, "hadamard");
    Tensor out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * y[i];
    return t->append(Tape::Op::hadamard, {a.id, b.id}, std::move(out));
}

Var concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw ArgumentError("concat_rows: no inputs");
    Tape* t = parts[0].tape;
    std::size_t rows = 0;
    std::size_t cols = t->value(parts[0]).cols();
    std::vector<std::int32_t> ids;
    ids.reserve(parts.size());
    for (Var p : parts) {
        shared_tape(parts[0], p, "concat_rows");
        if (t->value(p).cols() != cols) {
            throw DimensionError("concat_rows: column mismatch");
        }
        rows += t->value(p).rows();
        ids.push_back(p.id);
    }
    Tensor out(rows, cols);
    std::size_t row = 0;
    for (Var p : parts) {
        const Tensor& x = t->value(p);
        for (std::size_t r = 0; r < x.rows(); ++r)
            for (std::size_t c = 0; c < cols; ++c) out.at(row + r, c) = x.at(r, c);
        row += x.rows();
    }
    return t->append(Tape::Op::concat_rows, std::move(ids), std::move(out));
}

Var scale(Var a, double k) {
    Tape* t = a.tape;
    if (t == nullptr) throw ArgumentError("scale: null var");
    return t->append(Tape::Op::scale, {a.id}, k * t->value(a), k);
}

Var sigmoid(Var a) {
    Tape* t = a.tape;
    if (t == nullptr) throw ArgumentError("sigmoid: null var");
    const Tensor& x = t->value(a);
    Tensor out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = stable_sigmoid(x[i]);
    return t->append(Tape::Op::sigmoid, {a.id}, std::move(out));
}

Var tanh_op(Var a) {
    Tape* t = a.tape;
    if (t == nullptr) throw ArgumentError("tanh: null var");
    const Tensor& x = t->value(a);
    Tensor out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::tanh(x[i]);
    return t->append(Tape::Op::tanh_act, {a.id}, std::move(out));
}

Var relu(Var a) {
    Tape* t = a.tape;
    if (t == nullptr) throw ArgumentError("relu: null var");
    const Tensor& x = t->value(a);
    Tensor out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
    return t->append(Tape::Op::relu, {a.id}, std::move(out));
}

Var l2_norm(Var a) {
    Tape* t = a.tape;
    if (t == nullptr) throw ArgumentError("l2_norm: null var");
    return t->append(Tape::Op::l2_norm, {a.id}, Tensor::scalar(frobenius_norm(t->value(a))));
}

Var dot(Var a, Var b) {
    Tape* t = shared_tape(a, b, "dot");
    require_shape(t->value(a), t->value(b), "dot");
    return t->append(Tape::Op::dot, {a.id, b.id},
                     Tensor::scalar(dot_flat(t->value(a), t->value(b))));
}

Var mean(Var a) {
    Tape* t = a.tape;
    if (t == nullptr) throw ArgumentError("mean: null var");
    const Tensor& x = t->value(a);
    if (x.size() == 0) throw ArgumentError("mean: empty tensor");
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[i];
    return t->append(Tape::Op::mean, {a.id}, Tensor::scalar(acc / static_cast<double>(x.size())));
}

Var div(Var a, Var b) {
    Tape* t = shared_tape(a, b, "div");
    const Tensor& x = t->value(a);
    const Tensor& y = t->value(b);
    if (y.size() == 1 && x.size() != 1) {
        Tensor out(x.rows(), x.cols());
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] / y[0];
        return t->append(Tape::Op::div, {a.id, b.id}, std::move(out));
    }
    require_shape(x, y, "div");
    Tensor out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] / y[i];
    return t->append(Tape::Op::div, {a.id, b.id}, std::move(out));
}

Var log_op(Var a) {
    Tape* t = a.tape;
    if (t == nullptr) throw ArgumentError("log: null var");
    const Tensor& x = t->value(a);
    Tensor out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::log(x[i]);
    return t->append(Tape::Op::log_e, {a.id}, std::move(out));
}

Var bce_with_logits(Var logit, double label) {
    Tape* t = logit.tape;
    if (t == nullptr) throw ArgumentError("bce_with_logits: null var");
    const Tensor& x = t->value(logit);
    if (x.size() != 1) throw DimensionError("bce_with_logits: logit must be scalar");
    if (label < 0.0 || label > 1.0) throw ArgumentError("bce_with_logits: label outside [0,1]");
    double v = x[0];
    // softplus(x) - y*x, evaluated without overflow for large |x|.
    double loss = std::max(v, 0.0) - label * v + std::log1p(std::exp(-std::abs(v)));
    return t->append(Tape::Op::bce_logits, {logit.id}, Tensor::scalar(loss), label);
}

Var add_n(const std::vector<Var>& terms) {
    if (terms.empty()) throw ArgumentError("add_n: no inputs");
    Tape* t = terms[0].tape;
    std::vector<std::int32_t> ids;
    ids.reserve(terms.size());
    const Tensor& first = t->value(terms[0]);
    Tensor out(first.rows(), first.cols());
    for (Var v : terms) {
        shared_tape(terms[0], v, "add_n");
        require_shape(first, t->value(v), "add_n");
        const Tensor& x = t->value(v);
        for (std::size_t i = 0; i < x.size(); ++i) out[i] += x[i];
        ids.push_back(v.id);
    }
    return t->append(Tape::Op::add_n, std::move(ids), std::move(out));
}

}  // namespace tgmem
