#pragma once

#include <span>
#include <string>

#include "tgmem/tensor.hpp"

namespace tgmem {

// A trainable tensor with its gradient accumulator. Gradients are additive
// across backward passes and are zeroed by sgd_step.
struct Parameter {
    Parameter(std::string name_, Tensor value_)
        : name(std::move(name_)), value(std::move(value_)), grad(value.rows(), value.cols()) {}

    std::string name;
    Tensor value;
    Tensor grad;
};

// value <- value - lr * grad for every parameter, then zeroes all grads.
// lr must be > 0; any non-finite gradient aborts the step before touching
// a single parameter.
void sgd_step(std::span<Parameter* const> params, double lr);

}  // namespace tgmem
