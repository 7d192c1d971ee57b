#include "tgmem/parameter.hpp"

#include "tgmem/errors.hpp"

namespace tgmem {

void sgd_step(std::span<Parameter* const> params, double lr) {
    if (!(lr > 0.0)) {
        throw ArgumentError("sgd_step: lr must be positive, got " + std::to_string(lr));
    }
    for (Parameter* p : params) {
        if (!p->grad.all_finite()) {
            throw NumericError("sgd_step: non-finite gradient in " + p->name);
        }
    }
    for (Parameter* p : params) {
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            p->value[i] -= lr * p->grad[i];
            p->grad[i] = 0.0;
        }
        p->value.require_finite("sgd_step: " + p->name);
    }
}

}  // namespace tgmem
