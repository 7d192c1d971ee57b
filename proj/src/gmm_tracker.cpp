#include "tgmem/gmm_tracker.hpp"

#include <algorithm>

#include "tgmem/errors.hpp"

namespace tgmem {

GmmTracker::GmmTracker(std::size_t num_vertices, std::size_t dim)
    : num_vertices_(num_vertices), dim_(dim), xi_(kComponents * num_vertices * dim, 0.0),
      psi_(kComponents * num_vertices * dim, 0.0), counts_(kComponents * num_vertices, 0) {}

void GmmTracker::check_row(std::uint32_t v, std::size_t component) const {
    if (v >= num_vertices_) {
        throw ArgumentError("tracker: vertex " + std::to_string(v) + " out of range (|V| = " +
                            std::to_string(num_vertices_) + ")");
    }
    if (component >= kComponents) {
        throw ArgumentError("tracker: component " + std::to_string(component) + " out of range");
    }
}

void GmmTracker::update(std::uint32_t v, Polarity polarity, const Tensor& delta) {
    check_row(v, 0);
    if (delta.size() != dim_) {
        throw DimensionError("tracker update dim " + std::to_string(delta.size()) + " != " +
                             std::to_string(dim_));
    }
    if (!delta.all_finite()) {
        ++skipped_;
        return;
    }
    const std::size_t comp = polarity == Polarity::positive ? 0 : 1;
    const std::size_t base = row(v, comp) * dim_;
    for (std::size_t i = 0; i < dim_; ++i) {
        xi_[base + i] += delta[i];
        psi_[base + i] += delta[i] * delta[i];
    }
    ++counts_[row(v, comp)];
    ++totals_[comp];
}

std::uint64_t GmmTracker::count(std::uint32_t v, std::size_t component) const {
    check_row(v, component);
    return counts_[row(v, component)];
}

Tensor GmmTracker::mean(std::uint32_t v, std::size_t component) const {
    check_row(v, component);
    Tensor out(dim_, 1);
    const std::uint64_t n = counts_[row(v, component)];
    if (n == 0) return out;
    const std::size_t base = row(v, component) * dim_;
    for (std::size_t i = 0; i < dim_; ++i) out[i] = xi_[base + i] / static_cast<double>(n);
    return out;
}

Tensor GmmTracker::variance(std::uint32_t v, std::size_t component) const {
    check_row(v, component);
    Tensor out(dim_, 1);
    const std::uint64_t n = counts_[row(v, component)];
    if (n == 0) return out;
    const std::size_t base = row(v, component) * dim_;
    for (std::size_t i = 0; i < dim_; ++i) {
        const double m = xi_[base + i] / static_cast<double>(n);
        out[i] = psi_[base + i] / static_cast<double>(n) - m * m;
    }
    return out;
}

std::array<double, GmmTracker::kComponents> GmmTracker::mixture_weights() const {
    const std::uint64_t total = totals_[0] + totals_[1];
    if (total == 0) return {0.5, 0.5};
    return {static_cast<double>(totals_[0]) / static_cast<double>(total),
            static_cast<double>(totals_[1]) / static_cast<double>(total)};
}

void GmmTracker::reset() {
    std::fill(xi_.begin(), xi_.end(), 0.0);
    std::fill(psi_.begin(), psi_.end(), 0.0);
    std::fill(counts_.begin(), counts_.end(), 0);
    totals_ = {};
    skipped_ = 0;
}

std::vector<NamedTensor> GmmTracker::to_tensors() const {
    std::vector<NamedTensor> out;
    out.reserve(2 * kComponents + 1);
    for (std::size_t comp = 0; comp < kComponents; ++comp) {
        Tensor xi(num_vertices_, dim_);
        Tensor psi(num_vertices_, dim_);
        for (std::uint32_t v = 0; v < num_vertices_; ++v) {
            const std::size_t base = row(v, comp) * dim_;
            for (std::size_t i = 0; i < dim_; ++i) {
                xi.at(v, i) = xi_[base + i];
                psi.at(v, i) = psi_[base + i];
            }
        }
        const std::string suffix = std::to_string(comp);
        out.push_back(NamedTensor{"tracker/xi/" + suffix, std::move(xi)});
        out.push_back(NamedTensor{"tracker/psi/" + suffix, std::move(psi)});
    }
    Tensor n(num_vertices_, kComponents);
    for (std::uint32_t v = 0; v < num_vertices_; ++v)
        for (std::size_t comp = 0; comp < kComponents; ++comp)
            n.at(v, comp) = static_cast<double>(counts_[row(v, comp)]);
    out.push_back(NamedTensor{"tracker/n", std::move(n)});
    return out;
}

GmmTracker GmmTracker::from_tensors(const std::vector<NamedTensor>& tensors) {
    auto find = [&](const std::string& name) -> const Tensor& {
        for (const NamedTensor& nt : tensors) {
            if (nt.name == name) return nt.tensor;
        }
        throw IoError("tracker checkpoint: missing tensor " + name);
    };
    const Tensor& n = find("tracker/n");
    if (n.cols() != kComponents) throw IoError("tracker checkpoint: bad count shape");
    const Tensor& xi0 = find("tracker/xi/0");
    GmmTracker tracker(n.rows(), xi0.cols());
    for (std::size_t comp = 0; comp < kComponents; ++comp) {
        const std::string suffix = std::to_string(comp);
        const Tensor& xi = find("tracker/xi/" + suffix);
        const Tensor& psi = find("tracker/psi/" + suffix);
        if (xi.rows() != tracker.num_vertices_ || xi.cols() != tracker.dim_ ||
            psi.rows() != tracker.num_vertices_ || psi.cols() != tracker.dim_) {
            throw IoError("tracker checkpoint: inconsistent shapes");
        }
        for (std::uint32_t v = 0; v < tracker.num_vertices_; ++v) {
            const std::size_t base = tracker.row(v, comp) * tracker.dim_;
            for (std::size_t i = 0; i < tracker.dim_; ++i) {
                tracker.xi_[base + i] = xi.at(v, i);
                tracker.psi_[base + i] = psi.at(v, i);
            }
            const double c = n.at(v, comp);
            if (c < 0.0) throw IoError("tracker checkpoint: negative count");
            tracker.counts_[tracker.row(v, comp)] = static_cast<std::uint64_t>(c);
            tracker.totals_[comp] += static_cast<std::uint64_t>(c);
        }
    }
    return tracker;
}

Tensor predict_memory(const GmmTracker& tracker, const MemoryStore& mem, std::uint32_t v,
                      double t2, EventType type) {
    const double t1 = mem.last_update(v);
    if (t2 < t1) {
        throw ArgumentError("predict_memory: target time " + std::to_string(t2) +
                            " precedes last update " + std::to_string(t1));
    }
    Tensor drift(tracker.dim(), 1);
    if (type == EventType::unknown) {
        auto alpha = tracker.mixture_weights();
        for (std::size_t comp = 0; comp < GmmTracker::kComponents; ++comp) {
            if (tracker.count(v, comp) == 0) continue;
            Tensor m = tracker.mean(v, comp);
            for (std::size_t i = 0; i < drift.size(); ++i) drift[i] += alpha[comp] * m[i];
        }
    } else {
        const std::size_t comp = type == EventType::positive ? 0 : 1;
        if (tracker.count(v, comp) > 0) drift = tracker.mean(v, comp);
    }
    Tensor out = mem.state_tensor(v);
    const double gap = t2 - t1;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += gap * drift[i];
    return out;
}

}  // namespace tgmem
