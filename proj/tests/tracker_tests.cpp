#include "doctest.h"

#include "tgmem/errors.hpp"
#include "tgmem/gmm_tracker.hpp"
#include "tgmem/memory_store.hpp"
#include "tgmem/rng.hpp"

#include <cmath>
#include <limits>
#include <vector>

using namespace tgmem;

namespace {

// Two-pass reference: mean and population variance computed after the fact
// from the stored deltas.
struct TwoPass {
    std::vector<double> mean;
    std::vector<double> variance;
};

TwoPass two_pass(const std::vector<Tensor>& deltas, std::size_t dim) {
    TwoPass out{std::vector<double>(dim, 0.0), std::vector<double>(dim, 0.0)};
    if (deltas.empty()) return out;
    for (const Tensor& d : deltas) {
        for (std::size_t i = 0; i < dim; ++i) out.mean[i] += d[i];
    }
    for (std::size_t i = 0; i < dim; ++i) out.mean[i] /= static_cast<double>(deltas.size());
    for (const Tensor& d : deltas) {
        for (std::size_t i = 0; i < dim; ++i) {
            const double c = d[i] - out.mean[i];
            out.variance[i] += c * c;
        }
    }
    for (std::size_t i = 0; i < dim; ++i) out.variance[i] /= static_cast<double>(deltas.size());
    return out;
}

Tensor random_delta(Rng& rng, std::size_t dim) {
    Tensor d(dim, 1);
    for (std::size_t i = 0; i < dim; ++i) d[i] = rng.normal(0.1, 2.0);
    return d;
}

}  // namespace

TEST_CASE("streaming moments match two-pass statistics over 1000 deltas") {
    const std::size_t dim = 6;
    GmmTracker tracker(3, dim);
    Rng rng(91);
    std::vector<Tensor> pos_deltas;
    std::vector<Tensor> neg_deltas;
    for (int k = 0; k < 1000; ++k) {
        Tensor d = random_delta(rng, dim);
        if (k % 3 == 0) {
            tracker.update(1, Polarity::negative, d);
            neg_deltas.push_back(d);
        } else {
            tracker.update(1, Polarity::positive, d);
            pos_deltas.push_back(d);
        }
    }

    TwoPass pos = two_pass(pos_deltas, dim);
    TwoPass neg = two_pass(neg_deltas, dim);
    Tensor m0 = tracker.mean(1, 0);
    Tensor v0 = tracker.variance(1, 0);
    Tensor m1 = tracker.mean(1, 1);
    Tensor v1 = tracker.variance(1, 1);
    for (std::size_t i = 0; i < dim; ++i) {
        CHECK(std::fabs(m0[i] - pos.mean[i]) < 1e-10);
        CHECK(std::fabs(v0[i] - pos.variance[i]) < 1e-10);
        CHECK(std::fabs(m1[i] - neg.mean[i]) < 1e-10);
        CHECK(std::fabs(v1[i] - neg.variance[i]) < 1e-10);
    }
    CHECK(tracker.count(1, 0) == pos_deltas.size());
    CHECK(tracker.count(1, 1) == neg_deltas.size());
}

TEST_CASE("fresh tracker reads as zero") {
    GmmTracker tracker(2, 3);
    CHECK(tracker.count(0, 0) == 0);
    Tensor m = tracker.mean(0, 0);
    Tensor v = tracker.variance(0, 1);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(m[i] == 0.0);
        CHECK(v[i] == 0.0);
    }
    auto w = tracker.mixture_weights();
    CHECK(w[0] == 0.5);
    CHECK(w[1] == 0.5);
}

TEST_CASE("storage is exactly two rows per vertex") {
    for (std::size_t v : {1, 5, 400}) {
        for (std::size_t d : {2, 16}) {
            GmmTracker tracker(v, d);
            CHECK(tracker.statistic_rows() == 2 * v);
            CHECK(tracker.allocated_doubles() == 2 * 2 * v * d);
        }
    }
}

TEST_CASE("mixture weights follow per-component counts") {
    GmmTracker tracker(2, 2);
    Tensor d(2, 1, {1.0, 1.0});
    tracker.update(0, Polarity::positive, d);
    tracker.update(0, Polarity::positive, d);
    tracker.update(1, Polarity::positive, d);
    tracker.update(1, Polarity::negative, d);
    auto w = tracker.mixture_weights();
    CHECK(w[0] == doctest::Approx(0.75));
    CHECK(w[1] == doctest::Approx(0.25));
}

TEST_CASE("non-finite deltas are skipped and counted") {
    GmmTracker tracker(1, 2);
    Tensor good(2, 1, {1.0, 2.0});
    Tensor bad(2, 1, {1.0, std::numeric_limits<double>::quiet_NaN()});
    tracker.update(0, Polarity::positive, good);
    tracker.update(0, Polarity::positive, bad);
    CHECK(tracker.skipped_updates() == 1);
    CHECK(tracker.count(0, 0) == 1);
    CHECK(tracker.mean(0, 0)[1] == 2.0);
}

TEST_CASE("update rejects wrong shapes and vertices") {
    GmmTracker tracker(2, 3);
    CHECK_THROWS_AS(tracker.update(0, Polarity::positive, Tensor(2, 1)), DimensionError);
    CHECK_THROWS_AS(tracker.update(5, Polarity::positive, Tensor(3, 1)), ArgumentError);
    CHECK_THROWS_AS(tracker.mean(5, 0), ArgumentError);
    CHECK_THROWS_AS(tracker.mean(0, 2), ArgumentError);
}

TEST_CASE("reset clears all statistics") {
    GmmTracker tracker(1, 2);
    tracker.update(0, Polarity::positive, Tensor(2, 1, {1.0, 1.0}));
    tracker.reset();
    CHECK(tracker.count(0, 0) == 0);
    CHECK(tracker.mean(0, 0)[0] == 0.0);
    auto w = tracker.mixture_weights();
    CHECK(w[0] == 0.5);
}

TEST_CASE("tracker round trips through named tensors") {
    GmmTracker tracker(2, 2);
    Rng rng(17);
    for (int k = 0; k < 10; ++k) {
        tracker.update(static_cast<std::uint32_t>(k % 2),
                       k % 3 == 0 ? Polarity::negative : Polarity::positive,
                       random_delta(rng, 2));
    }
    GmmTracker back = GmmTracker::from_tensors(tracker.to_tensors());
    CHECK(back.num_vertices() == 2);
    CHECK(back.dim() == 2);
    for (std::uint32_t v = 0; v < 2; ++v) {
        for (std::size_t c = 0; c < GmmTracker::kComponents; ++c) {
            CHECK(back.count(v, c) == tracker.count(v, c));
            CHECK(back.mean(v, c) == tracker.mean(v, c));
            CHECK(back.variance(v, c) == tracker.variance(v, c));
        }
    }
}

TEST_CASE("prediction extrapolates along the tracked mean") {
    GmmTracker tracker(1, 2);
    MemoryStore mem(1, 2);
    mem.set_state(0, Tensor(2, 1, {1.0, -1.0}));
    mem.set_last_update(0, 2.0);

    SUBCASE("no observations predicts carry-forward") {
        Tensor p = predict_memory(tracker, mem, 0, 5.0, EventType::positive);
        CHECK(p[0] == 1.0);
        CHECK(p[1] == -1.0);
    }
    SUBCASE("known component uses its mean") {
        tracker.update(0, Polarity::positive, Tensor(2, 1, {0.5, 0.0}));
        tracker.update(0, Polarity::positive, Tensor(2, 1, {1.5, 0.0}));
        tracker.update(0, Polarity::negative, Tensor(2, 1, {-10.0, 0.0}));
        Tensor p = predict_memory(tracker, mem, 0, 4.0, EventType::positive);
        CHECK(p[0] == doctest::Approx(1.0 + 2.0 * 1.0));
        CHECK(p[1] == doctest::Approx(-1.0));
    }
    SUBCASE("unknown type mixes components by weight") {
        tracker.update(0, Polarity::positive, Tensor(2, 1, {2.0, 0.0}));
        tracker.update(0, Polarity::negative, Tensor(2, 1, {-4.0, 0.0}));
        Tensor p = predict_memory(tracker, mem, 0, 3.0, EventType::unknown);
        CHECK(p[0] == doctest::Approx(1.0 + 1.0 * (0.5 * 2.0 + 0.5 * -4.0)));
    }
    SUBCASE("time running backwards is rejected") {
        CHECK_THROWS_AS(predict_memory(tracker, mem, 0, 1.0, EventType::positive),
                        ArgumentError);
    }
}
