#include "doctest.h"

#include "tgmem/batching.hpp"
#include "tgmem/errors.hpp"
#include "tgmem/rng.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace tgmem;

namespace {

EventStream make_stream(std::size_t num_vertices, std::vector<Event> events,
                        std::size_t feature_dim = 0) {
    EventStream s;
    s.events = std::move(events);
    s.num_vertices = num_vertices;
    s.feature_dim = feature_dim;
    return s;
}

Event ev(std::uint32_t src, std::uint32_t dst, double t) {
    Event e;
    e.src = src;
    e.dst = dst;
    e.timestamp = t;
    return e;
}

EventStream random_stream(Rng& rng, std::size_t max_vertices, std::size_t max_events) {
    std::size_t v = 2 + rng.below(max_vertices - 1);
    std::size_t n = 1 + rng.below(max_events);
    std::vector<Event> events;
    double t = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        // Occasional repeated timestamps exercise the strict precedence rule.
        if (rng.uniform() > 0.3) t += 1.0;
        std::uint32_t a = static_cast<std::uint32_t>(rng.below(v));
        std::uint32_t b = static_cast<std::uint32_t>(rng.below(v));
        events.push_back(ev(a, b, t));
    }
    return make_stream(v, std::move(events));
}

bool shares_vertex(const Event& a, const Event& b) {
    return a.src == b.src || a.src == b.dst || a.dst == b.src || a.dst == b.dst;
}

std::vector<std::size_t> brute_force_pending(const TemporalBatch& batch, std::size_t k) {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < k; ++j) {
        if (batch.positives[j].timestamp < batch.positives[k].timestamp &&
            shares_vertex(batch.positives[j], batch.positives[k])) {
            out.push_back(j);
        }
    }
    for (std::size_t j = k + 1; j < batch.size(); ++j) {
        if (batch.positives[j].timestamp < batch.positives[k].timestamp &&
            shares_vertex(batch.positives[j], batch.positives[k])) {
            out.push_back(j);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

TEST_CASE("partition covers the stream with contiguous slices") {
    std::vector<Event> events;
    for (int i = 0; i < 10; ++i) events.push_back(ev(0, 1, i));
    EventStream s = make_stream(2, events);

    auto batches = partition_batches(s, 4);
    REQUIRE(batches.size() == 3);
    CHECK(batches[0].size() == 4);
    CHECK(batches[1].size() == 4);
    CHECK(batches[2].size() == 2);
    CHECK(batches[0].index == 0);
    CHECK(batches[2].index == 2);
    CHECK(batches[0].positives.data() == s.events.data());
    CHECK(batches[1].positives.data() == s.events.data() + 4);
    CHECK(batches[0].interval.begin == 0.0);
    CHECK(batches[0].interval.end == 3.0);
    CHECK(batches[2].interval.begin == 8.0);
    CHECK(batches[2].interval.end == 9.0);

    auto whole = partition_batches(s, 100);
    REQUIRE(whole.size() == 1);
    CHECK(whole[0].size() == 10);

    CHECK_THROWS_AS(partition_batches(s, 0), ArgumentError);
    CHECK(partition_batches(make_stream(2, {}), 4).empty());
}

TEST_CASE("chronological split respects counts and boundaries") {
    std::vector<Event> events;
    for (int i = 0; i < 20; ++i) events.push_back(ev(0, 1, i));
    EventStream s = make_stream(2, events, 0);

    SplitStreams splits = chronological_split(s, 0.7, 0.15);
    CHECK(splits.train.size() == 14);
    CHECK(splits.val.size() == 3);
    CHECK(splits.test.size() == 3);
    CHECK(splits.train.events.back().timestamp < splits.val.events.front().timestamp);
    CHECK(splits.val.events.back().timestamp < splits.test.events.front().timestamp);
    CHECK(splits.train.num_vertices == 2);
    CHECK(splits.val.feature_dim == 0);

    CHECK_THROWS_AS(chronological_split(s, 0.9, 0.2), ArgumentError);
    CHECK_THROWS_AS(chronological_split(s, 0.0, 0.5), ArgumentError);
}

TEST_CASE("pending_set matches brute force on random streams") {
    Rng rng(101);
    for (int trial = 0; trial < 60; ++trial) {
        EventStream s = random_stream(rng, 10, 50);
        std::size_t b = 1 + rng.below(s.size());
        for (const TemporalBatch& batch : partition_batches(s, b)) {
            for (std::size_t k = 0; k < batch.size(); ++k) {
                CHECK(pending_set(batch, k) == brute_force_pending(batch, k));
            }
        }
    }
}

TEST_CASE("pending_set by event value and error cases") {
    std::vector<Event> events{ev(0, 1, 1.0), ev(1, 2, 2.0), ev(3, 4, 3.0)};
    EventStream s = make_stream(5, events);
    auto batches = partition_batches(s, 3);
    REQUIRE(batches.size() == 1);

    CHECK(pending_set(batches[0], s.events[1]) == std::vector<std::size_t>{0});
    CHECK(pending_set(batches[0], s.events[2]).empty());
    CHECK_THROWS_AS(pending_set(batches[0], ev(7, 8, 1.0)), ArgumentError);
    CHECK_THROWS_AS(pending_set(batches[0], std::size_t{3}), ArgumentError);
}

TEST_CASE("equal timestamps never count as pending") {
    std::vector<Event> events{ev(0, 1, 1.0), ev(0, 1, 1.0), ev(0, 1, 1.0)};
    EventStream s = make_stream(2, events);
    auto batches = partition_batches(s, 3);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(pending_set(batches[0], k).empty());
    }
}

TEST_CASE("pending_stats on hand-built batches") {
    SUBCASE("all-distinct vertices") {
        std::vector<Event> events{ev(0, 1, 1.0), ev(2, 3, 2.0), ev(4, 5, 3.0)};
        EventStream s = make_stream(6, events);
        auto batches = partition_batches(s, 3);
        PendingStats st = pending_stats(batches[0]);
        CHECK(st.num_pending_events == 0);
        CHECK(st.max_chain == 1);
        CHECK(st.frac_pending == 0.0);
    }
    SUBCASE("three events on one pair") {
        std::vector<Event> events{ev(0, 1, 1.0), ev(0, 1, 2.0), ev(0, 1, 3.0)};
        EventStream s = make_stream(2, events);
        auto batches = partition_batches(s, 3);
        PendingStats st = pending_stats(batches[0]);
        CHECK(st.num_pending_events == 2);
        CHECK(st.max_chain == 3);
        CHECK(st.frac_pending == doctest::Approx(2.0 / 3.0));
    }
}

TEST_CASE("frac_pending is non-decreasing in batch size") {
    Rng rng(55);
    EventStream s = random_stream(rng, 6, 48);
    double previous = -1.0;
    for (std::size_t b : {4, 8, 16, 32, 48}) {
        auto batches = partition_batches(s, b);
        PendingStats st = pending_stats(batches[0]);
        CHECK(st.frac_pending >= previous);
        previous = st.frac_pending;
    }
}

TEST_CASE("negative sampling inherits anchors and avoids positives") {
    Rng rng(7);
    EventStream s = random_stream(rng, 10, 40);
    s.feature_dim = 2;
    for (Event& e : s.events) e.features = {1.0, 2.0};
    auto batches = partition_batches(s, 10);
    const TemporalBatch& batch = batches[0];

    std::vector<Event> negs = sample_negatives(batch, s, 3, 99);
    CHECK(negs.size() == 3 * batch.size());

    std::set<std::pair<std::uint32_t, std::uint32_t>> linked;
    for (const Event& e : s.events) {
        if (batch.interval.contains(e.timestamp)) {
            linked.insert({e.src, e.dst});
            linked.insert({e.dst, e.src});
        }
    }
    for (std::size_t i = 0; i < negs.size(); ++i) {
        const Event& n = negs[i];
        const Event& anchor = batch.positives[i / 3];
        CHECK(n.src == anchor.src);
        CHECK(n.timestamp == anchor.timestamp);
        CHECK(n.polarity == Polarity::negative);
        CHECK(n.dst != n.src);
        CHECK(n.dst < s.num_vertices);
        CHECK(linked.count({n.src, n.dst}) == 0);
        CHECK(n.features == std::vector<double>(2, 0.0));
    }

    CHECK(sample_negatives(batch, s, 3, 99) == negs);
    CHECK(sample_negatives(batch, s, 3, 100) != negs);
}

TEST_CASE("fixed-total negative sampling") {
    Rng rng(8);
    EventStream s = random_stream(rng, 10, 40);
    auto batches = partition_batches(s, 20);
    std::vector<Event> negs = sample_negatives_fixed_total(batches[0], s, 7, 5);
    CHECK(negs.size() == 7);
    for (const Event& n : negs) {
        CHECK(n.polarity == Polarity::negative);
        CHECK(n.dst != n.src);
    }
    CHECK(sample_negatives_fixed_total(batches[0], s, 7, 5) == negs);
}

TEST_CASE("saturated vertex space raises") {
    std::vector<Event> events{ev(0, 1, 1.0)};
    EventStream s = make_stream(2, events);
    auto batches = partition_batches(s, 1);
    CHECK_THROWS_AS(sample_negatives(batches[0], s, 1, 3), SaturationError);
}

TEST_CASE("batch stats csv layout") {
    std::vector<Event> events{ev(0, 1, 1.0), ev(0, 1, 2.0), ev(2, 3, 3.0), ev(2, 3, 3.0)};
    EventStream s = make_stream(4, events);
    auto batches = partition_batches(s, 2);
    std::stringstream out;
    write_batch_stats_csv(out, batches);
    std::string line;
    std::getline(out, line);
    CHECK(line == "batch_index,num_positives,num_pending,max_chain,frac_pending");
    std::getline(out, line);
    CHECK(line == "0,2,1,2,0.5");
    std::getline(out, line);
    CHECK(line == "1,2,0,1,0");
    CHECK(!std::getline(out, line));
}
