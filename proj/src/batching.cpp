#include "tgmem/batching.hpp"

#include <algorithm>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include "tgmem/csv.hpp"
#include "tgmem/errors.hpp"
#include "tgmem/rng.hpp"

namespace tgmem {

SplitStreams chronological_split(const EventStream& stream, double train_frac, double val_frac) {
    if (!(train_frac > 0.0) || !(val_frac > 0.0) || !(train_frac + val_frac < 1.0)) {
        throw ArgumentError("chronological_split: fractions must be positive and sum below 1, got " +
                            std::to_string(train_frac) + " and " + std::to_string(val_frac));
    }
    const auto n = stream.size();
    const auto n_train = static_cast<std::size_t>(train_frac * static_cast<double>(n));
    const auto n_val = static_cast<std::size_t>(val_frac * static_cast<double>(n));

    SplitStreams out;
    for (EventStream* s : {&out.train, &out.val, &out.test}) {
        s->num_vertices = stream.num_vertices;
        s->feature_dim = stream.feature_dim;
    }
    out.train.events.assign(stream.events.begin(), stream.events.begin() + n_train);
    out.val.events.assign(stream.events.begin() + n_train, stream.events.begin() + n_train + n_val);
    out.test.events.assign(stream.events.begin() + n_train + n_val, stream.events.end());
    return out;
}

std::vector<TemporalBatch> partition_batches(const EventStream& stream, std::size_t batch_size) {
    if (batch_size == 0) throw ArgumentError("partition_batches: batch size must be >= 1");
    std::vector<TemporalBatch> batches;
    const std::size_t n = stream.size();
    batches.reserve((n + batch_size - 1) / batch_size);
    for (std::size_t begin = 0; begin < n; begin += batch_size) {
        const std::size_t end = std::min(begin + batch_size, n);
        TemporalBatch b;
        b.index = batches.size();
        b.positives = std::span<const Event>(stream.events.data() + begin, end - begin);
        b.interval = TimeInterval{stream.events[begin].timestamp, stream.events[end - 1].timestamp};
        batches.push_back(std::move(b));
    }
    return batches;
}

namespace {

std::uint64_t pair_key(std::uint32_t a, std::uint32_t b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | b;
}

// Unordered vertex pairs with a positive event inside the batch interval,
// taken over the whole stream so boundary ties in adjacent batches count.
std::unordered_set<std::uint64_t> positive_pairs_in_interval(const EventStream& stream,
                                                             const TimeInterval& interval) {
    auto lo = std::lower_bound(stream.events.begin(), stream.events.end(), interval.begin,
                               [](const Event& e, double t) { return e.timestamp < t; });
    auto hi = std::upper_bound(stream.events.begin(), stream.events.end(), interval.end,
                               [](double t, const Event& e) { return t < e.timestamp; });
    std::unordered_set<std::uint64_t> pairs;
    pairs.reserve(static_cast<std::size_t>(hi - lo) * 2);
    for (auto it = lo; it != hi; ++it) pairs.insert(pair_key(it->src, it->dst));
    return pairs;
}

Event draw_negative(const Event& anchor, const EventStream& stream,
                    const std::unordered_set<std::uint64_t>& pairs, Rng& rng) {
    const std::size_t num_vertices = stream.num_vertices;
    const std::size_t max_draws = 10 * num_vertices;
    for (std::size_t attempt = 0; attempt < max_draws; ++attempt) {
        auto dst = static_cast<std::uint32_t>(rng.below(num_vertices));
        if (dst == anchor.src) continue;
        if (pairs.count(pair_key(anchor.src, dst)) != 0) continue;
        Event neg;
        neg.src = anchor.src;
        neg.dst = dst;
        neg.timestamp = anchor.timestamp;
        neg.features.assign(stream.feature_dim, 0.0);
        neg.polarity = Polarity::negative;
        return neg;
    }
    throw SaturationError("sample_negatives: no admissible destination for source " +
                          std::to_string(anchor.src) + " after " + std::to_string(max_draws) +
                          " draws");
}

}  // namespace

std::vector<Event> sample_negatives(const TemporalBatch& batch, const EventStream& stream,
                                    std::size_t count_per_positive, std::uint64_t seed) {
    if (stream.num_vertices < 2) {
        throw ArgumentError("sample_negatives: need at least 2 vertices");
    }
    auto pairs = positive_pairs_in_interval(stream, batch.interval);
    Rng rng(seed);
    std::vector<Event> negatives;
    negatives.reserve(batch.size() * count_per_positive);
    for (const Event& pos : batch.positives) {
        for (std::size_t k = 0; k < count_per_positive; ++k) {
            negatives.push_back(draw_negative(pos, stream, pairs, rng));
        }
    }
    return negatives;
}

std::vector<Event> sample_negatives_fixed_total(const TemporalBatch& batch,
                                                const EventStream& stream, std::size_t total,
                                                std::uint64_t seed) {
    if (batch.size() == 0) throw ArgumentError("sample_negatives_fixed_total: empty batch");
    if (stream.num_vertices < 2) {
        throw ArgumentError("sample_negatives_fixed_total: need at least 2 vertices");
    }
    auto pairs = positive_pairs_in_interval(stream, batch.interval);
    Rng rng(seed);
    std::vector<Event> negatives;
    negatives.reserve(total);
    for (std::size_t k = 0; k < total; ++k) {
        const Event& anchor = batch.positives[rng.below(batch.size())];
        negatives.push_back(draw_negative(anchor, stream, pairs, rng));
    }
    return negatives;
}

std::vector<std::size_t> pending_set(const TemporalBatch& batch, std::size_t pos_index) {
    if (pos_index >= batch.size()) {
        throw ArgumentError("pending_set: index " + std::to_string(pos_index) +
                            " outside batch of size " + std::to_string(batch.size()));
    }
    const Event& e = batch.positives[pos_index];
    std::vector<std::size_t> result;
    for (std::size_t j = 0; j < batch.size(); ++j) {
        const Event& other = batch.positives[j];
        if (!(other.timestamp < e.timestamp)) continue;
        if (other.src == e.src || other.src == e.dst || other.dst == e.src ||
            other.dst == e.dst) {
            result.push_back(j);
        }
    }
    return result;
}

std::vector<std::size_t> pending_set(const TemporalBatch& batch, const Event& e) {
    for (std::size_t j = 0; j < batch.size(); ++j) {
        if (batch.positives[j] == e) return pending_set(batch, j);
    }
    throw ArgumentError("pending_set: event not in batch");
}

PendingStats pending_stats(const TemporalBatch& batch) {
    PendingStats stats;
    const std::size_t n = batch.size();
    if (n == 0) return stats;

    // Sweep in chronological order, committing per-vertex state only when the
    // timestamp advances so that same-time events never see each other.
    std::unordered_map<std::uint32_t, std::size_t> best_chain;  // vertex -> longest chain so far
    std::unordered_set<std::uint32_t> seen;
    best_chain.reserve(n * 2);
    seen.reserve(n * 2);

    std::vector<std::size_t> chain(n, 1);
    std::size_t group_begin = 0;
    while (group_begin < n) {
        std::size_t group_end = group_begin;
        const double t = batch.positives[group_begin].timestamp;
        while (group_end < n && batch.positives[group_end].timestamp == t) ++group_end;

        for (std::size_t k = group_begin; k < group_end; ++k) {
            const Event& e = batch.positives[k];
            bool pending = seen.count(e.src) != 0 || seen.count(e.dst) != 0;
            if (pending) ++stats.num_pending_events;
            std::size_t best = 0;
            for (std::uint32_t v : {e.src, e.dst}) {
                auto it = best_chain.find(v);
                if (it != best_chain.end()) best = std::max(best, it->second);
            }
            chain[k] = best + 1;
        }
        for (std::size_t k = group_begin; k < group_end; ++k) {
            const Event& e = batch.positives[k];
            for (std::uint32_t v : {e.src, e.dst}) {
                seen.insert(v);
                auto [it, inserted] = best_chain.emplace(v, chain[k]);
                if (!inserted) it->second = std::max(it->second, chain[k]);
            }
        }
        group_begin = group_end;
    }

    stats.max_chain = *std::max_element(chain.begin(), chain.end());
    stats.frac_pending = static_cast<double>(stats.num_pending_events) / static_cast<double>(n);
    return stats;
}

void write_batch_stats_csv(std::ostream& out, const std::vector<TemporalBatch>& batches) {
    out << "batch_index,num_positives,num_pending,max_chain,frac_pending\n";
    for (const TemporalBatch& b : batches) {
        PendingStats s = pending_stats(b);
        out << b.index << ',' << b.size() << ',' << s.num_pending_events << ',' << s.max_chain
            << ',' << fmt_double(s.frac_pending) << '\n';
    }
}

}  // namespace tgmem
