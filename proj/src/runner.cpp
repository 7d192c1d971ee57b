#include "tgmem/runner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "tgmem/batching.hpp"
#include "tgmem/csv.hpp"
#include "tgmem/errors.hpp"
#include "tgmem/rng.hpp"

namespace tgmem {

TrainingResult run_training(const TrainingPlan& plan) {
    plan.hyper.validate();
    plan.pres.validate();

    SplitStreams splits = chronological_split(plan.stream, plan.train_frac, plan.val_frac);
    if (splits.train.empty()) {
        throw ArgumentError("training split is empty; widen train_frac or supply more events");
    }
    if (splits.val.empty()) {
        throw ArgumentError("validation split is empty; widen val_frac or supply more events");
    }

    TrainingResult result;
    result.model = std::make_unique<Model>(
        plan.hyper, plan.stream.feature_dim,
        mix_seed(plan.hyper.seed, {seed_stream::kParamInit}));
    if (plan.pres.enabled) {
        result.pres = std::make_unique<PresRuntime>(plan.pres, plan.stream.num_vertices,
                                                    plan.hyper.state_dim);
    }

    MemoryStore mem(plan.stream.num_vertices, plan.hyper.state_dim);
    NeighborLog nlog(plan.stream.num_vertices);

    std::vector<TemporalBatch> train_batches =
        partition_batches(splits.train, plan.hyper.batch_size);
    result.num_train_batches = train_batches.size();

    std::vector<TemporalBatch> val_batches = partition_batches(splits.val, plan.hyper.batch_size);
    for (std::size_t j = 0; j < val_batches.size(); ++j) {
        val_batches[j].negatives = sample_negatives(
            val_batches[j], splits.val, plan.hyper.negatives_per_positive,
            mix_seed(plan.hyper.seed, {seed_stream::kValNegatives, j}));
    }

    const bool warm_needs_negatives =
        plan.hyper.memory_update_source == MemoryUpdateSource::positives_and_negatives;

    double seconds_sum = 0.0;
    for (std::size_t epoch = 1; epoch <= plan.hyper.epochs; ++epoch) {
        const bool last_epoch = epoch == plan.hyper.epochs;
        EpochResult er = train_epoch(*result.model, mem, splits.train, epoch, result.pres.get(),
                                     &nlog, plan.collect_coherence && last_epoch);
        seconds_sum += er.seconds;

        // Validation never disturbs training state: it advances copies.
        TemporalBatch warm = train_batches.back();
        if (warm_needs_negatives) {
            warm.negatives = sample_negatives(
                warm, splits.train, plan.hyper.negatives_per_positive,
                mix_seed(plan.hyper.seed,
                         {seed_stream::kTrainNegatives, epoch, train_batches.size() - 1}));
        }
        MemoryStore eval_mem = mem;
        NeighborLog eval_nlog = nlog;
        std::unique_ptr<PresRuntime> eval_pres;
        if (result.pres != nullptr) eval_pres = std::make_unique<PresRuntime>(*result.pres);
        const double ap = evaluate_ap(*result.model, eval_mem, &warm, val_batches, &eval_nlog,
                                      eval_pres.get());

        result.epochs.push_back(
            EpochRecord{epoch, er.loss, ap, er.seconds, er.penalty, er.max_penalty});
        if (last_epoch) result.coherence = std::move(er.coherence);
    }

    result.final_val_ap = result.epochs.back().ap;
    result.mean_epoch_seconds = seconds_sum / static_cast<double>(plan.hyper.epochs);
    result.min_coherence = std::numeric_limits<double>::quiet_NaN();
    if (!result.coherence.empty()) {
        double lowest = std::numeric_limits<double>::infinity();
        for (const CoherenceRow& row : result.coherence) {
            lowest = std::min(lowest, row.min_coherence);
        }
        result.min_coherence = lowest;
    }
    return result;
}

void write_metrics_csv(std::ostream& out, std::span<const EpochRecord> rows) {
    out << "epoch,loss,ap,seconds\n";
    for (const EpochRecord& row : rows) {
        out << row.epoch << ',' << fmt_double(row.loss) << ',' << fmt_double(row.ap) << ','
            << fmt_double(row.seconds) << '\n';
    }
}

void write_coherence_csv(std::ostream& out, std::span<const CoherenceRow> rows) {
    out << "batch_index,min_coherence,mean_coherence,frac_undefined\n";
    for (const CoherenceRow& row : rows) {
        out << row.batch_index << ',' << fmt_double(row.min_coherence) << ','
            << fmt_double(row.mean_coherence) << ',' << fmt_double(row.frac_undefined) << '\n';
    }
}

}  // namespace tgmem
