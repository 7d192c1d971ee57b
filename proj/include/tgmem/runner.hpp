#pragma once

#include <cstddef>
#include <memory>
#include <ostream>
#include <span>
#include <vector>

#include "tgmem/event.hpp"
#include "tgmem/model.hpp"
#include "tgmem/pres.hpp"
#include "tgmem/trainer.hpp"

namespace tgmem {

struct TrainingPlan {
    EventStream stream;
    double train_frac = 0.7;
    double val_frac = 0.15;
    Hyperparams hyper;
    PresOptions pres;
    // Measure per-batch coherence during the final epoch.
    bool collect_coherence = false;
};

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double loss = 0.0;      // summed link loss over training batches
    double ap = 0.0;        // validation AP after this epoch
    double seconds = 0.0;   // training wall time for this epoch
    double penalty = 0.0;
    double max_penalty = 0.0;
};

struct TrainingResult {
    std::vector<EpochRecord> epochs;
    std::vector<CoherenceRow> coherence;  // final-epoch per-batch rows
    double final_val_ap = 0.0;
    double min_coherence = 0.0;  // min over final-epoch batches; NaN if not collected
    double mean_epoch_seconds = 0.0;
    std::size_t num_train_batches = 0;
    std::unique_ptr<Model> model;
    std::unique_ptr<PresRuntime> pres;  // null when the scheme was disabled
};

// Chronological split, train for hyper.epochs epochs, validation AP after
// each. Validation rolls a copy of the training-end state forward, so the
// next epoch resumes exactly where training left off.
TrainingResult run_training(const TrainingPlan& plan);

void write_metrics_csv(std::ostream& out, std::span<const EpochRecord> rows);
void write_coherence_csv(std::ostream& out, std::span<const CoherenceRow> rows);

}  // namespace tgmem
