#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "tgmem/event.hpp"
#include "tgmem/model.hpp"
#include "tgmem/pres.hpp"

namespace tgmem {

// Linear-Gaussian state-space study of the prediction-correction estimator.
// True states follow s(t) = s(t-1) + N(mu_drift, sigma2^2) per coordinate;
// measurements are s(t) + N(0, sigma1^2). The estimator runs the production
// tracker: predict from the tracked mean drift, fuse with weight gamma, feed
// the fused-minus-predicted delta back.
struct FilterSimConfig {
    std::size_t dim = 4;
    std::size_t steps = 100;
    std::size_t trials = 10000;
    double sigma1 = 1.0;    // measurement noise std
    double sigma2 = 0.0;    // transition noise std
    double mu_drift = 0.0;  // transition noise mean
    double gamma = 0.2;
    std::uint64_t seed = 7;

    void validate() const;
};

struct FilterSimResult {
    // Per step, averaged over trials: E|raw - truth| and E|fused - truth|
    // (Euclidean norms) with standard errors across trials.
    std::vector<double> mse_raw;
    std::vector<double> mse_pres;
    std::vector<double> se_raw;
    std::vector<double> se_pres;
    // Step-averaged error per estimator, and the paired per-trial
    // (raw - fused) difference with its standard error; z > 0 means the
    // fused estimator tracked the truth more closely.
    double mean_raw = 0.0;
    double mean_pres = 0.0;
    double diff_mean = 0.0;
    double diff_se = 0.0;
    double z = 0.0;
};

FilterSimResult filter_simulation(const FilterSimConfig& cfg);

void write_filter_sim_csv(std::ostream& out, const FilterSimResult& result);

struct VarianceProbeResult {
    std::vector<std::size_t> batch_sizes;
    // Per batch size: trace of the empirical covariance of the full-epoch
    // parameter gradient across negative-sample redraws.
    std::vector<double> trace_variance;
};

// Holds parameters fixed, redraws the negative samples `resamples` times per
// batch size, accumulates each pass's full-epoch gradient, and reports the
// gradient's trace variance. Each batch draws `negatives_per_batch`
// negatives regardless of b, so the number of independent draw sites per
// epoch scales as |E|/b.
VarianceProbeResult epoch_variance_probe(Model& model, const EventStream& stream,
                                         std::span<const std::size_t> batch_sizes,
                                         std::size_t resamples, std::size_t negatives_per_batch,
                                         std::uint64_t seed);

void write_variance_csv(std::ostream& out, const VarianceProbeResult& result);

// mu / (L * sqrt(K * t)): the step size that balances batch count against
// gradient coherence. All inputs must be positive.
double lr_schedule(double mu, double lipschitz, std::size_t batches_per_epoch,
                   std::size_t epoch_index);

struct SweepConfig {
    std::vector<std::size_t> batch_sizes;  // strictly increasing
    std::vector<std::uint64_t> seeds;
    Hyperparams base;  // batch_size and seed are overridden per cell
    double train_frac = 0.7;
    double val_frac = 0.15;
    bool run_standard = true;
    bool run_pres = true;
    double beta = 0.1;
    double gamma_init = 0.9;
    bool collect_coherence = false;

    void validate() const;
};

struct SweepRow {
    std::size_t batch_size = 0;
    std::uint64_t seed = 0;
    bool pres = false;
    double beta = 0.0;
    double final_ap = 0.0;
    double epoch_seconds = 0.0;
    double min_coherence = 0.0;  // NaN when not collected
};

struct SweepSummaryRow {
    std::size_t batch_size = 0;
    bool pres = false;
    double mean_ap = 0.0;
    double std_ap = 0.0;  // 0 with a single seed
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::vector<SweepSummaryRow> summary;
    // One line per failed cell; failed cells produce no row.
    std::vector<std::string> failures;
};

SweepResult batch_size_sweep(const EventStream& stream, const SweepConfig& cfg);

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);

}  // namespace tgmem
