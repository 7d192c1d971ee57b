#include "tgmem/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "tgmem/batching.hpp"
#include "tgmem/csv.hpp"
#include "tgmem/errors.hpp"
#include "tgmem/gmm_tracker.hpp"
#include "tgmem/memory_store.hpp"
#include "tgmem/rng.hpp"
#include "tgmem/runner.hpp"
#include "tgmem/stats.hpp"

namespace tgmem {

void FilterSimConfig::validate() const {
    if (dim == 0 || steps == 0 || trials == 0) {
        throw ArgumentError("filter sim: dim, steps, and trials must be positive");
    }
    if (!std::isfinite(sigma1) || sigma1 < 0.0 || !std::isfinite(sigma2) || sigma2 < 0.0) {
        throw ArgumentError("filter sim: noise stds must be finite and non-negative");
    }
    if (!std::isfinite(mu_drift)) throw ArgumentError("filter sim: mu_drift must be finite");
    if (!std::isfinite(gamma) || gamma <= 0.0 || gamma > 1.0) {
        throw ArgumentError("filter sim: gamma must lie in (0, 1]");
    }
}

FilterSimResult filter_simulation(const FilterSimConfig& cfg) {
    cfg.validate();
    const std::size_t steps = cfg.steps;
    const std::size_t trials = cfg.trials;

    std::vector<double> sum_raw(steps, 0.0), sumsq_raw(steps, 0.0);
    std::vector<double> sum_pres(steps, 0.0), sumsq_pres(steps, 0.0);
    double diff_sum = 0.0, diff_sumsq = 0.0;
    double raw_total = 0.0, pres_total = 0.0;

    std::vector<double> truth(cfg.dim), raw(cfg.dim);
    for (std::size_t trial = 0; trial < trials; ++trial) {
        Rng rng(mix_seed(cfg.seed, {trial}));
        std::fill(truth.begin(), truth.end(), 0.0);

        // One-vertex proxy so the estimator runs through the production
        // predict path; its state is the current fused estimate.
        GmmTracker tracker(1, cfg.dim);
        MemoryStore estimate(1, cfg.dim);

        double raw_err_sum = 0.0, pres_err_sum = 0.0;
        for (std::size_t step = 0; step < steps; ++step) {
            for (std::size_t c = 0; c < cfg.dim; ++c) {
                truth[c] += rng.normal(cfg.mu_drift, cfg.sigma2);
            }
            for (std::size_t c = 0; c < cfg.dim; ++c) {
                raw[c] = truth[c] + rng.normal(0.0, cfg.sigma1);
            }

            const Tensor predicted = predict_memory(tracker, estimate, 0,
                                                    static_cast<double>(step + 1),
                                                    EventType::positive);
            Tensor fused(cfg.dim, 1);
            for (std::size_t c = 0; c < cfg.dim; ++c) {
                fused[c] = (1.0 - cfg.gamma) * predicted[c] + cfg.gamma * raw[c];
            }
            tracker.update(0, Polarity::positive, fused - predicted);
            estimate.set_state(0, fused);
            estimate.set_last_update(0, static_cast<double>(step + 1));

            double raw_err = 0.0, pres_err = 0.0;
            for (std::size_t c = 0; c < cfg.dim; ++c) {
                raw_err += (raw[c] - truth[c]) * (raw[c] - truth[c]);
                pres_err += (fused[c] - truth[c]) * (fused[c] - truth[c]);
            }
            raw_err = std::sqrt(raw_err);
            pres_err = std::sqrt(pres_err);

            sum_raw[step] += raw_err;
            sumsq_raw[step] += raw_err * raw_err;
            sum_pres[step] += pres_err;
            sumsq_pres[step] += pres_err * pres_err;
            raw_err_sum += raw_err;
            pres_err_sum += pres_err;
        }

        const double trial_diff = (raw_err_sum - pres_err_sum) / static_cast<double>(steps);
        diff_sum += trial_diff;
        diff_sumsq += trial_diff * trial_diff;
        raw_total += raw_err_sum / static_cast<double>(steps);
        pres_total += pres_err_sum / static_cast<double>(steps);
    }

    FilterSimResult result;
    result.mse_raw.resize(steps);
    result.mse_pres.resize(steps);
    result.se_raw.resize(steps);
    result.se_pres.resize(steps);
    const double n = static_cast<double>(trials);
    for (std::size_t step = 0; step < steps; ++step) {
        const double mr = sum_raw[step] / n;
        const double mp = sum_pres[step] / n;
        result.mse_raw[step] = mr;
        result.mse_pres[step] = mp;
        if (trials > 1) {
            const double vr = std::max(0.0, (sumsq_raw[step] - n * mr * mr) / (n - 1.0));
            const double vp = std::max(0.0, (sumsq_pres[step] - n * mp * mp) / (n - 1.0));
            result.se_raw[step] = std::sqrt(vr / n);
            result.se_pres[step] = std::sqrt(vp / n);
        }
    }
    result.mean_raw = raw_total / n;
    result.mean_pres = pres_total / n;
    result.diff_mean = diff_sum / n;
    if (trials > 1) {
        const double var =
            std::max(0.0, (diff_sumsq - n * result.diff_mean * result.diff_mean) / (n - 1.0));
        result.diff_se = std::sqrt(var / n);
    }
    result.z = result.diff_se > 0.0 ? result.diff_mean / result.diff_se : 0.0;
    return result;
}

void write_filter_sim_csv(std::ostream& out, const FilterSimResult& result) {
    out << "step,mse_raw,mse_pres,se_raw,se_pres\n";
    for (std::size_t step = 0; step < result.mse_raw.size(); ++step) {
        out << step << ',' << fmt_double(result.mse_raw[step]) << ','
            << fmt_double(result.mse_pres[step]) << ',' << fmt_double(result.se_raw[step]) << ','
            << fmt_double(result.se_pres[step]) << '\n';
    }
}

VarianceProbeResult epoch_variance_probe(Model& model, const EventStream& stream,
                                         std::span<const std::size_t> batch_sizes,
                                         std::size_t resamples, std::size_t negatives_per_batch,
                                         std::uint64_t seed) {
    if (resamples < 20) {
        throw ArgumentError("variance probe: need at least 20 resamples");
    }
    if (batch_sizes.empty()) throw ArgumentError("variance probe: no batch sizes");
    if (negatives_per_batch == 0) {
        throw ArgumentError("variance probe: negatives_per_batch must be positive");
    }

    std::vector<Parameter*> params = model.parameters();
    auto zero_grads = [&params]() {
        for (Parameter* p : params) p->grad = Tensor(p->grad.rows(), p->grad.cols());
    };
    std::size_t total_coords = 0;
    for (const Parameter* p : params) total_coords += p->grad.flat().size();

    VarianceProbeResult result;
    MemoryStore mem(stream.num_vertices, model.hyper().state_dim);

    for (std::size_t bi = 0; bi < batch_sizes.size(); ++bi) {
        const std::size_t b = batch_sizes[bi];
        std::vector<TemporalBatch> batches = partition_batches(stream, b);

        std::vector<std::vector<double>> grads;
        grads.reserve(resamples);
        for (std::size_t r = 0; r < resamples; ++r) {
            mem.reset();
            zero_grads();
            std::optional<TemporalBatch> prev;
            for (std::size_t k = 0; k < batches.size(); ++k) {
                TemporalBatch cur = batches[k];
                cur.negatives = sample_negatives_fixed_total(
                    cur, stream, negatives_per_batch, mix_seed(seed, {bi, r, k}));
                StepConfig cfg;
                cfg.backward = true;
                batch_step(model, mem, nullptr, prev.has_value() ? &*prev : nullptr, cur, nullptr,
                           cfg);
                prev = std::move(cur);
            }
            std::vector<double> flat;
            flat.reserve(total_coords);
            for (const Parameter* p : params) {
                auto view = p->grad.flat();
                flat.insert(flat.end(), view.begin(), view.end());
            }
            grads.push_back(std::move(flat));
        }
        zero_grads();

        std::vector<double> mean(total_coords, 0.0);
        for (const auto& g : grads) {
            for (std::size_t c = 0; c < total_coords; ++c) mean[c] += g[c];
        }
        for (double& m : mean) m /= static_cast<double>(resamples);
        double trace = 0.0;
        for (const auto& g : grads) {
            for (std::size_t c = 0; c < total_coords; ++c) {
                trace += (g[c] - mean[c]) * (g[c] - mean[c]);
            }
        }
        trace /= static_cast<double>(resamples - 1);

        result.batch_sizes.push_back(b);
        result.trace_variance.push_back(trace);
    }
    return result;
}

void write_variance_csv(std::ostream& out, const VarianceProbeResult& result) {
    out << "batch_size,trace_variance\n";
    for (std::size_t i = 0; i < result.batch_sizes.size(); ++i) {
        out << result.batch_sizes[i] << ',' << fmt_double(result.trace_variance[i]) << '\n';
    }
}

double lr_schedule(double mu, double lipschitz, std::size_t batches_per_epoch,
                   std::size_t epoch_index) {
    if (!std::isfinite(mu) || mu <= 0.0 || !std::isfinite(lipschitz) || lipschitz <= 0.0) {
        throw ArgumentError("lr_schedule: mu and L must be positive");
    }
    if (batches_per_epoch == 0 || epoch_index == 0) {
        throw ArgumentError("lr_schedule: K and t must be at least 1");
    }
    return mu / (lipschitz * std::sqrt(static_cast<double>(batches_per_epoch) *
                                       static_cast<double>(epoch_index)));
}

void SweepConfig::validate() const {
    if (batch_sizes.empty()) throw ArgumentError("sweep: no batch sizes");
    for (std::size_t i = 0; i < batch_sizes.size(); ++i) {
        if (batch_sizes[i] == 0) throw ArgumentError("sweep: batch sizes must be positive");
        if (i > 0 && batch_sizes[i] <= batch_sizes[i - 1]) {
            throw ArgumentError("sweep: batch sizes must be strictly increasing");
        }
    }
    if (seeds.empty()) throw ArgumentError("sweep: no seeds");
    if (!run_standard && !run_pres) throw ArgumentError("sweep: both arms disabled");
    if (!std::isfinite(beta) || beta < 0.0) {
        throw ArgumentError("sweep: beta must be finite and non-negative");
    }
}

SweepResult batch_size_sweep(const EventStream& stream, const SweepConfig& cfg) {
    cfg.validate();
    SweepResult result;

    std::vector<bool> arms;
    if (cfg.run_standard) arms.push_back(false);
    if (cfg.run_pres) arms.push_back(true);

    for (std::size_t b : cfg.batch_sizes) {
        for (bool pres_arm : arms) {
            for (std::uint64_t seed : cfg.seeds) {
                TrainingPlan plan;
                plan.stream = stream;
                plan.train_frac = cfg.train_frac;
                plan.val_frac = cfg.val_frac;
                plan.hyper = cfg.base;
                plan.hyper.batch_size = b;
                plan.hyper.seed = seed;
                plan.pres.enabled = pres_arm;
                plan.pres.beta = pres_arm ? cfg.beta : 0.0;
                plan.pres.gamma_init = cfg.gamma_init;
                plan.collect_coherence = cfg.collect_coherence;
                try {
                    TrainingResult run = run_training(plan);
                    SweepRow row;
                    row.batch_size = b;
                    row.seed = seed;
                    row.pres = pres_arm;
                    row.beta = plan.pres.beta;
                    row.final_ap = run.final_val_ap;
                    row.epoch_seconds = run.mean_epoch_seconds;
                    row.min_coherence = run.min_coherence;
                    result.rows.push_back(row);
                } catch (const Error& e) {
                    std::ostringstream msg;
                    msg << "batch_size=" << b << " seed=" << seed
                        << " pres=" << (pres_arm ? 1 : 0) << ": " << e.what();
                    result.failures.push_back(msg.str());
                }
            }
        }
    }

    for (std::size_t b : cfg.batch_sizes) {
        for (bool pres_arm : arms) {
            std::vector<double> aps;
            for (const SweepRow& row : result.rows) {
                if (row.batch_size == b && row.pres == pres_arm) aps.push_back(row.final_ap);
            }
            if (aps.empty()) continue;
            SweepSummaryRow srow;
            srow.batch_size = b;
            srow.pres = pres_arm;
            srow.mean_ap = sample_mean(aps);
            srow.std_ap = aps.size() > 1 ? sample_std(aps) : 0.0;
            result.summary.push_back(srow);
        }
    }
    return result;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
    out << "batch_size,seed,pres,beta,final_ap,epoch_seconds,min_coherence\n";
    for (const SweepRow& row : rows) {
        out << row.batch_size << ',' << row.seed << ',' << (row.pres ? 1 : 0) << ','
            << fmt_double(row.beta) << ',' << fmt_double(row.final_ap) << ','
            << fmt_double(row.epoch_seconds) << ',' << fmt_double(row.min_coherence) << '\n';
    }
}

}  // namespace tgmem
