#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tgmem/analysis.hpp"
#include "tgmem/batching.hpp"
#include "tgmem/checkpoint.hpp"
#include "tgmem/config.hpp"
#include "tgmem/csv.hpp"
#include "tgmem/errors.hpp"
#include "tgmem/ingest.hpp"
#include "tgmem/rng.hpp"
#include "tgmem/runner.hpp"
#include "tgmem/synthetic.hpp"

namespace {

namespace fs = std::filesystem;
using namespace tgmem;

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool out_set = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("-c,--config", args.config_path, "Config file (key = value lines)");
    cmd->add_option("--set", args.overrides, "Override one key, e.g. --set train.lr=0.05")
        ->type_name("KEY=VALUE");
    cmd->add_option("--seed", args.seed, "Master seed (overrides run.seed)")
        ->each([&args](const std::string&) { args.seed_set = true; });
    cmd->add_option("-o,--out", args.out_dir, "Output directory (overrides run.out_dir)")
        ->each([&args](const std::string&) { args.out_set = true; });
}

// Precedence: flags > environment > config file > defaults.
RunConfig resolve_config(const CommonArgs& args) {
    RunConfig cfg;
    if (!args.config_path.empty()) load_config_file(cfg, args.config_path);
    if (const char* env_out = std::getenv("TGMEM_OUT_DIR"); env_out != nullptr && *env_out) {
        cfg.out_dir = env_out;
    }
    for (const std::string& kv : args.overrides) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(kv, "--set expects key=value");
        }
        std::string key = kv.substr(0, eq);
        while (!key.empty() && key.back() == ' ') key.pop_back();
        std::string value = kv.substr(eq + 1);
        while (!value.empty() && value.front() == ' ') value.erase(value.begin());
        apply_config_value(cfg, key, value);
    }
    if (args.seed_set) cfg.seed = args.seed;
    if (args.out_set) cfg.out_dir = args.out_dir;
    cfg.validate();
    return cfg;
}

fs::path prepare_out_dir(const RunConfig& cfg) {
    fs::path dir(cfg.out_dir);
    fs::create_directories(dir);
    std::ofstream frozen(dir / "config.resolved");
    if (!frozen) throw IoError("cannot write " + (dir / "config.resolved").string());
    write_resolved_config(frozen, cfg);
    return dir;
}

EventStream load_stream(const RunConfig& cfg) {
    if (cfg.dataset_path == "synthetic") {
        return make_synthetic_stream(cfg.synthetic);
    }
    return ingest_csv(cfg.dataset_path);
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    body(out);
}

std::string fixed4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

TrainingPlan make_plan(const RunConfig& cfg, EventStream stream) {
    TrainingPlan plan;
    plan.stream = std::move(stream);
    plan.train_frac = cfg.train_frac;
    plan.val_frac = cfg.val_frac;
    plan.hyper = cfg.hyperparams();
    plan.pres = cfg.pres_options();
    plan.collect_coherence = cfg.collect_coherence;
    return plan;
}

void save_model_checkpoint(const fs::path& path, const TrainingResult& result) {
    std::vector<Parameter*> params = result.model->parameters();
    if (result.pres != nullptr && !result.pres->gate.pinned_one) {
        params.push_back(&result.pres->gate.gamma_raw);
    }
    save_checkpoint(path.string(), params);
}

int cmd_ingest(const CommonArgs& args) {
    const RunConfig cfg = resolve_config(args);
    const fs::path dir = prepare_out_dir(cfg);
    const EventStream stream = load_stream(cfg);
    const std::vector<TemporalBatch> batches = partition_batches(stream, cfg.batch_size);
    write_file(dir / "batch_stats.csv",
               [&](std::ostream& out) { write_batch_stats_csv(out, batches); });
    std::cout << "ingested " << with_thousands(stream.events.size()) << " events, "
              << with_thousands(stream.num_vertices) << " vertices, " << stream.feature_dim
              << " feature dims\n";
    std::cout << "batch stats for " << batches.size() << " batches of size " << cfg.batch_size
              << " -> " << (dir / "batch_stats.csv").string() << '\n';
    return 0;
}

int cmd_train(const CommonArgs& args, bool force_coherence) {
    RunConfig cfg = resolve_config(args);
    if (force_coherence) cfg.collect_coherence = true;
    const fs::path dir = prepare_out_dir(cfg);
    TrainingPlan plan = make_plan(cfg, load_stream(cfg));
    TrainingResult result = run_training(plan);

    write_file(dir / "metrics.csv",
               [&](std::ostream& out) { write_metrics_csv(out, result.epochs); });
    save_model_checkpoint(dir / "model.ckpt", result);
    if (result.pres != nullptr) {
        const auto tensors = result.pres->tracker.to_tensors();
        save_tensors((dir / "tracker.ckpt").string(), tensors);
    }
    if (cfg.collect_coherence) {
        write_file(dir / "coherence.csv",
                   [&](std::ostream& out) { write_coherence_csv(out, result.coherence); });
    }

    for (const EpochRecord& row : result.epochs) {
        std::cout << "epoch " << row.epoch << ": loss " << fixed4(row.loss) << ", val ap "
                  << fixed4(row.ap) << ", " << fixed4(row.seconds) << "s";
        if (plan.pres.enabled) std::cout << ", max penalty " << fixed4(row.max_penalty);
        std::cout << '\n';
    }
    std::cout << "final val ap " << fixed4(result.final_val_ap) << " over "
              << result.num_train_batches << " train batches\n";
    if (cfg.collect_coherence) {
        std::cout << "min coherence (final epoch) " << fixed4(result.min_coherence) << '\n';
    }
    return 0;
}

int cmd_sweep(const CommonArgs& args) {
    const RunConfig cfg = resolve_config(args);
    const fs::path dir = prepare_out_dir(cfg);
    const EventStream stream = load_stream(cfg);
    const SweepResult result = batch_size_sweep(stream, cfg.sweep_config());

    write_file(dir / "sweep.csv", [&](std::ostream& out) { write_sweep_csv(out, result.rows); });
    if (!result.failures.empty()) {
        write_file(dir / "failures.log", [&](std::ostream& out) {
            for (const std::string& line : result.failures) out << line << '\n';
        });
        for (const std::string& line : result.failures) std::cerr << "cell failed: " << line << '\n';
    }
    for (const SweepSummaryRow& row : result.summary) {
        std::cout << "b=" << row.batch_size << " pres=" << (row.pres ? 1 : 0) << " ap "
                  << fixed4(row.mean_ap) << " +/- " << fixed4(row.std_ap) << '\n';
    }
    std::cout << result.rows.size() << " rows -> " << (dir / "sweep.csv").string();
    if (!result.failures.empty()) std::cout << " (" << result.failures.size() << " cells failed)";
    std::cout << '\n';
    return result.failures.empty() ? 0 : 1;
}

int cmd_simulate_filter(const CommonArgs& args) {
    const RunConfig cfg = resolve_config(args);
    const fs::path dir = prepare_out_dir(cfg);
    FilterSimConfig sim = cfg.sim;
    sim.seed = mix_seed(cfg.seed, {seed_stream::kFilterSim});
    const FilterSimResult result = filter_simulation(sim);
    write_file(dir / "filter_sim.csv",
               [&](std::ostream& out) { write_filter_sim_csv(out, result); });
    std::cout << "mean error raw " << fixed4(result.mean_raw) << ", fused "
              << fixed4(result.mean_pres) << ", paired z " << fixed4(result.z) << '\n';
    return 0;
}

int cmd_probe_variance(const CommonArgs& args) {
    const RunConfig cfg = resolve_config(args);
    const fs::path dir = prepare_out_dir(cfg);
    const EventStream stream = load_stream(cfg);
    Model model(cfg.hyperparams(), stream.feature_dim,
                mix_seed(cfg.seed, {seed_stream::kParamInit}));
    const VarianceProbeResult result = epoch_variance_probe(
        model, stream, cfg.probe_batch_sizes, cfg.probe_resamples,
        cfg.probe_negatives_per_batch, mix_seed(cfg.seed, {seed_stream::kVarianceProbe}));
    write_file(dir / "variance.csv",
               [&](std::ostream& out) { write_variance_csv(out, result); });
    for (std::size_t i = 0; i < result.batch_sizes.size(); ++i) {
        std::cout << "b=" << result.batch_sizes[i] << " trace variance "
                  << fmt_double(result.trace_variance[i]) << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Temporal-graph memory training and analysis toolkit"};
    app.require_subcommand(1);

    CommonArgs ingest_args, train_args, sweep_args, sim_args, probe_args, coherence_args;
    CLI::App* ingest_cmd =
        app.add_subcommand("ingest", "Load a stream and report batch/pending statistics");
    add_common(ingest_cmd, ingest_args);
    CLI::App* train_cmd = app.add_subcommand("train", "Train one model and record metrics");
    add_common(train_cmd, train_args);
    CLI::App* sweep_cmd =
        app.add_subcommand("sweep", "Train across batch sizes, seeds, and scheme arms");
    add_common(sweep_cmd, sweep_args);
    CLI::App* sim_cmd = app.add_subcommand(
        "simulate-filter", "Monte-Carlo study of the prediction-correction estimator");
    add_common(sim_cmd, sim_args);
    CLI::App* probe_cmd = app.add_subcommand(
        "probe-variance", "Epoch-gradient variance vs. batch size at fixed parameters");
    add_common(probe_cmd, probe_args);
    CLI::App* coherence_cmd = app.add_subcommand(
        "coherence-report", "Train with per-batch coherence measurement and write the report");
    add_common(coherence_cmd, coherence_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (ingest_cmd->parsed()) return cmd_ingest(ingest_args);
        if (train_cmd->parsed()) return cmd_train(train_args, false);
        if (sweep_cmd->parsed()) return cmd_sweep(sweep_args);
        if (sim_cmd->parsed()) return cmd_simulate_filter(sim_args);
        if (probe_cmd->parsed()) return cmd_probe_variance(probe_args);
        if (coherence_cmd->parsed()) return cmd_train(coherence_args, true);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
