#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "tgmem/analysis.hpp"
#include "tgmem/batching.hpp"
#include "tgmem/config.hpp"
#include "tgmem/errors.hpp"
#include "tgmem/ingest.hpp"
#include "tgmem/pres.hpp"
#include "tgmem/rng.hpp"
#include "tgmem/runner.hpp"
#include "tgmem/synthetic.hpp"
#include "tgmem/tensor.hpp"

namespace py = pybind11;
using namespace tgmem;

namespace {

Tensor tensor_from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw ArgumentError("matrix must have at least one row");
    const std::size_t cols = rows.front().size();
    Tensor out(rows.size(), cols == 0 ? 1 : cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != cols) throw DimensionError("ragged matrix");
        for (std::size_t c = 0; c < cols; ++c) out.at(r, c) = rows[r][c];
    }
    return out;
}

std::string stringify(const py::handle& value) {
    if (py::isinstance<py::bool_>(value)) {
        return value.cast<bool>() ? "true" : "false";
    }
    if (py::isinstance<py::list>(value) || py::isinstance<py::tuple>(value)) {
        std::ostringstream out;
        bool first = true;
        for (const py::handle& item : value) {
            if (!first) out << ',';
            first = false;
            out << stringify(item);
        }
        return out.str();
    }
    return py::str(value).cast<std::string>();
}

// Owns the stream its batches view, so Python-side lifetimes are simple.
struct BatchList {
    std::shared_ptr<EventStream> stream;
    std::vector<TemporalBatch> batches;
};

RunConfig config_from_dict(const py::dict& options) {
    RunConfig cfg;
    for (const auto& item : options) {
        apply_config_value(cfg, py::str(item.first).cast<std::string>(), stringify(item.second));
    }
    cfg.validate();
    return cfg;
}

py::dict training_result_to_dict(const TrainingResult& result) {
    py::dict out;
    py::list epochs;
    for (const EpochRecord& row : result.epochs) {
        py::dict e;
        e["epoch"] = row.epoch;
        e["loss"] = row.loss;
        e["ap"] = row.ap;
        e["seconds"] = row.seconds;
        e["penalty"] = row.penalty;
        e["max_penalty"] = row.max_penalty;
        epochs.append(e);
    }
    out["epochs"] = epochs;
    out["final_val_ap"] = result.final_val_ap;
    out["min_coherence"] = result.min_coherence;
    out["num_train_batches"] = result.num_train_batches;
    py::list coherence;
    for (const CoherenceRow& row : result.coherence) {
        py::dict r;
        r["batch_index"] = row.batch_index;
        r["min_coherence"] = row.min_coherence;
        r["mean_coherence"] = row.mean_coherence;
        r["frac_undefined"] = row.frac_undefined;
        coherence.append(r);
    }
    out["coherence"] = coherence;
    if (result.pres != nullptr) out["gamma"] = result.pres->gate.gamma_value();
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Temporal-graph memory training and analysis toolkit";
    m.attr("__version__") = "1.0.0";

    // Translators run most-recently-registered first, so the subclass must be
    // registered after its base to take precedence over it.
    py::register_exception<Error>(m, "EngineError", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    py::class_<Event>(m, "Event")
        .def(py::init([](std::uint32_t src, std::uint32_t dst, double timestamp,
                         std::vector<double> features, bool positive) {
                 Event e;
                 e.src = src;
                 e.dst = dst;
                 e.timestamp = timestamp;
                 e.features = std::move(features);
                 e.polarity = positive ? Polarity::positive : Polarity::negative;
                 return e;
             }),
             py::arg("src"), py::arg("dst"), py::arg("timestamp"),
             py::arg("features") = std::vector<double>{}, py::arg("positive") = true)
        .def_readonly("src", &Event::src)
        .def_readonly("dst", &Event::dst)
        .def_readonly("timestamp", &Event::timestamp)
        .def_readonly("features", &Event::features)
        .def_property_readonly(
            "positive", [](const Event& e) { return e.polarity == Polarity::positive; })
        .def("__repr__", [](const Event& e) {
            std::ostringstream out;
            out << "Event(" << e.src << " -> " << e.dst << " @ " << e.timestamp << ')';
            return out.str();
        });

    py::class_<EventStream>(m, "EventStream")
        .def_readonly("num_vertices", &EventStream::num_vertices)
        .def_readonly("feature_dim", &EventStream::feature_dim)
        .def_property_readonly(
            "events", [](const EventStream& s) { return s.events; })
        .def("__len__", [](const EventStream& s) { return s.events.size(); });

    py::class_<TemporalBatch>(m, "TemporalBatch")
        .def_readonly("index", &TemporalBatch::index)
        .def_property_readonly("positives",
                               [](const TemporalBatch& b) {
                                   return std::vector<Event>(b.positives.begin(),
                                                             b.positives.end());
                               })
        .def_readonly("negatives", &TemporalBatch::negatives)
        .def_property_readonly("begin",
                               [](const TemporalBatch& b) { return b.interval.begin; })
        .def_property_readonly("end", [](const TemporalBatch& b) { return b.interval.end; })
        .def("__len__", [](const TemporalBatch& b) { return b.positives.size(); });

    m.def("ingest_csv", [](const std::string& path) { return ingest_csv(path); },
          py::arg("path"));

    m.def(
        "make_synthetic_stream",
        [](std::size_t num_users, std::size_t num_items, std::size_t num_events,
           std::size_t num_types, std::size_t period, double noise, std::uint64_t seed) {
            SyntheticConfig cfg;
            cfg.num_users = num_users;
            cfg.num_items = num_items;
            cfg.num_events = num_events;
            cfg.num_types = num_types;
            cfg.period = period;
            cfg.noise = noise;
            cfg.seed = seed;
            return make_synthetic_stream(cfg);
        },
        py::arg("num_users") = 40, py::arg("num_items") = 160, py::arg("num_events") = 2000,
        py::arg("num_types") = 5, py::arg("period") = 250, py::arg("noise") = 0.1,
        py::arg("seed") = 42);

    py::class_<BatchList>(m, "BatchList")
        .def("__len__", [](const BatchList& b) { return b.batches.size(); })
        .def(
            "__getitem__",
            [](const BatchList& b, std::size_t i) -> const TemporalBatch& {
                if (i >= b.batches.size()) throw py::index_error();
                return b.batches[i];
            },
            py::return_value_policy::reference_internal);

    m.def(
        "partition_batches",
        [](const EventStream& stream, std::size_t batch_size) {
            auto owned = std::make_shared<EventStream>(stream);
            BatchList out;
            out.batches = partition_batches(*owned, batch_size);
            out.stream = std::move(owned);
            return out;
        },
        py::arg("stream"), py::arg("batch_size"));

    m.def(
        "sample_negatives",
        [](const TemporalBatch& batch, const EventStream& stream, std::size_t count_per_positive,
           std::uint64_t seed) { return sample_negatives(batch, stream, count_per_positive, seed); },
        py::arg("batch"), py::arg("stream"), py::arg("count_per_positive"), py::arg("seed"));

    m.def(
        "pending_set",
        [](const TemporalBatch& batch, std::size_t pos_index) {
            return pending_set(batch, pos_index);
        },
        py::arg("batch"), py::arg("pos_index"));

    m.def(
        "pending_stats",
        [](const TemporalBatch& batch) {
            const PendingStats stats = pending_stats(batch);
            py::dict out;
            out["num_pending_events"] = stats.num_pending_events;
            out["max_chain"] = stats.max_chain;
            out["frac_pending"] = stats.frac_pending;
            return out;
        },
        py::arg("batch"));

    m.def(
        "run_training",
        [](const py::dict& options) {
            const RunConfig cfg = config_from_dict(options);
            TrainingPlan plan;
            plan.stream = cfg.dataset_path == "synthetic" ? make_synthetic_stream(cfg.synthetic)
                                                          : ingest_csv(cfg.dataset_path);
            plan.train_frac = cfg.train_frac;
            plan.val_frac = cfg.val_frac;
            plan.hyper = cfg.hyperparams();
            plan.pres = cfg.pres_options();
            plan.collect_coherence = cfg.collect_coherence;
            py::gil_scoped_release release;
            TrainingResult result = run_training(plan);
            py::gil_scoped_acquire acquire;
            return training_result_to_dict(result);
        },
        py::arg("options"),
        "Train per a config dict of dotted keys (e.g. {'train.epochs': 2}); returns "
        "per-epoch metrics and the final validation AP.");

    m.def(
        "filter_simulation",
        [](std::size_t dim, std::size_t steps, std::size_t trials, double sigma1, double sigma2,
           double mu_drift, double gamma, std::uint64_t seed) {
            FilterSimConfig cfg;
            cfg.dim = dim;
            cfg.steps = steps;
            cfg.trials = trials;
            cfg.sigma1 = sigma1;
            cfg.sigma2 = sigma2;
            cfg.mu_drift = mu_drift;
            cfg.gamma = gamma;
            cfg.seed = seed;
            py::gil_scoped_release release;
            const FilterSimResult result = filter_simulation(cfg);
            py::gil_scoped_acquire acquire;
            py::dict out;
            out["mse_raw"] = result.mse_raw;
            out["mse_pres"] = result.mse_pres;
            out["se_raw"] = result.se_raw;
            out["se_pres"] = result.se_pres;
            out["mean_raw"] = result.mean_raw;
            out["mean_pres"] = result.mean_pres;
            out["z"] = result.z;
            return out;
        },
        py::arg("dim") = 4, py::arg("steps") = 100, py::arg("trials") = 10000,
        py::arg("sigma1") = 1.0, py::arg("sigma2") = 0.0, py::arg("mu_drift") = 0.0,
        py::arg("gamma") = 0.2, py::arg("seed") = 7);

    m.def(
        "epoch_variance_probe",
        [](const EventStream& stream, const std::vector<std::size_t>& batch_sizes,
           std::size_t resamples, std::size_t negatives_per_batch, std::uint64_t seed,
           std::size_t state_dim, std::size_t message_dim) {
            Hyperparams hyper;
            hyper.state_dim = state_dim;
            hyper.message_dim = message_dim;
            hyper.seed = seed;
            Model model(hyper, stream.feature_dim,
                        mix_seed(seed, {seed_stream::kParamInit}));
            py::gil_scoped_release release;
            const VarianceProbeResult result =
                epoch_variance_probe(model, stream, batch_sizes, resamples, negatives_per_batch,
                                     mix_seed(seed, {seed_stream::kVarianceProbe}));
            py::gil_scoped_acquire acquire;
            py::dict out;
            out["batch_sizes"] = result.batch_sizes;
            out["trace_variance"] = result.trace_variance;
            return out;
        },
        py::arg("stream"), py::arg("batch_sizes"), py::arg("resamples") = 50,
        py::arg("negatives_per_batch") = 8, py::arg("seed") = 7, py::arg("state_dim") = 16,
        py::arg("message_dim") = 16);

    m.def("lr_schedule", &lr_schedule, py::arg("mu"), py::arg("lipschitz"),
          py::arg("batches_per_epoch"), py::arg("epoch_index"));

    m.def(
        "batch_size_sweep",
        [](const EventStream& stream, const py::dict& options) {
            const RunConfig cfg = config_from_dict(options);
            py::gil_scoped_release release;
            const SweepResult result = batch_size_sweep(stream, cfg.sweep_config());
            py::gil_scoped_acquire acquire;
            py::list rows;
            for (const SweepRow& row : result.rows) {
                py::dict r;
                r["batch_size"] = row.batch_size;
                r["seed"] = row.seed;
                r["pres"] = row.pres;
                r["beta"] = row.beta;
                r["final_ap"] = row.final_ap;
                r["epoch_seconds"] = row.epoch_seconds;
                r["min_coherence"] = row.min_coherence;
                rows.append(r);
            }
            py::dict out;
            out["rows"] = rows;
            out["failures"] = result.failures;
            return out;
        },
        py::arg("stream"), py::arg("options"));

    m.def(
        "coherence_loss",
        [](double prediction_loss, const std::vector<std::vector<double>>& s_prev,
           const std::vector<std::vector<double>>& s_new, double beta) {
            return coherence_loss(prediction_loss, tensor_from_rows(s_prev),
                                  tensor_from_rows(s_new), beta);
        },
        py::arg("prediction_loss"), py::arg("s_prev"), py::arg("s_new"), py::arg("beta"));
}
