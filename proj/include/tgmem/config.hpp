#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "tgmem/analysis.hpp"
#include "tgmem/model.hpp"
#include "tgmem/pres.hpp"
#include "tgmem/synthetic.hpp"

namespace tgmem {

// Every knob a run can turn, with its documented default. Files and flag
// overrides use line-oriented `section.key = value` pairs; unknown keys are
// rejected with the offending field path.
struct RunConfig {
    // "synthetic" generates the planted-affinity stream; anything else is a
    // CSV path for ingest.
    std::string dataset_path = "synthetic";
    double train_frac = 0.7;
    double val_frac = 0.15;

    SyntheticConfig synthetic;

    std::size_t state_dim = 16;
    std::size_t message_dim = 16;
    std::string embedding_mode = "identity";
    std::string memory_update_source = "positives_only";

    std::size_t batch_size = 20;
    double lr = 0.1;
    std::size_t epochs = 5;
    std::size_t negatives_per_positive = 1;

    bool pres_enabled = false;
    double beta = 0.1;
    double gamma_init = 0.9;
    bool gamma_pinned = false;
    bool tracker_reset_each_epoch = true;
    bool collect_coherence = false;

    FilterSimConfig sim;

    std::vector<std::size_t> probe_batch_sizes{5, 10, 20, 40};
    std::size_t probe_resamples = 50;
    std::size_t probe_negatives_per_batch = 8;

    std::vector<std::size_t> sweep_batch_sizes{20, 200};
    std::vector<std::uint64_t> sweep_seeds{1, 2, 3, 4, 5};
    double sweep_beta = 0.1;
    bool sweep_run_standard = true;
    bool sweep_run_pres = true;
    bool sweep_collect_coherence = false;

    std::uint64_t seed = 7;
    std::string out_dir = "out";

    // Derived views over the flat fields.
    Hyperparams hyperparams() const;
    PresOptions pres_options() const;
    SweepConfig sweep_config() const;

    void validate() const;
};

// Assigns one `key = value` pair; unknown key or unparsable value throws
// ConfigError carrying the field path.
void apply_config_value(RunConfig& config, const std::string& key, const std::string& value);

// Parses `key = value` lines ('#' comments, blank lines ignored).
void load_config(RunConfig& config, std::istream& in, const std::string& origin);
void load_config_file(RunConfig& config, const std::string& path);

// Emits every field in a fixed order; reloading the output reproduces the
// config exactly.
void write_resolved_config(std::ostream& out, const RunConfig& config);

// All recognized keys, for help output.
std::vector<std::string> config_keys();

}  // namespace tgmem
