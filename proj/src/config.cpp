#include "tgmem/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "tgmem/csv.hpp"
#include "tgmem/errors.hpp"

namespace tgmem {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError(key, "expected true or false, got '" + value + "'");
}

double parse_double_value(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key, "expected a number, got '" + value + "'");
    }
}

std::uint64_t parse_u64_value(const std::string& key, const std::string& value) {
    if (value.empty() || !std::all_of(value.begin(), value.end(), [](char c) {
            return std::isdigit(static_cast<unsigned char>(c));
        })) {
        throw ConfigError(key, "expected a non-negative integer, got '" + value + "'");
    }
    try {
        return std::stoull(value);
    } catch (const std::exception&) {
        throw ConfigError(key, "integer out of range: '" + value + "'");
    }
}

std::size_t parse_size_value(const std::string& key, const std::string& value) {
    return static_cast<std::size_t>(parse_u64_value(key, value));
}

template <typename T, typename Parse>
std::vector<T> parse_list(const std::string& key, const std::string& value, Parse parse_one) {
    std::vector<T> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ConfigError(key, "empty list element");
        out.push_back(parse_one(key, item));
    }
    if (out.empty()) throw ConfigError(key, "expected a comma-separated list");
    return out;
}

template <typename T>
std::string join_list(const std::vector<T>& xs) {
    std::ostringstream out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i > 0) out << ',';
        out << xs[i];
    }
    return out.str();
}

struct Field {
    const char* key;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

const std::vector<Field>& fields() {
    static const std::vector<Field> table = [] {
        std::vector<Field> f;
        auto str = [&f](const char* key, std::string RunConfig::*member) {
            f.push_back({key,
                         [member](RunConfig& c, const std::string& v) { c.*member = v; },
                         [member](const RunConfig& c) { return c.*member; }});
        };
        auto num = [&f](const char* key, double RunConfig::*member) {
            f.push_back({key,
                         [key, member](RunConfig& c, const std::string& v) {
                             c.*member = parse_double_value(key, v);
                         },
                         [member](const RunConfig& c) { return fmt_double(c.*member); }});
        };
        auto size = [&f](const char* key, std::size_t RunConfig::*member) {
            f.push_back({key,
                         [key, member](RunConfig& c, const std::string& v) {
                             c.*member = parse_size_value(key, v);
                         },
                         [member](const RunConfig& c) { return std::to_string(c.*member); }});
        };
        auto boolean = [&f](const char* key, bool RunConfig::*member) {
            f.push_back({key,
                         [key, member](RunConfig& c, const std::string& v) {
                             c.*member = parse_bool(key, v);
                         },
                         [member](const RunConfig& c) {
                             return std::string(c.*member ? "true" : "false");
                         }});
        };

        str("dataset.path", &RunConfig::dataset_path);
        num("dataset.train_frac", &RunConfig::train_frac);
        num("dataset.val_frac", &RunConfig::val_frac);

        f.push_back({"synthetic.num_users",
                     [](RunConfig& c, const std::string& v) {
                         c.synthetic.num_users = parse_size_value("synthetic.num_users", v);
                     },
                     [](const RunConfig& c) { return std::to_string(c.synthetic.num_users); }});
        f.push_back({"synthetic.num_items",
                     [](RunConfig& c, const std::string& v) {
                         c.synthetic.num_items = parse_size_value("synthetic.num_items", v);
                     },
                     [](const RunConfig& c) { return std::to_string(c.synthetic.num_items); }});
        f.push_back({"synthetic.num_events",
                     [](RunConfig& c, const std::string& v) {
                         c.synthetic.num_events = parse_size_value("synthetic.num_events", v);
                     },
                     [](const RunConfig& c) { return std::to_string(c.synthetic.num_events); }});
        f.push_back({"synthetic.num_types",
                     [](RunConfig& c, const std::string& v) {
                         c.synthetic.num_types = parse_size_value("synthetic.num_types", v);
                     },
                     [](const RunConfig& c) { return std::to_string(c.synthetic.num_types); }});
        f.push_back({"synthetic.period",
                     [](RunConfig& c, const std::string& v) {
                         c.synthetic.period = parse_size_value("synthetic.period", v);
                     },
                     [](const RunConfig& c) { return std::to_string(c.synthetic.period); }});
        f.push_back({"synthetic.noise",
                     [](RunConfig& c, const std::string& v) {
                         c.synthetic.noise = parse_double_value("synthetic.noise", v);
                     },
                     [](const RunConfig& c) { return fmt_double(c.synthetic.noise); }});
        f.push_back({"synthetic.seed",
                     [](RunConfig& c, const std::string& v) {
                         c.synthetic.seed = parse_u64_value("synthetic.seed", v);
                     },
                     [](const RunConfig& c) { return std::to_string(c.synthetic.seed); }});

        size("model.state_dim", &RunConfig::state_dim);
        size("model.message_dim", &RunConfig::message_dim);
        str("model.embedding_mode", &RunConfig::embedding_mode);
        str("model.memory_update_source", &RunConfig::memory_update_source);

        size("train.batch_size", &RunConfig::batch_size);
        num("train.lr", &RunConfig::lr);
        size("train.epochs", &RunConfig::epochs);
        size("train.negatives_per_positive", &RunConfig::negatives_per_positive);

        boolean("pres.enabled", &RunConfig::pres_enabled);
        num("pres.beta", &RunConfig::beta);
        num("pres.gamma_init", &RunConfig::gamma_init);
        boolean("pres.gamma_pinned", &RunConfig::gamma_pinned);
        boolean("pres.tracker_reset_each_epoch", &RunConfig::tracker_reset_each_epoch);
        boolean("pres.collect_coherence", &RunConfig::collect_coherence);

        f.push_back({"sim.dim",
                     [](RunConfig& c, const std::string& v) {
                         c.sim.dim = parse_size_value("sim.dim", v);
                     },
                     [](const RunConfig& c) { return std::to_string(c.sim.dim); }});
        f.push_back({"sim.steps",
                     [](RunConfig& c, const std::string& v) {
                         c.sim.steps = parse_size_value("sim.steps", v);
                     },
                     [](const RunConfig& c) { return std::to_string(c.sim.steps); }});
        f.push_back({"sim.trials",
                     [](RunConfig& c, const std::string& v) {
                         c.sim.trials = parse_size_value("sim.trials", v);
                     },
                     [](const RunConfig& c) { return std::to_string(c.sim.trials); }});
        f.push_back({"sim.sigma1",
                     [](RunConfig& c, const std::string& v) {
                         c.sim.sigma1 = parse_double_value("sim.sigma1", v);
                     },
                     [](const RunConfig& c) { return fmt_double(c.sim.sigma1); }});
        f.push_back({"sim.sigma2",
                     [](RunConfig& c, const std::string& v) {
                         c.sim.sigma2 = parse_double_value("sim.sigma2", v);
                     },
                     [](const RunConfig& c) { return fmt_double(c.sim.sigma2); }});
        f.push_back({"sim.mu_drift",
                     [](RunConfig& c, const std::string& v) {
                         c.sim.mu_drift = parse_double_value("sim.mu_drift", v);
                     },
                     [](const RunConfig& c) { return fmt_double(c.sim.mu_drift); }});
        f.push_back({"sim.gamma",
                     [](RunConfig& c, const std::string& v) {
                         c.sim.gamma = parse_double_value("sim.gamma", v);
                     },
                     [](const RunConfig& c) { return fmt_double(c.sim.gamma); }});

        f.push_back({"probe.batch_sizes",
                     [](RunConfig& c, const std::string& v) {
                         c.probe_batch_sizes =
                             parse_list<std::size_t>("probe.batch_sizes", v, parse_size_value);
                     },
                     [](const RunConfig& c) { return join_list(c.probe_batch_sizes); }});
        size("probe.resamples", &RunConfig::probe_resamples);
        size("probe.negatives_per_batch", &RunConfig::probe_negatives_per_batch);

        f.push_back({"sweep.batch_sizes",
                     [](RunConfig& c, const std::string& v) {
                         c.sweep_batch_sizes =
                             parse_list<std::size_t>("sweep.batch_sizes", v, parse_size_value);
                     },
                     [](const RunConfig& c) { return join_list(c.sweep_batch_sizes); }});
        f.push_back({"sweep.seeds",
                     [](RunConfig& c, const std::string& v) {
                         c.sweep_seeds = parse_list<std::uint64_t>("sweep.seeds", v, parse_u64_value);
                     },
                     [](const RunConfig& c) { return join_list(c.sweep_seeds); }});
        num("sweep.beta", &RunConfig::sweep_beta);
        boolean("sweep.run_standard", &RunConfig::sweep_run_standard);
        boolean("sweep.run_pres", &RunConfig::sweep_run_pres);
        boolean("sweep.collect_coherence", &RunConfig::sweep_collect_coherence);

        f.push_back({"run.seed",
                     [](RunConfig& c, const std::string& v) {
                         c.seed = parse_u64_value("run.seed", v);
                     },
                     [](const RunConfig& c) { return std::to_string(c.seed); }});
        str("run.out_dir", &RunConfig::out_dir);
        return f;
    }();
    return table;
}

}  // namespace

Hyperparams RunConfig::hyperparams() const {
    Hyperparams h;
    h.state_dim = state_dim;
    h.message_dim = message_dim;
    h.batch_size = batch_size;
    h.lr = lr;
    h.epochs = epochs;
    h.negatives_per_positive = negatives_per_positive;
    h.seed = seed;
    try {
        h.memory_update_source = parse_memory_update_source(memory_update_source);
    } catch (const Error& e) {
        throw ConfigError("model.memory_update_source", e.what());
    }
    try {
        h.embedding_mode = parse_embedding_mode(embedding_mode);
    } catch (const Error& e) {
        throw ConfigError("model.embedding_mode", e.what());
    }
    return h;
}

PresOptions RunConfig::pres_options() const {
    PresOptions p;
    p.enabled = pres_enabled;
    p.beta = beta;
    p.gamma_init = gamma_init;
    p.gamma_pinned = gamma_pinned;
    p.tracker_reset_each_epoch = tracker_reset_each_epoch;
    p.collect_coherence = collect_coherence;
    return p;
}

SweepConfig RunConfig::sweep_config() const {
    SweepConfig s;
    s.batch_sizes = sweep_batch_sizes;
    s.seeds = sweep_seeds;
    s.base = hyperparams();
    s.train_frac = train_frac;
    s.val_frac = val_frac;
    s.run_standard = sweep_run_standard;
    s.run_pres = sweep_run_pres;
    s.beta = sweep_beta;
    s.gamma_init = gamma_init;
    s.collect_coherence = sweep_collect_coherence;
    return s;
}

void RunConfig::validate() const {
    auto guard = [](const char* key, auto fn) {
        try {
            fn();
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            throw ConfigError(key, e.what());
        }
    };
    guard("train", [&] { hyperparams().validate(); });
    guard("pres", [&] { pres_options().validate(); });
    guard("sim", [&] { sim.validate(); });
    guard("sweep", [&] { sweep_config().validate(); });
    guard("synthetic", [&] {
        if (dataset_path == "synthetic") synthetic.validate();
    });
    if (!(train_frac > 0.0) || !(val_frac > 0.0) || !(train_frac + val_frac < 1.0)) {
        throw ConfigError("dataset.train_frac",
                          "split fractions must be positive and sum below 1");
    }
    if (out_dir.empty()) throw ConfigError("run.out_dir", "must not be empty");
}

void apply_config_value(RunConfig& config, const std::string& key, const std::string& value) {
    for (const Field& field : fields()) {
        if (key == field.key) {
            field.set(config, value);
            return;
        }
    }
    throw ConfigError(key, "unknown key");
}

void load_config(RunConfig& config, std::istream& in, const std::string& origin) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(line_no),
                              "expected 'key = value', got '" + line + "'");
        }
        try {
            apply_config_value(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const ConfigError& e) {
            // what() is always "<field>: <detail>"; re-raise with the source
            // location appended so file-loaded values point at their line.
            const std::string detail = std::string(e.what()).substr(e.field().size() + 2);
            throw ConfigError(e.field(),
                              detail + " (" + origin + ":" + std::to_string(line_no) + ")");
        }
    }
}

void load_config_file(RunConfig& config, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    load_config(config, in, path);
}

void write_resolved_config(std::ostream& out, const RunConfig& config) {
    for (const Field& field : fields()) {
        out << field.key << " = " << field.get(config) << '\n';
    }
}

std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
    keys.reserve(fields().size());
    for (const Field& field : fields()) keys.emplace_back(field.key);
    return keys;
}

}  // namespace tgmem
