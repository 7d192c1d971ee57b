#include "doctest.h"

#include "tgmem/analysis.hpp"
#include "tgmem/batching.hpp"
#include "tgmem/errors.hpp"
#include "tgmem/rng.hpp"
#include "tgmem/stats.hpp"
#include "tgmem/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <vector>

using namespace tgmem;

TEST_CASE("sample statistics match two-pass references") {
    std::vector<double> xs{1.0, 2.0, 4.0, 8.0};
    CHECK(sample_mean(xs) == doctest::Approx(3.75));
    double mean = 3.75;
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    CHECK(sample_std(xs) == doctest::Approx(std::sqrt(ss / 3.0)));
    CHECK_THROWS_AS(sample_mean({}), ArgumentError);
    CHECK_THROWS_AS(sample_std(std::vector<double>{1.0}), ArgumentError);
}

TEST_CASE("spearman rho on hand-built rankings") {
    std::vector<double> x{1.0, 2.0, 3.0, 4.0};
    std::vector<double> inc{10.0, 20.0, 30.0, 40.0};
    std::vector<double> dec{9.0, 7.0, 5.0, 3.0};
    CHECK(spearman_rho(x, inc) == doctest::Approx(1.0));
    CHECK(spearman_rho(x, dec) == doctest::Approx(-1.0));

    // Monotone but nonlinear stays at 1.
    std::vector<double> exp_y{1.0, 4.0, 9.0, 100.0};
    CHECK(spearman_rho(x, exp_y) == doctest::Approx(1.0));

    // Known mixed case: ranks x = 1..5, y = (2,1,4,3,5) -> rho = 0.8.
    std::vector<double> x5{1.0, 2.0, 3.0, 4.0, 5.0};
    std::vector<double> y5{2.0, 1.0, 4.0, 3.0, 5.0};
    CHECK(spearman_rho(x5, y5) == doctest::Approx(0.8));

    CHECK_THROWS_AS(spearman_rho(x, std::vector<double>{1.0, 2.0}), ArgumentError);
    CHECK_THROWS_AS(spearman_rho(std::vector<double>{1.0, 1.0, 1.0},
                                 std::vector<double>{1.0, 2.0, 3.0}),
                    ArgumentError);
}

TEST_CASE("wilcoxon signed rank against exact enumeration") {
    // n = 3, all positive: W+ = 6, one of 8 assignments reaches it.
    std::vector<double> all_pos{1.0, 2.0, 3.0};
    CHECK(wilcoxon_signed_rank_p(all_pos) == doctest::Approx(1.0 / 8.0));

    // Sign-flipped copy: W+ = 0, every assignment reaches >= 0.
    std::vector<double> all_neg{-1.0, -2.0, -3.0};
    CHECK(wilcoxon_signed_rank_p(all_neg) == doctest::Approx(1.0));

    // Mixed: d = (3, -1, 2) -> ranks |d|: 1->1, 2->2, 3->3, W+ = 5.
    // Assignments with W+ >= 5: {2,3} (5), {1,2,3} (6), {1,3} (4) no ->
    // exactly 2 of 8.
    std::vector<double> mixed{3.0, -1.0, 2.0};
    CHECK(wilcoxon_signed_rank_p(mixed) == doctest::Approx(2.0 / 8.0));

    // Zeros are dropped before ranking.
    std::vector<double> with_zero{0.0, 1.0, 2.0, 3.0};
    CHECK(wilcoxon_signed_rank_p(with_zero) == doctest::Approx(1.0 / 8.0));

    // All-zero differences carry no evidence either way.
    CHECK(wilcoxon_signed_rank_p(std::vector<double>{0.0, 0.0}) == 1.0);
    CHECK_THROWS_AS(wilcoxon_signed_rank_p(std::vector<double>(21, 1.0)), ArgumentError);
}

TEST_CASE("least squares fit recovers a planted line") {
    std::vector<double> x{1.0, 2.0, 3.0, 4.0};
    std::vector<double> y;
    for (double xi : x) y.push_back(3.0 * xi - 1.0);
    LinearFit fit = least_squares_fit(x, y);
    CHECK(fit.slope == doctest::Approx(3.0));
    CHECK(fit.intercept == doctest::Approx(-1.0));
    CHECK(fit.r_squared == doctest::Approx(1.0));

    std::vector<double> noisy{2.1, 4.6, 8.2, 11.4};
    LinearFit nf = least_squares_fit(x, noisy);
    CHECK(nf.r_squared > 0.9);
    CHECK(nf.r_squared < 1.0);

    CHECK_THROWS_AS(least_squares_fit(std::vector<double>{1.0}, std::vector<double>{1.0}),
                    ArgumentError);
    CHECK_THROWS_AS(least_squares_fit(std::vector<double>{1.0, 1.0},
                                      std::vector<double>{1.0, 2.0}),
                    ArgumentError);
}

TEST_CASE("synthetic stream obeys its construction contract") {
    SyntheticConfig cfg;
    cfg.num_users = 8;
    cfg.num_items = 24;
    cfg.num_events = 400;
    cfg.num_types = 4;
    cfg.period = 50;
    cfg.noise = 0.0;
    cfg.seed = 5;
    EventStream s = make_synthetic_stream(cfg);

    CHECK(s.num_vertices == 32);
    CHECK(s.feature_dim == 4);
    CHECK(s.size() == 400);

    double prev_t = -1.0;
    for (const Event& e : s.events) {
        CHECK(e.src < 8);
        CHECK(e.dst >= 8);
        CHECK(e.dst < 32);
        CHECK(e.timestamp > prev_t);
        prev_t = e.timestamp;
        // One-hot feature marks the item type.
        double sum = 0.0;
        for (double f : e.features) sum += f;
        CHECK(sum == 1.0);
        std::size_t item_index = e.dst - 8;
        std::size_t type = item_index % 4;
        CHECK(e.features[type] == 1.0);
    }

    // Noise-free: within one phase window a user touches exactly one type.
    for (std::size_t k = 0; k < 50; ++k) {
        const Event& e = s.events[k];
        std::size_t type = (e.dst - 8) % 4;
        CHECK(type == e.src % 4);
    }

    // Determinism and seed sensitivity.
    EventStream again = make_synthetic_stream(cfg);
    CHECK(again.events == s.events);
    cfg.seed = 6;
    EventStream other = make_synthetic_stream(cfg);
    CHECK(!(other.events == s.events));

    cfg.num_types = 40;
    cfg.num_items = 24;
    CHECK_THROWS_AS(make_synthetic_stream(cfg), ArgumentError);
}

TEST_CASE("filter simulation contracts") {
    FilterSimConfig cfg;
    cfg.dim = 4;
    cfg.steps = 30;
    cfg.trials = 400;
    cfg.sigma1 = 1.0;
    cfg.sigma2 = 0.0;
    cfg.gamma = 0.2;
    cfg.seed = 11;

    FilterSimResult r = filter_simulation(cfg);
    REQUIRE(r.mse_raw.size() == 30);
    REQUIRE(r.mse_pres.size() == 30);

    SUBCASE("raw error matches the chi distribution mean") {
        // E||N(0, I_4)|| = sqrt(2) * Gamma(2.5) / Gamma(2) = 1.8799712...
        const double expected = std::sqrt(2.0) * (0.75 * std::sqrt(M_PI)) / 1.0;
        CHECK(r.mean_raw == doctest::Approx(expected).epsilon(0.05));
    }
    SUBCASE("fused error beats raw under pure measurement noise") {
        CHECK(r.mean_pres < r.mean_raw);
        CHECK(r.z > 3.0);
        CHECK(r.diff_mean > 0.0);
        CHECK(r.diff_se > 0.0);
    }
    SUBCASE("gamma one collapses to the raw measurement exactly") {
        FilterSimConfig degenerate = cfg;
        degenerate.gamma = 1.0;
        FilterSimResult d = filter_simulation(degenerate);
        CHECK(d.mean_pres == d.mean_raw);
        for (std::size_t t = 0; t < d.mse_raw.size(); ++t) {
            CHECK(d.mse_pres[t] == d.mse_raw[t]);
        }
        CHECK(d.z == 0.0);
    }
    SUBCASE("deterministic in the seed") {
        FilterSimResult again = filter_simulation(cfg);
        CHECK(again.mean_pres == r.mean_pres);
        CHECK(again.z == r.z);
    }
    SUBCASE("csv layout") {
        std::stringstream out;
        write_filter_sim_csv(out, r);
        std::string line;
        std::getline(out, line);
        CHECK(line == "step,mse_raw,mse_pres,se_raw,se_pres");
        std::size_t rows = 0;
        while (std::getline(out, line)) ++rows;
        CHECK(rows == 30);
    }

    FilterSimConfig bad = cfg;
    bad.gamma = 0.0;
    CHECK_THROWS_AS(filter_simulation(bad), ArgumentError);
    bad = cfg;
    bad.trials = 0;
    CHECK_THROWS_AS(filter_simulation(bad), ArgumentError);
}

TEST_CASE("steady-state fused error approaches the geometric-filter level") {
    // With a static truth and pure measurement noise, exponential smoothing
    // with weight gamma has stationary variance gamma/(2-gamma) * sigma1^2
    // per coordinate; the tracker's drift term adds a small bias on top, so
    // the check uses a generous band.
    FilterSimConfig cfg;
    cfg.dim = 4;
    cfg.steps = 80;
    cfg.trials = 2000;
    cfg.gamma = 0.2;
    cfg.sigma2 = 0.0;
    cfg.seed = 12;
    FilterSimResult r = filter_simulation(cfg);

    const double chi4_mean = std::sqrt(2.0) * (0.75 * std::sqrt(M_PI));
    const double predicted = std::sqrt(cfg.gamma / (2.0 - cfg.gamma)) * chi4_mean;
    double tail = 0.0;
    for (std::size_t t = 60; t < 80; ++t) tail += r.mse_pres[t];
    tail /= 20.0;
    CHECK(tail == doctest::Approx(predicted).epsilon(0.25));
    CHECK(tail < 0.55 * chi4_mean);
}

TEST_CASE("epoch variance probe decreases with batch size") {
    SyntheticConfig scfg;
    scfg.num_users = 10;
    scfg.num_items = 30;
    scfg.num_events = 300;
    scfg.num_types = 3;
    scfg.period = 60;
    scfg.seed = 21;
    EventStream s = make_synthetic_stream(scfg);

    Hyperparams hy;
    hy.state_dim = 4;
    hy.message_dim = 4;
    Model model(hy, s.feature_dim, 9);

    std::vector<std::size_t> sizes{5, 10, 20};
    VarianceProbeResult r = epoch_variance_probe(model, s, sizes, 24, 4, 31);
    REQUIRE(r.batch_sizes == sizes);
    REQUIRE(r.trace_variance.size() == 3);
    CHECK(r.trace_variance[0] > r.trace_variance[1]);
    CHECK(r.trace_variance[1] > r.trace_variance[2]);
    for (double v : r.trace_variance) CHECK(v > 0.0);

    VarianceProbeResult again = epoch_variance_probe(model, s, sizes, 24, 4, 31);
    CHECK(again.trace_variance == r.trace_variance);

    std::stringstream out;
    write_variance_csv(out, r);
    std::string line;
    std::getline(out, line);
    CHECK(line == "batch_size,trace_variance");

    CHECK_THROWS_AS(epoch_variance_probe(model, s, sizes, 1, 4, 31), ArgumentError);
    CHECK_THROWS_AS(epoch_variance_probe(model, s, sizes, 24, 0, 31), ArgumentError);
}

TEST_CASE("probe is deterministic at a fixed seed and leaves the model clean") {
    // Across-redraw variation comes only from the negative draws, and those
    // are derived from the probe seed, so two identical calls must agree
    // exactly. Run the smallest legal configuration (20 resamples) twice.
    SyntheticConfig scfg;
    scfg.num_users = 6;
    scfg.num_items = 18;
    scfg.num_events = 120;
    scfg.num_types = 3;
    scfg.period = 40;
    scfg.seed = 22;
    EventStream s = make_synthetic_stream(scfg);

    Hyperparams hy;
    hy.state_dim = 3;
    hy.message_dim = 3;
    Model model(hy, s.feature_dim, 10);

    std::vector<std::size_t> sizes{10};
    VarianceProbeResult a = epoch_variance_probe(model, s, sizes, 20, 2, 77);
    VarianceProbeResult b = epoch_variance_probe(model, s, sizes, 20, 2, 77);
    CHECK(a.trace_variance == b.trace_variance);

    // Parameters must come back untouched.
    for (Parameter* p : model.parameters()) {
        CHECK(p->grad == Tensor(p->grad.rows(), p->grad.cols()));
    }
}

TEST_CASE("lr schedule values") {
    CHECK(lr_schedule(1.0, 1.0, 4, 1) == doctest::Approx(0.5));
    CHECK(lr_schedule(1.0, 2.0, 9, 16) == doctest::Approx(1.0 / 24.0));
    CHECK(lr_schedule(0.5, 1.0, 1, 1) == doctest::Approx(0.5));
    CHECK_THROWS_AS(lr_schedule(0.0, 1.0, 4, 1), ArgumentError);
    CHECK_THROWS_AS(lr_schedule(1.0, 0.0, 4, 1), ArgumentError);
    CHECK_THROWS_AS(lr_schedule(1.0, 1.0, 0, 1), ArgumentError);
    CHECK_THROWS_AS(lr_schedule(1.0, 1.0, 4, 0), ArgumentError);
}

TEST_CASE("batch size sweep produces a full grid") {
    SyntheticConfig scfg;
    scfg.num_users = 8;
    scfg.num_items = 24;
    scfg.num_events = 240;
    scfg.num_types = 3;
    scfg.period = 60;
    scfg.seed = 23;
    EventStream s = make_synthetic_stream(scfg);

    SweepConfig cfg;
    cfg.batch_sizes = {5, 20};
    cfg.seeds = {1, 2};
    cfg.base.state_dim = 4;
    cfg.base.message_dim = 4;
    cfg.base.epochs = 1;
    cfg.base.lr = 0.05;
    cfg.train_frac = 0.6;
    cfg.val_frac = 0.2;

    SweepResult r = batch_size_sweep(s, cfg);
    CHECK(r.failures.empty());
    REQUIRE(r.rows.size() == 8);

    std::set<std::tuple<std::size_t, std::uint64_t, bool>> cells;
    for (const SweepRow& row : r.rows) {
        cells.insert({row.batch_size, row.seed, row.pres});
        CHECK(row.final_ap > 0.0);
        CHECK(row.final_ap <= 1.0);
        CHECK(row.beta == (row.pres ? 0.1 : 0.0));
        CHECK(row.epoch_seconds > 0.0);
    }
    CHECK(cells.size() == 8);

    REQUIRE(r.summary.size() == 4);
    std::map<std::pair<std::size_t, bool>, std::vector<double>> grouped;
    for (const SweepRow& row : r.rows) {
        grouped[{row.batch_size, row.pres}].push_back(row.final_ap);
    }
    for (const SweepSummaryRow& sr : r.summary) {
        auto& aps = grouped[{sr.batch_size, sr.pres}];
        CHECK(sr.mean_ap == doctest::Approx(sample_mean(aps)));
        CHECK(sr.std_ap == doctest::Approx(sample_std(aps)));
    }

    // Same master seed, same grid: bitwise repeatable rows.
    SweepResult r2 = batch_size_sweep(s, cfg);
    REQUIRE(r2.rows.size() == r.rows.size());
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        CHECK(r2.rows[i].final_ap == r.rows[i].final_ap);
    }

    std::stringstream out;
    write_sweep_csv(out, r.rows);
    std::string line;
    std::getline(out, line);
    CHECK(line == "batch_size,seed,pres,beta,final_ap,epoch_seconds,min_coherence");

    SweepConfig bad = cfg;
    bad.batch_sizes = {20, 5};
    CHECK_THROWS_AS(batch_size_sweep(s, bad), ArgumentError);
    bad = cfg;
    bad.seeds.clear();
    CHECK_THROWS_AS(batch_size_sweep(s, bad), ArgumentError);
}

TEST_CASE("sweep arms can be disabled") {
    SyntheticConfig scfg;
    scfg.num_users = 6;
    scfg.num_items = 18;
    scfg.num_events = 150;
    scfg.num_types = 3;
    scfg.period = 50;
    scfg.seed = 24;
    EventStream s = make_synthetic_stream(scfg);

    SweepConfig cfg;
    cfg.batch_sizes = {10};
    cfg.seeds = {1};
    cfg.base.state_dim = 3;
    cfg.base.message_dim = 3;
    cfg.base.epochs = 1;
    cfg.train_frac = 0.6;
    cfg.val_frac = 0.2;
    cfg.run_pres = false;

    SweepResult r = batch_size_sweep(s, cfg);
    REQUIRE(r.rows.size() == 1);
    CHECK(!r.rows[0].pres);

    cfg.run_pres = true;
    cfg.run_standard = false;
    SweepResult r2 = batch_size_sweep(s, cfg);
    REQUIRE(r2.rows.size() == 1);
    CHECK(r2.rows[0].pres);

    cfg.run_standard = false;
    cfg.run_pres = false;
    CHECK_THROWS_AS(batch_size_sweep(s, cfg), ArgumentError);
}
