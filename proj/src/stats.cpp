#include "tgmem/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "tgmem/errors.hpp"

namespace tgmem {

double sample_mean(std::span<const double> xs) {
    if (xs.empty()) throw ArgumentError("sample_mean: empty input");
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_std(std::span<const double> xs) {
    if (xs.size() < 2) throw ArgumentError("sample_std: need at least two values");
    const double m = sample_mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

namespace {

// Average ranks (1-based), ties sharing the mean of their rank range.
std::vector<double> average_ranks(std::span<const double> xs) {
    const std::size_t n = xs.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return xs[a] < xs[b];
    });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
        const double shared = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman_rho(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ArgumentError("spearman_rho: length mismatch");
    if (x.size() < 2) throw ArgumentError("spearman_rho: need at least two pairs");
    const std::vector<double> rx = average_ranks(x);
    const std::vector<double> ry = average_ranks(y);
    const double mx = sample_mean(rx);
    const double my = sample_mean(ry);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = rx[i] - mx;
        const double dy = ry[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw ArgumentError("spearman_rho: a variable is constant");
    }
    return sxy / std::sqrt(sxx * syy);
}

double wilcoxon_signed_rank_p(std::span<const double> diffs) {
    std::vector<double> magnitudes;
    std::vector<bool> positive;
    for (double d : diffs) {
        if (d == 0.0) continue;
        magnitudes.push_back(std::fabs(d));
        positive.push_back(d > 0.0);
    }
    const std::size_t n = magnitudes.size();
    if (n == 0) return 1.0;
    if (n > 20) throw ArgumentError("wilcoxon_signed_rank_p: exact test capped at n = 20");

    const std::vector<double> ranks = average_ranks(magnitudes);
    double w_plus = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (positive[i]) w_plus += ranks[i];
    }

    // Exact null: every sign assignment equally likely.
    const std::uint64_t assignments = 1ULL << n;
    std::uint64_t at_least = 0;
    for (std::uint64_t mask = 0; mask < assignments; ++mask) {
        double w = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if ((mask >> i) & 1ULL) w += ranks[i];
        }
        if (w >= w_plus - 1e-12) ++at_least;
    }
    return static_cast<double>(at_least) / static_cast<double>(assignments);
}

LinearFit least_squares_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ArgumentError("least_squares_fit: length mismatch");
    if (x.size() < 2) throw ArgumentError("least_squares_fit: need at least two points");
    const double mx = sample_mean(x);
    const double my = sample_mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) throw ArgumentError("least_squares_fit: x is constant");
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (syy == 0.0) {
        fit.r_squared = 1.0;  // y constant and exactly reproduced by the fit
    } else {
        fit.r_squared = (sxy * sxy) / (sxx * syy);
    }
    return fit;
}

}  // namespace tgmem
