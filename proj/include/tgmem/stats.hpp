#pragma once

#include <cstddef>
#include <span>

namespace tgmem {

double sample_mean(std::span<const double> xs);

// Unbiased (n-1) standard deviation; requires at least two values.
double sample_std(std::span<const double> xs);

// Spearman rank correlation with average ranks for ties.
double spearman_rho(std::span<const double> x, std::span<const double> y);

// Exact one-sided Wilcoxon signed-rank test of H1: median(diffs) > 0.
// Zero differences are dropped; ties in |d| get average ranks. The null
// distribution is enumerated over all sign assignments, so n is capped at 20.
// Returns P(W+ >= observed).
double wilcoxon_signed_rank_p(std::span<const double> diffs);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

LinearFit least_squares_fit(std::span<const double> x, std::span<const double> y);

}  // namespace tgmem
