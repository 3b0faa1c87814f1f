#pragma once

#include <cstdint>
#include <string_view>

namespace finitekey {

using Count = std::int64_t;

struct BinomialParams {
    Count trials = 0;
    double success_prob = 0.0;
};

/// Urn model: `draws` balls taken without replacement from `population`,
/// of which `successes` are white.
struct HypergeomParams {
    Count population = 0;
    Count draws = 0;
    Count successes = 0;

    Count support_min() const noexcept;
    Count support_max() const noexcept;
};

/// Affine bijection k -> offset + sign * k carrying a hypergeometric outcome
/// onto the outcome of the permuted distribution.
struct OutcomeMap {
    Count offset = 0;
    int sign = 1;

    Count apply(Count k) const noexcept { return offset + sign * k; }
    double apply(double k) const noexcept { return static_cast<double>(offset) + sign * k; }
    bool reverses() const noexcept { return sign < 0; }
};

enum class OutcomeMapKind { identity, successes_minus_k, draws_minus_k, composed };

/// Permuted parameters of the Ahrens map. The permuted binomial is
/// BI(permuted_draws, permuted_successes / population, map.apply(k)).
struct AhrensImage {
    Count population = 0;
    Count permuted_draws = 0;
    Count permuted_successes = 0;
    OutcomeMap map;
    OutcomeMapKind kind = OutcomeMapKind::identity;

    double permuted_prob() const noexcept;
};

enum class BoundSource { binomial, permuted_binomial };

std::string_view to_string(BoundSource source) noexcept;

struct ConfidenceBound {
    double lower = 0.0;
    double upper = 1.0;
    double epsilon = 0.0;
    BoundSource lower_source = BoundSource::binomial;
    BoundSource upper_source = BoundSource::binomial;
};

// Log-space pmf evaluation (saddle-point deviance form), accurate for
// counts up to ~1e15. Out-of-support outcomes give -inf.
double log_binomial_pmf(const BinomialParams& params, Count k);
double binomial_pmf(const BinomialParams& params, Count k);
double log_hypergeom_pmf(const HypergeomParams& params, Count k);
double hypergeom_pmf(const HypergeomParams& params, Count k);

/// P(X <= k) and P(X >= k) for X ~ BI(n, p).
double binomial_cdf(const BinomialParams& params, Count k);
double binomial_upper_tail(const BinomialParams& params, Count k);

AhrensImage ahrens_map(const HypergeomParams& params);

/// sqrt(2) * BI(n~, K~/N, k~): a pointwise upper bound on HG(N, n, K, k).
double ahrens_upper_bound(const HypergeomParams& params, Count k);

/**
 * Clopper-Pearson interval for the success probability of BI(n, p) after
 * observing k successes. Each side fails with probability at most epsilon.
 *
 * The lower end solves P(X >= k | p) = epsilon and the upper end solves
 * P(X <= k | p) = epsilon, by bisection on the regularized incomplete beta
 * function down to floating-point resolution (at most 200 steps).
 */
ConfidenceBound cp_interval(Count n, Count k, double epsilon);

/**
 * Loosest of two candidate CP intervals for the rate k/n of a sample of n
 * drawn from a population of population_size:
 *  - plain binomial BI(n, k/n) at epsilon per side;
 *  - hypergeometric HG(N, n, round(N k / n)) bounded through the Ahrens
 *    map, i.e. CP on the permuted binomial at epsilon / sqrt(2), with the
 *    mean-count bounds carried back through the outcome map.
 * Ties keep the binomial tag.
 */
ConfidenceBound worst_case_bounds(Count population_size, Count n, Count k, double epsilon);

/// Only the permuted-binomial candidate of worst_case_bounds.
ConfidenceBound permuted_binomial_bounds(Count population_size, Count n, Count k, double epsilon);

}  // namespace finitekey
