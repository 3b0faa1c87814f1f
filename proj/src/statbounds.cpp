#include "finitekey/statbounds.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include <boost/math/special_functions/beta.hpp>

namespace finitekey {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(n!) - [(n + 1/2) log n - n + log sqrt(2 pi)] for n = 0..15.
const std::array<double, 16>& stirling_error_table() {
    static const std::array<double, 16> table = [] {
        std::array<double, 16> t{};
        long double log_factorial = 0.0L;
        const long double half_log_2pi = 0.5L * std::log(2.0L * std::numbers::pi_v<long double>);
        t[0] = static_cast<double>(half_log_2pi);  // unused, kept finite
        for (int n = 1; n < 16; ++n) {
            log_factorial += std::log(static_cast<long double>(n));
            const long double ln = n;
            t[n] = static_cast<double>(log_factorial - ((ln + 0.5L) * std::log(ln) - ln + half_log_2pi));
        }
        return t;
    }();
    return table;
}

double stirling_error(double n) {
    if (n < 16.0) {
        return stirling_error_table()[static_cast<std::size_t>(n)];
    }
    constexpr double s0 = 1.0 / 12.0;
    constexpr double s1 = 1.0 / 360.0;
    constexpr double s2 = 1.0 / 1260.0;
    constexpr double s3 = 1.0 / 1680.0;
    constexpr double s4 = 1.0 / 1188.0;
    const double nn = n * n;
    if (n > 500) return (s0 - s1 / nn) / n;
    if (n > 80) return (s0 - (s1 - s2 / nn) / nn) / n;
    if (n > 35) return (s0 - (s1 - (s2 - s3 / nn) / nn) / nn) / n;
    return (s0 - (s1 - (s2 - (s3 - s4 / nn) / nn) / nn) / nn) / n;
}

// Deviance term x log(x / m) + m - x, computed without cancellation near x = m.
double deviance(double x, double m) {
    if (std::fabs(x - m) < 0.1 * (x + m)) {
        double v = (x - m) / (x + m);
        double s = (x - m) * v;
        double ej = 2.0 * x * v;
        const double v2 = v * v;
        for (int j = 1; j < 1000; ++j) {
            ej *= v2;
            const double s1 = s + ej / (2 * j + 1);
            if (s1 == s) return s1;
            s = s1;
        }
        return s;
    }
    return x * std::log(x / m) + m - x;
}

// log BI(n, p, x) with q = 1 - p supplied separately; -inf off support.
double log_binomial_raw(double x, double n, double p, double q) {
    if (x < 0 || x > n) return kNegInf;
    if (p == 0.0) return x == 0 ? 0.0 : kNegInf;
    if (q == 0.0) return x == n ? 0.0 : kNegInf;
    if (x == 0) {
        if (n == 0) return 0.0;
        return p < 0.1 ? -deviance(n, n * q) - n * p : n * std::log(q);
    }
    if (x == n) {
        return q < 0.1 ? -deviance(n, n * p) - n * q : n * std::log(p);
    }
    const double lc = stirling_error(n) - stirling_error(x) - stirling_error(n - x) -
                      deviance(x, n * p) - deviance(n - x, n * q);
    const double lf = std::log(2.0 * std::numbers::pi) + std::log(x) + std::log1p(-x / n);
    return lc - 0.5 * lf;
}

void check_binomial(const BinomialParams& params) {
    if (params.trials < 0) throw std::domain_error("binomial: negative number of trials");
    if (!(params.success_prob >= 0.0 && params.success_prob <= 1.0)) {
        throw std::domain_error("binomial: success probability outside [0, 1]");
    }
}

void check_hypergeom(const HypergeomParams& params) {
    const auto& [N, n, K] = params;
    if (N < 0 || n < 0 || K < 0 || n > N || K > N) {
        throw std::domain_error("hypergeometric: require 0 <= n <= N and 0 <= K <= N (N=" +
                                std::to_string(N) + ", n=" + std::to_string(n) +
                                ", K=" + std::to_string(K) + ")");
    }
}

// Bisection on a monotone function; `below(p)` is true on the left part of
// the bracket. Stops at floating-point resolution or after 200 halvings.
template <class Below>
std::pair<double, double> bisect(double lo, double hi, Below below) {
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (below(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return {lo, hi};
}

}  // namespace

Count HypergeomParams::support_min() const noexcept {
    return std::max<Count>(0, draws - population + successes);
}

Count HypergeomParams::support_max() const noexcept {
    return std::min(draws, successes);
}

double AhrensImage::permuted_prob() const noexcept {
    return population == 0 ? 0.0
                           : static_cast<double>(permuted_successes) / static_cast<double>(population);
}

std::string_view to_string(BoundSource source) noexcept {
    return source == BoundSource::binomial ? "binomial" : "permuted_binomial";
}

double log_binomial_pmf(const BinomialParams& params, Count k) {
    check_binomial(params);
    if (k < 0 || k > params.trials) {
        throw std::domain_error("binomial_pmf: k=" + std::to_string(k) + " outside [0, " +
                                std::to_string(params.trials) + "]");
    }
    const double p = params.success_prob;
    return log_binomial_raw(static_cast<double>(k), static_cast<double>(params.trials), p, 1.0 - p);
}

double binomial_pmf(const BinomialParams& params, Count k) {
    return std::exp(log_binomial_pmf(params, k));
}

double log_hypergeom_pmf(const HypergeomParams& params, Count k) {
    check_hypergeom(params);
    if (k < params.support_min() || k > params.support_max()) return kNegInf;
    const auto N = static_cast<double>(params.population);
    const auto n = static_cast<double>(params.draws);
    const auto K = static_cast<double>(params.successes);
    const auto x = static_cast<double>(k);
    if (params.draws == 0 || params.draws == params.population) return 0.0;
    // HG = BI(K, p, x) BI(N - K, p, n - x) / BI(N, p, n) for any p; p = n / N
    // keeps all three terms near their modes.
    const double p = n / N;
    const double q = (N - n) / N;
    return log_binomial_raw(x, K, p, q) + log_binomial_raw(n - x, N - K, p, q) -
           log_binomial_raw(n, N, p, q);
}

double hypergeom_pmf(const HypergeomParams& params, Count k) {
    return std::exp(log_hypergeom_pmf(params, k));
}

double binomial_cdf(const BinomialParams& params, Count k) {
    check_binomial(params);
    const Count n = params.trials;
    const double p = params.success_prob;
    if (k < 0) return 0.0;
    if (k >= n) return 1.0;
    if (p == 0.0) return 1.0;
    if (p == 1.0) return 0.0;
    return boost::math::ibetac(static_cast<double>(k + 1), static_cast<double>(n - k), p);
}

double binomial_upper_tail(const BinomialParams& params, Count k) {
    check_binomial(params);
    const Count n = params.trials;
    const double p = params.success_prob;
    if (k <= 0) return 1.0;
    if (k > n) return 0.0;
    if (p == 0.0) return 0.0;
    if (p == 1.0) return 1.0;
    return boost::math::ibeta(static_cast<double>(k), static_cast<double>(n - k + 1), p);
}

AhrensImage ahrens_map(const HypergeomParams& params) {
    check_hypergeom(params);
    const auto [N, n, K] = params;
    const Count nt = std::min({n, K, N - n, N - K});

    AhrensImage image;
    image.population = N;
    image.permuted_draws = nt;

    Count draws = 0;
    Count successes = 0;
    OutcomeMap map;
    if (nt == n || nt == N - n) {
        // HG(N, n, K, k) = HG(N, N - n, K, K - k)
        draws = nt;
        successes = K;
        map = nt == n ? OutcomeMap{0, 1} : OutcomeMap{K, -1};
    } else {
        // HG(N, n, K, k) = HG(N, K, n, k) = HG(N, N - K, n, n - k)
        draws = nt;
        successes = n;
        map = nt == K ? OutcomeMap{0, 1} : OutcomeMap{n, -1};
    }
    if (successes <= N - successes) {
        image.permuted_successes = successes;
    } else {
        // HG(N, d, S, j) = HG(N, d, N - S, d - j)
        image.permuted_successes = N - successes;
        map = OutcomeMap{draws - map.offset, -map.sign};
    }
    image.map = map;

    if (map.sign > 0 && map.offset == 0) {
        image.kind = OutcomeMapKind::identity;
    } else if (map.sign < 0 && map.offset == K) {
        image.kind = OutcomeMapKind::successes_minus_k;
    } else if (map.sign < 0 && map.offset == n) {
        image.kind = OutcomeMapKind::draws_minus_k;
    } else {
        image.kind = OutcomeMapKind::composed;
    }
    return image;
}

double ahrens_upper_bound(const HypergeomParams& params, Count k) {
    const AhrensImage image = ahrens_map(params);
    const Count kt = image.map.apply(k);
    if (kt < 0 || kt > image.permuted_draws) return 0.0;
    const double p = image.permuted_prob();
    const double q = static_cast<double>(image.population - image.permuted_successes) /
                     static_cast<double>(image.population);
    return std::numbers::sqrt2 *
           std::exp(log_binomial_raw(static_cast<double>(kt),
                                     static_cast<double>(image.permuted_draws), p, q));
}

ConfidenceBound cp_interval(Count n, Count k, double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 0.5)) {
        throw std::domain_error("cp_interval: epsilon must lie in (0, 0.5), got " +
                                std::to_string(epsilon));
    }
    if (n < 0 || k < 0 || k > n) {
        throw std::domain_error("cp_interval: require 0 <= k <= n (n=" + std::to_string(n) +
                                ", k=" + std::to_string(k) + ")");
    }
    ConfidenceBound bound;
    bound.epsilon = epsilon;
    if (n == 0) return bound;

    const double rate = static_cast<double>(k) / static_cast<double>(n);
    if (k > 0) {
        // P(X >= k | p) increases in p.
        const auto tail = [&](double p) { return binomial_upper_tail({n, p}, k); };
        double hi = rate;
        if (tail(hi) < epsilon) hi = 1.0;
        bound.lower = bisect(0.0, hi, [&](double p) { return tail(p) < epsilon; }).first;
    }
    if (k < n) {
        // P(X <= k | p) decreases in p.
        const auto cdf = [&](double p) { return binomial_cdf({n, p}, k); };
        double lo = rate;
        if (cdf(lo) < epsilon) lo = 0.0;
        bound.upper = bisect(lo, 1.0, [&](double p) { return cdf(p) >= epsilon; }).second;
    }
    return bound;
}

ConfidenceBound permuted_binomial_bounds(Count population_size, Count n, Count k,
                                         double epsilon) {
    if (n < 0 || k < 0 || k > n || n > population_size) {
        throw std::domain_error("worst_case_bounds: require 0 <= k <= n <= N");
    }
    ConfidenceBound bound;
    bound.epsilon = epsilon;
    bound.lower_source = bound.upper_source = BoundSource::permuted_binomial;
    if (n == 0) return bound;

    const auto successes = static_cast<Count>(std::llround(
        static_cast<long double>(population_size) * k / static_cast<long double>(n)));
    const AhrensImage image = ahrens_map({population_size, n, successes});
    const ConfidenceBound permuted =
        cp_interval(image.permuted_draws, image.map.apply(k), epsilon / std::numbers::sqrt2);

    // Bounds on the mean permuted count carry back through the outcome map,
    // which is affine, so they bound the mean of the original count.
    const auto draws = static_cast<double>(image.permuted_draws);
    double mean_lo = image.map.apply(draws * permuted.lower);
    double mean_hi = image.map.apply(draws * permuted.upper);
    if (image.map.reverses()) std::swap(mean_lo, mean_hi);
    bound.lower = std::clamp(mean_lo / static_cast<double>(n), 0.0, 1.0);
    bound.upper = std::clamp(mean_hi / static_cast<double>(n), 0.0, 1.0);
    return bound;
}

ConfidenceBound worst_case_bounds(Count population_size, Count n, Count k, double epsilon) {
    const ConfidenceBound plain = cp_interval(n, k, epsilon);
    const ConfidenceBound permuted = permuted_binomial_bounds(population_size, n, k, epsilon);

    ConfidenceBound result = plain;
    if (permuted.lower < plain.lower) {
        result.lower = permuted.lower;
        result.lower_source = BoundSource::permuted_binomial;
    }
    if (permuted.upper > plain.upper) {
        result.upper = permuted.upper;
        result.upper_source = BoundSource::permuted_binomial;
    }
    return result;
}

}  // namespace finitekey
