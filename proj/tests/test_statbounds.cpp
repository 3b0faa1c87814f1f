#include <stdexcept>
#include <cmath>
#include <random>

#include "doctest.h"
#include "finitekey/statbounds.hpp"
#include "oracles.hpp"

using namespace finitekey;

TEST_CASE("binomial pmf small cases") {
    CHECK(binomial_pmf({4, 0.5}, 2) == doctest::Approx(0.375).epsilon(1e-14));
    CHECK(binomial_pmf({10, 0.0}, 0) == 1.0);
    CHECK(binomial_pmf({10, 1.0}, 10) == 1.0);
    CHECK(binomial_pmf({10, 0.0}, 3) == 0.0);
    CHECK_THROWS_AS(binomial_pmf({10, 0.3}, 11), std::domain_error);
    CHECK_THROWS_AS(binomial_pmf({10, 0.3}, -1), std::domain_error);
}

TEST_CASE("binomial pmf agrees with integer binomial coefficients") {
    for (int n = 0; n <= 60; n += 3) {
        for (double p : {0.01, 0.2, 0.5, 0.77, 0.999}) {
            for (int k = 0; k <= n; ++k) {
                const double want = static_cast<double>(oracle::binomial(n, p, k));
                if (want < 1e-280) continue;
                CHECK(binomial_pmf({n, p}, k) == doctest::Approx(want).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("pmf normalization at large n") {
    for (Count n : {Count{1000}, Count{200000}}) {
        const BinomialParams b{n, 0.013};
        double sum = 0.0;
        for (Count k = 0; k <= n; ++k) sum += binomial_pmf(b, k);
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
    const HypergeomParams h{120000, 103820, 600};
    double sum = 0.0;
    for (Count k = h.support_min(); k <= h.support_max(); ++k) sum += hypergeom_pmf(h, k);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("hypergeometric pmf") {
    CHECK(hypergeom_pmf({10, 5, 5}, 5) == doctest::Approx(1.0 / 252.0).epsilon(1e-13));
    CHECK(hypergeom_pmf({10, 10, 4}, 4) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(hypergeom_pmf({10, 5, 5}, 6) == 0.0);
    CHECK_THROWS_AS(hypergeom_pmf({10, 11, 5}, 1), std::domain_error);
    for (int N = 1; N <= 40; N += 3) {
        for (int n = 0; n <= N; ++n) {
            for (int K = 0; K <= N; K += 2) {
                const HypergeomParams h{N, n, K};
                for (Count k = h.support_min(); k <= h.support_max(); ++k) {
                    const double want = static_cast<double>(oracle::hypergeom(N, n, K, k));
                    CHECK(hypergeom_pmf(h, k) == doctest::Approx(want).epsilon(1e-11));
                }
            }
        }
    }
}

TEST_CASE("hypergeometric mode for (120000, 103820, 600) sits near n K / N") {
    const HypergeomParams h{120000, 103820, 600};
    Count mode = 0;
    for (Count k = h.support_min(); k <= h.support_max(); ++k) {
        if (hypergeom_pmf(h, k) > hypergeom_pmf(h, mode)) mode = k;
    }
    CHECK(std::abs(mode - 519) <= 1);
    CHECK(ahrens_upper_bound(h, mode) > hypergeom_pmf(h, mode));
}

TEST_CASE("ahrens map selection rules") {
    const AhrensImage fig = ahrens_map({120000, 103820, 600});
    CHECK(fig.permuted_draws == 600);
    CHECK(fig.permuted_successes == 16180);
    // K~ = N - n needs the complement on the swapped outcome, so k~ = 600 - k.
    CHECK(fig.map.apply(Count{0}) == 600);
    CHECK(fig.map.reverses());

    const AhrensImage small = ahrens_map({10, 2, 3});
    CHECK(small.permuted_draws == 2);
    CHECK(small.permuted_successes == 3);
    CHECK(small.map.apply(Count{1}) == 1);
    CHECK_FALSE(small.map.reverses());
}

TEST_CASE("ahrens map is an exact relabelling and the bound dominates, N <= 30") {
    for (int N = 1; N <= 30; ++N) {
        for (int n = 0; n <= N; ++n) {
            for (int K = 0; K <= N; ++K) {
                const HypergeomParams h{N, n, K};
                const AhrensImage img = ahrens_map(h);
                CHECK(img.permuted_draws == std::min({n, K, N - n, N - K}));
                CHECK(2 * img.permuted_successes <= N);
                for (Count k = h.support_min(); k <= h.support_max(); ++k) {
                    const long double hg = oracle::hypergeom(N, n, K, k);
                    const Count kt = img.map.apply(k);
                    const long double image = oracle::hypergeom(N, img.permuted_draws,
                                                                img.permuted_successes, kt);
                    CHECK(std::fabs(static_cast<double>(image / hg - 1.0L)) < 1e-12);
                    CHECK(ahrens_upper_bound(h, k) >= static_cast<double>(hg) * (1 - 1e-12));
                }
            }
        }
    }
}

TEST_CASE("clopper-pearson closed forms at the edges") {
    const ConfidenceBound none = cp_interval(10, 0, 0.05);
    CHECK(none.lower == 0.0);
    CHECK(none.upper == doctest::Approx(1 - std::pow(0.05, 0.1)).epsilon(1e-13));
    CHECK(none.upper == doctest::Approx(0.25887).epsilon(1e-4));
    const ConfidenceBound all = cp_interval(10, 10, 0.05);
    CHECK(all.upper == 1.0);
    CHECK(all.lower == doctest::Approx(std::pow(0.05, 0.1)).epsilon(1e-13));
    const ConfidenceBound empty = cp_interval(0, 0, 0.1);
    CHECK(empty.lower == 0.0);
    CHECK(empty.upper == 1.0);
    CHECK_THROWS_AS(cp_interval(10, 3, 0.5), std::domain_error);
    CHECK_THROWS_AS(cp_interval(10, 3, 0.0), std::domain_error);
    CHECK_THROWS_AS(cp_interval(10, 11, 0.1), std::domain_error);
}

TEST_CASE("clopper-pearson matches the tail-sum bisection oracle") {
    std::mt19937_64 rng(20240611);
    for (int trial = 0; trial < 40; ++trial) {
        const auto n = static_cast<Count>(std::exp(std::uniform_real_distribution<>(0.0, std::log(2e5))(rng)));
        const Count k = std::uniform_int_distribution<Count>(0, n)(rng);
        const double eps = std::pow(10.0, std::uniform_real_distribution<>(-12.0, -1.0)(rng));
        const ConfidenceBound b = cp_interval(n, k, eps);
        CHECK(b.lower == doctest::Approx(oracle::cp_lower(n, k, eps)).epsilon(1e-9));
        CHECK(b.upper == doctest::Approx(oracle::cp_upper(n, k, eps)).epsilon(1e-9));
    }
}

TEST_CASE("clopper-pearson monotone in k") {
    for (Count n : {Count{7}, Count{50}, Count{1000}}) {
        ConfidenceBound prev = cp_interval(n, 0, 1e-3);
        for (Count k = 1; k <= n; k += std::max<Count>(1, n / 50)) {
            const ConfidenceBound b = cp_interval(n, k, 1e-3);
            CHECK(b.lower >= prev.lower);
            CHECK(b.upper >= prev.upper);
            CHECK(b.lower <= static_cast<double>(k) / n);
            CHECK(b.upper >= static_cast<double>(k) / n);
            prev = b;
        }
    }
}

TEST_CASE("worst-case selector takes the loosest candidate on each side") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const Count N = std::uniform_int_distribution<Count>(100, 1000000)(rng);
        const Count n = std::uniform_int_distribution<Count>(1, N)(rng);
        const Count k = std::uniform_int_distribution<Count>(0, n)(rng);
        const double eps = 1e-6;
        const ConfidenceBound plain = cp_interval(n, k, eps);
        const ConfidenceBound perm = permuted_binomial_bounds(N, n, k, eps);
        const ConfidenceBound w = worst_case_bounds(N, n, k, eps);
        CHECK(w.lower == std::min(plain.lower, perm.lower));
        CHECK(w.upper == std::max(plain.upper, perm.upper));
        CHECK(w.lower_source == (perm.lower < plain.lower ? BoundSource::permuted_binomial
                                                          : BoundSource::binomial));
    }
}

TEST_CASE("worst-case bounds for (120000, 103820, 519) pick the plain binomial lower bound") {
    const ConfidenceBound w = worst_case_bounds(120000, 103820, 519, 1e-10);
    CHECK(w.lower_source == BoundSource::binomial);
    CHECK(w.lower < 519.0 / 103820.0);
}

TEST_CASE("exhaustive draw: plain binomial governs") {
    const ConfidenceBound w = worst_case_bounds(5000, 5000, 70, 1e-8);
    CHECK(w.lower_source == BoundSource::binomial);
    CHECK(w.upper_source == BoundSource::binomial);
}

TEST_CASE("large-count pmf and tails stay finite") {
    const BinomialParams b{1'000'000'000'000, 5e-3};
    const Count mean = 5'000'000'000;
    CHECK(std::isfinite(log_binomial_pmf(b, mean)));
    CHECK(binomial_cdf(b, mean) == doctest::Approx(0.5).epsilon(1e-2));
    const ConfidenceBound c = cp_interval(1'000'000'000'000, mean, 1e-12);
    CHECK(c.lower < 5e-3);
    CHECK(c.upper > 5e-3);
    CHECK(c.upper - c.lower < 1e-5);
}
