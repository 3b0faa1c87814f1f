#pragma once

// Reference implementations used only by the tests. None of them share code
// with the library: integer Pascal triangles, long double term recursions and
// brute-force search.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

namespace oracle {

// Exact C(n, k) for n <= 66 (fits in 64 bits).
inline std::uint64_t choose(int n, int k) {
    static const std::vector<std::vector<std::uint64_t>> table = [] {
        std::vector<std::vector<std::uint64_t>> t(67);
        for (int i = 0; i <= 66; ++i) {
            t[i].assign(i + 1, 1);
            for (int j = 1; j < i; ++j) t[i][j] = t[i - 1][j - 1] + t[i - 1][j];
        }
        return t;
    }();
    if (k < 0 || k > n) return 0;
    return table[n][k];
}

inline long double hypergeom(int N, int n, int K, int k) {
    if (k < 0 || k > n || k > K || n - k > N - K) return 0.0L;
    return static_cast<long double>(choose(K, k)) * static_cast<long double>(choose(N - K, n - k)) /
           static_cast<long double>(choose(N, n));
}

inline long double binomial(int n, long double p, int k) {
    if (k < 0 || k > n) return 0.0L;
    return static_cast<long double>(choose(n, k)) * std::pow(p, static_cast<long double>(k)) *
           std::pow(1.0L - p, static_cast<long double>(n - k));
}

// log BI(n, p, k) through lgamma; valid for large n, 0 < p < 1.
inline long double log_binomial(std::int64_t n, long double p, std::int64_t k) {
    return std::lgamma(static_cast<long double>(n) + 1) - std::lgamma(static_cast<long double>(k) + 1) -
           std::lgamma(static_cast<long double>(n - k) + 1) + k * std::log(p) +
           (n - k) * std::log1p(-p);
}

// Sum of BI(n, p, j) for j running from `start` away from the bulk in
// direction `step` (+1 upper tail, -1 lower tail), until terms are negligible.
inline long double tail_from(std::int64_t n, long double p, std::int64_t start, int step) {
    if (start < 0 || start > n) return 0.0L;
    // Degenerate cases: all mass at 0 or at n.
    if (p <= 0.0L) return (step < 0 || start == 0) ? 1.0L : 0.0L;
    if (p >= 1.0L) return (step > 0 || start == n) ? 1.0L : 0.0L;
    long double term = std::exp(log_binomial(n, p, start));
    long double sum = 0.0L;
    const long double ratio = p / (1.0L - p);
    for (std::int64_t j = start; j >= 0 && j <= n; j += step) {
        sum += term;
        if (step > 0) {
            term *= static_cast<long double>(n - j) / static_cast<long double>(j + 1) * ratio;
            if (j > n * p && term < sum * 1e-22L) break;
        } else {
            term *= static_cast<long double>(j) / static_cast<long double>(n - j + 1) / ratio;
            if (j < n * p && term < sum * 1e-22L) break;
        }
    }
    return sum;
}

// P(X >= k) under BI(n, p), summing whichever side is the tail.
inline long double upper_tail(std::int64_t n, long double p, std::int64_t k) {
    if (k <= 0) return 1.0L;
    if (k > n) return 0.0L;
    if (k > n * p) return tail_from(n, p, k, +1);
    return 1.0L - tail_from(n, p, k - 1, -1);
}

// P(X <= k) under BI(n, p).
inline long double lower_tail(std::int64_t n, long double p, std::int64_t k) {
    if (k < 0) return 0.0L;
    if (k >= n) return 1.0L;
    if (k < n * p) return tail_from(n, p, k, -1);
    return 1.0L - tail_from(n, p, k + 1, +1);
}

// Clopper-Pearson endpoints by plain bisection on the tail sums.
inline double cp_lower(std::int64_t n, std::int64_t k, double eps) {
    if (k == 0) return 0.0;
    long double lo = 0.0L, hi = 1.0L;
    for (int i = 0; i < 100; ++i) {
        const long double mid = 0.5L * (lo + hi);
        (upper_tail(n, mid, k) < eps ? lo : hi) = mid;
    }
    return static_cast<double>(0.5L * (lo + hi));
}

inline double cp_upper(std::int64_t n, std::int64_t k, double eps) {
    if (k == n) return 1.0;
    long double lo = 0.0L, hi = 1.0L;
    for (int i = 0; i < 100; ++i) {
        const long double mid = 0.5L * (lo + hi);
        (lower_tail(n, mid, k) > eps ? lo : hi) = mid;
    }
    return static_cast<double>(0.5L * (lo + hi));
}

inline double binary_entropy(double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 0.5) return 1.0;
    return -(x * std::log(x) + (1 - x) * std::log(1 - x)) / std::log(2.0);
}

inline double poisson(double mu, int k) {
    double w = std::exp(-mu);
    for (int i = 1; i <= k; ++i) w *= mu / i;
    return w;
}

struct Interval {
    double lower;
    double upper;
};

// Decoy program with cutoff 2: variables y0, y1, y2 in [0, 1] and, for each
// intensity, lower - tail <= sum_k P(k) y_k <= upper. For fixed (y0, y1) the
// admissible y2 form an interval, so a 2-D grid enumerates the feasible set.
// Returns the largest single-photon error rate z1 / y1 over grid points, with
// vacuum errors at one half and z1 limited by the signal error budget.
struct PhaseErrorProgram {
    std::array<double, 3> intensity;
    std::array<Interval, 3> yields;
    double error_upper;  // per-pulse error-rate bound of the signal class
};

// Poisson weights P(0), P(1), P(2) and the tail beyond 2, per intensity.
struct Weights {
    std::array<std::array<double, 4>, 3> w;
    explicit Weights(const PhaseErrorProgram& p) {
        for (int i = 0; i < 3; ++i) {
            const double mu = p.intensity[i];
            w[i] = {poisson(mu, 0), poisson(mu, 1), poisson(mu, 2), 0.0};
            w[i][3] = 1.0 - w[i][0] - w[i][1] - w[i][2];
        }
    }
};

inline bool feasible_y2(const PhaseErrorProgram& p, const Weights& wt, double y0, double y1) {
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 3; ++i) {
        const auto& [p0, p1, p2, tail] = wt.w[i];
        const double base = p0 * y0 + p1 * y1;
        if (p2 <= 0.0) {
            if (base > p.yields[i].upper || base < p.yields[i].lower - tail) return false;
            continue;
        }
        lo = std::max(lo, (p.yields[i].lower - tail - base) / p2);
        hi = std::min(hi, (p.yields[i].upper - base) / p2);
    }
    return lo <= hi;
}

// Exact range of y1 over the same feasible set, by enumerating the vertices of
// the 3-D polytope: every triple of the 12 bounding planes, solved by Cramer's
// rule and kept if it satisfies all constraints.
inline Interval vertex_y1_range(const PhaseErrorProgram& p) {
    const Weights wt(p);
    struct Plane {
        std::array<double, 3> a;
        double b;
    };
    std::vector<Plane> planes;
    for (int i = 0; i < 3; ++i) {
        // Rows normalised so the determinant threshold below is scale-free.
        const double norm = std::hypot(wt.w[i][0], wt.w[i][1], wt.w[i][2]);
        const std::array<double, 3> a{wt.w[i][0] / norm, wt.w[i][1] / norm, wt.w[i][2] / norm};
        planes.push_back({a, p.yields[i].upper / norm});
        planes.push_back({a, (p.yields[i].lower - wt.w[i][3]) / norm});
    }
    for (int v = 0; v < 3; ++v) {
        std::array<double, 3> a{0, 0, 0};
        a[v] = 1;
        planes.push_back({a, 0.0});
        planes.push_back({a, 1.0});
    }
    auto det = [](const std::array<std::array<double, 3>, 3>& m) {
        return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
               m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
               m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    };
    auto feasible = [&](const std::array<double, 3>& y) {
        constexpr double tol = 1e-12;
        for (double v : y) {
            if (v < -tol || v > 1 + tol) return false;
        }
        for (int i = 0; i < 3; ++i) {
            const double s = wt.w[i][0] * y[0] + wt.w[i][1] * y[1] + wt.w[i][2] * y[2];
            if (s > p.yields[i].upper + tol || s < p.yields[i].lower - wt.w[i][3] - tol) return false;
        }
        return true;
    };
    Interval range{2.0, -1.0};
    const std::size_t m = planes.size();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            for (std::size_t k = j + 1; k < m; ++k) {
                const std::array<std::array<double, 3>, 3> A{planes[i].a, planes[j].a, planes[k].a};
                const double d = det(A);
                if (std::fabs(d) < 1e-14) continue;
                const std::array<double, 3> rhs{planes[i].b, planes[j].b, planes[k].b};
                std::array<double, 3> y{};
                for (int c = 0; c < 3; ++c) {
                    auto Ac = A;
                    for (int r = 0; r < 3; ++r) Ac[r][c] = rhs[r];
                    y[c] = det(Ac) / d;
                }
                if (!feasible(y)) continue;
                range.lower = std::min(range.lower, y[1]);
                range.upper = std::max(range.upper, y[1]);
            }
        }
    }
    return range;
}

inline double grid_max_qber1(const PhaseErrorProgram& p, double resolution, bool* any = nullptr) {
    const Weights wt(p);
    const double u0 = wt.w[0][0], u1 = wt.w[0][1];
    const int steps = static_cast<int>(std::lround(1.0 / resolution));
    double best = -1.0;
    bool found = false;
    for (int i = 0; i <= steps; ++i) {
        const double y0 = i * resolution;
        for (int j = 1; j <= steps; ++j) {
            const double y1 = j * resolution;
            if (!feasible_y2(p, wt, y0, y1)) continue;
            found = true;
            const double budget = (p.error_upper - u0 * 0.5 * y0) / u1;
            const double z1 = std::min(y1, budget);
            if (z1 < 0.0) continue;
            best = std::max(best, z1 / y1);
        }
    }
    if (any) *any = found;
    return best;
}

}  // namespace oracle
