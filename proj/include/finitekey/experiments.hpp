#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "finitekey/channel.hpp"
#include "finitekey/keyrate.hpp"
#include "finitekey/statbounds.hpp"

namespace finitekey {

struct Box {
    double lower = 0.0;
    double upper = 1.0;
};

/// Derivative-free search over (p_X, p_u, p_v, u, v); the vacuum intensity
/// and every other protocol field stay at the starting configuration.
struct OptimizationSpec {
    Box p_x{0.005, 0.5};
    Box p_u{0.2, 0.99};
    Box p_v{0.005, 0.5};
    Box u{0.1, 0.9};
    Box v{0.01, 0.2};
    int starts = 8;
    int max_evals = 3000;
    std::uint64_t seed = 1;
};

struct OptimizationResult {
    ProtocolConfig best;
    KeyRateReport report;
    double objective = 0.0;  // unclamped key length per second
    int evaluations = 0;
    std::vector<std::string> diagnostics;
};

/**
 * Maximizes the unclamped secure key length (bits/s) of the expected counts.
 * Multi-start coordinate-wise golden-section search: the first start is the
 * given configuration clipped to the box, the others are drawn from `seed`.
 * The returned point is never worse than the best start.
 */
OptimizationResult optimize_parameters(const ChannelConfig& channel, const ProtocolConfig& start,
                                       const OptimizationSpec& spec);

struct SweepPoint {
    double axis = 0.0;
    ProtocolConfig params;
    KeyRateReport report;
};

struct SweepResult {
    std::string axis_name;  // "distance_km" or "acquisition_time_s"
    std::vector<SweepPoint> points;
};

std::vector<double> default_distances();
std::vector<double> default_block_times();

/// Runs fn(0..count-1) on up to `threads` worker threads.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

/// Reads FINITEKEY_THREADS; falls back to the hardware concurrency.
unsigned sweep_threads_from_env();

SweepResult distance_sweep(const std::vector<double>& distances_km, const ChannelConfig& channel,
                           const ProtocolConfig& start, const OptimizationSpec& spec,
                           unsigned threads = 1);

/// Block sizes are varied through the acquisition time at the channel's distance.
SweepResult blocksize_sweep(const std::vector<double>& times_s, const ChannelConfig& channel,
                            const ProtocolConfig& start, const OptimizationSpec& spec,
                            unsigned threads = 1);

void write_sweep_csv(std::ostream& out, const SweepResult& sweep);
void write_sweep_summary(std::ostream& out, const SweepResult& sweep);

struct BoundsDemoRow {
    Count k = 0;
    double binomial_pmf = 0.0;   // BI(n, K/N, k)
    double hypergeom_pmf = 0.0;  // HG(N, n, K, k)
    double ahrens_bound = 0.0;   // sqrt(2) BI(n~, K~/N, k~)
    double binomial_cdf = 0.0;
    double hypergeom_cdf = 0.0;
    double ahrens_cdf = 0.0;     // sqrt(2) x permuted tail over the image of {j <= k}
};

struct BoundsDemo {
    HypergeomParams params;
    AhrensImage image;
    std::vector<BoundsDemoRow> rows;
    Count observed = 0;  // round(n K / N), the count fed to worst_case_bounds
    ConfidenceBound selected;
};

BoundsDemo bounds_demo(Count population, Count draws, Count successes, double epsilon);
void write_bounds_demo_csv(std::ostream& out, const BoundsDemo& demo);

}  // namespace finitekey
