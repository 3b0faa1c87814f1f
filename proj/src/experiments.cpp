#include "finitekey/experiments.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <ostream>
#include <random>
#include <stdexcept>
#include <thread>

#include "finitekey/format.hpp"

namespace finitekey {

namespace {

constexpr int kDims = 5;
constexpr double kMinVacuumProb = 1e-3;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

using Point = std::array<double, kDims>;

std::array<Box, kDims> boxes(const OptimizationSpec& spec) {
    return {spec.p_x, spec.p_u, spec.p_v, spec.u, spec.v};
}

Point point_of(const ProtocolConfig& config) {
    return {config.p_x, config.class_prob[0], config.class_prob[1], config.intensity[0],
            config.intensity[1]};
}

ProtocolConfig config_of(const ProtocolConfig& base, const Point& x) {
    ProtocolConfig config = base;
    config.p_x = x[0];
    double pu = x[1];
    double pv = x[2];
    if (pu + pv > 1.0 - kMinVacuumProb) {
        const double scale = (1.0 - kMinVacuumProb) / (pu + pv);
        pu *= scale;
        pv *= scale;
    }
    config.class_prob = {pu, pv, 1.0 - pu - pv};
    config.intensity[0] = x[3];
    config.intensity[1] = x[4];
    return config;
}

class Search {
public:
    Search(const ChannelConfig& channel, const ProtocolConfig& base, const OptimizationSpec& spec)
        : channel_(channel), base_(base), spec_(spec), boxes_(boxes(spec)) {}

    bool exhausted() const { return evaluations_ >= spec_.max_evals; }
    int evaluations() const { return evaluations_; }

    double objective(const Point& x) {
        if (exhausted()) return kNegInf;
        ++evaluations_;
        const ProtocolConfig config = config_of(base_, x);
        try {
            validate(config);
        } catch (const std::domain_error&) {
            return kNegInf;
        }
        const KeyRateReport report = evaluate_link(channel_, config);
        if (report.aborted) return kNegInf;
        return report.raw_length / config.acquisition_time_s;
    }

    Point clip(Point x) const {
        for (int i = 0; i < kDims; ++i) x[i] = std::clamp(x[i], boxes_[i].lower, boxes_[i].upper);
        return x;
    }

    Point random_point(std::mt19937_64& rng) const {
        Point x;
        for (int i = 0; i < kDims; ++i) {
            x[i] = std::uniform_real_distribution<double>(boxes_[i].lower, boxes_[i].upper)(rng);
        }
        return x;
    }

    // Golden-section search along coordinate i within +-window of the box
    // width. Only ever moves x to a strictly better evaluated point.
    void line_search(Point& x, double& fx, int i, double window) {
        const double width = boxes_[i].upper - boxes_[i].lower;
        double a = std::max(boxes_[i].lower, x[i] - window * width);
        double b = std::min(boxes_[i].upper, x[i] + window * width);
        if (!(b > a)) return;
        constexpr double phi = std::numbers::phi - 1.0;

        Point best = x;
        double best_f = fx;
        auto eval = [&](double t) {
            Point y = x;
            y[i] = t;
            const double f = objective(y);
            if (f > best_f) {
                best_f = f;
                best = y;
            }
            return f;
        };
        double c = b - phi * (b - a);
        double d = a + phi * (b - a);
        double fc = eval(c);
        double fd = eval(d);
        for (int step = 0; step < 10 && !exhausted(); ++step) {
            if (fc > fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - phi * (b - a);
                fc = eval(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + phi * (b - a);
                fd = eval(d);
            }
        }
        x = best;
        fx = best_f;
    }

    void local_search(Point& x, double& fx, int cycles, double window) {
        for (int cycle = 0; cycle < cycles && !exhausted(); ++cycle) {
            for (int i = 0; i < kDims && !exhausted(); ++i) line_search(x, fx, i, window);
            window *= 0.5;
        }
    }

private:
    const ChannelConfig& channel_;
    const ProtocolConfig& base_;
    const OptimizationSpec& spec_;
    std::array<Box, kDims> boxes_;
    int evaluations_ = 0;
};

}  // namespace

OptimizationResult optimize_parameters(const ChannelConfig& channel, const ProtocolConfig& start,
                                       const OptimizationSpec& spec) {
    if (spec.max_evals < 1 || spec.starts < 1) {
        throw std::invalid_argument("optimize_parameters: need max_evals >= 1 and starts >= 1");
    }
    Search search(channel, start, spec);
    std::mt19937_64 rng(spec.seed);

    std::vector<Point> points{search.clip(point_of(start))};
    for (int s = 1; s < spec.starts; ++s) points.push_back(search.random_point(rng));
    std::vector<double> values;
    for (const Point& p : points) values.push_back(search.objective(p));

    for (std::size_t s = 0; s < points.size() && !search.exhausted(); ++s) {
        search.local_search(points[s], values[s], 2, 0.2);
    }
    const auto best_index = static_cast<std::size_t>(
        std::max_element(values.begin(), values.end()) - values.begin());
    Point best = points[best_index];
    double best_f = values[best_index];
    search.local_search(best, best_f, 6, 0.1);

    OptimizationResult result;
    result.best = config_of(start, best);
    result.report = evaluate_link(channel, result.best);
    result.objective = best_f;
    result.evaluations = search.evaluations();
    if (std::isinf(best_f)) {
        result.diagnostics.push_back("every evaluated point aborted or violated the protocol constraints");
        result.diagnostics.push_back(std::string("abort at best point: ") +
                                     std::string(to_string(result.report.abort_reason)) + " " +
                                     result.report.abort_detail);
    }
    return result;
}

std::vector<double> default_distances() { return {30.0, 50.0, 70.0, 90.0, 110.0}; }

std::vector<double> default_block_times() {
    // Logarithmic grid from 16 ms to 20 minutes.
    std::vector<double> times;
    constexpr int points = 12;
    const double lo = std::log(0.016);
    const double hi = std::log(1200.0);
    for (int i = 0; i < points; ++i) times.push_back(std::exp(lo + (hi - lo) * i / (points - 1)));
    times.front() = 0.016;
    times.back() = 1200.0;
    return times;
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> workers;
    for (unsigned t = 0; t < threads; ++t) {
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& w : workers) w.join();
    if (failure) std::rethrow_exception(failure);
}

unsigned sweep_threads_from_env() {
    if (const char* env = std::getenv("FINITEKEY_THREADS")) {
        const long value = std::strtol(env, nullptr, 10);
        if (value >= 1) return static_cast<unsigned>(value);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

void require_increasing(const std::vector<double>& axis, const char* what) {
    if (axis.empty()) throw std::invalid_argument(std::string(what) + ": empty axis");
    for (std::size_t i = 1; i < axis.size(); ++i) {
        if (!(axis[i] > axis[i - 1])) {
            throw std::invalid_argument(std::string(what) + ": axis must be strictly increasing");
        }
    }
}

}  // namespace

SweepResult distance_sweep(const std::vector<double>& distances_km, const ChannelConfig& channel,
                           const ProtocolConfig& start, const OptimizationSpec& spec,
                           unsigned threads) {
    require_increasing(distances_km, "distance_sweep");
    SweepResult sweep{"distance_km", std::vector<SweepPoint>(distances_km.size())};
    parallel_for(distances_km.size(), threads, [&](std::size_t i) {
        ChannelConfig link = channel;
        link.fiber_length_km = distances_km[i];
        OptimizationResult opt = optimize_parameters(link, start, spec);
        sweep.points[i] = {distances_km[i], opt.best, std::move(opt.report)};
    });
    return sweep;
}

SweepResult blocksize_sweep(const std::vector<double>& times_s, const ChannelConfig& channel,
                            const ProtocolConfig& start, const OptimizationSpec& spec,
                            unsigned threads) {
    require_increasing(times_s, "blocksize_sweep");
    SweepResult sweep{"acquisition_time_s", std::vector<SweepPoint>(times_s.size())};
    parallel_for(times_s.size(), threads, [&](std::size_t i) {
        ProtocolConfig config = start;
        config.acquisition_time_s = times_s[i];
        OptimizationResult opt = optimize_parameters(channel, config, spec);
        sweep.points[i] = {times_s[i], opt.best, std::move(opt.report)};
    });
    return sweep;
}

void write_sweep_csv(std::ostream& out, const SweepResult& sweep) {
    const bool by_time = sweep.axis_name == "acquisition_time_s";
    out << (by_time ? "acquisition_time_s," : "") << report_csv_header()
        << ",p_x,p_u,p_v,p_w,u,v,w\n";
    for (const SweepPoint& p : sweep.points) {
        // Distance rows carry the axis in distance_km; time rows add a leading column.
        if (by_time) out << format_double(p.axis) << ',';
        const double distance = by_time ? std::numeric_limits<double>::quiet_NaN() : p.axis;
        out << report_csv_row(distance, p.report);
        out << ',' << format_double(p.params.p_x);
        for (double q : p.params.class_prob) out << ',' << format_double(q);
        for (double mu : p.params.intensity) out << ',' << format_double(mu);
        out << '\n';
    }
}

void write_sweep_summary(std::ostream& out, const SweepResult& sweep) {
    const bool by_time = sweep.axis_name == "acquisition_time_s";
    out << (by_time ? "Time (s)" : "Distance (km)") << "\tBlock size\tKey rate (bps)\tq_tol,X\tp_X"
        << "\tp_mu\tmu\n";
    for (const SweepPoint& p : sweep.points) {
        out << format_double(p.axis) << '\t' << p.report.block_size << '\t'
            << static_cast<long long>(std::floor(p.report.rate_bps)) << '\t'
            << format_double(p.report.q_tol) << '\t' << format_double(p.params.p_x) << "\t{"
            << format_double(p.params.class_prob[0]) << ", " << format_double(p.params.class_prob[1])
            << ", " << format_double(p.params.class_prob[2]) << "}\t{"
            << format_double(p.params.intensity[0]) << ", " << format_double(p.params.intensity[1])
            << ", " << format_double(p.params.intensity[2]) << "}";
        if (p.report.aborted) out << "\taborted: " << to_string(p.report.abort_reason);
        out << '\n';
    }
}

BoundsDemo bounds_demo(Count population, Count draws, Count successes, double epsilon) {
    BoundsDemo demo;
    demo.params = {population, draws, successes};
    demo.image = ahrens_map(demo.params);

    const double p = static_cast<double>(successes) / static_cast<double>(population);
    const BinomialParams plain{draws, p};
    const BinomialParams permuted{demo.image.permuted_draws, demo.image.permuted_prob()};

    double hg_cumulative = 0.0;
    for (Count k = demo.params.support_min(); k <= demo.params.support_max(); ++k) {
        BoundsDemoRow row;
        row.k = k;
        row.binomial_pmf = binomial_pmf(plain, k);
        row.hypergeom_pmf = hypergeom_pmf(demo.params, k);
        row.ahrens_bound = ahrens_upper_bound(demo.params, k);
        row.binomial_cdf = binomial_cdf(plain, k);
        hg_cumulative += row.hypergeom_pmf;
        row.hypergeom_cdf = std::min(1.0, hg_cumulative);
        const Count kt = demo.image.map.apply(k);
        const double tail = demo.image.map.reverses() ? binomial_upper_tail(permuted, kt)
                                                      : binomial_cdf(permuted, kt);
        row.ahrens_cdf = std::numbers::sqrt2 * tail;
        demo.rows.push_back(row);
    }

    demo.observed = static_cast<Count>(std::llround(static_cast<long double>(draws) * successes /
                                                    static_cast<long double>(population)));
    demo.selected = worst_case_bounds(population, draws, demo.observed, epsilon);
    return demo;
}

void write_bounds_demo_csv(std::ostream& out, const BoundsDemo& demo) {
    out << "k,binomial_pmf,hypergeom_pmf,ahrens_bound,binomial_cdf,hypergeom_cdf,ahrens_cdf\n";
    for (const BoundsDemoRow& r : demo.rows) {
        out << r.k << ',' << format_double(r.binomial_pmf) << ',' << format_double(r.hypergeom_pmf)
            << ',' << format_double(r.ahrens_bound) << ',' << format_double(r.binomial_cdf) << ','
            << format_double(r.hypergeom_cdf) << ',' << format_double(r.ahrens_cdf) << '\n';
    }
}

}  // namespace finitekey
