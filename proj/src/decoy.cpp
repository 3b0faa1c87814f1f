#include "finitekey/decoy.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <ostream>

#include "finitekey/format.hpp"
#include "finitekey/lp.hpp"

namespace finitekey {

namespace {

// Floor/ceil that first snaps values within a few ulps of an integer, so
// that e.g. 100 * 0.25 computed as 24.999999999999996 counts as 25.
double snap(double x) {
    const double r = std::nearbyint(x);
    return std::fabs(x - r) <= 16.0 * DBL_EPSILON * std::max(1.0, std::fabs(x)) ? r : x;
}

Count snapped_floor(double x) { return static_cast<Count>(std::floor(snap(x))); }
Count snapped_ceil(double x) { return static_cast<Count>(std::ceil(snap(x))); }

double log_factorial(int k) {
    double sum = 0.0;
    for (int i = 2; i <= k; ++i) sum += std::log(static_cast<double>(i));
    return sum;
}

}  // namespace

std::string_view to_string(AbortReason reason) noexcept {
    switch (reason) {
        case AbortReason::none: return "none";
        case AbortReason::empty_cell: return "empty_cell";
        case AbortReason::infeasible_estimation: return "infeasible_estimation";
        case AbortReason::loose_single_photon_bound: return "loose_single_photon_bound";
        case AbortReason::z1_dominance: return "z1_dominance";
        case AbortReason::phase_error_threshold: return "phase_error_threshold";
    }
    return "unknown";
}

double poisson_weight(double mu, int k) {
    if (mu == 0.0) return k == 0 ? 1.0 : 0.0;
    return std::exp(-mu + k * std::log(mu) - log_factorial(k));
}

double poisson_tail(double mu, int cutoff) {
    if (mu == 0.0) return 0.0;
    double tail = 0.0;
    for (int k = cutoff + 1; k < cutoff + 400; ++k) {
        const double term = poisson_weight(mu, k);
        tail += term;
        if (k > mu && term < tail * 1e-18) break;
    }
    return tail;
}

YieldBounds bound_yields(const ObservedCounts& counts, double eps_each, Count population) {
    YieldBounds result;
    result.eps_each = eps_each;
    for (Intensity mu : kIntensities) {
        for (Basis b : kBases) {
            const CellCounts& cell = counts.cell(mu, b);
            if (cell.pulses <= 0) {
                throw EstimationAbort(AbortReason::empty_cell,
                                      std::string("no pulses in cell ") + name(mu) + name(b) + name(b));
            }
            RateBound& rate = result.yields[static_cast<int>(mu)][static_cast<int>(b)];
            rate.mean = static_cast<double>(cell.detections) / static_cast<double>(cell.pulses);
            rate.bound = worst_case_bounds(population, cell.pulses, cell.detections, eps_each);
        }
    }
    const CellCounts& ux = counts.cell(Intensity::signal, Basis::X);
    result.x_error_rate.mean = static_cast<double>(ux.errors) / static_cast<double>(ux.pulses);
    result.x_error_rate.bound = worst_case_bounds(population, ux.pulses, ux.errors, eps_each);
    return result;
}

PhotonYieldBounds solve_decoy_program(const std::array<double, 3>& intensities,
                                      const std::array<Interval, 3>& class_yields, int cutoff) {
    const int vars = cutoff + 1;
    lp::LinearProgram program;
    for (std::size_t i = 0; i < intensities.size(); ++i) {
        const double mu = intensities[i];
        std::vector<double> row(vars);
        for (int k = 0; k < vars; ++k) row[k] = poisson_weight(mu, k);
        std::vector<double> negated(vars);
        std::transform(row.begin(), row.end(), negated.begin(), [](double a) { return -a; });

        program.A.push_back(row);
        program.b.push_back(class_yields[i].upper);
        program.A.push_back(negated);
        program.b.push_back(-(class_yields[i].lower - poisson_tail(mu, cutoff)));
    }
    for (int k = 0; k < vars; ++k) {
        std::vector<double> row(vars, 0.0);
        row[k] = 1.0;
        program.A.push_back(std::move(row));
        program.b.push_back(1.0);
    }

    auto optimize = [&](int variable, double direction) {
        program.c.assign(vars, 0.0);
        program.c[variable] = direction;
        const lp::Solution solution = lp::solve(program);
        if (solution.status != lp::Status::optimal) {
            throw EstimationAbort(AbortReason::infeasible_estimation,
                                  "decoy program infeasible (per-class yield bounds inconsistent)");
        }
        return std::clamp(solution.x[variable], 0.0, 1.0);
    };

    PhotonYieldBounds result;
    result.y0_lower = optimize(0, -1.0);
    result.y0_upper = optimize(0, 1.0);
    result.y1_lower = optimize(1, -1.0);
    result.y1_upper = optimize(1, 1.0);
    result.y0_upper = std::max(result.y0_upper, result.y0_lower);
    result.y1_upper = std::max(result.y1_upper, result.y1_lower);
    return result;
}

PhotonYieldBounds estimate_photon_yields(const YieldBounds& yields, const ProtocolConfig& protocol,
                                         Basis basis) {
    std::array<Interval, 3> class_yields;
    for (Intensity mu : kIntensities) {
        const RateBound& rate = yields.yield(mu, basis);
        class_yields[static_cast<int>(mu)] = {rate.lower(), rate.upper()};
    }
    return solve_decoy_program(protocol.intensity, class_yields, protocol.photon_cutoff);
}

PhotonCountBounds photon_count_bounds(const PhotonYieldBounds& y, Count signal_pulses, double u) {
    const auto pulses = static_cast<double>(signal_pulses);
    const double w0 = poisson_weight(u, 0);
    const double w1 = poisson_weight(u, 1);
    PhotonCountBounds n;
    n.n0_lower = snapped_floor(pulses * y.y0_lower * w0);
    n.n0_upper = snapped_ceil(pulses * y.y0_upper * w0);
    n.n1_lower = snapped_floor(pulses * y.y1_lower * w1);
    n.n1_upper = snapped_ceil(pulses * y.y1_upper * w1);
    return n;
}

double qber1_closed_form(double x_error_upper, double y0_lower, double y1_lower, double u) {
    if (!(y1_lower > 0.0)) {
        throw EstimationAbort(AbortReason::loose_single_photon_bound,
                              "single-photon yield lower bound in X is zero");
    }
    return (std::exp(u) * x_error_upper - 0.5 * y0_lower) / (u * y1_lower);
}

double qber1_upper_bound(double x_error_upper, double y0_lower, double y1_lower, double u) {
    return std::clamp(qber1_closed_form(x_error_upper, y0_lower, y1_lower, u), 0.0, 0.5);
}

double tolerated_phase_error(double qber1, Count n1_z_lower, Count n1_x_upper, double eps_each,
                             double cap) {
    if (n1_z_lower <= 0 || n1_x_upper <= 0) {
        throw EstimationAbort(AbortReason::loose_single_photon_bound,
                              "single-photon count bound is zero");
    }
    const auto nz = static_cast<double>(n1_z_lower);
    const auto nx = static_cast<double>(n1_x_upper);
    const double xi = std::sqrt(std::log(1.0 / eps_each) * (nz + nx) / (2.0 * nz * nx));
    return std::min(cap, qber1 + xi);
}

EstimationResult estimate(const ObservedCounts& counts, const ProtocolConfig& protocol) {
    return estimate(counts, protocol, protocol.eps_sec / 46.0);
}

EstimationResult estimate(const ObservedCounts& counts, const ProtocolConfig& protocol,
                          double eps_each) {
    EstimationResult result;
    result.eps_each = eps_each;
    result.yields = bound_yields(counts, eps_each, counts.total_pulses);

    const double u = protocol.mean_photons(Intensity::signal);
    for (Basis b : kBases) {
        const int i = static_cast<int>(b);
        result.photon_yields[i] = estimate_photon_yields(result.yields, protocol, b);
        result.photon_counts[i] = photon_count_bounds(
            result.photon_yields[i], counts.cell(Intensity::signal, b).pulses, u);
    }

    const PhotonYieldBounds& yx = result.yields_in(Basis::X);
    result.qber1_raw =
        qber1_closed_form(result.yields.x_error_rate.upper(), yx.y0_lower, yx.y1_lower, u);
    result.qber1_upper = std::clamp(result.qber1_raw, 0.0, 0.5);
    result.q_tol = tolerated_phase_error(result.qber1_upper, result.counts_in(Basis::Z).n1_lower,
                                         result.counts_in(Basis::X).n1_upper, eps_each,
                                         protocol.q_tol_cap);
    return result;
}

void write_estimation_csv(std::ostream& out, const EstimationResult& result) {
    out << "quantity,basis,class,mean,lower,upper,lower_source,upper_source\n";
    for (Intensity mu : kIntensities) {
        for (Basis b : kBases) {
            const RateBound& r = result.yields.yield(mu, b);
            out << "yield," << name(b) << ',' << name(mu) << ',' << format_double(r.mean) << ','
                << format_double(r.lower()) << ',' << format_double(r.upper()) << ','
                << to_string(r.bound.lower_source) << ',' << to_string(r.bound.upper_source) << '\n';
        }
    }
    const RateBound& bx = result.yields.x_error_rate;
    out << "bit_error_rate,X,u," << format_double(bx.mean) << ',' << format_double(bx.lower())
        << ',' << format_double(bx.upper()) << ',' << to_string(bx.bound.lower_source) << ','
        << to_string(bx.bound.upper_source) << '\n';
    for (Basis b : kBases) {
        const PhotonYieldBounds& y = result.yields_in(b);
        const PhotonCountBounds& n = result.counts_in(b);
        out << "photon_yield_0," << name(b) << ",,," << format_double(y.y0_lower) << ','
            << format_double(y.y0_upper) << ",,\n";
        out << "photon_yield_1," << name(b) << ",,," << format_double(y.y1_lower) << ','
            << format_double(y.y1_upper) << ",,\n";
        out << "photon_count_0," << name(b) << ",,," << n.n0_lower << ',' << n.n0_upper << ",,\n";
        out << "photon_count_1," << name(b) << ",,," << n.n1_lower << ',' << n.n1_upper << ",,\n";
    }
    out << "qber1_upper,X,,,," << format_double(result.qber1_upper) << ",,\n";
    out << "q_tol,X,,,," << format_double(result.q_tol) << ",,\n";
}

}  // namespace finitekey
