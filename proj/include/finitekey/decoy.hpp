#pragma once

#include <array>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>

#include "finitekey/channel.hpp"
#include "finitekey/statbounds.hpp"

namespace finitekey {

enum class AbortReason {
    none,
    empty_cell,                // some N_mu,bb needed for estimation is zero
    infeasible_estimation,     // decoy program has no feasible point
    loose_single_photon_bound, // lower bound on y_X^(1) (or n_Z^(1), n_X^(1)) is zero
    z1_dominance,              // n_Z^(1) lower bound not >> n_X^(1) upper bound
    phase_error_threshold,     // single-photon QBER bound above q_tol,X
};

std::string_view to_string(AbortReason reason) noexcept;

class EstimationAbort : public std::runtime_error {
public:
    EstimationAbort(AbortReason reason, const std::string& detail)
        : std::runtime_error(detail), reason_(reason) {}
    AbortReason reason() const noexcept { return reason_; }

private:
    AbortReason reason_;
};

struct Interval {
    double lower = 0.0;
    double upper = 1.0;
};

/// Mean rate C/N with its worst-case CP bound.
struct RateBound {
    double mean = 0.0;
    ConfidenceBound bound;

    double lower() const noexcept { return bound.lower; }
    double upper() const noexcept { return bound.upper; }
};

struct YieldBounds {
    std::array<std::array<RateBound, 2>, 3> yields{};  // [class][basis]
    RateBound x_error_rate;                            // E_uXX / N_uXX
    double eps_each = 0.0;

    const RateBound& yield(Intensity mu, Basis b) const {
        return yields[static_cast<int>(mu)][static_cast<int>(b)];
    }
};

struct PhotonYieldBounds {
    double y0_lower = 0.0;
    double y0_upper = 1.0;
    double y1_lower = 0.0;
    double y1_upper = 1.0;
};

struct PhotonCountBounds {
    Count n0_lower = 0;
    Count n0_upper = 0;
    Count n1_lower = 0;
    Count n1_upper = 0;
};

struct EstimationResult {
    YieldBounds yields;
    std::array<PhotonYieldBounds, 2> photon_yields{};  // [basis]
    std::array<PhotonCountBounds, 2> photon_counts{};  // [basis]
    double qber1_raw = 0.0;    // closed-form value before clamping
    double qber1_upper = 0.0;  // clamped to [0, 1/2]
    double q_tol = 0.0;
    double eps_each = 0.0;

    const PhotonYieldBounds& yields_in(Basis b) const { return photon_yields[static_cast<int>(b)]; }
    const PhotonCountBounds& counts_in(Basis b) const { return photon_counts[static_cast<int>(b)]; }
};

/// e^{-mu} mu^k / k!
double poisson_weight(double mu, int k);

/// Poisson mass above the photon-number cutoff, summed directly.
double poisson_tail(double mu, int cutoff);

YieldBounds bound_yields(const ObservedCounts& counts, double eps_each, Count population);

/**
 * Bounds on the vacuum and single-photon yields from three per-class yield
 * intervals, by linear programming over y^(0..cutoff) in [0, 1] subject to
 *
 *   lower_mu - tail_mu <= sum_k e^{-mu} mu^k / k! y^(k) <= upper_mu
 *
 * where tail_mu is the Poisson mass above the cutoff. Throws EstimationAbort
 * when the constraints are inconsistent.
 */
PhotonYieldBounds solve_decoy_program(const std::array<double, 3>& intensities,
                                      const std::array<Interval, 3>& class_yields, int cutoff);

PhotonYieldBounds estimate_photon_yields(const YieldBounds& yields, const ProtocolConfig& protocol,
                                         Basis basis);

/// floor / ceil of N_ubb * y * e^{-u} u^k / k! for k = 0, 1.
PhotonCountBounds photon_count_bounds(const PhotonYieldBounds& y, Count signal_pulses, double u);

/// (e^u B_X - y0 / 2) / (u y1), unclamped. Throws EstimationAbort if y1 is 0.
double qber1_closed_form(double x_error_upper, double y0_lower, double y1_lower, double u);
double qber1_upper_bound(double x_error_upper, double y0_lower, double y1_lower, double u);

/// Threshold q_tol,X = min(cap, qber1 + xi) with the finite-sample margin
/// xi = sqrt(ln(1/eps) (nZ + nX) / (2 nZ nX)).
double tolerated_phase_error(double qber1, Count n1_z_lower, Count n1_x_upper, double eps_each,
                             double cap = 0.5);

/// Whole parameter-estimation stage at per-constraint epsilon eps_sec / 46.
EstimationResult estimate(const ObservedCounts& counts, const ProtocolConfig& protocol);
EstimationResult estimate(const ObservedCounts& counts, const ProtocolConfig& protocol,
                          double eps_each);

void write_estimation_csv(std::ostream& out, const EstimationResult& result);

}  // namespace finitekey
