#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "finitekey/channel.hpp"
#include "finitekey/decoy.hpp"

namespace finitekey {

/// -x log2 x - (1-x) log2 (1-x) for x <= 1/2, and 1 above.
double binary_entropy_truncated(double x);

/// Security overhead in bits: log2(2 / eps_ver) + 6 log2(46 / eps_sec).
double delta_overhead(double eps_ver, double eps_sec);

/// floor(n1_z_upper * q_tol / gamma), the bound on Z-basis phase errors.
Count phase_error_count_bound(Count n1_z_upper, double q_tol, double gamma);

/// Modelled error-correction leakage ceil(f_EC * C_uZZ * h(qber)).
Count ec_leakage(Count raw_key_length, double qber, double ec_efficiency);

/// The five contributions to the secure key length, in bits.
struct KeyTerms {
    double vacuum = 0.0;         // n_Z^(0) lower bound
    double single_photon = 0.0;  // gamma * n_Z^(1) lower bound
    double max_entropy = 0.0;    // n_Z^(1) upper bound * h(q_tol,X)
    double ec_leakage = 0.0;     // n_EC
    double delta = 0.0;          // security overhead

    double sum() const noexcept {
        return vacuum + single_photon - max_entropy - ec_leakage - delta;
    }
};

/// max(0, floor(terms.sum()))
Count compose_key_length(const KeyTerms& terms);

struct EpsilonEntry {
    std::string quantity;
    double failure_prob = 0.0;
    bool counted = false;  // contributes to the eps_sec + eps_ver total
};

struct KeyRateReport {
    Count n_sec = 0;
    double rate_bps = 0.0;
    double raw_length = 0.0;  // unclamped term sum
    KeyTerms terms;
    Count phase_error_bound = 0;
    double q_tol = 0.0;
    double qber1_upper = 0.0;
    double qber_z = 0.0;
    Count block_size = 0;  // C_uZZ
    double acquisition_time_s = 0.0;

    bool aborted = false;
    AbortReason abort_reason = AbortReason::none;
    std::string abort_detail;
    bool no_key = false;

    std::vector<EpsilonEntry> eps_ledger;
    double eps_total = 0.0;
    double eps_ver = 0.0;
    double eps_sec = 0.0;

    std::optional<EstimationResult> estimation;
};

/// Failure-probability ledger for the estimated protocol quantities.
std::vector<EpsilonEntry> epsilon_ledger(double eps_each, double eps_ver);

/**
 * Secure key length from completed parameter estimation. Raises the abort
 * flag (n_sec = 0) when n_Z^(1) lower bound < z1_dominance_ratio * n_X^(1)
 * upper bound, or when the single-photon QBER bound exceeds q_tol,X.
 * A negative key length is clamped to zero and flagged as no_key.
 */
KeyRateReport secure_key_length(const EstimationResult& estimation, const ObservedCounts& counts,
                                const ProtocolConfig& protocol);

/// Estimation plus key length, converting estimation aborts into a report.
KeyRateReport evaluate_counts(const ObservedCounts& counts, const ProtocolConfig& protocol);

/// evaluate_counts on the expected counts of the channel model.
KeyRateReport evaluate_link(const ChannelConfig& channel, const ProtocolConfig& protocol);

/// Flat `key = value` record.
void write_report(std::ostream& out, const KeyRateReport& report);

/// CSV header and row: distance_km, block_size, n_sec, rate_bps, the five
/// key terms, q_tol_X, abort_reason.
std::string report_csv_header();
std::string report_csv_row(double distance_km, const KeyRateReport& report);

}  // namespace finitekey
