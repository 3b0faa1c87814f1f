#include "finitekey/keyrate.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "finitekey/format.hpp"

namespace finitekey {

double binary_entropy_truncated(double x) {
    if (!(x >= 0.0 && x <= 1.0)) {
        throw std::domain_error("binary_entropy_truncated: argument outside [0, 1]");
    }
    if (x > 0.5) return 1.0;
    if (x == 0.0) return 0.0;
    return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

double delta_overhead(double eps_ver, double eps_sec) {
    return std::log2(2.0 / eps_ver) + 6.0 * std::log2(46.0 / eps_sec);
}

Count phase_error_count_bound(Count n1_z_upper, double q_tol, double gamma) {
    if (!(gamma > 0.0 && gamma <= 1.0)) {
        throw std::domain_error("phase_error_count_bound: gamma must lie in (0, 1]");
    }
    return static_cast<Count>(std::floor(static_cast<double>(n1_z_upper) * q_tol / gamma));
}

Count ec_leakage(Count raw_key_length, double qber, double ec_efficiency) {
    return static_cast<Count>(std::ceil(ec_efficiency * static_cast<double>(raw_key_length) *
                                        binary_entropy_truncated(qber)));
}

Count compose_key_length(const KeyTerms& terms) {
    const double raw = std::floor(terms.sum());
    return raw > 0.0 ? static_cast<Count>(raw) : 0;
}

std::vector<EpsilonEntry> epsilon_ledger(double eps_each, double eps_ver) {
    return {
        {"N (predetermined triggers)", 0.0, false},
        {"N_mu,bb (matched-basis sample sizes)", 0.0, false},
        {"C_mu,bibj (count samples)", 0.0, false},
        {"Y_b^(mu) bounds, per class and basis (inside the decoy programs)", 2.0 * eps_each, false},
        {"y_Z^(k) bounds", 6.0 * eps_each, true},
        {"y_X^(k) bounds", 6.0 * eps_each, true},
        {"n_b^(k) bounds", 6.0 * eps_each, true},
        {"E_uZZ (verified by hashing)", eps_ver, true},
        {"E_mu,bibj != E_uZZ (revealed)", 0.0, false},
        {"B_X^(u) upper bound (inside the QBER bound)", eps_each, false},
        {"q_bit,X^(1) upper bound", 19.0 * eps_each, true},
        {"smooth-entropy proof method", 9.0 * eps_each, true},
        {"q_tol,X (predetermined)", 0.0, false},
    };
}

namespace {

KeyRateReport base_report(const ObservedCounts& counts, const ProtocolConfig& protocol) {
    KeyRateReport report;
    report.acquisition_time_s = protocol.acquisition_time_s;
    report.block_size = counts.raw_key_length();
    const CellCounts& uz = counts.cell(Intensity::signal, Basis::Z);
    report.qber_z = uz.detections > 0
                        ? static_cast<double>(uz.errors) / static_cast<double>(uz.detections)
                        : 0.0;
    report.eps_ver = protocol.eps_ver;
    report.eps_sec = protocol.eps_sec;
    report.eps_ledger = epsilon_ledger(protocol.eps_sec / 46.0, protocol.eps_ver);
    for (const EpsilonEntry& e : report.eps_ledger) {
        if (e.counted) report.eps_total += e.failure_prob;
    }
    return report;
}

void mark_aborted(KeyRateReport& report, AbortReason reason, std::string detail) {
    report.aborted = true;
    report.abort_reason = reason;
    report.abort_detail = std::move(detail);
    report.n_sec = 0;
    report.rate_bps = 0.0;
    report.no_key = false;
}

}  // namespace

KeyRateReport secure_key_length(const EstimationResult& estimation, const ObservedCounts& counts,
                                const ProtocolConfig& protocol) {
    KeyRateReport report = base_report(counts, protocol);
    report.estimation = estimation;
    report.q_tol = estimation.q_tol;
    report.qber1_upper = estimation.qber1_upper;

    const PhotonCountBounds& nz = estimation.counts_in(Basis::Z);
    const PhotonCountBounds& nx = estimation.counts_in(Basis::X);

    KeyTerms& t = report.terms;
    t.vacuum = static_cast<double>(nz.n0_lower);
    t.single_photon = protocol.gamma * static_cast<double>(nz.n1_lower);
    t.max_entropy = static_cast<double>(nz.n1_upper) * binary_entropy_truncated(estimation.q_tol);
    t.ec_leakage = static_cast<double>(
        ec_leakage(report.block_size, report.qber_z, protocol.ec_efficiency));
    t.delta = delta_overhead(protocol.eps_ver, protocol.eps_sec);

    report.raw_length = t.sum();
    report.n_sec = compose_key_length(t);
    report.rate_bps = static_cast<double>(report.n_sec) / protocol.acquisition_time_s;
    report.phase_error_bound = phase_error_count_bound(nz.n1_upper, estimation.q_tol, protocol.gamma);
    report.no_key = report.n_sec == 0;

    if (static_cast<double>(nz.n1_lower) <
        protocol.z1_dominance_ratio * static_cast<double>(nx.n1_upper)) {
        std::ostringstream detail;
        detail << "n_Z^(1) lower bound " << nz.n1_lower << " < " << protocol.z1_dominance_ratio
               << " x n_X^(1) upper bound " << nx.n1_upper;
        mark_aborted(report, AbortReason::z1_dominance, detail.str());
    } else if (estimation.qber1_raw > estimation.q_tol) {
        std::ostringstream detail;
        detail << "single-photon QBER bound " << estimation.qber1_raw << " exceeds q_tol,X "
               << estimation.q_tol;
        mark_aborted(report, AbortReason::phase_error_threshold, detail.str());
    }
    return report;
}

KeyRateReport evaluate_counts(const ObservedCounts& counts, const ProtocolConfig& protocol) {
    try {
        return secure_key_length(estimate(counts, protocol), counts, protocol);
    } catch (const EstimationAbort& abort) {
        KeyRateReport report = base_report(counts, protocol);
        report.raw_length = -std::numeric_limits<double>::infinity();
        mark_aborted(report, abort.reason(), abort.what());
        return report;
    }
}

KeyRateReport evaluate_link(const ChannelConfig& channel, const ProtocolConfig& protocol) {
    return evaluate_counts(expected_counts(channel, protocol), protocol);
}

void write_report(std::ostream& out, const KeyRateReport& r) {
    out << "n_sec = " << r.n_sec << '\n'
        << "rate_bps = " << format_double(r.rate_bps) << '\n'
        << "block_size = " << r.block_size << '\n'
        << "acquisition_time_s = " << format_double(r.acquisition_time_s) << '\n'
        << "term_vacuum = " << format_double(r.terms.vacuum) << '\n'
        << "term_single_photon = " << format_double(r.terms.single_photon) << '\n'
        << "term_max_entropy = " << format_double(r.terms.max_entropy) << '\n'
        << "term_ec_leakage = " << format_double(r.terms.ec_leakage) << '\n'
        << "term_delta = " << format_double(r.terms.delta) << '\n'
        << "raw_length = " << format_double(r.raw_length) << '\n'
        << "phase_error_bound = " << r.phase_error_bound << '\n'
        << "qber_z = " << format_double(r.qber_z) << '\n'
        << "qber1_upper = " << format_double(r.qber1_upper) << '\n'
        << "q_tol_x = " << format_double(r.q_tol) << '\n'
        << "no_key = " << (r.no_key ? "true" : "false") << '\n'
        << "aborted = " << (r.aborted ? "true" : "false") << '\n'
        << "abort_reason = " << to_string(r.abort_reason) << '\n';
    if (!r.abort_detail.empty()) out << "abort_detail = " << r.abort_detail << '\n';
    if (r.estimation) {
        const EstimationResult& e = *r.estimation;
        for (Basis b : kBases) {
            const PhotonYieldBounds& y = e.yields_in(b);
            const PhotonCountBounds& n = e.counts_in(b);
            const std::string s = name(b);
            out << "y0_" << s << "_lower = " << format_double(y.y0_lower) << '\n'
                << "y0_" << s << "_upper = " << format_double(y.y0_upper) << '\n'
                << "y1_" << s << "_lower = " << format_double(y.y1_lower) << '\n'
                << "y1_" << s << "_upper = " << format_double(y.y1_upper) << '\n'
                << "n0_" << s << "_lower = " << n.n0_lower << '\n'
                << "n0_" << s << "_upper = " << n.n0_upper << '\n'
                << "n1_" << s << "_lower = " << n.n1_lower << '\n'
                << "n1_" << s << "_upper = " << n.n1_upper << '\n';
        }
        out << "eps_each = " << format_double(e.eps_each) << '\n';
    }
    out << "eps_total = " << format_double(r.eps_total) << '\n'
        << "security_claim = " << format_double(r.eps_ver) << "-correct, "
        << format_double(r.eps_sec) << "-secret\n";
}

std::string report_csv_header() {
    return "distance_km,block_size,n_sec,rate_bps,term_vacuum,term_single_photon,"
           "term_max_entropy,term_ec_leakage,term_delta,q_tol_x,abort_reason";
}

std::string report_csv_row(double distance_km, const KeyRateReport& r) {
    std::ostringstream row;
    row << format_double(distance_km) << ',' << r.block_size << ',' << r.n_sec << ','
        << format_double(r.rate_bps) << ',' << format_double(r.terms.vacuum) << ','
        << format_double(r.terms.single_photon) << ',' << format_double(r.terms.max_entropy) << ','
        << format_double(r.terms.ec_leakage) << ',' << format_double(r.terms.delta) << ','
        << format_double(r.q_tol) << ',' << to_string(r.abort_reason);
    return row.str();
}

}  // namespace finitekey
