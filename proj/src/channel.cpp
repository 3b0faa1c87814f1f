#include "finitekey/channel.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace finitekey {

namespace {

void require(bool ok, const std::string& message) {
    if (!ok) throw std::domain_error(message);
}

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

// Probability that none of the detectors fires a dark count in a gate.
double no_dark_prob(const ChannelConfig& channel) {
    return std::pow(1.0 - channel.dark_count_prob, channel.num_detectors);
}

}  // namespace

const char* name(Intensity intensity) noexcept {
    switch (intensity) {
        case Intensity::signal: return "u";
        case Intensity::decoy: return "v";
        case Intensity::vacuum: return "w";
    }
    return "?";
}

const char* name(Basis basis) noexcept { return basis == Basis::Z ? "Z" : "X"; }

Count ProtocolConfig::total_pulses() const {
    return static_cast<Count>(std::llround(clock_rate_hz * acquisition_time_s));
}

void validate(const ChannelConfig& channel) {
    require(channel.fiber_length_km >= 0.0, "fiber_length_km must be >= 0");
    require(channel.attenuation_db_per_km >= 0.0, "attenuation_db_per_km must be >= 0");
    require(channel.receiver_loss_db >= 0.0, "receiver_loss_db must be >= 0");
    require(is_probability(channel.detector_efficiency), "detector_efficiency must lie in [0, 1]");
    require(is_probability(channel.dark_count_prob), "dark_count_prob must lie in [0, 1]");
    require(is_probability(channel.afterpulse_prob), "afterpulse_prob must lie in [0, 1]");
    require(channel.misalignment_error >= 0.0 && channel.misalignment_error <= 0.5,
            "misalignment_error must lie in [0, 0.5]");
    require(channel.num_detectors >= 1, "num_detectors must be >= 1");
    // Afterpulsing inflates the click rate; the inflated rate must stay a probability.
    require((1.0 - no_dark_prob(channel)) * (1.0 + channel.afterpulse_prob) <= 1.0,
            "dark counts and afterpulses give a click probability above 1");
}

void validate(const ProtocolConfig& protocol) {
    require(protocol.clock_rate_hz > 0.0, "clock_rate_hz must be > 0");
    require(protocol.acquisition_time_s > 0.0, "acquisition_time_s must be > 0");
    require(protocol.total_pulses() >= 1, "clock_rate_hz * acquisition_time_s must be >= 1 pulse");
    require(protocol.p_x > 0.0 && protocol.p_x < 0.5, "p_x must lie in (0, 0.5)");
    double total = 0.0;
    for (double p : protocol.class_prob) {
        require(p > 0.0 && p < 1.0, "class probabilities must lie in (0, 1)");
        total += p;
    }
    require(std::fabs(total - 1.0) < 1e-9, "class probabilities must sum to 1");
    const auto& [u, v, w] = protocol.intensity;
    require(w >= 0.0 && v > w && u > v, "intensities must satisfy u > v > w >= 0");
    require(protocol.gamma > 0.0 && protocol.gamma <= 1.0, "gamma must lie in (0, 1]");
    require(protocol.eps_sec > 0.0 && protocol.eps_sec < 1.0, "eps_sec must lie in (0, 1)");
    require(protocol.eps_ver > 0.0 && protocol.eps_ver < 1.0, "eps_ver must lie in (0, 1)");
    require(protocol.eps_sec / 46.0 < 0.5 / std::sqrt(2.0), "eps_sec too large");
    require(protocol.q_tol_cap > 0.0 && protocol.q_tol_cap <= 0.5, "q_tol_cap must lie in (0, 0.5]");
    require(protocol.photon_cutoff >= 1 && protocol.photon_cutoff <= 40,
            "photon_cutoff must lie in [1, 40]");
    require(protocol.ec_efficiency >= 1.0, "ec_efficiency must be >= 1");
    require(protocol.z1_dominance_ratio >= 0.0, "z1_dominance_ratio must be >= 0");
}

double transmittance(const ChannelConfig& channel) {
    const double loss_db =
        channel.attenuation_db_per_km * channel.fiber_length_km + channel.receiver_loss_db;
    return channel.detector_efficiency * std::pow(10.0, -loss_db / 10.0);
}

ClassResponse class_response(const ChannelConfig& channel, double mean_photons) {
    const double eta = transmittance(channel);
    const double quiet = no_dark_prob(channel);
    const double signal_click = -std::expm1(-eta * mean_photons);  // 1 - e^{-eta mu}
    const double click = 1.0 - quiet * std::exp(-eta * mean_photons);
    const double ap = channel.afterpulse_prob;

    ClassResponse r;
    r.detection = click * (1.0 + ap);
    // Dark-count and afterpulse clicks carry a random bit.
    r.error = channel.misalignment_error * signal_click + 0.5 * (1.0 - quiet) + 0.5 * ap * click;
    return r;
}

double photon_yield(const ChannelConfig& channel, int k) {
    const double eta = transmittance(channel);
    const double click = 1.0 - no_dark_prob(channel) * std::pow(1.0 - eta, k);
    return click * (1.0 + channel.afterpulse_prob);
}

double photon_error_yield(const ChannelConfig& channel, int k) {
    const double eta = transmittance(channel);
    const double quiet = no_dark_prob(channel);
    const double signal_click = 1.0 - std::pow(1.0 - eta, k);
    const double click = 1.0 - quiet * std::pow(1.0 - eta, k);
    return channel.misalignment_error * signal_click + 0.5 * (1.0 - quiet) +
           0.5 * channel.afterpulse_prob * click;
}

ObservedCounts expected_counts(const ChannelConfig& channel, const ProtocolConfig& protocol) {
    validate(channel);
    validate(protocol);
    ObservedCounts counts;
    counts.total_pulses = protocol.total_pulses();
    const auto N = static_cast<double>(counts.total_pulses);

    Count matched_total = 0;
    for (Intensity mu : kIntensities) {
        const ClassResponse r = class_response(channel, protocol.mean_photons(mu));
        for (Basis b : kBases) {
            const double pb = protocol.basis_prob(b);
            CellCounts& cell = counts.cell(mu, b);
            cell.pulses = std::llround(N * protocol.prob(mu) * pb * pb);
            const auto pulses = static_cast<double>(cell.pulses);
            cell.detections = std::min(cell.pulses, static_cast<Count>(std::llround(pulses * r.detection)));
            cell.errors = std::clamp<Count>(std::llround(pulses * r.error), 0, cell.detections);
            matched_total += cell.pulses;
        }
    }
    counts.mismatched_pulses = std::max<Count>(0, counts.total_pulses - matched_total);
    return counts;
}

ObservedCounts sample_counts(const ChannelConfig& channel, const ProtocolConfig& protocol,
                             std::uint64_t seed) {
    validate(channel);
    validate(protocol);
    std::mt19937_64 rng(seed);
    auto binomial = [&rng](Count n, double p) -> Count {
        if (n <= 0 || p <= 0.0) return 0;
        if (p >= 1.0) return n;
        return std::binomial_distribution<Count>(n, p)(rng);
    };

    ObservedCounts counts;
    counts.total_pulses = protocol.total_pulses();

    // Sequential conditional binomials realize the multinomial over the
    // 12 (class, Alice basis, Bob basis) cells.
    Count remaining = counts.total_pulses;
    double mass = 1.0;
    for (Intensity mu : kIntensities) {
        const ClassResponse r = class_response(channel, protocol.mean_photons(mu));
        for (Basis alice : kBases) {
            for (Basis bob : kBases) {
                const double p =
                    protocol.prob(mu) * protocol.basis_prob(alice) * protocol.basis_prob(bob);
                const bool last = mu == Intensity::vacuum && alice == Basis::X && bob == Basis::X;
                const Count pulses = last ? remaining : binomial(remaining, std::min(1.0, p / mass));
                remaining -= pulses;
                mass -= p;
                if (alice != bob) {
                    counts.mismatched_pulses += pulses;
                    continue;
                }
                CellCounts& cell = counts.cell(mu, alice);
                cell.pulses = pulses;
                cell.detections = binomial(pulses, r.detection);
                cell.errors = r.detection > 0.0
                                  ? binomial(cell.detections, std::min(1.0, r.error / r.detection))
                                  : 0;
            }
        }
    }
    return counts;
}

}  // namespace finitekey
