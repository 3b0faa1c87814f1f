#pragma once

#include <array>
#include <cstdint>

#include "finitekey/statbounds.hpp"

namespace finitekey {

enum class Intensity { signal = 0, decoy = 1, vacuum = 2 };
enum class Basis { Z = 0, X = 1 };

inline constexpr std::array<Intensity, 3> kIntensities{Intensity::signal, Intensity::decoy,
                                                       Intensity::vacuum};
inline constexpr std::array<Basis, 2> kBases{Basis::Z, Basis::X};

const char* name(Intensity intensity) noexcept;  // "u", "v", "w"
const char* name(Basis basis) noexcept;          // "Z", "X"

/// Fiber link and threshold-detector parameters. Defaults are the 50 km
/// operating point of the reference system.
struct ChannelConfig {
    double fiber_length_km = 50.0;
    double attenuation_db_per_km = 0.2;
    double detector_efficiency = 0.225;
    double dark_count_prob = 2.1e-5;  // per gate per detector
    double afterpulse_prob = 0.05;
    double receiver_loss_db = 3.0;
    double misalignment_error = 0.015;
    int num_detectors = 2;
};

struct ProtocolConfig {
    double clock_rate_hz = 1e9;
    double acquisition_time_s = 1200.0;
    double p_x = 0.036;                                  // minority basis; p_Z = 1 - p_X
    std::array<double, 3> class_prob{0.935, 0.028, 0.037};  // u, v, w
    std::array<double, 3> intensity{0.415, 0.05, 1e-4};     // u > v > w >= 0
    double gamma = 1.0;
    double eps_sec = 1e-10;
    double eps_ver = 1e-15;
    double q_tol_cap = 0.5;
    int photon_cutoff = 9;
    double ec_efficiency = 1.16;
    double z1_dominance_ratio = 10.0;

    double p_z() const noexcept { return 1.0 - p_x; }
    double basis_prob(Basis b) const noexcept { return b == Basis::Z ? p_z() : p_x; }
    double prob(Intensity mu) const noexcept { return class_prob[static_cast<int>(mu)]; }
    double mean_photons(Intensity mu) const noexcept { return intensity[static_cast<int>(mu)]; }
    Count total_pulses() const;
};

/// Throw std::domain_error naming the offending field.
void validate(const ChannelConfig& channel);
void validate(const ProtocolConfig& protocol);

struct CellCounts {
    Count pulses = 0;      // N_mu,bb
    Count detections = 0;  // C_mu,bb
    Count errors = 0;      // E_mu,bb
};

/// Protocol tallies for the matched-basis cells.
struct ObservedCounts {
    Count total_pulses = 0;
    Count mismatched_pulses = 0;
    std::array<std::array<CellCounts, 2>, 3> matched{};

    CellCounts& cell(Intensity mu, Basis b) {
        return matched[static_cast<int>(mu)][static_cast<int>(b)];
    }
    const CellCounts& cell(Intensity mu, Basis b) const {
        return matched[static_cast<int>(mu)][static_cast<int>(b)];
    }
    Count raw_key_length() const { return cell(Intensity::signal, Basis::Z).detections; }
};

/// Per-pulse click and bit-error probabilities for one intensity class.
struct ClassResponse {
    double detection = 0.0;
    double error = 0.0;
};

/// Overall transmittance eta: detector efficiency times fiber and receiver loss.
double transmittance(const ChannelConfig& channel);

ClassResponse class_response(const ChannelConfig& channel, double mean_photons);

/// Model ground truth for pulses carrying exactly k photons: the click
/// probability y_k and the click-and-error probability z_k (so the k-photon
/// bit error rate is z_k / y_k).
double photon_yield(const ChannelConfig& channel, int k);
double photon_error_yield(const ChannelConfig& channel, int k);

ObservedCounts expected_counts(const ChannelConfig& channel, const ProtocolConfig& protocol);

/// Monte Carlo protocol round: multinomial split of the N pulses over
/// (class, Alice basis, Bob basis), then binomial clicks and errors in each
/// matched cell. Deterministic in `seed`.
ObservedCounts sample_counts(const ChannelConfig& channel, const ProtocolConfig& protocol,
                             std::uint64_t seed);

}  // namespace finitekey
