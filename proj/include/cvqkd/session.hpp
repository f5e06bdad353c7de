#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cvqkd/attack.hpp"
#include "cvqkd/states.hpp"

namespace cvqkd {

struct ProtocolParams {
    int modes = 1;
    std::vector<double> amplitudes;  // launch a_k
    std::vector<double> thresholds;  // e0_k
    double eta = 0.0;                // interception rate
    double transmittance = 1.0;
    void validate() const;
};

struct SessionConfig {
    ProtocolParams params;
    std::uint64_t n_pulses = 1'000'000;
    std::uint64_t seed = 42;
    int workers = 1;
    std::size_t trace_capacity = 0;  // ring buffer of the last pulses; 0 = off
    void validate() const;
};

struct PulseRecord {
    std::uint64_t index = 0;
    Basis alice_basis = Basis::E;
    SignBits alice_signs;
    bool eve_intercepted = false;
    std::optional<PreparedState> eve_resend;
    Basis bob_basis = Basis::E;
    QuadratureVector bob_outcome;
    bool sifted = false;
    bool postselected = false;
    std::optional<SignBits> bob_bits;  // 1 = positive fringe per the assignment rule
};

// Threshold bit assignment: bit_k = 1 when x_k >= e0_k, 0 when
// x_k <= -e0_k; nullopt when any mode falls inside the dead band.
std::optional<SignBits> bob_assign(const QuadratureVector& outcome,
                                   const std::vector<double>& thresholds);

struct RateEstimate {
    double value = 0.0;
    double stderror = 0.0;
    std::uint64_t trials = 0;
    static RateEstimate from_counts(std::uint64_t successes, std::uint64_t trials);
};

struct SessionReport {
    // raw counters
    std::uint64_t total = 0;
    std::uint64_t sifted = 0;
    std::uint64_t postselected = 0;
    std::uint64_t symbol_errors = 0;
    std::vector<std::uint64_t> mode_bit_errors;  // per mode, among postselected
    std::uint64_t attacked = 0;                  // pulses Eve intercepted
    std::uint64_t sifted_attacked = 0;
    std::uint64_t postselected_attacked = 0;
    std::uint64_t symbol_errors_attacked = 0;
    // Eve's decisions relative to Alice's state (all intercepted pulses):
    // same-basis resends by flipped-mode mask, plus the wrong-basis total.
    std::vector<std::uint64_t> eve_pattern_counts;
    std::uint64_t eve_wrong_basis = 0;

    // derived rates with binomial standard errors
    RateEstimate sift_ratio;
    RateEstimate empirical_pe;    // postselected / sifted
    RateEstimate empirical_qber;  // symbol errors / postselected
    RateEstimate empirical_pe_attacked, empirical_qber_attacked;
    RateEstimate empirical_pe_clean, empirical_qber_clean;

    std::vector<PulseRecord> trace;  // last trace_capacity pulses, in order
};

// End-to-end stochastic run: Alice's random state, optional interception
// at the transmitter, fiber attenuation sqrt(T), Bob's homodyne, sifting,
// threshold postselection, symbol comparison. Bit-reproducible for a given
// (seed, n_pulses) regardless of worker count.
SessionReport run_session(const SessionConfig& config);

}  // namespace cvqkd
