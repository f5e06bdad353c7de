#pragma once

#include <vector>

#include "cvqkd/attack.hpp"

namespace cvqkd {

// Closed-form postselection and error-rate figures for one parameter
// point. The amplitudes passed here are the ones Bob's detector sees.
struct MetricsReport {
    double pe = 1.0;
    double iqber = 0.0;
    double pe_attacked = 1.0;
    double qber_attacked = 0.0;
};

// Single-mode postselection efficiency
//   1/2 [erfc(sqrt2 (e0 - a)) + erfc(sqrt2 (e0 + a))].
double pe_single_mode(double threshold, double amplitude);

// Product of pe_single_mode over modes.
double postselection_efficiency(const std::vector<double>& thresholds,
                                const std::vector<double>& amplitudes);

// Intrinsic symbol error rate among postselected pulses, no eavesdropper:
//   1 - prod_k erfc(sqrt2 (e0_k - a_k)) / (2^N P).
double iqber(const std::vector<double>& thresholds, const std::vector<double>& amplitudes);

// Postselection efficiency of the attacked ensemble:
//   sigma P + 2^N p_perp prod_k erfc(sqrt2 e0_k).
double pe_under_attack(const std::vector<double>& thresholds,
                       const std::vector<double>& amplitudes, const AttackProfile& profile);

// Symbol error rate of the attacked ensemble: one minus the probability of
// a postselected, fully correct symbol over the attacked efficiency.
double qber_under_attack(const std::vector<double>& thresholds,
                         const std::vector<double>& amplitudes, const AttackProfile& profile);

MetricsReport evaluate_metrics(const std::vector<double>& thresholds,
                               const std::vector<double>& amplitudes,
                               const AttackProfile& profile);

}  // namespace cvqkd
