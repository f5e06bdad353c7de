#include "cvqkd/metrics.hpp"

#include <cmath>
#include <string>

#include "cvqkd/errors.hpp"
#include "cvqkd/math.hpp"

namespace cvqkd {

namespace {

using math::erfc_clamped;
using math::kSqrt2;

void check_vectors(const std::vector<double>& thresholds, const std::vector<double>& amplitudes) {
    if (thresholds.size() != amplitudes.size())
        throw contract_violation("threshold and amplitude vectors must have equal length");
    if (thresholds.empty()) throw contract_violation("at least one mode required");
    for (double t : thresholds)
        if (!(t >= 0.0)) throw contract_violation("thresholds must be non-negative");
    for (double a : amplitudes)
        if (!(a >= 0.0)) throw contract_violation("amplitudes must be non-negative");
}

void check_profile(const AttackProfile& profile, std::size_t modes) {
    if (profile.modes != static_cast<int>(modes))
        throw contract_violation("attack profile mode count differs from metric inputs");
    if (!profile.normalized())
        throw contract_violation("attack profile is not normalized: total " +
                                 std::to_string(profile.total()));
}

}  // namespace

double pe_single_mode(double threshold, double amplitude) {
    if (!(threshold >= 0.0) || !(amplitude >= 0.0))
        throw contract_violation("pe_single_mode requires non-negative inputs");
    return 0.5 * (erfc_clamped(kSqrt2 * (threshold - amplitude)) +
                  erfc_clamped(kSqrt2 * (threshold + amplitude)));
}

double postselection_efficiency(const std::vector<double>& thresholds,
                                const std::vector<double>& amplitudes) {
    check_vectors(thresholds, amplitudes);
    double pe = 1.0;
    for (std::size_t k = 0; k < thresholds.size(); ++k)
        pe *= pe_single_mode(thresholds[k], amplitudes[k]);
    return pe;
}

double iqber(const std::vector<double>& thresholds, const std::vector<double>& amplitudes) {
    check_vectors(thresholds, amplitudes);
    const double pe = postselection_efficiency(thresholds, amplitudes);
    if (pe <= 0.0) throw undefined_metric("IQBER undefined: postselection efficiency is zero");
    double correct = 1.0;
    for (std::size_t k = 0; k < thresholds.size(); ++k)
        correct *= 0.5 * erfc_clamped(kSqrt2 * (thresholds[k] - amplitudes[k]));
    return 1.0 - correct / pe;
}

double pe_under_attack(const std::vector<double>& thresholds,
                       const std::vector<double>& amplitudes, const AttackProfile& profile) {
    check_vectors(thresholds, amplitudes);
    check_profile(profile, thresholds.size());
    const double pe = postselection_efficiency(thresholds, amplitudes);
    double wrong_basis_pe = 1.0;
    for (double t : thresholds) wrong_basis_pe *= erfc_clamped(kSqrt2 * t);
    const double wrong_weight = std::ldexp(profile.wrong_per_state, profile.modes);
    return profile.sigma() * pe + wrong_weight * wrong_basis_pe;
}

double qber_under_attack(const std::vector<double>& thresholds,
                         const std::vector<double>& amplitudes, const AttackProfile& profile) {
    check_vectors(thresholds, amplitudes);
    check_profile(profile, thresholds.size());
    const double pe_attacked = pe_under_attack(thresholds, amplitudes, profile);
    if (pe_attacked <= 0.0)
        throw undefined_metric("attacked QBER undefined: attacked efficiency is zero");
    const int n = profile.modes;
    // Wrong-basis resends give Bob zero-mean outcomes on every mode.
    double wrong_correct = 1.0;
    for (double t : thresholds) wrong_correct *= 0.5 * erfc_clamped(kSqrt2 * t);
    double correct = std::ldexp(profile.wrong_per_state, n) * wrong_correct;
    for (std::size_t mask = 0; mask < profile.correct.size(); ++mask) {
        double term = profile.correct[mask];
        if (term == 0.0) continue;
        for (int k = 0; k < n; ++k) {
            const double signed_a = (mask >> k) & 1 ? -amplitudes[k] : amplitudes[k];
            term *= 0.5 * erfc_clamped(kSqrt2 * (thresholds[k] - signed_a));
        }
        correct += term;
    }
    return 1.0 - correct / pe_attacked;
}

MetricsReport evaluate_metrics(const std::vector<double>& thresholds,
                               const std::vector<double>& amplitudes,
                               const AttackProfile& profile) {
    MetricsReport report;
    report.pe = postselection_efficiency(thresholds, amplitudes);
    report.iqber = iqber(thresholds, amplitudes);
    report.pe_attacked = pe_under_attack(thresholds, amplitudes, profile);
    report.qber_attacked = qber_under_attack(thresholds, amplitudes, profile);
    return report;
}

}  // namespace cvqkd
