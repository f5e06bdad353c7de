#pragma once

#include <cstdint>
#include <vector>

#include "cvqkd/attack.hpp"
#include "cvqkd/metrics.hpp"

namespace cvqkd {

struct ChannelModel {
    double transmittance = 1.0;
    double loss() const { return 1.0 - transmittance; }
    static constexpr double kFiberAttenuationDbPerKm = 0.2;
    static ChannelModel from_loss(double loss);
};

// log2(N) + (1-p) log2(1-p) + p log2(p/(N-1)), with 0 log 0 = 0.
double alphabet_entropy(double p, unsigned alphabet_size);

// Entropy of the blended error rate eta*q' + (1-eta)*q.
double mutual_info_ab(double q, double q_attacked, double eta, unsigned alphabet_size);

// Upper bound on Eve's information given she always guesses the basis:
// log2(N) + sum_s Pi_s log2 Pi_s with Pi_s = p_s / sigma.
double mutual_info_ae_bound(const AttackProfile& profile);

struct GainPoint {
    std::vector<double> thresholds;
    std::vector<double> amplitudes;  // launch amplitudes
    double eta = 0.0;
    double transmittance = 1.0;
    double gain = 0.0;      // clipped at zero for reporting
    double gain_raw = 0.0;  // unclipped diagnostic value
    double i_ab = 0.0;
    double i_ae_bound = 0.0;
    MetricsReport metrics;
};

// G = 1/2 [ (eta P' + (1-eta) P) I_AB - eta P' I_AE ], clipped below at 0.
// amplitudes_effective are Bob's; the profile is whatever the caller
// computed for Eve's intercept point.
GainPoint secure_key_gain(const std::vector<double>& thresholds,
                          const std::vector<double>& amplitudes_effective, double eta,
                          const AttackProfile& profile);

// a -> sqrt(T) a per mode.
std::vector<double> apply_loss(const std::vector<double>& amplitudes, double transmittance);

// Fiber length consistent with loss = 1 - T at 0.2 dB/km.
double loss_to_distance(double loss);

struct SearchSpec {
    double e0_min = 0.0, e0_max = 2.5, e0_step = 0.05;
    double a_min = 0.05, a_max = 3.0, a_step = 0.05;
    double refine_step = 1e-3;  // final compass-search resolution
    ProfileAccuracy accuracy{};
    int workers = 1;

    static SearchSpec single_point(double e0, double a);
    // The protocol's nominal operating point (threshold 0.30, amplitude
    // 1.20 per mode); the reference gain table is evaluated here.
    static SearchSpec nominal();
};

// Maximize the gain over the (e0, a) grid, then refine by compass search.
// Eve intercepts at the transmitter, so her profile is evaluated at the
// launch amplitude while Bob's statistics use sqrt(T) a. Deterministic for
// a fixed spec.
GainPoint optimize_gain(int modes, double transmittance, double eta, const SearchSpec& spec);

struct Table1Row {
    double loss = 0.0;
    double distance_km = 0.0;
    std::vector<GainPoint> gains;  // index 0 -> N = 1
};

std::vector<Table1Row> compute_gain_table(double eta, const std::vector<double>& losses,
                                          const SearchSpec& spec, int max_modes = 3,
                                          int workers = 1);

}  // namespace cvqkd
