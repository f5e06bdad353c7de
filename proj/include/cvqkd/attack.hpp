#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "cvqkd/rng.hpp"
#include "cvqkd/states.hpp"

namespace cvqkd {

// Paired simultaneous homodyne readings of both quadratures (one per arm
// of the 50/50 split).
struct JointOutcome {
    QuadratureVector e;
    QuadratureVector p;
};

// Generalized spherical coordinates of an N-vector: radius plus N-1 angles,
// the first N-2 in [0, pi], the last in [0, 2*pi). N = 1 has no angles.
struct SphericalPoint {
    double radius = 0.0;
    std::vector<double> angles;
};

// Outcome statistics of the intercept-resend attack against one input
// state, reduced by symmetry to the all-positive first-quadrature input:
// correct[mask] is the probability that the resend keeps the basis and
// flips exactly the modes set in mask (bit k <=> mode k flipped);
// wrong_per_state is the probability of each single wrong-basis resend.
struct AttackProfile {
    int modes = 0;
    std::vector<double> correct;
    std::vector<double> correct_se;  // zero for quadrature entries
    double wrong_per_state = 0.0;
    double wrong_se = 0.0;
    double norm_residual = 0.0;  // |sum_s p_s + 2^N p_perp - 1| as computed

    double sigma() const {
        double s = 0.0;
        for (double p : correct) s += p;
        return s;
    }
    double total() const { return sigma() + std::ldexp(wrong_per_state, modes); }
    bool normalized(double tol = 1e-6) const { return std::abs(total() - 1.0) <= tol; }

    // The no-attack point mass: p_{+...+} = 1, everything else 0.
    static AttackProfile trivial(int modes);
};

enum class ProfileMethod { ReducedQuadrature, MonteCarlo };

struct ProfileAccuracy {
    double quad_abs_tol = 1e-9;  // absolute target per profile entry
    std::uint64_t mc_samples = 10'000'000;
    std::uint64_t mc_seed = 20260810;
    int mc_streams = 1;  // deterministic per (seed, streams)
    int workers = 1;
};

// Joint density of Eve's paired outcome for the all-positive E-basis input:
// (2/pi)^N prod_j exp(-2 (e_j - a_j/sqrt(2))^2) exp(-2 p_j^2).
double joint_outcome_density(const std::vector<double>& amplitudes, const JointOutcome& outcome);

SphericalPoint to_spherical(const QuadratureVector& v);
QuadratureVector to_cartesian(const SphericalPoint& s, int modes);

// Eve's resend rule: compare the two arm norms (ties go to the first
// quadrature), take the sign pattern of the winning arm, resend at the
// nominal per-mode amplitudes.
PreparedState eve_decision(const JointOutcome& outcome, const std::vector<double>& amplitudes);

// Sample Eve's paired readings for an arbitrary prepared state: the arm
// matching the state's basis is displaced by (-1)^{nu_k} a_k / sqrt(2),
// the other is vacuum; both have variance 1/4.
JointOutcome sample_joint_outcome(const PreparedState& state, Rng& rng);

// Full outcome-probability table, either by the radial-angular reduction
// (adaptive Gauss-Kronrod radius, Gauss-Legendre angles; N <= 3) or by
// Monte Carlo classification of sampled outcomes.
AttackProfile attack_profile(const std::vector<double>& amplitudes, ProfileMethod method,
                             const ProfileAccuracy& accuracy = {});

// The mixture Eve's attack induces for a given input state: same-basis
// states weighted by p_s composed relative to the input signs, plus all
// 2^N wrong-basis states at wrong_per_state each.
std::vector<std::pair<PreparedState, double>> resend_mixture(const PreparedState& input,
                                                             const AttackProfile& profile);

}  // namespace cvqkd
