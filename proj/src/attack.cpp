#include "cvqkd/attack.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>
#include <thread>

#include "cvqkd/errors.hpp"
#include "cvqkd/math.hpp"

namespace cvqkd {

namespace {

using math::kPi;
using math::kSqrt2;

void check_amplitudes(const std::vector<double>& amplitudes) {
    if (amplitudes.empty()) throw contract_violation("at least one mode required");
    for (double a : amplitudes)
        if (!(a >= 0.0)) throw contract_violation("amplitudes must be non-negative");
}

double squared_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

// Angular quadrature over the all-positive orthant of the unit sphere,
// tabulated as direction weights and per-mask projection coefficients
// c_j = sum_k s_k a_k u_k(node j).
struct AngularGrid {
    std::vector<double> weight;                // solid-angle weights
    std::vector<std::vector<double>> directions;  // unit vectors per node

    static AngularGrid build(int modes) {
        AngularGrid grid;
        if (modes == 1) {
            grid.weight = {1.0};
            grid.directions = {{1.0}};
        } else if (modes == 2) {
            const auto rule = math::gauss_legendre(48, 0.0, 0.5 * kPi);
            for (std::size_t i = 0; i < rule.x.size(); ++i) {
                grid.weight.push_back(rule.w[i]);
                grid.directions.push_back({std::cos(rule.x[i]), std::sin(rule.x[i])});
            }
        } else {
            const auto theta = math::gauss_legendre(40, 0.0, 0.5 * kPi);
            const auto phi = math::gauss_legendre(40, 0.0, 0.5 * kPi);
            for (std::size_t i = 0; i < theta.x.size(); ++i) {
                const double st = std::sin(theta.x[i]);
                const double ct = std::cos(theta.x[i]);
                for (std::size_t j = 0; j < phi.x.size(); ++j) {
                    grid.weight.push_back(theta.w[i] * phi.w[j] * st);
                    grid.directions.push_back({ct, st * std::cos(phi.x[j]), st * std::sin(phi.x[j])});
                }
            }
        }
        return grid;
    }
};

// One orthant probability: integrate the radial density against either the
// postselecting CDF (Y < X wins, correct basis) or its complement.
double orthant_probability(const std::vector<double>& signed_amps, const AngularGrid& grid,
                           bool wrong_basis, double abs_tol, bool* converged) {
    const int n = static_cast<int>(signed_amps.size());
    const double a2 = squared_norm(signed_amps);
    const double rmax = std::sqrt(a2) / kSqrt2 + 8.0;
    const double prefactor = std::pow(2.0 / kPi, 0.5 * n) * std::exp(-a2);

    std::vector<double> proj(grid.directions.size());
    for (std::size_t j = 0; j < grid.directions.size(); ++j) {
        double c = 0.0;
        for (int k = 0; k < n; ++k) c += signed_amps[k] * grid.directions[j][k];
        proj[j] = 2.0 * kSqrt2 * c;
    }

    auto integrand = [&](double r) {
        double angular = 0.0;
        for (std::size_t j = 0; j < proj.size(); ++j)
            angular += grid.weight[j] * std::exp(proj[j] * r);
        const double radial_weight = wrong_basis ? math::norm_sf_halfwidth_gaussian(n, r)
                                                 : math::norm_cdf_halfwidth_gaussian(n, r);
        return std::pow(r, n - 1) * std::exp(-2.0 * r * r) * radial_weight * angular;
    };

    const auto result = math::integrate_gk(integrand, 0.0, rmax, abs_tol / prefactor);
    if (!result.converged) *converged = false;
    return prefactor * result.value;
}

AttackProfile profile_by_quadrature(const std::vector<double>& amplitudes,
                                    const ProfileAccuracy& accuracy) {
    const int n = static_cast<int>(amplitudes.size());
    if (n > 3)
        throw contract_violation("reduced quadrature supports up to 3 modes; use Monte Carlo");
    const std::size_t patterns = std::size_t{1} << n;
    const AngularGrid grid = AngularGrid::build(n);

    AttackProfile profile;
    profile.modes = n;
    profile.correct.assign(patterns, 0.0);
    profile.correct_se.assign(patterns, 0.0);

    bool converged = true;
    double wrong_total = 0.0;
    std::vector<double> signed_amps(amplitudes.begin(), amplitudes.end());
    for (std::size_t mask = 0; mask < patterns; ++mask) {
        for (int k = 0; k < n; ++k)
            signed_amps[k] = (mask >> k) & 1 ? -amplitudes[k] : amplitudes[k];
        profile.correct[mask] =
            orthant_probability(signed_amps, grid, false, accuracy.quad_abs_tol, &converged);
        wrong_total +=
            orthant_probability(signed_amps, grid, true, accuracy.quad_abs_tol, &converged);
    }
    profile.wrong_per_state = std::ldexp(wrong_total, -n);
    profile.norm_residual = std::abs(profile.sigma() + wrong_total - 1.0);
    if (!converged || profile.norm_residual > 1e-6)
        throw accuracy_failure("attack-profile quadrature missed its accuracy target",
                               profile.sigma(), profile.norm_residual);
    return profile;
}

struct McCounts {
    std::vector<std::uint64_t> pattern;
    std::uint64_t wrong = 0;
    std::uint64_t samples = 0;
};

McCounts run_mc_stream(const std::vector<double>& amplitudes, std::uint64_t samples,
                       std::uint64_t seed, std::uint64_t stream) {
    const int n = static_cast<int>(amplitudes.size());
    Rng rng(seed, stream);
    McCounts counts;
    counts.pattern.assign(std::size_t{1} << n, 0);
    counts.samples = samples;
    std::vector<double> e(n);
    for (std::uint64_t i = 0; i < samples; ++i) {
        double x2 = 0.0, y2 = 0.0;
        std::size_t mask = 0;
        for (int k = 0; k < n; ++k) {
            e[k] = rng.gaussian(amplitudes[k] / kSqrt2, 0.5);
            x2 += e[k] * e[k];
        }
        for (int k = 0; k < n; ++k) {
            const double p = rng.gaussian(0.0, 0.5);
            y2 += p * p;
        }
        if (x2 >= y2) {
            for (int k = 0; k < n; ++k)
                if (e[k] < 0.0) mask |= std::size_t{1} << k;
            ++counts.pattern[mask];
        } else {
            ++counts.wrong;
        }
    }
    return counts;
}

AttackProfile profile_by_monte_carlo(const std::vector<double>& amplitudes,
                                     const ProfileAccuracy& accuracy) {
    const int n = static_cast<int>(amplitudes.size());
    if (accuracy.mc_samples == 0) throw contract_violation("Monte Carlo needs at least one sample");
    const int streams = std::max(1, accuracy.mc_streams);
    const std::uint64_t base = accuracy.mc_samples / streams;
    const std::uint64_t extra = accuracy.mc_samples % streams;

    std::vector<McCounts> partials(streams);
    const int threads = std::max(1, std::min(accuracy.workers, streams));
    if (threads == 1) {
        for (int s = 0; s < streams; ++s)
            partials[s] = run_mc_stream(amplitudes, base + (static_cast<std::uint64_t>(s) < extra),
                                        accuracy.mc_seed, static_cast<std::uint64_t>(s));
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        for (int t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (int s = next.fetch_add(1); s < streams; s = next.fetch_add(1))
                    partials[s] =
                        run_mc_stream(amplitudes, base + (static_cast<std::uint64_t>(s) < extra),
                                      accuracy.mc_seed, static_cast<std::uint64_t>(s));
            });
        for (auto& th : pool) th.join();
    }

    McCounts total;
    total.pattern.assign(std::size_t{1} << n, 0);
    for (const auto& part : partials) {
        for (std::size_t m = 0; m < total.pattern.size(); ++m) total.pattern[m] += part.pattern[m];
        total.wrong += part.wrong;
        total.samples += part.samples;
    }

    AttackProfile profile;
    profile.modes = n;
    const double inv = 1.0 / static_cast<double>(total.samples);
    profile.correct.resize(total.pattern.size());
    profile.correct_se.resize(total.pattern.size());
    for (std::size_t m = 0; m < total.pattern.size(); ++m) {
        const double p = static_cast<double>(total.pattern[m]) * inv;
        profile.correct[m] = p;
        profile.correct_se[m] = std::sqrt(std::max(p * (1.0 - p) * inv, 0.0));
    }
    // The vacuum arm is isotropic, so the 2^N wrong-basis orthants are
    // exactly equiprobable; pool them for the per-state estimate.
    const double pw = static_cast<double>(total.wrong) * inv;
    profile.wrong_per_state = std::ldexp(pw, -n);
    profile.wrong_se = std::ldexp(std::sqrt(std::max(pw * (1.0 - pw) * inv, 0.0)), -n);
    profile.norm_residual = std::abs(profile.sigma() + pw - 1.0);
    return profile;
}

}  // namespace

AttackProfile AttackProfile::trivial(int modes) {
    AttackProfile profile;
    profile.modes = modes;
    profile.correct.assign(std::size_t{1} << modes, 0.0);
    profile.correct_se.assign(std::size_t{1} << modes, 0.0);
    profile.correct[0] = 1.0;
    return profile;
}

double joint_outcome_density(const std::vector<double>& amplitudes, const JointOutcome& outcome) {
    check_amplitudes(amplitudes);
    if (outcome.e.size() != amplitudes.size() || outcome.p.size() != amplitudes.size())
        throw contract_violation("outcome arms must match the mode count");
    double expo = 0.0;
    for (std::size_t k = 0; k < amplitudes.size(); ++k) {
        const double de = outcome.e[k] - amplitudes[k] / kSqrt2;
        expo -= 2.0 * (de * de + outcome.p[k] * outcome.p[k]);
    }
    return std::pow(2.0 / kPi, static_cast<double>(amplitudes.size())) * std::exp(expo);
}

SphericalPoint to_spherical(const QuadratureVector& v) {
    if (v.empty()) throw contract_violation("empty vector has no spherical form");
    SphericalPoint s;
    s.radius = std::sqrt(squared_norm(v));
    const int n = static_cast<int>(v.size());
    if (n == 1) return s;  // the orthant degenerates to the sign of the lone component
    s.angles.resize(n - 1, 0.0);
    double tail2 = squared_norm(v);
    for (int j = 0; j + 2 < n; ++j) {
        tail2 -= v[j] * v[j];
        const double tail = std::sqrt(std::max(tail2, 0.0));
        s.angles[j] = (tail == 0.0 && v[j] == 0.0) ? 0.0 : std::atan2(tail, v[j]);
    }
    double last = (v[n - 1] == 0.0 && v[n - 2] == 0.0) ? 0.0 : std::atan2(v[n - 1], v[n - 2]);
    if (last < 0.0) last += 2.0 * kPi;
    s.angles[n - 2] = last;
    return s;
}

QuadratureVector to_cartesian(const SphericalPoint& s, int modes) {
    if (modes < 1) throw contract_violation("mode count must be positive");
    if (modes == 1) {
        if (!s.angles.empty()) throw contract_violation("one-mode point carries no angles");
        return {s.radius};
    }
    if (s.angles.size() != static_cast<std::size_t>(modes - 1))
        throw contract_violation("angle count must be modes - 1");
    QuadratureVector v(modes);
    double sines = s.radius;
    for (int k = 0; k < modes - 1; ++k) {
        v[k] = sines * std::cos(s.angles[k]);
        sines *= std::sin(s.angles[k]);
    }
    v[modes - 1] = sines;
    return v;
}

PreparedState eve_decision(const JointOutcome& outcome, const std::vector<double>& amplitudes) {
    check_amplitudes(amplitudes);
    if (outcome.e.size() != amplitudes.size() || outcome.p.size() != amplitudes.size())
        throw contract_violation("outcome arms must match the mode count");
    const bool first_wins = squared_norm(outcome.e) >= squared_norm(outcome.p);
    const QuadratureVector& winner = first_wins ? outcome.e : outcome.p;
    SignBits signs(amplitudes.size());
    for (std::size_t k = 0; k < winner.size(); ++k) signs[k] = winner[k] < 0.0 ? 1 : 0;
    return PreparedState{first_wins ? Basis::E : Basis::P, std::move(signs), amplitudes};
}

JointOutcome sample_joint_outcome(const PreparedState& state, Rng& rng) {
    const std::size_t n = state.amplitudes.size();
    JointOutcome out;
    out.e.resize(n);
    out.p.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double displaced = (state.signs[k] ? -state.amplitudes[k] : state.amplitudes[k]) / kSqrt2;
        out.e[k] = rng.gaussian(state.basis == Basis::E ? displaced : 0.0, 0.5);
    }
    for (std::size_t k = 0; k < n; ++k) {
        const double displaced = (state.signs[k] ? -state.amplitudes[k] : state.amplitudes[k]) / kSqrt2;
        out.p[k] = rng.gaussian(state.basis == Basis::P ? displaced : 0.0, 0.5);
    }
    return out;
}

AttackProfile attack_profile(const std::vector<double>& amplitudes, ProfileMethod method,
                             const ProfileAccuracy& accuracy) {
    check_amplitudes(amplitudes);
    return method == ProfileMethod::ReducedQuadrature ? profile_by_quadrature(amplitudes, accuracy)
                                                      : profile_by_monte_carlo(amplitudes, accuracy);
}

std::vector<std::pair<PreparedState, double>> resend_mixture(const PreparedState& input,
                                                             const AttackProfile& profile) {
    if (input.modes() != profile.modes)
        throw contract_violation("profile mode count differs from the input state");
    if (!profile.normalized()) throw contract_violation("attack profile is not normalized");
    std::vector<std::pair<PreparedState, double>> mixture;
    const std::size_t patterns = profile.correct.size();
    mixture.reserve(2 * patterns);
    for (std::size_t mask = 0; mask < patterns; ++mask) {
        SignBits signs(input.signs);
        for (int k = 0; k < profile.modes; ++k) signs[k] ^= static_cast<std::uint8_t>((mask >> k) & 1);
        mixture.emplace_back(PreparedState{input.basis, std::move(signs), input.amplitudes},
                             profile.correct[mask]);
    }
    for (std::size_t mask = 0; mask < patterns; ++mask) {
        SignBits signs(profile.modes);
        for (int k = 0; k < profile.modes; ++k) signs[k] = static_cast<std::uint8_t>((mask >> k) & 1);
        mixture.emplace_back(PreparedState{other(input.basis), std::move(signs), input.amplitudes},
                             profile.wrong_per_state);
    }
    return mixture;
}

}  // namespace cvqkd
