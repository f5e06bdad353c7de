#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "cvqkd/attack.hpp"
#include "cvqkd/errors.hpp"
#include "cvqkd/rng.hpp"
#include "oracle.hpp"

using namespace cvqkd;

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kTwoOverPi = 0.63661977236758134;

std::vector<double> rep(double v, int n) { return std::vector<double>(n, v); }

// Brute-force estimate of p_+ for one mode: 2-D trapezoid on an integer
// lattice (step h) over a +-6 sigma box, with half weight exactly on the
// tie line |E| = |P| (lattice ties are |i| == |j|).
double brute_force_p_plus(double amplitude, double h) {
    const double mu = amplitude / kSqrt2;
    const long ilo = static_cast<long>(std::ceil((mu - 3.0) / h));
    const long ihi = static_cast<long>(std::floor((mu + 3.0) / h));
    const long jlo = static_cast<long>(std::ceil(-3.0 / h));
    const long jhi = static_cast<long>(std::floor(3.0 / h));
    double total = 0.0;
    for (long i = ilo; i <= ihi; ++i) {
        const double x = static_cast<double>(i) * h;
        if (x <= 0.0) continue;  // sign(E) must be +
        const double wx = (i == ilo || i == ihi) ? 0.5 : 1.0;
        const double zx = std::exp(-2.0 * (x - mu) * (x - mu));
        double row = 0.0;
        const long ai = std::labs(i);
        for (long j = jlo; j <= jhi; ++j) {
            const long aj = std::labs(j);
            if (aj > ai) continue;  // |P| > |E|: Eve picks the other basis
            const double y = static_cast<double>(j) * h;
            double w = (j == jlo || j == jhi) ? 0.5 : 1.0;
            if (aj == ai) w *= 0.5;  // jump discontinuity: average the sides
            row += w * std::exp(-2.0 * y * y);
        }
        total += wx * zx * row;
    }
    return total * kTwoOverPi * h * h;
}

}  // namespace

TEST_CASE("joint outcome density peaks and normalization") {
    CHECK(joint_outcome_density({0.0}, {{0.0}, {0.0}}) ==
          doctest::Approx(kTwoOverPi).epsilon(1e-15));
    CHECK(joint_outcome_density({1.0}, {{1.0 / kSqrt2}, {0.0}}) ==
          doctest::Approx(kTwoOverPi).epsilon(1e-15));
    // integral over a +-6 sigma box in both arms
    const double mu = 1.0 / kSqrt2;
    const double total = oracle::simpson(
        [&](double e) {
            return oracle::simpson(
                [&](double p) { return joint_outcome_density({1.0}, {{e}, {p}}); }, -3.0, 3.0,
                400);
        },
        mu - 3.0, mu + 3.0, 400);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-8));
    CHECK_THROWS_AS(joint_outcome_density({1.0, 1.0}, {{0.0}, {0.0}}), contract_violation);
}

TEST_CASE("spherical coordinates") {
    // the familiar triad for three modes
    const QuadratureVector v{1.0, 1.0, 1.0};
    const auto s = to_spherical(v);
    CHECK(s.radius == doctest::Approx(std::sqrt(3.0)).epsilon(1e-15));
    CHECK(s.angles[0] == doctest::Approx(std::atan2(std::sqrt(2.0), 1.0)).epsilon(1e-15));
    CHECK(s.angles[1] == doctest::Approx(0.25 * 3.14159265358979324).epsilon(1e-15));

    const auto axis = to_spherical({1.0, 0.0, 0.0});
    CHECK(axis.radius == doctest::Approx(1.0));
    CHECK(axis.angles[0] == doctest::Approx(0.0));

    const auto zero = to_spherical({0.0, 0.0, 0.0});
    CHECK(zero.radius == 0.0);
    CHECK(zero.angles[0] == 0.0);
    CHECK(zero.angles[1] == 0.0);

    // one mode: radius only
    const auto one = to_spherical({-0.7});
    CHECK(one.radius == doctest::Approx(0.7));
    CHECK(one.angles.empty());

    // round trips, including angle-range checks
    Rng rng(5);
    for (int n : {2, 3, 5}) {
        for (int trial = 0; trial < 40; ++trial) {
            QuadratureVector u(n);
            for (auto& x : u) x = rng.gaussian(0.0, 1.0);
            const auto sp = to_spherical(u);
            for (std::size_t j = 0; j + 1 < sp.angles.size(); ++j) {
                CHECK(sp.angles[j] >= 0.0);
                CHECK(sp.angles[j] <= 3.14159265358979324);
            }
            CHECK(sp.angles.back() >= 0.0);
            CHECK(sp.angles.back() < 2.0 * 3.14159265358979324);
            const auto back = to_cartesian(sp, n);
            for (int k = 0; k < n; ++k) CHECK(back[k] == doctest::Approx(u[k]).epsilon(1e-12));
        }
    }
}

TEST_CASE("resend decision rule") {
    const std::vector<double> a1{1.0};
    auto d = eve_decision({{0.8}, {0.3}}, a1);
    CHECK(d.basis == Basis::E);
    CHECK(d.signs[0] == 0);
    CHECK(d.amplitudes[0] == 1.0);

    d = eve_decision({{0.1}, {-0.9}}, a1);
    CHECK(d.basis == Basis::P);
    CHECK(d.signs[0] == 1);

    const std::vector<double> a2{1.0, 1.0};
    d = eve_decision({{0.5, -0.2}, {0.1, 0.1}}, a2);
    CHECK(d.basis == Basis::E);
    CHECK(d.signs[0] == 0);
    CHECK(d.signs[1] == 1);

    // ties go to the first quadrature
    d = eve_decision({{0.4}, {-0.4}}, a1);
    CHECK(d.basis == Basis::E);
}

TEST_CASE("quadrature profile reproduces independently computed tables") {
    // one mode, unit amplitude (50-digit quadrature reference values)
    auto p = attack_profile({1.0}, ProfileMethod::ReducedQuadrature, {});
    CHECK(p.correct[0] == doctest::Approx(0.70786098173714102).epsilon(1e-10));
    CHECK(p.correct[1] == doctest::Approx(0.025171489600055118).epsilon(1e-9));
    CHECK(p.wrong_per_state == doctest::Approx(0.13348376433140193).epsilon(1e-10));
    CHECK(p.norm_residual < 1e-6);

    p = attack_profile({1.2}, ProfileMethod::ReducedQuadrature, {});
    CHECK(p.correct[0] == doctest::Approx(0.78310168856151616).epsilon(1e-10));
    CHECK(p.correct[1] == doctest::Approx(0.013241029004932695).epsilon(1e-9));
    CHECK(p.wrong_per_state == doctest::Approx(0.10182864121677557).epsilon(1e-10));

    p = attack_profile(rep(1.0, 2), ProfileMethod::ReducedQuadrature, {});
    CHECK(p.correct[0] == doctest::Approx(0.718682801890113).epsilon(1e-9));
    CHECK(p.correct[1] == doctest::Approx(0.0479108770766321).epsilon(1e-9));
    CHECK(p.correct[2] == doctest::Approx(0.0479108770766321).epsilon(1e-9));
    CHECK(p.correct[3] == doctest::Approx(0.00155572337090159).epsilon(1e-8));
    CHECK(p.wrong_per_state == doctest::Approx(0.0459849301464303).epsilon(1e-9));

    p = attack_profile(rep(1.0, 3), ProfileMethod::ReducedQuadrature, {});
    CHECK(p.correct[0] == doctest::Approx(0.697998301988439).epsilon(1e-9));
    CHECK(p.correct[3] == doctest::Approx(0.003299596309463).epsilon(1e-8));
    CHECK(p.correct[7] == doctest::Approx(0.000100639942249).epsilon(1e-7));
    CHECK(p.wrong_per_state == doctest::Approx(0.016854509735411).epsilon(1e-9));
}

TEST_CASE("quadrature profile matches the brute-force trapezoid") {
    const auto p = attack_profile({1.0}, ProfileMethod::ReducedQuadrature, {});
    const double brute = brute_force_p_plus(1.0, 1e-3);
    CHECK(std::abs(p.correct[0] - brute) < 1e-5);
}

TEST_CASE("vacuum limit of the profile") {
    for (int n = 1; n <= 3; ++n) {
        const auto p = attack_profile(rep(1e-8, n), ProfileMethod::ReducedQuadrature, {});
        const double lim = 1.0 / std::ldexp(1.0, n + 1);
        for (double entry : p.correct) CHECK(entry == doctest::Approx(lim).epsilon(1e-6));
        CHECK(p.wrong_per_state == doctest::Approx(lim).epsilon(1e-6));
    }
}

TEST_CASE("profile symmetries and monotonicity") {
    // equal amplitudes: entries depend only on the number of flipped modes
    for (int n : {2, 3}) {
        const auto p = attack_profile(rep(0.9, n), ProfileMethod::ReducedQuadrature, {});
        for (std::size_t mask = 0; mask < p.correct.size(); ++mask) {
            const int flips = __builtin_popcount(static_cast<unsigned>(mask));
            std::size_t canonical = (std::size_t{1} << flips) - 1;
            CHECK(p.correct[mask] == doctest::Approx(p.correct[canonical]).epsilon(1e-10));
        }
    }
    for (int n = 1; n <= 3; ++n) {
        double prev_keep = 0.0, prev_wrong = 1.0;
        for (double a = 0.0; a <= 3.01; a += 0.25) {
            const auto p = attack_profile(rep(a, n), ProfileMethod::ReducedQuadrature, {});
            CHECK(p.correct[0] >= prev_keep - 1e-10);
            CHECK(p.wrong_per_state <= prev_wrong + 1e-10);
            prev_keep = p.correct[0];
            prev_wrong = p.wrong_per_state;
        }
    }
}

TEST_CASE("Monte Carlo agrees with quadrature") {
    ProfileAccuracy acc;
    acc.mc_samples = 1'000'000;
    acc.mc_seed = 314159;
    for (int n = 1; n <= 3; ++n) {
        const auto quad = attack_profile(rep(1.0, n), ProfileMethod::ReducedQuadrature, {});
        const auto mc = attack_profile(rep(1.0, n), ProfileMethod::MonteCarlo, acc);
        for (std::size_t m = 0; m < quad.correct.size(); ++m) {
            const double se = mc.correct_se[m];
            CHECK(std::abs(mc.correct[m] - quad.correct[m]) < std::max(3.0 * se, 1e-9));
        }
        CHECK(std::abs(mc.wrong_per_state - quad.wrong_per_state) < 3.0 * mc.wrong_se);
        CHECK(mc.norm_residual < 1e-12);  // pooled estimator closes the total exactly
    }
}

TEST_CASE("Monte Carlo is deterministic per (seed, streams) and worker-independent") {
    ProfileAccuracy acc;
    acc.mc_samples = 200'000;
    acc.mc_seed = 77;
    acc.mc_streams = 8;
    acc.workers = 1;
    const auto serial = attack_profile(rep(1.0, 2), ProfileMethod::MonteCarlo, acc);
    acc.workers = 4;
    const auto parallel = attack_profile(rep(1.0, 2), ProfileMethod::MonteCarlo, acc);
    for (std::size_t m = 0; m < serial.correct.size(); ++m)
        CHECK(serial.correct[m] == parallel.correct[m]);
    CHECK(serial.wrong_per_state == parallel.wrong_per_state);
}

TEST_CASE("classifying sampled outcomes reproduces the profile") {
    const int n = 2;
    const auto quad = attack_profile(rep(1.0, n), ProfileMethod::ReducedQuadrature, {});
    const auto state = make_state(Basis::E, SignBits(n, 0), rep(1.0, n));
    Rng rng(4242);
    const int samples = 1'000'000;
    std::vector<std::uint64_t> counts(std::size_t{1} << n, 0);
    std::uint64_t wrong = 0;
    for (int i = 0; i < samples; ++i) {
        const auto outcome = sample_joint_outcome(state, rng);
        const auto decision = eve_decision(outcome, state.amplitudes);
        if (decision.basis != Basis::E) {
            ++wrong;
            continue;
        }
        std::size_t mask = 0;
        for (int k = 0; k < n; ++k)
            if (decision.signs[k]) mask |= std::size_t{1} << k;
        ++counts[mask];
    }
    for (std::size_t m = 0; m < counts.size(); ++m) {
        const double est = static_cast<double>(counts[m]) / samples;
        const double se = std::sqrt(quad.correct[m] * (1.0 - quad.correct[m]) / samples);
        CHECK(std::abs(est - quad.correct[m]) < 3.0 * se);
    }
    const double wrong_total = std::ldexp(quad.wrong_per_state, n);
    const double est_wrong = static_cast<double>(wrong) / samples;
    const double se_wrong = std::sqrt(wrong_total * (1.0 - wrong_total) / samples);
    CHECK(std::abs(est_wrong - wrong_total) < 3.0 * se_wrong);
}

TEST_CASE("relative profile is input-independent (reflection symmetry)") {
    // Classify outcomes for the all-minus first-quadrature input and for a
    // second-quadrature input; the profiles relative to the input pattern
    // must match the canonical all-plus table.
    const int n = 2;
    const auto quad = attack_profile(rep(1.0, n), ProfileMethod::ReducedQuadrature, {});
    const int samples = 400'000;
    int variant = 0;
    for (const auto& input : {make_state(Basis::E, SignBits(n, 1), rep(1.0, n)),
                              make_state(Basis::P, SignBits{0, 1}, rep(1.0, n))}) {
        Rng rng(510 + variant++);
        std::vector<std::uint64_t> counts(std::size_t{1} << n, 0);
        std::uint64_t wrong = 0;
        for (int i = 0; i < samples; ++i) {
            const auto decision = eve_decision(sample_joint_outcome(input, rng), input.amplitudes);
            if (decision.basis != input.basis) {
                ++wrong;
                continue;
            }
            std::size_t mask = 0;
            for (int k = 0; k < n; ++k)
                if (decision.signs[k] != input.signs[k]) mask |= std::size_t{1} << k;
            ++counts[mask];
        }
        for (std::size_t m = 0; m < counts.size(); ++m) {
            const double est = static_cast<double>(counts[m]) / samples;
            const double se =
                std::sqrt(quad.correct[m] * (1.0 - quad.correct[m]) / samples);
            CHECK(std::abs(est - quad.correct[m]) < 3.0 * se);
        }
        const double wrong_total = std::ldexp(quad.wrong_per_state, n);
        const double se_wrong = std::sqrt(wrong_total * (1.0 - wrong_total) / samples);
        CHECK(std::abs(static_cast<double>(wrong) / samples - wrong_total) < 3.0 * se_wrong);
    }
}

TEST_CASE("sampled arms carry the split displacement") {
    const auto state = make_state(Basis::P, {0, 1}, {1.0, 0.5});
    Rng rng(88);
    const int samples = 200'000;
    double sum_e0 = 0, sum_p0 = 0, sum_p1 = 0, sq_p0 = 0;
    for (int i = 0; i < samples; ++i) {
        const auto outcome = sample_joint_outcome(state, rng);
        sum_e0 += outcome.e[0];
        sum_p0 += outcome.p[0];
        sum_p1 += outcome.p[1];
        sq_p0 += outcome.p[0] * outcome.p[0];
    }
    const double mean_p0 = sum_p0 / samples;
    CHECK(std::abs(sum_e0 / samples) < 0.005);  // wrong arm is vacuum
    CHECK(std::abs(mean_p0 - 1.0 / kSqrt2) < 0.005);
    CHECK(std::abs(sum_p1 / samples + 0.5 / kSqrt2) < 0.005);
    CHECK(std::abs(sq_p0 / samples - mean_p0 * mean_p0 - 0.25) < 0.005);
}

TEST_CASE("resend mixture composition") {
    const auto input = make_state(Basis::E, {1, 0}, {1.0, 1.0});

    const auto trivial = resend_mixture(input, AttackProfile::trivial(2));
    CHECK(trivial[0].second == 1.0);
    CHECK(trivial[0].first.basis == Basis::E);
    CHECK(trivial[0].first.signs == input.signs);
    double total = 0.0;
    for (const auto& [state, w] : trivial) total += w;
    CHECK(total == doctest::Approx(1.0));

    const auto profile = attack_profile(rep(1.0, 2), ProfileMethod::ReducedQuadrature, {});
    const auto mixture = resend_mixture(input, profile);
    CHECK(mixture.size() == 8);
    // relative sign composition: flipping mode 1 relative to input (1,0) -> (1,1)
    CHECK(mixture[2].first.signs == SignBits{1, 1});
    CHECK(mixture[2].second == doctest::Approx(profile.correct[2]));
    for (std::size_t i = 4; i < 8; ++i) {
        CHECK(mixture[i].first.basis == Basis::P);
        CHECK(mixture[i].second == doctest::Approx(profile.wrong_per_state));
    }
    total = 0.0;
    for (const auto& [state, w] : mixture) total += w;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));

    // vacuum limit: the mixture becomes uniform over all 2^(N+1) states
    const auto flat = attack_profile(rep(1e-8, 2), ProfileMethod::ReducedQuadrature, {});
    for (const auto& [state, w] : resend_mixture(input, flat))
        CHECK(w == doctest::Approx(0.125).epsilon(1e-6));
}

TEST_CASE("contract and accuracy errors") {
    CHECK_THROWS_AS(attack_profile(rep(1.0, 4), ProfileMethod::ReducedQuadrature, {}),
                    contract_violation);
    CHECK_THROWS_AS(attack_profile({-1.0}, ProfileMethod::ReducedQuadrature, {}),
                    contract_violation);
    ProfileAccuracy acc;
    acc.mc_samples = 0;
    CHECK_THROWS_AS(attack_profile({1.0}, ProfileMethod::MonteCarlo, acc), contract_violation);
    CHECK_THROWS_AS(eve_decision({{0.1}, {0.1, 0.2}}, {1.0}), contract_violation);
    AttackProfile bad = AttackProfile::trivial(2);
    bad.wrong_per_state = 0.5;
    CHECK_THROWS_AS(resend_mixture(make_state(Basis::E, {0, 0}, {1.0, 1.0}), bad),
                    contract_violation);
}
