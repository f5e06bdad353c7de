#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "cvqkd/attack.hpp"
#include "cvqkd/errors.hpp"
#include "cvqkd/metrics.hpp"
#include "oracle.hpp"

using namespace cvqkd;

namespace {
constexpr double kSqrt2 = 1.4142135623730951;

std::vector<double> rep(double v, int n) { return std::vector<double>(n, v); }
}  // namespace

TEST_CASE("single-mode efficiency values") {
    CHECK(pe_single_mode(0.0, 1.0) == 1.0);  // no dead band keeps every pulse
    // oracle-derived values for the reference threshold 0.75
    CHECK(pe_single_mode(0.75, 1.0) == doctest::Approx(0.69169509035304863).epsilon(1e-13));
    CHECK(pe_single_mode(0.75, 0.0) == doctest::Approx(0.13361440253771613).epsilon(1e-13));
    // cross-check against the independent erfc at fresh parameters
    const double e0 = 0.6, a = 1.3;
    const double expected =
        0.5 * (oracle::erfc(kSqrt2 * (e0 - a)) + oracle::erfc(kSqrt2 * (e0 + a)));
    CHECK(pe_single_mode(e0, a) == doctest::Approx(expected).epsilon(1e-13));
    CHECK_THROWS_AS(pe_single_mode(-0.1, 1.0), contract_violation);
    CHECK_THROWS_AS(pe_single_mode(0.1, -1.0), contract_violation);
}

TEST_CASE("efficiency is a product over modes") {
    CHECK(postselection_efficiency(rep(0.0, 2), rep(1.0, 2)) == 1.0);
    CHECK(postselection_efficiency(rep(0.75, 2), rep(1.0, 2)) ==
          doctest::Approx(0.47844209801851211).epsilon(1e-13));
    const double p1 = pe_single_mode(0.75, 1.0);
    CHECK(postselection_efficiency(rep(0.75, 3), rep(1.0, 3)) ==
          doctest::Approx(p1 * p1 * p1).epsilon(1e-14));
    // mixed per-mode parameters
    const std::vector<double> thr{0.2, 0.9};
    const std::vector<double> amp{1.4, 0.3};
    CHECK(postselection_efficiency(thr, amp) ==
          doctest::Approx(pe_single_mode(0.2, 1.4) * pe_single_mode(0.9, 0.3)).epsilon(1e-14));
    CHECK_THROWS_AS(postselection_efficiency(rep(0.5, 2), rep(1.0, 3)), contract_violation);
}

TEST_CASE("efficiency monotonicity and range") {
    double prev = 2.0;
    for (double e0 = 0.0; e0 <= 2.5; e0 += 0.1) {
        const double pe = postselection_efficiency(rep(e0, 2), rep(1.0, 2));
        CHECK(pe >= 0.0);
        CHECK(pe <= 1.0);
        CHECK(pe < prev + 1e-15);
        prev = pe;
    }
}

TEST_CASE("intrinsic error rate values and limits") {
    CHECK(iqber(rep(0.75, 1), rep(1.0, 1)) ==
          doctest::Approx(0.00033631737781569137).epsilon(1e-12));
    // the two printed two-mode forms agree with each other and with iqber
    const double e0 = 0.75, a = 1.0;
    const double x = oracle::erfc(kSqrt2 * (e0 - a));
    const double y = oracle::erfc(kSqrt2 * (e0 + a));
    const double p2 = 0.25 * (x + y) * (x + y);
    const double form_a = 1.0 - 0.25 * x * x / p2;
    const double form_b = (2.0 * x * y + y * y) / (4.0 * p2);
    CHECK(form_a == doctest::Approx(form_b).epsilon(1e-12));
    CHECK(iqber(rep(e0, 2), rep(a, 2)) == doctest::Approx(form_a).epsilon(1e-12));
    CHECK(iqber(rep(e0, 2), rep(a, 2)) ==
          doctest::Approx(0.00067252164625276192).epsilon(1e-12));
    // vacuum limit: the symbol becomes uniform over the alphabet
    for (int n = 1; n <= 3; ++n) {
        const double lim = (std::ldexp(1.0, n) - 1.0) / std::ldexp(1.0, n);
        CHECK(iqber(rep(0.75, n), rep(1e-9, n)) == doctest::Approx(lim).epsilon(1e-8));
    }
    // decreasing in amplitude on a grid
    for (int n = 1; n <= 3; ++n) {
        double prev = 1.0;
        for (double a2 = 0.0; a2 <= 3.0; a2 += 0.1) {
            const double q = iqber(rep(0.75, n), rep(a2, n));
            CHECK(q <= prev + 1e-12);
            CHECK(q >= 0.0);
            CHECK(q <= (std::ldexp(1.0, n) - 1.0) / std::ldexp(1.0, n) + 1e-12);
            prev = q;
        }
    }
}

TEST_CASE("degenerate efficiency raises undefined_metric") {
    // both erfc tails clamp to zero at huge thresholds
    CHECK(postselection_efficiency(rep(7.0, 1), rep(0.5, 1)) == 0.0);
    CHECK_THROWS_AS(iqber(rep(7.0, 1), rep(0.5, 1)), undefined_metric);
}

TEST_CASE("attacked efficiency reductions") {
    const auto trivial = AttackProfile::trivial(2);
    const std::vector<double> thr = rep(0.75, 2), amp = rep(1.0, 2);
    CHECK(pe_under_attack(thr, amp, trivial) ==
          doctest::Approx(postselection_efficiency(thr, amp)).epsilon(1e-15));

    // all probability mass on the wrong basis
    AttackProfile wrong;
    wrong.modes = 2;
    wrong.correct.assign(4, 0.0);
    wrong.correct_se.assign(4, 0.0);
    wrong.wrong_per_state = 0.25;
    const double expected = oracle::erfc(kSqrt2 * 0.75) * oracle::erfc(kSqrt2 * 0.75);
    CHECK(pe_under_attack(thr, amp, wrong) == doctest::Approx(expected).epsilon(1e-13));

    AttackProfile bad = trivial;
    bad.correct[0] = 0.5;  // not normalized
    CHECK_THROWS_AS(pe_under_attack(thr, amp, bad), contract_violation);
}

TEST_CASE("attacked error rate reduces to the intrinsic one") {
    for (int n = 1; n <= 3; ++n) {
        const auto trivial = AttackProfile::trivial(n);
        for (double e0 = 0.0; e0 <= 2.0; e0 += 0.25) {
            for (double a = 0.05; a <= 3.0; a += 0.35) {
                const double q = iqber(rep(e0, n), rep(a, n));
                const double qp = qber_under_attack(rep(e0, n), rep(a, n), trivial);
                CHECK(qp == doctest::Approx(q).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("attack can only add errors") {
    for (int n = 1; n <= 3; ++n) {
        for (double a = 0.25; a <= 3.0; a += 0.25) {
            const auto profile =
                attack_profile(rep(a, n), ProfileMethod::ReducedQuadrature, {});
            for (double e0 : {0.30, 0.75}) {
                const double q = iqber(rep(e0, n), rep(a, n));
                const double qp = qber_under_attack(rep(e0, n), rep(a, n), profile);
                CHECK(qp >= q - 1e-12);
            }
        }
    }
    // vacuum limit of the attacked rate
    for (int n = 1; n <= 3; ++n) {
        const auto profile = attack_profile(rep(1e-9, n), ProfileMethod::ReducedQuadrature, {});
        const double lim = (std::ldexp(1.0, n) - 1.0) / std::ldexp(1.0, n);
        CHECK(qber_under_attack(rep(0.75, n), rep(1e-9, n), profile) ==
              doctest::Approx(lim).epsilon(1e-7));
    }
}

TEST_CASE("report bundles the four figures") {
    const auto profile = attack_profile(rep(1.0, 1), ProfileMethod::ReducedQuadrature, {});
    const auto report = evaluate_metrics(rep(0.30, 1), rep(1.0, 1), profile);
    CHECK(report.pe == doctest::Approx(pe_single_mode(0.30, 1.0)).epsilon(1e-15));
    CHECK(report.iqber == doctest::Approx(iqber(rep(0.30, 1), rep(1.0, 1))).epsilon(1e-15));
    CHECK(report.pe_attacked < report.pe);      // attack discards more pulses here
    CHECK(report.qber_attacked > report.iqber);  // and adds errors
}
