#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "cvqkd/errors.hpp"

namespace cvqkd::math {

inline constexpr double kSqrt2 = 1.41421356237309504880;
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoOverSqrtPi = 1.12837916709551257390;

// erfc with bit-exact reflection (erfc(-x) = 2 - erfc(x)) and tails clamped
// to {0, 2} beyond |x| = 8, where the true value is below 1.2e-29.
inline double erfc_clamped(double x) {
    if (x > 8.0) return 0.0;
    if (x < 0.0) return (x < -8.0) ? 2.0 : 2.0 - std::erfc(-x);
    return std::erfc(x);
}

// CDF of the Euclidean norm of n iid N(0, 1/4) components, n = 1..3.
// Equals the regularized lower incomplete gamma P(n/2, 2 r^2).
double norm_cdf_halfwidth_gaussian(int n, double r);
// Complement of the above, well conditioned in the upper tail.
double norm_sf_halfwidth_gaussian(int n, double r);

struct QuadRule {
    std::vector<double> x;
    std::vector<double> w;
};

// n-point Gauss-Legendre rule mapped to [a, b].
QuadRule gauss_legendre(int n, double a, double b);

struct IntegralResult {
    double value = 0.0;
    double error = 0.0;
    bool converged = false;
    std::size_t evaluations = 0;
};

namespace detail {
// G7,K15 abscissae (positive half) and weights.
inline constexpr double kGK15Nodes[8] = {
    0.000000000000000, 0.207784955007898, 0.405845151377397, 0.586087235467691,
    0.741531185599394, 0.864864423359769, 0.949107912342759, 0.991455371120813};
inline constexpr double kK15Weights[8] = {
    0.209482141084728, 0.204432940075298, 0.190350578064785, 0.169004726639267,
    0.140653259715525, 0.104790010322250, 0.063092092629979, 0.022935322010529};
inline constexpr double kG7Weights[8] = {
    0.417959183673469, 0.0, 0.381830050505119, 0.0,
    0.279705391489277, 0.0, 0.129484966168870, 0.0};
}  // namespace detail

template <typename F>
std::pair<double, double> gauss_kronrod_panel(const F& f, double a, double b) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double f0 = f(mid);
    double k15 = detail::kK15Weights[0] * f0;
    double g7 = detail::kG7Weights[0] * f0;
    for (int i = 1; i < 8; ++i) {
        const double dx = half * detail::kGK15Nodes[i];
        const double fi = f(mid + dx) + f(mid - dx);
        k15 += detail::kK15Weights[i] * fi;
        g7 += detail::kG7Weights[i] * fi;
    }
    k15 *= half;
    g7 *= half;
    double err = std::abs(k15 - g7);
    err = 200.0 * err * std::sqrt(std::max(err, 0.0));
    return {k15, std::max(err, std::abs(k15) * 1e-15)};
}

// Adaptive Gauss-Kronrod on [a, b] with an absolute tolerance. Splits the
// worst panel first; gives up (converged = false) past max_intervals.
template <typename F>
IntegralResult integrate_gk(const F& f, double a, double b, double abs_tol,
                            int max_intervals = 4096) {
    struct Panel {
        double a, b, value, error;
    };
    std::vector<Panel> panels;
    auto [v0, e0] = gauss_kronrod_panel(f, a, b);
    panels.push_back({a, b, v0, e0});
    std::size_t evals = 15;
    while (true) {
        double total = 0.0, err = 0.0;
        std::size_t worst = 0;
        for (std::size_t i = 0; i < panels.size(); ++i) {
            total += panels[i].value;
            err += panels[i].error;
            if (panels[i].error > panels[worst].error) worst = i;
        }
        if (err <= abs_tol) return {total, err, true, evals};
        if (panels.size() >= static_cast<std::size_t>(max_intervals))
            return {total, err, false, evals};
        const Panel p = panels[worst];
        const double mid = 0.5 * (p.a + p.b);
        auto [vl, el] = gauss_kronrod_panel(f, p.a, mid);
        auto [vr, er] = gauss_kronrod_panel(f, mid, p.b);
        evals += 30;
        panels[worst] = {p.a, mid, vl, el};
        panels.push_back({mid, p.b, vr, er});
    }
}

double binomial(int n, int k);

}  // namespace cvqkd::math
