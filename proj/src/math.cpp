#include "cvqkd/math.hpp"

#include <cmath>

namespace cvqkd::math {

double norm_cdf_halfwidth_gaussian(int n, double r) {
    if (r <= 0.0) return 0.0;
    const double u = 2.0 * r * r;
    switch (n) {
        case 1:
            return std::erf(kSqrt2 * r);
        case 2:
            return -std::expm1(-u);
        case 3:
            return std::erf(kSqrt2 * r) - kSqrt2 * kTwoOverSqrtPi * r * std::exp(-u);
        default:
            throw contract_violation("norm CDF implemented for 1..3 modes");
    }
}

double norm_sf_halfwidth_gaussian(int n, double r) {
    if (r <= 0.0) return 1.0;
    const double u = 2.0 * r * r;
    switch (n) {
        case 1:
            return std::erfc(kSqrt2 * r);
        case 2:
            return std::exp(-u);
        case 3:
            return std::erfc(kSqrt2 * r) + kSqrt2 * kTwoOverSqrtPi * r * std::exp(-u);
        default:
            throw contract_violation("norm CDF implemented for 1..3 modes");
    }
}

QuadRule gauss_legendre(int n, double a, double b) {
    if (n < 1) throw contract_violation("Gauss-Legendre order must be positive");
    QuadRule rule;
    rule.x.resize(n);
    rule.w.resize(n);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        // Newton iteration from the Chebyshev-like initial guess.
        double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        const double xm = 0.5 * (b + a);
        const double xl = 0.5 * (b - a);
        rule.x[i] = xm - xl * z;
        rule.x[n - 1 - i] = xm + xl * z;
        rule.w[i] = 2.0 * xl / ((1.0 - z * z) * pp * pp);
        rule.w[n - 1 - i] = rule.w[i];
    }
    return rule;
}

double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

}  // namespace cvqkd::math
