#include "cvqkd/states.hpp"

#include <cmath>

#include "cvqkd/errors.hpp"
#include "cvqkd/math.hpp"

namespace cvqkd {

namespace {

constexpr double kHalfWidthNorm = 0.79788456080286536;  // sqrt(2/pi)

void check_dims(std::size_t state_n, std::size_t x_n) {
    if (state_n != x_n) throw contract_violation("quadrature vector length differs from mode count");
}

}  // namespace

PreparedState make_state(Basis basis, SignBits signs, std::vector<double> amplitudes) {
    if (signs.size() != amplitudes.size())
        throw contract_violation("sign and amplitude sequences must have equal length");
    if (amplitudes.empty()) throw contract_violation("state needs at least one mode");
    for (double a : amplitudes)
        if (!(a >= 0.0)) throw contract_violation("amplitudes must be non-negative");
    for (auto s : signs)
        if (s > 1) throw contract_violation("sign bits must be 0 or 1");
    return PreparedState{basis, std::move(signs), std::move(amplitudes)};
}

double quadrature_density(const PreparedState& state, Basis basis_measured,
                          const QuadratureVector& x) {
    check_dims(state.amplitudes.size(), x.size());
    const bool match = state.basis == basis_measured;
    double expo = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double mean = match ? (state.signs[k] ? -state.amplitudes[k] : state.amplitudes[k]) : 0.0;
        const double d = x[k] - mean;
        expo -= 2.0 * d * d;
    }
    return std::pow(kHalfWidthNorm, static_cast<double>(x.size())) * std::exp(expo);
}

double ensemble_density(Basis basis_prepared, const std::vector<double>& amplitudes,
                        Basis basis_measured, const QuadratureVector& x) {
    check_dims(amplitudes.size(), x.size());
    if (amplitudes.empty()) throw contract_violation("state needs at least one mode");
    double density = 1.0;
    if (basis_prepared == basis_measured) {
        // The uniform mixture over sign patterns factorizes per mode.
        for (std::size_t k = 0; k < x.size(); ++k) {
            const double dm = x[k] - amplitudes[k];
            const double dp = x[k] + amplitudes[k];
            density *= 0.5 * kHalfWidthNorm * (std::exp(-2.0 * dm * dm) + std::exp(-2.0 * dp * dp));
        }
    } else {
        double expo = 0.0;
        for (double xk : x) expo -= 2.0 * xk * xk;
        density = std::pow(kHalfWidthNorm, static_cast<double>(x.size())) * std::exp(expo);
    }
    return density;
}

QuadratureVector sample_quadrature(const PreparedState& state, Basis basis_measured, Rng& rng) {
    const bool match = state.basis == basis_measured;
    QuadratureVector out(state.amplitudes.size());
    for (std::size_t k = 0; k < out.size(); ++k) {
        const double mean = match ? (state.signs[k] ? -state.amplitudes[k] : state.amplitudes[k]) : 0.0;
        out[k] = rng.gaussian(mean, 0.5);
    }
    return out;
}

}  // namespace cvqkd
