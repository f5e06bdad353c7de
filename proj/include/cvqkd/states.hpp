#pragma once

#include <cstdint>
#include <vector>

#include "cvqkd/rng.hpp"

namespace cvqkd {

// Which quadrature carries the signal: first (E) or second (P).
enum class Basis : std::uint8_t { E, P };

inline Basis other(Basis b) { return b == Basis::E ? Basis::P : Basis::E; }
inline char basis_letter(Basis b) { return b == Basis::E ? 'E' : 'P'; }

using QuadratureVector = std::vector<double>;
// Sign bits nu_k in {0, 1}; the per-mode displacement is (-1)^{nu_k} a_k,
// so 0 encodes the positive fringe.
using SignBits = std::vector<std::uint8_t>;

// One of the 2^(N+1) product signal states: a basis choice plus a signed
// displacement per mode.
struct PreparedState {
    Basis basis = Basis::E;
    SignBits signs;
    std::vector<double> amplitudes;
    int modes() const { return static_cast<int>(amplitudes.size()); }
};

// Validating constructor: equal lengths, non-negative amplitudes, binary signs.
PreparedState make_state(Basis basis, SignBits signs, std::vector<double> amplitudes);

// Joint density of the homodyne outcome x when every mode is measured in
// basis_measured. Per mode sqrt(2/pi) exp(-2 (x_k - m_k)^2) with mean
// m_k = (-1)^{nu_k} a_k on a basis match and 0 otherwise (variance 1/4).
double quadrature_density(const PreparedState& state, Basis basis_measured,
                          const QuadratureVector& x);

// Density of the equal-weight mixture over all 2^N sign patterns of one
// basis. Factorizes mode-wise; reduces to the centred Gaussian when the
// measured basis differs from the prepared one.
double ensemble_density(Basis basis_prepared, const std::vector<double>& amplitudes,
                        Basis basis_measured, const QuadratureVector& x);

// One homodyne sample of every mode; matches quadrature_density.
QuadratureVector sample_quadrature(const PreparedState& state, Basis basis_measured, Rng& rng);

}  // namespace cvqkd
