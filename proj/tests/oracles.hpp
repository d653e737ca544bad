#pragma once

// Independent oracles used by the test suites. Everything here is computed
// from closed forms or brute force, never through the library's own
// quadrature/solver paths.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "nlwave/material.hpp"

namespace oracle {

/// Continuous moment int_0^1 s^p B_{m,M}(s) ds via the Beta-function
/// identity: C(M,m) (m+p)! (M-m)! / (M+p+1)!  evaluated as a product.
inline double beta_moment(int m, int M, int p) {
    // C(M,m) * (m+p)!/(m!) * (M+1)!/(M+p+1)! * ... assembled stably:
    // value = [prod_{i=1..p} (m+i)] / [prod_{i=1..p+1} (M+i)]  ... for p>=0
    // Derivation: C(M,m)(m+p)!(M-m)!/(M+p+1)! = (m+p)!/(m!) * M!/(M+p+1)!
    double num = 1.0, den = 1.0;
    for (int i = 1; i <= p; ++i) num *= static_cast<double>(m + i);
    for (int i = 1; i <= p + 1; ++i) den *= static_cast<double>(M + i);
    return num / den;
}

/// Continuous constraint moment int_0^delta (y^p/delta^3) B dy
/// = delta^(p-2) * beta_moment.
inline double continuous_moment(int m, int M, int p, double delta) {
    return std::pow(delta, p - 2) * beta_moment(m, M, p);
}

/// Bloch (transfer-matrix) dispersion of the bilayer laminate. The first
/// pass band satisfies cos(q d) = P cos(A w) + Q cos(B w) with
/// A = a+b, B = a-b, a = L/c1, b = L/c2, P = (1+S)/2, Q = (1-S)/2,
/// S = (Z1/Z2 + Z2/Z1)/2, d = 2L.
struct Bloch {
    double A, B, P, Q, d;

    explicit Bloch(const nlwave::Microstructure& ms) {
        const double c1 = nlwave::wave_speed(ms.material_a);
        const double c2 = nlwave::wave_speed(ms.material_b);
        const double z1 = nlwave::impedance(ms.material_a);
        const double z2 = nlwave::impedance(ms.material_b);
        const double a = ms.layer_length / c1;
        const double b = ms.layer_length / c2;
        const double S = 0.5 * (z1 / z2 + z2 / z1);
        A = a + b;
        B = a - b;
        P = 0.5 * (1.0 + S);
        Q = 0.5 * (1.0 - S);
        d = 2.0 * ms.layer_length;
    }

    double rhs(double w) const { return P * std::cos(A * w) + Q * std::cos(B * w); }

    std::optional<double> wavenumber(double w) const {
        const double r = rhs(w);
        if (r < -1.0 || r > 1.0) return std::nullopt;
        return std::acos(r) / d;
    }

    std::optional<double> group_velocity(double w) const {
        const double r = rhs(w);
        if (r <= -1.0 || r >= 1.0) return std::nullopt;
        const double dq_dw = (P * A * std::sin(A * w) + Q * B * std::sin(B * w)) /
                             (d * std::sqrt(1.0 - r * r));
        if (dq_dw <= 0) return std::nullopt;
        return 1.0 / dq_dw;
    }

    /// Lowest w > 0 with rhs(w) = -1 (edge of the first pass band).
    double band_stop() const {
        double lo = 1e-6, hi = lo;
        while (rhs(hi) > -1.0) {
            hi *= 1.5;
            if (hi > 1e6) throw std::runtime_error("bloch band stop not found");
        }
        lo = hi / 1.5;
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            (rhs(mid) > -1.0 ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }

    double c0() const {
        const double mu2 = P * A * A + Q * B * B;
        return d / std::sqrt(mu2);
    }

    /// d^2 v_g / d w^2 at w = 0 from the quartic expansion of the band
    /// relation: R = -3 c0 c4 / mu^2, c4 = (mu^4 - P A^4 - Q B^4)/12.
    double curvature() const {
        const double mu2 = P * A * A + Q * B * B;
        const double c4 = (mu2 * mu2 - P * std::pow(A, 4) - Q * std::pow(B, 4)) / 12.0;
        return -3.0 * c0() * c4 / mu2;
    }
};

}  // namespace oracle
