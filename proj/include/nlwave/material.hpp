#pragma once

#include <vector>

namespace nlwave {

struct Material {
    double youngs_modulus = 1.0;  // E > 0
    double density = 1.0;         // rho > 0
};

double wave_speed(const Material& m);  // sqrt(E/rho)
double impedance(const Material& m);   // rho * c

/// Layered periodic bar: material_a occupies [phase_offset, phase_offset + L)
/// modulo the period 2L, material_b the other half.
struct Microstructure {
    double layer_length = 0.2;
    Material material_a;
    Material material_b;
    double phase_offset = 0.0;
};

const Material& material_at(const Microstructure& ms, double x);

bool is_homogeneous(const Microstructure& ms);

/// Long-wavelength effective speed, sqrt(2/(rho*(1/E1+1/E2))). Valid only for
/// equal densities in the two layers; rejects anything else.
double effective_speed(const Microstructure& ms);

struct EffectiveParams {
    double c0 = 0.0;         // effective wave speed at zero frequency
    double curvature = 0.0;  // d^2 v_g / d omega^2 at omega = 0
};

/// How group velocities are measured from wave-packet simulations.
struct PacketMeasureConfig {
    double dns_dt = 0.01;
    double envelope_periods = 1.0;   // envelope width t_w = max(min_width, periods * 2*pi/omega)
    double min_envelope_width = 5.0;
    double travel_time = 120.0;      // separation of the two centroid measurements
    double window_margin = 2.0;      // centroid window starts this far inside the inlet
    double fit_residual_tol = 0.02;  // relative to c0
};

/// Measures v_g at each omega with DNS wave packets and fits
/// v_g(omega) = c0 + (curvature/2) * omega^2 with c0 held at its analytic value.
EffectiveParams estimate_effective_params(const Microstructure& ms, const PacketMeasureConfig& cfg,
                                          const std::vector<double>& omegas);

/// Least-squares curvature of v_g(omega) = c0 + (r/2) omega^2 with c0 fixed.
/// max_residual, when given, receives the largest absolute fit residual.
double fit_vg_curvature(const std::vector<double>& omegas, const std::vector<double>& vgs,
                        double c0, double* max_residual = nullptr);

}  // namespace nlwave
