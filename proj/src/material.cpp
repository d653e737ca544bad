#include "nlwave/material.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "nlwave/dns.hpp"
#include "nlwave/parallel.hpp"

namespace nlwave {

double wave_speed(const Material& m) { return std::sqrt(m.youngs_modulus / m.density); }

double impedance(const Material& m) { return m.density * wave_speed(m); }

const Material& material_at(const Microstructure& ms, double x) {
    const double period = 2.0 * ms.layer_length;
    double s = std::fmod(x - ms.phase_offset, period);
    if (s < 0) s += period;
    return (s < ms.layer_length) ? ms.material_a : ms.material_b;
}

bool is_homogeneous(const Microstructure& ms) {
    return ms.material_a.youngs_modulus == ms.material_b.youngs_modulus &&
           ms.material_a.density == ms.material_b.density;
}

double effective_speed(const Microstructure& ms) {
    const double rho_a = ms.material_a.density;
    const double rho_b = ms.material_b.density;
    if (std::abs(rho_a - rho_b) > 1e-12 * std::max(rho_a, rho_b))
        throw std::invalid_argument(
            "effective_speed: layers have unequal densities; the harmonic-mean "
            "homogenization applies only to equal-density layers");
    const double e1 = ms.material_a.youngs_modulus;
    const double e2 = ms.material_b.youngs_modulus;
    return std::sqrt(2.0 / (rho_a * (1.0 / e1 + 1.0 / e2)));
}

double fit_vg_curvature(const std::vector<double>& omegas, const std::vector<double>& vgs,
                        double c0, double* max_residual) {
    if (omegas.size() != vgs.size() || omegas.empty())
        throw std::invalid_argument("fit_vg_curvature: size mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < omegas.size(); ++i) {
        const double w2 = omegas[i] * omegas[i];
        num += (vgs[i] - c0) * w2;
        den += w2 * w2;
    }
    if (den == 0.0) throw std::invalid_argument("fit_vg_curvature: all omegas are zero");
    const double r = 2.0 * num / den;
    if (max_residual) {
        double worst = 0.0;
        for (std::size_t i = 0; i < omegas.size(); ++i) {
            const double pred = c0 + 0.5 * r * omegas[i] * omegas[i];
            worst = std::max(worst, std::abs(vgs[i] - pred));
        }
        *max_residual = worst;
    }
    return r;
}

EffectiveParams estimate_effective_params(const Microstructure& ms, const PacketMeasureConfig& cfg,
                                          const std::vector<double>& omegas) {
    if (omegas.size() < 3)
        throw std::invalid_argument("estimate_effective_params: need at least three frequencies");
    const double c0 = effective_speed(ms);

    std::vector<dns::PacketSpeed> speeds(omegas.size());
    parallel_for(omegas.size(), [&](std::size_t i) {
        speeds[i] = dns::measure_packet_speed(ms, omegas[i], cfg);
    });
    std::vector<double> vgs(omegas.size());
    for (std::size_t i = 0; i < omegas.size(); ++i) {
        if (!speeds[i].ok)
            throw std::runtime_error("estimate_effective_params: packet at omega=" +
                                     g17(omegas[i]) + " failed: " + speeds[i].diagnostic);
        vgs[i] = speeds[i].vg;
    }
    double worst = 0.0;
    const double r = fit_vg_curvature(omegas, vgs, c0, &worst);
    if (worst > cfg.fit_residual_tol * c0)
        throw std::runtime_error("estimate_effective_params: quadratic fit residual " + g17(worst) +
                                 " exceeds " + g17(cfg.fit_residual_tol * c0) +
                                 "; packets may be dispersing outside the fit window");
    return {c0, r};
}

}  // namespace nlwave
