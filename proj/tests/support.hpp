#pragma once

// Shared fixtures for the training and acceptance suites.

#include <cmath>
#include <functional>
#include <vector>

#include "nlwave/nonlocal.hpp"
#include "nlwave/training.hpp"

namespace support {

inline nlwave::Microstructure paper_bar() {
    nlwave::Microstructure ms;
    ms.layer_length = 0.2;
    ms.material_a = {1.0, 1.0};
    ms.material_b = {0.25, 1.0};
    return ms;
}

inline nlwave::train::TrainConfig small_config() {
    nlwave::train::TrainConfig cfg;
    cfg.grid.dns_dt = 0.01;
    cfg.grid.h = 0.05;
    cfg.grid.dt = 0.02;
    cfg.grid.T_tr = 0.4;
    cfg.grid.delta = 0.3;
    cfg.degree = 6;
    cfg.epsilon = 0.01;
    cfg.rho = 1.0;
    cfg.c0 = 1.0;
    cfg.curvature = -0.05;
    return cfg;
}

inline std::function<double(double, double)> rich_forcing() {
    return [](double x, double t) {
        return std::exp(-4.0 * x * x) * std::cos(4.0 * t) +
               0.5 * std::exp(-9.0 * (x - 0.4) * (x - 0.4)) * std::sin(7.0 * t);
    };
}

/// Reference data manufactured by running the public solver with a known
/// completed kernel; norm_constant = 1 keeps comparisons at that theta
/// bitwise.
inline nlwave::TrainingSample manufactured_sample(
    const nlwave::train::TrainConfig& cfg, const nlwave::train::ConstraintSystem& cs,
    const std::vector<double>& theta_true, const std::function<double(double, double)>& forcing,
    double b_interior, bool normalize) {
    using namespace nlwave;
    const KernelModel k = train::completed_kernel(cs, theta_true);
    const nonlocal::UniformGrid g = nonlocal::make_grid(b_interior, cfg.grid.h, cfg.grid.delta);

    const auto n_steps = static_cast<std::size_t>(std::llround(cfg.grid.T_tr / cfg.grid.dt));
    nonlocal::RunOptions opts;  // record every step
    const FieldSeries full = nonlocal::run(g, k, {}, forcing, nonlocal::BoundarySource::zero(),
                                           cfg.grid.T_tr + cfg.grid.dt, cfg.grid.dt, opts);

    TrainingSample s;
    s.id = "manufactured";
    s.kind = ScenarioKind::OscillatingSource;
    s.b_interior = b_interior;
    s.b_dns = b_interior + cfg.grid.delta;
    s.T_tr = cfg.grid.T_tr;
    s.norm_constant = 1.0;

    std::vector<double> ref_times(full.times.begin() + 1, full.times.end());
    s.reference = resample(full, full.positions, ref_times);

    s.forcing_rows = n_steps + 1;
    s.forcing.resize(s.forcing_rows * full.positions.size());
    for (std::size_t n = 0; n < s.forcing_rows; ++n)
        for (std::size_t i = 0; i < full.positions.size(); ++i)
            s.forcing[n * full.positions.size() + i] =
                forcing(full.positions[i], static_cast<double>(n) * cfg.grid.dt);

    if (normalize) {
        double sq = 0.0;
        for (std::size_t n = 0; n + 1 < s.reference.nt(); ++n)
            for (std::size_t i = 0; i < s.reference.nx(); ++i)
                sq += s.reference.u_at(n, i) * s.reference.u_at(n, i);
        const double norm = std::sqrt(sq * cfg.grid.h * cfg.grid.dt);
        for (double& u : s.reference.u) u /= norm;
        for (double& v : s.reference.v) v /= norm;
        for (double& f : s.forcing) f /= norm;
        s.norm_constant = norm;
    }
    return s;
}

}  // namespace support
