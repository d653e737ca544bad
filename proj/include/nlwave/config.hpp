#pragma once

#include <string>
#include <vector>

#include "nlwave/material.hpp"
#include "nlwave/scenarios.hpp"
#include "nlwave/training.hpp"

namespace nlwave {

/// Flat key=value run configuration; every default is the reference setup of
/// the layered-bar experiments.
struct RunConfig {
    // material
    double L = 0.2;
    double E1 = 1.0;
    double E2 = 0.25;
    double rho = 1.0;

    // discretization
    double dns_dt = 0.01;
    double h = 0.05;
    double dt = 0.02;
    double T_tr = 2.0;

    // kernel / training
    double delta = 1.2;
    int M = 24;
    double epsilon = 0.01;
    int lbfgs_history = 10;
    int lbfgs_max_iter = 500;
    double lbfgs_gtol = 1e-8;
    double lbfgs_ftol = 1e-12;

    // effective parameters ("auto" = derive: c0 analytic, curvature from DNS)
    bool c0_auto = true;
    double c0 = 0.0;
    bool curvature_auto = true;
    double curvature = 0.0;

    // group-velocity measurements
    std::vector<double> estimate_omegas = {0.1, 0.2, 0.3};
    std::vector<double> vg_omegas = {0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0};
    double packet_envelope_periods = 1.0;
    double packet_min_envelope_width = 5.0;
    double packet_travel_time = 120.0;

    // training set
    std::vector<int> source_indices = {1,  2,  3,  4,  5,  6,  7,  8,  9,  10,
                                       11, 12, 13, 14, 15, 16, 17, 18, 19, 20};
    std::vector<double> plane_omegas = {0.35, 0.70, 1.05, 1.40, 1.75, 2.10,
                                        2.45, 2.80, 3.15, 3.50, 3.85};

    Microstructure microstructure() const;
    GridSpec grid_spec() const;
    PacketMeasureConfig packet_config() const;
    train::TrainConfig train_config() const;  // c0/curvature must be resolved first

    /// Fills c0/curvature when they are on "auto"; the curvature measurement
    /// runs DNS packets and can take seconds.
    void resolve_effective_params();
};

RunConfig load_config(const std::string& path);
void apply_override(RunConfig& cfg, const std::string& key_equals_value);

/// Canonical "key = value" text of the configuration (sorted keys).
std::string canonical_config(const RunConfig& cfg);

/// FNV-1a hash of the canonical text, as fixed-width hex.
std::string config_hash(const RunConfig& cfg);

}  // namespace nlwave
