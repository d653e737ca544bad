#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "nlwave/field_series.hpp"
#include "nlwave/material.hpp"

namespace nlwave {

enum class ScenarioKind { OscillatingSource, PlaneWave, WavePacket, Impact };

std::string to_string(ScenarioKind k);
ScenarioKind scenario_kind_from_string(const std::string& s);

/// One loading case for the layered bar: body forcing, an inlet velocity
/// drive, or an initial velocity, on a snapped symmetric domain (-b, b).
struct Scenario {
    ScenarioKind kind = ScenarioKind::OscillatingSource;
    double param = 0.0;  // source index k or angular frequency omega
    double b = 0.0;
    double duration = 0.0;  // default run length
    std::function<double(double, double)> forcing;
    std::function<double(double)> left_velocity;
    std::function<double(double)> initial_velocity;
    std::vector<std::string> warnings;
};

Scenario oscillating_source(int k, const Microstructure& ms);
Scenario plane_wave(double omega, const Microstructure& ms);
Scenario wave_packet(double omega, const Microstructure& ms);
Scenario impact(const Microstructure& ms);

Scenario make_scenario(ScenarioKind kind, double param, const Microstructure& ms);

/// Discretization shared by sample generation and training.
struct GridSpec {
    double dns_dt = 0.01;
    double h = 0.05;
    double dt = 0.02;
    double T_tr = 2.0;
    double delta = 1.2;
};

/// Reference data for one scenario, normalized by the discrete L2 norm of the
/// solution over the interior and (0, T_tr]. The forcing, the reference, and
/// the boundary source are all divided by the same constant so the linear
/// relation between them is preserved.
struct TrainingSample {
    std::string id;
    ScenarioKind kind = ScenarioKind::OscillatingSource;
    double param = 0.0;
    double b_interior = 0.0;  // nonlocal interior half-width (b_dns - delta)
    double b_dns = 0.0;
    double T_tr = 0.0;
    double norm_constant = 0.0;

    /// Interior reference u at times dt..T_tr+dt (the extra step feeds the
    /// final term of the training objective).
    FieldSeries reference;

    /// Forcing sampled at (t^n, x_i), rows n = 0..T_tr/dt, interior columns.
    std::vector<double> forcing;
    std::size_t forcing_rows = 0;

    /// Layer data at every solver step 0..T_tr/dt+1; null means zero.
    std::shared_ptr<const FieldSeries> source;
};

TrainingSample make_sample(const Scenario& sc, const Microstructure& ms, const GridSpec& spec);

/// The standard training set: oscillating sources k = 1..20 plus plane waves
/// omega = 0.35, 0.70, ..., 3.85.
std::vector<Scenario> training_scenarios(const Microstructure& ms,
                                         const std::vector<int>& source_indices,
                                         const std::vector<double>& plane_omegas);

std::vector<TrainingSample> build_training_set(const std::vector<Scenario>& scenarios,
                                               const Microstructure& ms, const GridSpec& spec);

/// manifest.csv plus one full-grid field CSV per sample.
void write_training_set(const std::string& dir, const std::vector<TrainingSample>& samples,
                        const Microstructure& ms, const GridSpec& spec,
                        const std::string& config_id);

std::vector<TrainingSample> read_training_set(const std::string& manifest_path,
                                              const Microstructure& ms, const GridSpec& spec);

}  // namespace nlwave
