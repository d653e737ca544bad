#pragma once

#include <span>
#include <string>
#include <vector>

#include "nlwave/kernel.hpp"
#include "nlwave/material.hpp"
#include "nlwave/scenarios.hpp"

namespace nlwave::train {

/// The two discrete moment constraints and the affine completion that
/// eliminates the last two coefficients:
///   sum_m C_m p2[m] = rho c0^2
///   sum_m C_m p4[m] = -4 rho c0^3 R
struct ConstraintSystem {
    int degree = 0;
    double delta = 0.0;
    double h = 0.0;
    double rho = 1.0;
    double c0 = 0.0;
    double curvature = 0.0;
    std::vector<double> p2, p4;  // size degree+1
    double target_p2 = 0.0;
    double target_p4 = 0.0;
    double tail_bias[2] = {0.0, 0.0};  // (C_{M-1}, C_M) at theta = 0
    std::vector<double> tail_jac;      // 2 x (M-1): sensitivities of the tail pair

    std::size_t free_count() const { return static_cast<std::size_t>(degree) - 1; }
};

ConstraintSystem make_constraints(int degree, double delta, double h, double rho, double c0,
                                  double curvature);

/// Completes free coefficients theta = (C_0..C_{M-2}) so both constraints
/// hold exactly.
std::vector<double> eliminate(const ConstraintSystem& cs, std::span<const double> theta);

/// Chain rule through the completion: returns dL/dtheta given dL/dC.
std::vector<double> chain_to_free(const ConstraintSystem& cs, std::span<const double> dL_dC);

/// Largest relative violation of the two constraints by a coefficient vector.
double constraint_residual(const ConstraintSystem& cs, std::span<const double> coeffs);

struct TrainConfig {
    GridSpec grid;
    int degree = 24;
    double epsilon = 0.01;
    double rho = 1.0;
    double c0 = 0.0;
    double curvature = 0.0;

    int lbfgs_history = 10;
    int max_iterations = 500;
    double grad_tol = 1e-8;
    double loss_tol = 1e-12;
    int progress_every = 0;  // stderr trace cadence; 0 = silent
};

KernelModel completed_kernel(const ConstraintSystem& cs, std::span<const double> theta);

struct LossValue {
    double value = 0.0;
    bool ok = false;
    std::string diagnostic;
};

/// Training objective: T_tr/(dt^3 N) sum_k sum_{n=1}^{T_tr/dt}
/// || u_model^{n+1} - u_ref(t^{n+1}) ||_l2^2 + eps/(M+1) sum_m C_m^2.
/// Solver blow-up yields a large-but-orderable sentinel with ok = false.
LossValue loss(std::span<const double> theta, const std::vector<TrainingSample>& samples,
               const TrainConfig& cfg, const ConstraintSystem& cs);

struct LossGrad {
    double value = 0.0;
    bool ok = false;
    std::vector<double> grad;
    std::string diagnostic;
};

/// Forward-sensitivity gradient: one extra linear wave solve per free
/// direction, reusing the stored forward trajectory.
LossGrad loss_gradient(std::span<const double> theta, const std::vector<TrainingSample>& samples,
                       const TrainConfig& cfg, const ConstraintSystem& cs);

struct IterationRecord {
    int iter = 0;
    double loss = 0.0;
    double grad_norm = 0.0;   // max norm
    double step_length = 0.0;
};

struct LossReport {
    std::vector<IterationRecord> trace;
    std::string termination;
    bool converged = false;
};

struct TrainResult {
    KernelModel kernel;
    std::vector<double> theta;
    LossReport report;
};

TrainResult minimize(const std::vector<TrainingSample>& samples, const TrainConfig& cfg,
                     std::vector<double> theta_init = {});

struct VgSample {
    double omega = 0.0;
    double vg = 0.0;
    bool ok = false;
    std::string note;
};

/// Group velocity measured from DNS wave packets, one run per frequency.
std::vector<VgSample> dns_group_velocity(const Microstructure& ms,
                                         const std::vector<double>& omegas,
                                         const PacketMeasureConfig& cfg);

/// RMS difference between the model group velocity (as a function of omega
/// over its first pass band, zero beyond) and DNS-measured samples.
double vg_mismatch(const DispersionCurve& model, const std::vector<VgSample>& measured);

struct SweepRow {
    double delta = 0.0;
    double epsilon = 0.0;
    double mismatch = 0.0;
    double final_loss = 0.0;
    bool ok = false;
    std::string note;
};

/// Trains one kernel per (delta, epsilon) pair and scores each against the
/// DNS group velocity; failures are recorded and the sweep continues.
std::vector<SweepRow> sweep(const Microstructure& ms, const std::vector<Scenario>& scenarios,
                            const TrainConfig& base, const std::vector<double>& deltas,
                            const std::vector<double>& epsilons,
                            const std::vector<VgSample>& measured);

void write_loss_report_csv(const std::string& path, const LossReport& report,
                           const std::string& config_id);
void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows,
                     const std::string& config_id);

}  // namespace nlwave::train
