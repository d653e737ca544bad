#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nlwave {

/// Radial Bernstein-polynomial kernel supported on [-delta, delta]:
/// K(y) = sum_m coefficients[m]/delta^3 * B_{m,degree}(|y|/delta).
struct KernelModel {
    double delta = 1.2;
    int degree = 24;  // >= 2 so two coefficients remain for the constraints
    std::vector<double> coefficients;
    double rho = 1.0;
};

void validate(const KernelModel& k);

/// Bernstein basis value C(M,m) x^m (1-x)^(M-m); domain-checked.
double bernstein(int m, int M, double x);

double kernel_value(const KernelModel& k, double y);

/// Riemann-sum discretization of the nonlocal operator on spacing h:
/// weights w_j = K(|j h|) h on the symmetric node set j = -J..J, J = delta/h.
/// The same node set and weights back the moment sums and the dispersion
/// relation so the discrete constraint identities hold exactly.
struct OperatorStencil {
    double h = 0.0;
    int reach = 0;                 // J
    std::vector<double> weights;   // size 2J+1, index j+J
    double rho = 1.0;
};

OperatorStencil build_stencil(const KernelModel& k, double h);

/// sum_j w_j (u[i+j] - u[i]); needs the full neighborhood i-J..i+J.
double apply_stencil(const OperatorStencil& st, std::span<const double> u, std::size_t i);

/// Riemann sums A_p[m] ~= int_0^delta (y^p/delta^3) B_{m,M}(y/delta) dy on
/// the shared node set y_q = q h, q = 0..J.
std::vector<double> discrete_moments(int degree, double delta, double h, int power);

struct DispersionSample {
    double k = 0.0;
    double omega = 0.0;
    double vg = 0.0;
    bool stable = true;  // omega^2 >= 0 at this wavenumber
};

struct DispersionCurve {
    std::vector<DispersionSample> samples;
    std::optional<double> band_stop;
    bool any_unstable = false;
};

/// omega^2 at a single wavenumber (may be negative for unstable kernels).
double omega_squared(const OperatorStencil& st, double k);

/// Samples k_i = i * 2*pi/(n_intervals*h) for i = 0..n_intervals, with
/// omega = sqrt(max(omega^2, 0)) and centered-difference group velocity.
DispersionCurve dispersion_curve(const KernelModel& k, double h, int n_intervals = 200);

/// First crossing of vg below 0.02 * reference speed, located by linear
/// interpolation in omega. reference_speed = 0 uses the curve's own vg(0).
std::optional<double> find_band_stop(const DispersionCurve& c, double reference_speed = 0.0);

void save_kernel(const std::string& path, const KernelModel& k, const std::string& config_id);
KernelModel load_kernel(const std::string& path);

void write_dispersion_csv(const std::string& path, const DispersionCurve& c,
                          const std::string& config_id);

}  // namespace nlwave
