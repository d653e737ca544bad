#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace nlwave {

/// Time-indexed displacement/velocity fields sampled on a spatial grid.
/// Values are stored row-major over (time, position).
struct FieldSeries {
    std::vector<double> times;
    std::vector<double> positions;
    std::vector<double> u;
    std::vector<double> v;

    bool uniform = false;     // uniform spatial grid?
    double h = 0.0;           // grid spacing when uniform
    double dt = 0.0;          // time step of the producing solver
    double half_width = 0.0;  // domain half-width b
    std::string kernel_path;  // kernel file used, when applicable

    std::size_t nt() const { return times.size(); }
    std::size_t nx() const { return positions.size(); }

    double u_at(std::size_t n, std::size_t i) const { return u[n * positions.size() + i]; }
    double v_at(std::size_t n, std::size_t i) const { return v[n * positions.size() + i]; }
    double& u_at(std::size_t n, std::size_t i) { return u[n * positions.size() + i]; }
    double& v_at(std::size_t n, std::size_t i) { return v[n * positions.size() + i]; }

    const double* u_row(std::size_t n) const { return u.data() + n * positions.size(); }
    const double* v_row(std::size_t n) const { return v.data() + n * positions.size(); }
};

/// Linear interpolation in space at the requested positions, exact selection
/// of the requested times. Requested positions outside the sampled range and
/// times that were never sampled are errors.
FieldSeries resample(const FieldSeries& s, const std::vector<double>& target_positions,
                     const std::vector<double>& target_times);

/// Retain every snapshot whose time is a multiple of target_dt (which must be
/// an integer multiple of the series' sampling interval).
FieldSeries resample(const FieldSeries& s, const std::vector<double>& target_positions,
                     double target_dt);

std::vector<double> uniform_positions(double x0, double x1, double h);

/// Interpolation weights of `x` in the sorted node list: value = (1-w)*f[i] + w*f[i+1].
struct InterpCoeff {
    std::size_t i;
    double w;
};
InterpCoeff interp_coeff(const std::vector<double>& nodes, double x);

void write_field_csv(const std::string& path, const FieldSeries& s,
                     const std::string& config_id);
FieldSeries read_field_csv(const std::string& path);

/// Shortest decimal that round-trips a double (17 significant digits).
std::string g17(double x);

}  // namespace nlwave
